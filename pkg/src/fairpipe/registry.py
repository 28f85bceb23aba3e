"""Dataset registry: JSON entries describing how to load benchmark CSVs.

An entry names the CSV file, its column schema, the group definition and
the label rule. Benchmark files are not shipped; :func:`load_dataset`
looks them up in a user-supplied data directory and checks the row count.
Entries marked ``bundled`` resolve to CSVs inside the package.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from fairpipe.errors import ConfigError, SchemaMismatch
from fairpipe.tabular import DEFAULT_MISSING_TOKENS, ColumnSchema, Dataset, GroupSpec, LabelRule, load_csv

_PACKAGE_DIR = "datasets"


@dataclass(frozen=True)
class RegistryEntry:
    id: str
    file: str
    schema: tuple
    groups: GroupSpec
    label_rule: LabelRule
    missing_tokens: frozenset = DEFAULT_MISSING_TOKENS
    expected_rows: int | None = None
    allow_extra_columns: bool = False
    bundled: bool = False
    source: str = ""

    @classmethod
    def from_dict(cls, d: dict) -> "RegistryEntry":
        try:
            schema = tuple(ColumnSchema(c["name"], c["kind"], c.get("role", "feature")) for c in d["columns"])
            g = d["groups"]
            groups = GroupSpec(
                g["protected_column"],
                frozenset(g["privileged_values"]),
                frozenset(g["unprivileged_values"]),
                g.get("favorable_label", 1),
            )
            rule = d.get("label_rule", {})
            label_rule = LabelRule(
                favorable_values=frozenset(rule["favorable_values"]) if "favorable_values" in rule else None,
                threshold=rule.get("threshold"),
            )
            return cls(
                id=d["id"],
                file=d["file"],
                schema=schema,
                groups=groups,
                label_rule=label_rule,
                missing_tokens=frozenset(d.get("missing_tokens", DEFAULT_MISSING_TOKENS)),
                expected_rows=d.get("expected_rows"),
                allow_extra_columns=d.get("allow_extra_columns", False),
                bundled=d.get("bundled", False),
                source=d.get("source", ""),
            )
        except KeyError as exc:
            raise ConfigError(f"registry entry {d.get('id', '?')!r} lacks field {exc.args[0]!r}") from None
        except SchemaMismatch as exc:
            raise ConfigError(f"registry entry {d.get('id', '?')!r}: {exc}") from None


def _package_files():
    return resources.files("fairpipe").joinpath(_PACKAGE_DIR)


def registry_ids() -> list[str]:
    return sorted(p.name[:-5] for p in _package_files().iterdir() if p.name.endswith(".json"))


def get_entry(ref) -> RegistryEntry:
    """Resolve a registry id, a path to an entry JSON file, or an inline entry dict."""
    if isinstance(ref, RegistryEntry):
        return ref
    if isinstance(ref, dict):
        return RegistryEntry.from_dict(ref)
    if str(ref).endswith(".json"):
        path = Path(ref)
        if not path.exists():
            raise ConfigError(f"registry entry file not found: {path}")
        return RegistryEntry.from_dict(json.loads(path.read_text(encoding="utf-8")))
    res = _package_files().joinpath(f"{ref}.json")
    if not res.is_file():
        raise ConfigError(f"unknown dataset {ref!r}; registered: {', '.join(registry_ids())}")
    return RegistryEntry.from_dict(json.loads(res.read_text(encoding="utf-8")))


def data_path(entry: RegistryEntry, data_dir=None) -> Path:
    if entry.bundled:
        return Path(str(_package_files().joinpath(entry.file)))
    base = Path(data_dir) if data_dir is not None else Path.cwd()
    return base / entry.file


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_dataset(ref, data_dir=None, verify_rows: bool = True) -> Dataset:
    entry = get_entry(ref)
    path = data_path(entry, data_dir)
    if not path.is_file():
        hint = f" (source: {entry.source})" if entry.source else ""
        raise ConfigError(f"dataset file not found: {path}{hint}")
    data = load_csv(
        path,
        entry.schema,
        entry.groups,
        missing_tokens=entry.missing_tokens,
        label_rule=entry.label_rule,
        allow_extra_columns=entry.allow_extra_columns,
    )
    if verify_rows and entry.expected_rows is not None and len(data) != entry.expected_rows:
        raise SchemaMismatch(f"{path}: expected {entry.expected_rows} rows for {entry.id!r}, found {len(data)}")
    return data
