"""Serialization of run outcomes: CSV report rows, provenance JSON, fingerprints.

Both outputs are pure functions of (config, seed, data): wall-clock
timings are kept out of them and written separately by the CLI.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import tempfile
from pathlib import Path
from types import MappingProxyType

import numpy as np

from fairpipe.experiment.config import cell_config
from fairpipe.metrics import metric_columns

PROVENANCE_VERSION = 1

ID_COLUMNS = (
    "run_id",
    "experiment",
    "dataset",
    "seed",
    "learner",
    "tuning",
    "params",
    "resampler",
    "imputer",
    "scaler",
    "pre_intervention",
    "post_intervention",
    "selector",
    "status",
    "partition",
    "scope",
    "n_rows",
)


def report_header() -> list[str]:
    return list(ID_COLUMNS) + metric_columns()


def _dataset_name(ref) -> str:
    return ref if isinstance(ref, str) else ref.get("id", "inline")


def _id_fields(cfg, seed, run_id) -> dict:
    return {
        "run_id": run_id,
        "experiment": cfg.name,
        "dataset": _dataset_name(cfg.dataset),
        "seed": int(seed),
        "learner": cfg.learner.kind,
        "tuning": cfg.learner.tuning,
        "resampler": cfg.resampler,
        "imputer": cfg.imputer.kind,
        "scaler": cfg.scaler,
        "pre_intervention": cfg.pre_intervention.label,
        "post_intervention": cfg.post_intervention.label,
        "selector": cfg.selector.kind,
    }


def outcome_rows(outcome) -> list[dict]:
    """One row per test scope; a failed run yields a single row with empty metrics."""
    from fairpipe.experiment.runner import RunFailure

    base = _id_fields(outcome.config, outcome.seed, outcome.run_id)
    if isinstance(outcome, RunFailure):
        row = dict.fromkeys(report_header())
        row.update(base, status=f"failed at {outcome.step}", partition="test", scope="all")
        return [row]
    params = json.dumps(outcome.chosen.params, sort_keys=True)
    rows = []
    for rep in outcome.test_reports:
        row = dict(base, params=params, status="ok", partition=rep.partition, scope=rep.subset, n_rows=rep.n_rows)
        row.update(rep.flat())
        rows.append({h: row.get(h) for h in report_header()})
    return rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if not math.isfinite(v) else repr(v)
    return '"' + str(v).replace('"', '""') + '"'


def format_csv(rows: list[dict]) -> str:
    """Header plus rows; strings quoted, numbers bare, UNDEFINED as an empty field."""
    header = report_header()
    lines = [",".join(_cell(h) for h in header)]
    for row in rows:
        lines.append(",".join(_cell(row.get(h)) for h in header))
    return "\n".join(lines) + "\n"


def _jsonable(v):
    if isinstance(v, dict) or isinstance(v, MappingProxyType):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (frozenset, set)):
        return sorted(_jsonable(x) for x in v)
    return v


def _rule_dict(rule):
    return None if rule is None else {"type": type(rule).__name__, **_jsonable(dataclasses.asdict(rule))}


def provenance(outcome, dataset_digest: str | None = None, audit=None) -> dict:
    """Everything needed to re-execute and cross-check one run."""
    cands = []
    for c in outcome.candidates:
        cands.append(
            {
                "index": c.index,
                "params": _jsonable(c.params),
                "degenerate": c.degenerate,
                "post_rule": _rule_dict(c.post_rule),
                "train": {r.subset: _jsonable(r.flat()) | {"n_rows": r.n_rows} for r in c.train_reports},
                "validation": {r.subset: _jsonable(r.flat()) | {"n_rows": r.n_rows} for r in c.validation_reports},
            }
        )
    cv = outcome.candidates[0].cv
    doc = {
        "provenance_version": PROVENANCE_VERSION,
        "run_id": outcome.run_id,
        "seed": outcome.seed,
        "config": cell_config(outcome.config, outcome.seed),
        "component_seeds": outcome.component_seeds,
        "dataset": {"ref": _jsonable(outcome.config.dataset), "sha256": dataset_digest},
        "partition_sizes": dict(zip(("train", "validation", "test"), outcome.partition_sizes)),
        "grid": None
        if cv is None
        else {
            "k": cv.k,
            "fit_count": cv.fit_count,
            "candidates": _jsonable(list(cv.candidates)),
            "mean_scores": _jsonable(cv.mean_scores),
            "best_index": cv.best_index,
        },
        "candidates": cands,
        "selector": outcome.selector_id,
        "selected": outcome.selected,
        "test": {
            "n_rows_released": outcome.n_test_rows,
            "n_rows_predicted": len(outcome.test_predictions.row_ids),
            "reports": {r.subset: _jsonable(r.flat()) | {"n_rows": r.n_rows} for r in outcome.test_reports},
        },
    }
    if audit is not None:
        doc["audit"] = {"ok": audit.ok, "violations": [str(v) for v in audit.violations]}
    return doc


def dumps_provenance(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def atomic_write(path, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fingerprint(obj) -> str:
    """Content hash of a fitted artifact (dataclasses, arrays, mappings, scalars)."""
    h = hashlib.sha256()

    def feed(v):
        if dataclasses.is_dataclass(v) and not isinstance(v, type):
            h.update(type(v).__name__.encode())
            for f in dataclasses.fields(v):
                h.update(f.name.encode())
                feed(getattr(v, f.name))
        elif isinstance(v, np.ndarray):
            h.update(str(v.dtype).encode() + str(v.shape).encode())
            if v.dtype == object:
                feed(v.tolist())
            else:
                h.update(np.ascontiguousarray(v).tobytes())
        elif isinstance(v, (dict, MappingProxyType)):
            h.update(b"{")
            for k in sorted(v, key=repr):
                feed(k)
                feed(v[k])
            h.update(b"}")
        elif isinstance(v, (list, tuple)):
            h.update(b"[")
            for x in v:
                feed(x)
            h.update(b"]")
        elif isinstance(v, (frozenset, set)):
            feed(sorted(v, key=repr))
        elif isinstance(v, float):
            h.update(np.float64(v).tobytes())
        else:
            h.update(repr(v).encode())

    feed(obj)
    return h.hexdigest()
