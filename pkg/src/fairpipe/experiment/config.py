"""Declarative experiment configuration.

A config file is JSON mirroring :class:`ExperimentConfig`. The component
keys ``learner``, ``imputer``, ``scaler``, ``pre_intervention`` and
``post_intervention`` accept either one value or a list of values; a file
with lists describes a matrix that :func:`expand` turns into one cell per
combination, seed-major and intervention-minor.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from fairpipe.errors import ConfigError
from fairpipe.fairness import CEO_COSTS, ROC_OBJECTIVES
from fairpipe.learn.search import LEARNERS
from fairpipe.preprocess import IMPUTERS, RESAMPLERS, SCALERS

PRE_INTERVENTIONS = ("none", "reweighing", "di_remover")
POST_INTERVENTIONS = ("none", "reject_option", "calibrated_eq_odds")
TUNING_MODES = ("tuned", "untuned")
SELECTOR_KINDS = ("max_accuracy", "max_accuracy_spd_bound", "accuracy_minus_spd")
MATRIX_AXES = ("learner", "imputer", "scaler", "pre_intervention", "post_intervention")
DEFAULT_SEEDS = (46947, 71735, 94246)


@dataclass(frozen=True)
class LearnerConfig:
    kind: str = "logistic_regression"
    tuning: str = "tuned"
    grid: dict | None = None
    cv_folds: int = 5
    candidates: int = 1
    params: dict | None = None


@dataclass(frozen=True)
class ImputerConfig:
    kind: str = "complete_case"
    target_columns: tuple | None = None


@dataclass(frozen=True)
class InterventionConfig:
    kind: str = "none"
    repair_level: float | None = None
    objective: str | None = None
    cost: str | None = None

    @property
    def label(self) -> str:
        if self.kind == "di_remover":
            return f"di_remover({self.repair_level:g})"
        if self.kind == "reject_option":
            return f"reject_option({self.objective or 'statistical_parity'})"
        if self.kind == "calibrated_eq_odds":
            return f"calibrated_eq_odds({self.cost or 'weighted'})"
        return self.kind


@dataclass(frozen=True)
class SelectorConfig:
    kind: str = "max_accuracy"
    epsilon: float = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    """One cell of an experiment matrix: a single choice per component."""

    dataset: Any
    name: str = "experiment"
    fractions: tuple = (0.7, 0.1, 0.2)
    seeds: tuple = DEFAULT_SEEDS
    resampler: str = "none"
    imputer: ImputerConfig = field(default_factory=ImputerConfig)
    scaler: str = "standard"
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    pre_intervention: InterventionConfig = field(default_factory=InterventionConfig)
    post_intervention: InterventionConfig = field(default_factory=InterventionConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    protected_as_feature: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fractions"] = list(self.fractions)
        d["seeds"] = list(self.seeds)
        if self.imputer.target_columns is not None:
            d["imputer"]["target_columns"] = list(self.imputer.target_columns)
        return d

    def digest(self) -> str:
        """Stable hash of everything except the seed list."""
        d = self.to_dict()
        d.pop("seeds")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class Diagnostic:
    key: str
    message: str

    def __str__(self):
        return f"{self.key}: {self.message}"


def _as_list(value):
    return list(value) if isinstance(value, list) else [value]


def _normalize_component(key: str, value):
    """Accept shorthand strings for component objects."""
    if isinstance(value, str):
        return {"kind": value}
    return value


def _check_intervention(key, value, allowed, out):
    if not isinstance(value, dict):
        out.append(Diagnostic(key, "expected an object with a 'kind' field"))
        return
    kind = value.get("kind", "none")
    if kind not in allowed:
        out.append(Diagnostic(f"{key}.kind", f"unknown kind {kind!r}; allowed: {', '.join(allowed)}"))
        return
    extra = set(value) - {"kind", "repair_level", "objective", "cost"}
    if extra:
        out.append(Diagnostic(key, f"unknown fields {sorted(extra)}"))
    if kind == "di_remover":
        lam = value.get("repair_level")
        if not isinstance(lam, (int, float)) or isinstance(lam, bool) or not 0.0 <= lam <= 1.0:
            out.append(Diagnostic(f"{key}.repair_level", f"repair_level must be a number in [0, 1], got {lam!r}"))
    if kind == "reject_option":
        obj = value.get("objective", "statistical_parity")
        if obj not in ROC_OBJECTIVES:
            out.append(Diagnostic(f"{key}.objective", f"unknown objective {obj!r}; allowed: {', '.join(ROC_OBJECTIVES)}"))
    if kind == "calibrated_eq_odds":
        cost = value.get("cost", "weighted")
        if cost not in CEO_COSTS:
            out.append(Diagnostic(f"{key}.cost", f"unknown cost {cost!r}; allowed: {', '.join(CEO_COSTS)}"))


def _check_learner(key, value, out):
    if not isinstance(value, dict):
        out.append(Diagnostic(key, "expected an object with a 'kind' field"))
        return
    kind = value.get("kind")
    if kind not in LEARNERS:
        out.append(Diagnostic(f"{key}.kind", f"unknown learner {kind!r}; allowed: {', '.join(sorted(LEARNERS))}"))
        return
    extra = set(value) - {"kind", "tuning", "grid", "cv_folds", "candidates", "params"}
    if extra:
        out.append(Diagnostic(key, f"unknown fields {sorted(extra)}"))
    tuning = value.get("tuning", "tuned")
    if tuning not in TUNING_MODES:
        out.append(Diagnostic(f"{key}.tuning", f"unknown tuning {tuning!r}; allowed: {', '.join(TUNING_MODES)}"))
    known = set(LEARNERS[kind].default_grid)
    grid = value.get("grid")
    if grid is not None:
        if not isinstance(grid, dict) or not grid:
            out.append(Diagnostic(f"{key}.grid", "grid must be a non-empty object of parameter lists"))
        else:
            for p, vals in grid.items():
                if p not in known:
                    out.append(Diagnostic(f"{key}.grid.{p}", f"unknown parameter; allowed: {', '.join(sorted(known))}"))
                elif not isinstance(vals, list) or not vals:
                    out.append(Diagnostic(f"{key}.grid.{p}", "expected a non-empty list"))
    params = value.get("params")
    if params is not None:
        if not isinstance(params, dict):
            out.append(Diagnostic(f"{key}.params", "expected an object"))
        else:
            for p in params:
                if p not in known:
                    out.append(Diagnostic(f"{key}.params.{p}", f"unknown parameter; allowed: {', '.join(sorted(known))}"))
    k = value.get("cv_folds", 5)
    if not isinstance(k, int) or isinstance(k, bool) or k < 2:
        out.append(Diagnostic(f"{key}.cv_folds", f"cv_folds must be an integer >= 2, got {k!r}"))
    c = value.get("candidates", 1)
    if not isinstance(c, int) or isinstance(c, bool) or c < 1:
        out.append(Diagnostic(f"{key}.candidates", f"candidates must be an integer >= 1, got {c!r}"))


def check_config(raw: dict) -> list[Diagnostic]:
    """Structural and semantic checks on a parsed config; never runs anything."""
    out: list[Diagnostic] = []
    if not isinstance(raw, dict):
        return [Diagnostic("<root>", "config must be a JSON object")]
    allowed = {"name", "dataset", "fractions", "seeds", "resampler", "protected_as_feature", "selector", *MATRIX_AXES}
    for k in raw:
        if k not in allowed:
            out.append(Diagnostic(k, f"unknown key; allowed: {', '.join(sorted(allowed))}"))
    if "dataset" not in raw:
        out.append(Diagnostic("dataset", "required"))
    elif not isinstance(raw["dataset"], (str, dict)):
        out.append(Diagnostic("dataset", "expected a registry id or an inline registry entry"))

    fr = raw.get("fractions", [0.7, 0.1, 0.2])
    if (
        not isinstance(fr, list)
        or len(fr) != 3
        or not all(isinstance(f, (int, float)) and not isinstance(f, bool) and f > 0 for f in fr)
    ):
        out.append(Diagnostic("fractions", f"expected three positive numbers, got {fr!r}"))
    elif abs(sum(fr) - 1.0) > 1e-9:
        out.append(Diagnostic("fractions", f"fractions must sum to 1, got {sum(fr)!r}"))

    seeds = raw.get("seeds", list(DEFAULT_SEEDS))
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        out.append(Diagnostic("seeds", "expected a non-empty list of integers"))

    if raw.get("resampler", "none") not in RESAMPLERS:
        out.append(Diagnostic("resampler", f"unknown resampler {raw['resampler']!r}; allowed: {', '.join(RESAMPLERS)}"))
    if not isinstance(raw.get("protected_as_feature", True), bool):
        out.append(Diagnostic("protected_as_feature", "expected true or false"))

    for key in MATRIX_AXES:
        values = _as_list(raw.get(key, _DEFAULTS[key]))
        if not values:
            out.append(Diagnostic(key, "empty list"))
        for i, v in enumerate(values):
            k = key if len(values) == 1 and not isinstance(raw.get(key), list) else f"{key}[{i}]"
            v = _normalize_component(key, v)
            if key == "learner":
                _check_learner(k, v, out)
            elif key == "imputer":
                if not isinstance(v, dict) or v.get("kind") not in IMPUTERS:
                    kind = v.get("kind") if isinstance(v, dict) else v
                    out.append(Diagnostic(f"{k}.kind", f"unknown imputer {kind!r}; allowed: {', '.join(IMPUTERS)}"))
                elif v.get("target_columns") is not None and not (
                    isinstance(v["target_columns"], list) and all(isinstance(c, str) for c in v["target_columns"])
                ):
                    out.append(Diagnostic(f"{k}.target_columns", "expected a list of column names or null"))
            elif key == "scaler":
                kind = v.get("kind") if isinstance(v, dict) else v
                if kind not in SCALERS:
                    out.append(Diagnostic(k, f"unknown scaler {kind!r}; allowed: {', '.join(SCALERS)}"))
            elif key == "pre_intervention":
                _check_intervention(k, v, PRE_INTERVENTIONS, out)
            else:
                _check_intervention(k, v, POST_INTERVENTIONS, out)

    sel = _normalize_component("selector", raw.get("selector", {"kind": "max_accuracy"}))
    if not isinstance(sel, dict) or sel.get("kind") not in SELECTOR_KINDS:
        kind = sel.get("kind") if isinstance(sel, dict) else sel
        out.append(Diagnostic("selector.kind", f"unknown selector {kind!r}; allowed: {', '.join(SELECTOR_KINDS)}"))
    elif not isinstance(sel.get("epsilon", 0.05), (int, float)) or sel.get("epsilon", 0.05) < 0:
        out.append(Diagnostic("selector.epsilon", "epsilon must be a non-negative number"))
    return out


_DEFAULTS = {
    "learner": {"kind": "logistic_regression"},
    "imputer": {"kind": "complete_case"},
    "scaler": "standard",
    "pre_intervention": {"kind": "none"},
    "post_intervention": {"kind": "none"},
}


def read_config_file(path) -> dict:
    """Parse a config file; a provenance sidecar is accepted and its ``config`` used."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if isinstance(raw, dict) and "provenance_version" in raw:
        raw = raw["config"]
    return raw


def validate_config(path_or_raw) -> list[Diagnostic]:
    if isinstance(path_or_raw, dict):
        return check_config(path_or_raw)
    try:
        raw = read_config_file(path_or_raw)
    except ConfigError as exc:
        return [Diagnostic("<file>", str(exc))]
    return check_config(raw)


def _build_cell(raw: dict, combo: dict) -> ExperimentConfig:
    learner = dict(_normalize_component("learner", combo["learner"]))
    imputer = dict(_normalize_component("imputer", combo["imputer"]))
    scaler = combo["scaler"]
    scaler = scaler["kind"] if isinstance(scaler, dict) else scaler
    pre = dict(_normalize_component("pre_intervention", combo["pre_intervention"]))
    post = dict(_normalize_component("post_intervention", combo["post_intervention"]))
    if post.get("kind") == "reject_option":
        post.setdefault("objective", "statistical_parity")
    if post.get("kind") == "calibrated_eq_odds":
        post.setdefault("cost", "weighted")
    sel = dict(_normalize_component("selector", raw.get("selector", {"kind": "max_accuracy"})))
    targets = imputer.get("target_columns")
    return ExperimentConfig(
        dataset=raw["dataset"],
        name=raw.get("name", "experiment"),
        fractions=tuple(float(f) for f in raw.get("fractions", (0.7, 0.1, 0.2))),
        seeds=tuple(raw.get("seeds", DEFAULT_SEEDS)),
        resampler=raw.get("resampler", "none"),
        imputer=ImputerConfig(imputer["kind"], tuple(targets) if targets is not None else None),
        scaler=scaler,
        learner=LearnerConfig(
            kind=learner["kind"],
            tuning=learner.get("tuning", "tuned"),
            grid=learner.get("grid"),
            cv_folds=learner.get("cv_folds", 5),
            candidates=learner.get("candidates", 1),
            params=learner.get("params"),
        ),
        pre_intervention=InterventionConfig(**pre),
        post_intervention=InterventionConfig(**post),
        selector=SelectorConfig(**sel),
        protected_as_feature=raw.get("protected_as_feature", True),
    )


def expand(raw: dict, seeds=None) -> list[tuple[ExperimentConfig, int]]:
    """All ``(cell config, seed)`` pairs of a (matrix) config, seed-major.

    Raises :class:`ConfigError` listing every diagnostic if the config is invalid.
    """
    diags = check_config(raw)
    if diags:
        raise ConfigError("; ".join(str(d) for d in diags))
    seeds = list(raw.get("seeds", DEFAULT_SEEDS)) if seeds is None else list(seeds)
    axes = [_as_list(raw.get(k, _DEFAULTS[k])) for k in MATRIX_AXES]
    cells = [_build_cell(raw, dict(zip(MATRIX_AXES, combo))) for combo in itertools.product(*axes)]
    return [(cell, seed) for seed in seeds for cell in cells]


def cell_config(cfg: ExperimentConfig, seed: int) -> dict:
    """The raw single-cell, single-seed config that reproduces one run."""
    d = cfg.to_dict()
    d["seeds"] = [seed]
    return d
