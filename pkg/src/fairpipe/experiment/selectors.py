"""Model selectors: user-defined choice of the best candidate.

A selector sees only :class:`CandidateOutcome` objects (train and
validation metrics, CV results); it returns an index into that list.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence


@dataclass(frozen=True)
class ModelSelector:
    id: str
    choose: Callable[[Sequence], int]

    def __call__(self, candidates: Sequence) -> int:
        return self.choose(candidates)


def _val(c, name):
    return c.validation_report.flat()[name]


def _accuracy(c) -> float:
    acc = _val(c, "overall_accuracy")
    return -1.0 if acc is None else acc


def _abs_spd(c) -> float:
    spd = _val(c, "statistical_parity_diff")
    return float("inf") if spd is None else abs(spd)


def _argmax(values) -> int:
    # first index wins ties
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def max_accuracy() -> ModelSelector:
    return ModelSelector("max_accuracy", lambda cs: _argmax([_accuracy(c) for c in cs]))


def max_accuracy_spd_bound(epsilon: float = 0.05) -> ModelSelector:
    """Most accurate candidate with |SPD| <= epsilon; smallest |SPD| if none qualifies."""

    def choose(cs):
        ok = [i for i, c in enumerate(cs) if _abs_spd(c) <= epsilon]
        if not ok:
            return min(range(len(cs)), key=lambda i: (_abs_spd(cs[i]), -_accuracy(cs[i]), i))
        return ok[_argmax([_accuracy(cs[i]) for i in ok])]

    return ModelSelector(f"max_accuracy_spd_bound({epsilon:g})", choose)


def accuracy_minus_spd() -> ModelSelector:
    return ModelSelector("accuracy_minus_spd", lambda cs: _argmax([_accuracy(c) - _abs_spd(c) for c in cs]))


def make_selector(kind: str, epsilon: float = 0.05) -> ModelSelector:
    if kind == "max_accuracy":
        return max_accuracy()
    if kind == "max_accuracy_spd_bound":
        return max_accuracy_spd_bound(epsilon)
    if kind == "accuracy_minus_spd":
        return accuracy_minus_spd()
    raise ValueError(f"unknown selector {kind!r}")
