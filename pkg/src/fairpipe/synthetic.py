"""Seeded synthetic datasets for demos and tests.

``credit_like`` mimics a small credit-scoring table with a protected
attribute, mixed column kinds and cells missing at random.
``scaling_surrogate`` is a tiny exam-score table whose two informative
features live on very different scales (about 1 and about 1e6).
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

CREDIT_COLUMNS = [
    {"name": "age", "kind": "numeric"},
    {"name": "income", "kind": "numeric"},
    {"name": "duration", "kind": "numeric"},
    {"name": "housing", "kind": "categorical"},
    {"name": "job", "kind": "categorical"},
    {"name": "sex", "kind": "categorical", "role": "protected"},
    {"name": "good_credit", "kind": "categorical", "role": "label"},
]

SURROGATE_COLUMNS = [
    {"name": "oral", "kind": "numeric"},
    {"name": "written", "kind": "numeric"},
    {"name": "race", "kind": "categorical", "role": "protected"},
    {"name": "promoted", "kind": "categorical", "role": "label"},
]


def credit_like(n: int = 1000, seed: int = 0, missing_rate: float = 0.08) -> list[dict]:
    """Rows of a credit-like table; label depends on features and, weakly, on group."""
    rng = np.random.default_rng(seed)
    sex = np.where(rng.random(n) < 0.6, "male", "female")
    male = sex == "male"
    age = np.round(rng.normal(38 + 3 * male, 11, n).clip(18, 80))
    income = np.round(rng.lognormal(10.2 + 0.15 * male, 0.5, n), 2)
    duration = rng.integers(6, 61, n).astype(float)
    housing = rng.choice(["own", "rent", "free"], n, p=[0.6, 0.3, 0.1])
    job = rng.choice(["skilled", "unskilled", "management", "unemployed"], n, p=[0.55, 0.25, 0.15, 0.05])
    z = (
        0.04 * (age - 38)
        + 0.9 * (np.log(income) - 10.2)
        - 0.03 * (duration - 30)
        + 0.5 * (housing == "own")
        - 0.8 * (job == "unemployed")
        + 0.3 * male
        + 0.6
    )
    good = rng.random(n) < 1.0 / (1.0 + np.exp(-z))

    rows = []
    for i in range(n):
        row = {
            "age": f"{age[i]:g}",
            "income": f"{income[i]:.2f}",
            "duration": f"{duration[i]:g}",
            "housing": housing[i],
            "job": job[i],
            "sex": sex[i],
            "good_credit": "1" if good[i] else "0",
        }
        for col in ("age", "income", "job"):
            if rng.random() < missing_rate:
                row[col] = "?"
        rows.append(row)
    return rows


def scaling_surrogate(n: int = 120, seed: int = 0) -> list[dict]:
    """Rows whose label is a linear rule over features on scales 1 and 1e6.

    Both features are positive, as exam scores are, so an unscaled
    gradient step is dominated by the large-scale feature.
    """
    rng = np.random.default_rng(seed)
    race = np.where(rng.random(n) < 0.55, "W", "B")
    oral = rng.normal(0.0, 1.0, n)
    written = rng.normal(0.0, 1.0, n)
    promoted = (oral + written + 0.4 * (race == "W") - 0.2) > 0
    rows = []
    for i in range(n):
        rows.append(
            {
                "oral": f"{5.0 + oral[i]:.6f}",
                "written": f"{1e6 * (5.0 + written[i]):.1f}",
                "race": race[i],
                "promoted": "1" if promoted[i] else "0",
            }
        )
    return rows


def write_csv(path, rows: list[dict]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return path


def credit_entry(file: str = "synthetic_credit.csv", n: int = 1000, bundled: bool = False) -> dict:
    return {
        "id": "synthetic_credit",
        "file": file,
        "source": "fairpipe.synthetic.credit_like(seed=0)",
        "expected_rows": n,
        "bundled": bundled,
        "missing_tokens": ["?"],
        "columns": CREDIT_COLUMNS,
        "label_rule": {"favorable_values": ["1"]},
        "groups": {"protected_column": "sex", "privileged_values": ["male"], "unprivileged_values": ["female"]},
    }


def surrogate_entry(file: str = "scaling_surrogate.csv", n: int = 120, bundled: bool = False) -> dict:
    return {
        "id": "scaling_surrogate",
        "file": file,
        "source": "fairpipe.synthetic.scaling_surrogate(seed=0)",
        "expected_rows": n,
        "bundled": bundled,
        "columns": SURROGATE_COLUMNS,
        "label_rule": {"favorable_values": ["1"]},
        "groups": {"protected_column": "race", "privileged_values": ["W"], "unprivileged_values": ["B"]},
    }
