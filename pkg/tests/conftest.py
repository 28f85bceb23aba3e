import os
from pathlib import Path

import numpy as np
import pytest

from fairpipe.registry import load_dataset
from fairpipe.tabular import ColumnSchema, Dataset, GroupSpec

DATA_DIR = Path(os.environ.get("FAIRPIPE_DATA_DIR", "/root/data"))


def make_dataset(numeric=None, categorical=None, labels=None, groups=None, weights=None):
    """Small in-memory dataset; ``groups`` is a list of "p"/"u" protected values."""
    numeric = numeric or {}
    categorical = categorical or {}
    n = len(labels)
    groups = groups if groups is not None else ["p" if i % 2 == 0 else "u" for i in range(n)]
    schema = [ColumnSchema(k, "numeric") for k in numeric]
    schema += [ColumnSchema(k, "categorical") for k in categorical]
    schema += [ColumnSchema("g", "categorical", "protected"), ColumnSchema("y", "categorical", "label")]
    cols = {k: np.asarray(v, dtype=float) for k, v in numeric.items()}
    cols.update({k: np.asarray(v, dtype=object) for k, v in categorical.items()})
    cols["g"] = np.asarray(groups, dtype=object)
    spec = GroupSpec("g", frozenset({"p"}), frozenset({"u"}))
    return Dataset(schema, cols, np.asarray(labels), spec, weights=weights)


@pytest.fixture(scope="session")
def credit():
    return load_dataset("synthetic_credit")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def data_file(name):
    path = DATA_DIR / name
    return path if path.is_file() else None


# -- acceptance summary ------------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
