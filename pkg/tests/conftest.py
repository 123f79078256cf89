"""Shared helpers: committed-data loaders and frequently used fixtures."""

import json
from pathlib import Path

import numpy as np
import pytest

from framelab import ToleranceProfile, fixture

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = Path(__file__).resolve().parent / "data"
FIXTURE_DIR = REPO_ROOT / "src" / "framelab" / "fixtures"


def load_suite(name):
    return json.loads((DATA_DIR / name).read_text(encoding="utf-8"))


def load_sidecar(fixture_name):
    stem = fixture_name.lower().replace("-", "_")
    path = FIXTURE_DIR / (stem + ".oracle.json")
    return json.loads(path.read_text(encoding="utf-8"))


def decode(rows, complex_field):
    """Matrix entries as stored: floats, or [re, im] pairs when complex."""
    if complex_field:
        return np.array([[complex(v[0], v[1]) for v in row] for row in rows])
    return np.array([[float(v) for v in row] for row in rows], dtype=float)


def decode_case_matrix(case, key):
    return decode(case[key], case["field"] == "complex")


def fix_r_names():
    return sorted(p.name[:-5].upper().replace("_", "-")
                  for p in FIXTURE_DIR.glob("fix_r*.json")
                  if not p.name.endswith(".oracle.json"))


@pytest.fixture(scope="session")
def tol():
    return ToleranceProfile()


@pytest.fixture(scope="session")
def fix_a():
    return fixture("FIX-A")


@pytest.fixture(scope="session")
def fix_i():
    return fixture("FIX-I")
