import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hedonic_gam.data_model import Dataset, FactorKind, FactorSpec

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def continuous(*names):
    return tuple(FactorSpec(nm, FactorKind.CONTINUOUS) for nm in names)


def make_dataset(X, y, names=None, binary=()):
    """Dataset from raw columns; names default to x1..xm."""
    X = np.asarray(X, dtype=float)
    names = names or [f"x{j + 1}" for j in range(X.shape[1])]
    factors = tuple(
        FactorSpec(nm, FactorKind.BINARY if nm in binary else FactorKind.CONTINUOUS) for nm in names
    )
    return Dataset.from_raw(factors, X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# criterion number -> (title, passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]")
