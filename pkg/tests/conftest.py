from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from scsynth.group import Unitary2
from scsynth.net import default_net

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_CRITERIA: list[str] = []


@pytest.fixture(scope="session")
def net():
    return default_net()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report():
    """Record one pass/fail line for the terminal summary."""

    def _report(line: str) -> None:
        print(line)
        _CRITERIA.append(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def unitaries():
    """Hypothesis strategy: SU(2) elements from nonzero Gaussian-ish 4-vectors."""
    comp = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)
    return (
        st.tuples(comp, comp, comp, comp)
        .filter(lambda v: sum(x * x for x in v) > 1e-3)
        .map(Unitary2.from_quaternion)
    )


def dense(u: Unitary2) -> np.ndarray:
    """Matrix of ``u`` rebuilt from Pauli matrices (independent of ``Unitary2.matrix``)."""
    a, b, c, d = u.q
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]])
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    return a * np.eye(2) - 1j * (b * x + c * y + d * z)


def dense_op_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Phase-minimized operator distance: normalize both to det 1, then take
    the smaller largest singular value over the two SU(2) representatives."""
    a = a / np.sqrt(np.linalg.det(a))
    b = b / np.sqrt(np.linalg.det(b))
    return min(np.linalg.svd(a - s * b, compute_uv=False).max() for s in (1.0, -1.0))
