import numpy as np
import pytest
from scipy.stats import unitary_group

ACCEPTANCE_LINES = []


def random_density(dim, rng, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_bloch(rng, radius_max=1.0):
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return v * radius_max * rng.random() ** (1 / 3)


def random_unitary(dim, rng):
    return unitary_group.rvs(dim, random_state=rng)


@pytest.fixture
def rng():
    return np.random.default_rng(20031029)


@pytest.fixture
def record():
    """Collect one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def _record(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f" -- {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
