import numpy as np
import pytest

from qme import engine
from qme.engine import DetectorSpec, SystemSpec


def random_density_matrix(rng, n_sites, rank=None):
    dim = 1 << n_sites
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_spec(rng, n_sites, beta=1.0):
    eps = rng.uniform(-0.6, 0.6, n_sites)
    coupling = {(j, k): rng.uniform(-0.4, 0.4) for j in range(1, n_sites + 1) for k in range(j + 1, n_sites + 1)}
    return SystemSpec(n_sites, eps, coupling, beta)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def surface_instance():
    """Reference two-qubit instance with one detector, '+' branch."""
    spec = SystemSpec.two_qubit(0.05, 0.10, -0.2)
    branch = engine.measure(spec.thermal, [DetectorSpec(1, 0.2)])[0]
    return spec, branch


ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail=""):
    """Collect one PASS/FAIL line per exit criterion for the end-of-run summary."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
