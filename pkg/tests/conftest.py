import numpy as np
import pytest

from tabclust import autoencoder as A
from tabclust.datasets import gaussian_blobs


def finite_difference(f, params, step=1e-5):
    """Central differences of scalar ``f()`` w.r.t. every entry of ``params``."""
    out = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + step
            up = f()
            p[idx] = old - step
            down = f()
            p[idx] = old
            g[idx] = (up - down) / (2 * step)
        out.append(g)
    return out


def max_rel_error(analytic, numeric, floor=1e-6):
    worst = 0.0
    for a, f in zip(analytic, numeric):
        den = np.maximum(np.maximum(np.abs(a), np.abs(f)), floor)
        worst = max(worst, float(np.max(np.abs(a - f) / den)))
    return worst


@pytest.fixture(scope="session")
def blobs():
    return gaussian_blobs(n=600, d=50, k=6, separation=10.0, rng=1)


@pytest.fixture
def small_ae():
    return A.init_state(A.AEConfig([8, 6, 4, 2]), 3)


# acceptance verdict lines, printed again in the terminal summary so they
# survive output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
