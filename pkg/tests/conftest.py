import numpy as np
import pytest

from ratefix import _pykernels
from ratefix.leslie_gower import LGModel
from ratefix.rating import RatingProblem

try:
    from ratefix import _kernels
except ImportError:  # extension not built
    _kernels = None

KERNEL_BACKENDS = [
    pytest.param(_pykernels, id="python"),
    pytest.param(_kernels, id="compiled",
                 marks=pytest.mark.skipif(_kernels is None, reason="extension not built")),
]


def random_problem(rng, dims, spread=0.5, strict=True, plr=1.0):
    """Exposures in [1, 1 + spread]; losses a random multiple of exposure."""
    exposures = 1.0 + spread * rng.random(dims)
    losses = rng.uniform(0.5, 2.0, size=dims) * exposures
    return RatingProblem(losses, exposures, plr=plr, strict=strict)


def separable_problem(a=(1.0, 2.0), b=(1.0, 3.0), c=(1.0, 4.0), plr=1.0):
    losses = np.multiply.outer(np.multiply.outer(a, b), c)
    return RatingProblem(losses, np.ones(losses.shape), plr=plr)


def random_weak_lg(rng, d):
    """Random model with invertible C that satisfies weak competition."""
    b = rng.uniform(1.5, 4.0, size=d)
    diag = rng.uniform(0.5, 2.0, size=d)
    C = rng.random((d, d)) * (rng.random((d, d)) < 0.7)
    np.fill_diagonal(C, 0.0)
    load = C @ (b / diag)
    budget = (b - 1.0) * rng.uniform(0.2, 0.95, size=d)
    scale = np.where(load > 0, budget / np.where(load > 0, load, 1.0), 1.0)
    C = C * scale[:, None]
    np.fill_diagonal(C, diag)
    return LGModel(b, C)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# criterion number -> (title, passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
