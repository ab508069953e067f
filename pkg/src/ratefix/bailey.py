"""Two-variable Bailey minimum-bias iteration, kept as a comparison baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ratefix.iteration import IterationSettings, IterationTrace
from ratefix.rating import FactorState, RatingProblem


@dataclass(frozen=True, eq=False)
class BaileyProblem:
    """Observed loss costs ``r`` and earned exposures ``w`` on an m x n grid."""

    r: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=np.float64)
        w = np.array(self.w, dtype=np.float64)
        if r.ndim != 2 or r.shape != w.shape:
            raise ValueError(f"r {r.shape} and w {w.shape} must be matching 2-D arrays")
        if np.any(r < 0):
            raise ValueError("loss costs must be non-negative")
        if np.any(w <= 0):
            raise ValueError("exposures must be strictly positive")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "w", w)

    @classmethod
    def from_rating(cls, problem: RatingProblem) -> BaileyProblem:
        """Loss costs are losses per unit of exposure on the same two-factor grid."""
        if problem.n_factors != 2:
            raise ValueError("Bailey's two-variable scheme needs exactly 2 factors")
        w = problem.exposures.values
        return cls(problem.losses.values / w, w)

    @property
    def shape(self) -> tuple[int, int]:
        return self.r.shape


def bailey_residuals(problem: BaileyProblem, x, y) -> tuple[np.ndarray, np.ndarray]:
    """Row and column bias sums ``sum w (r - x_i y_j)``."""
    dev = problem.w * (problem.r - np.outer(x, y))
    return dev.sum(axis=1), dev.sum(axis=0)


def _sweep(problem: BaileyProblem, x: np.ndarray, y: np.ndarray):
    wr = problem.w * problem.r
    x = wr.sum(axis=1) / (problem.w @ y)
    y = wr.sum(axis=0) / (x @ problem.w)
    return x, y


def bailey_iterate(problem: BaileyProblem, x0=None, y0=None,
                   settings: IterationSettings | None = None) -> IterationTrace:
    """Alternate the closed-form row and column solves until (x, y) settles.

    Each sweep updates ``x`` from the current ``y`` and then ``y`` from the
    new ``x``. Iterates are stored unnormalized; see :func:`normalize`.
    """
    settings = settings or IterationSettings()
    m, n = problem.shape
    x = np.ones(m) if x0 is None else np.array(x0, dtype=np.float64)
    y = np.ones(n) if y0 is None else np.array(y0, dtype=np.float64)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("starting relativities must be strictly positive")
    iterates = [np.concatenate([x, y])]
    residuals = []
    converged = False
    for _ in range(settings.max_iters):
        x, y = _sweep(problem, x, y)
        iterates.append(np.concatenate([x, y]))
        res = float(np.linalg.norm(iterates[-1] - iterates[-2], ord=settings.norm))
        residuals.append(res)
        if res <= settings.tolerance:
            converged = True
            break
    return IterationTrace(np.array(iterates), np.array(residuals), converged,
                          settings.tolerance, (m, n))


def normalize(state: FactorState) -> FactorState:
    """Shift scale from x into y so that x_0 = 1; fitted products are unchanged."""
    x, y = state.blocks
    c = x[0]
    out_x = x / c
    out_x[0] = 1.0
    return FactorState((out_x, y * c))
