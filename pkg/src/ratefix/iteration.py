"""The loss-ratio re-rating map and its fixed-point iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ratefix._backend import kernels
from ratefix.rating import FactorState, RatingProblem, _check_state


@dataclass(frozen=True)
class IterationSettings:
    tolerance: float = 1e-10
    max_iters: int = 10_000
    norm: float = math.inf

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")
        norm = math.inf if self.norm in ("inf", "infinity") else float(self.norm)
        if norm not in (1.0, math.inf):
            raise ValueError(f"residual norm must be 1 or inf, got {self.norm}")
        object.__setattr__(self, "norm", norm)
        object.__setattr__(self, "max_iters", int(self.max_iters))

    @property
    def norm_inf(self) -> bool:
        return self.norm == math.inf


@dataclass(frozen=True, eq=False)
class IterationTrace:
    """Every iterate (row ``t`` is ``f^t``) and the successive-step residuals.

    ``residuals[t]`` is ``norm(f^{t+1} - f^t)``; there is one per map
    application, so ``iterations_used == len(residuals)``.
    """

    iterates: np.ndarray
    residuals: np.ndarray
    converged: bool
    tolerance: float
    sizes: tuple[int, ...] | None = None

    @property
    def iterations_used(self) -> int:
        return int(self.residuals.shape[0])

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1])

    def state(self, t: int = -1) -> FactorState:
        if self.sizes is None:
            raise TypeError("trace does not carry a block layout")
        return FactorState.from_flat(self.iterates[t], self.sizes)

    @property
    def settled_at(self) -> int:
        """First step ``t`` with ``f^t`` within tolerance of the final iterate (inf-norm)."""
        gaps = np.abs(self.iterates - self.iterates[-1]).max(axis=1)
        return int(np.flatnonzero(gaps <= self.tolerance)[0])


def phi(problem: RatingProblem, f: FactorState) -> FactorState:
    """One simultaneous loss-ratio sweep written as a map of the stacked relativities."""
    _check_state(problem, f)
    out = kernels.phi(*problem.kernel_args, np.ascontiguousarray(f.flat()))
    return FactorState.from_flat(out, problem.dims)


def iterate(problem: RatingProblem, f0: FactorState | None = None,
            settings: IterationSettings | None = None) -> IterationTrace:
    """Apply :func:`phi` until successive iterates agree to the tolerance.

    Hitting ``max_iters`` is reported through ``converged=False``; it is not
    an error.
    """
    settings = settings or IterationSettings()
    f0 = FactorState.ones(problem.dims) if f0 is None else f0
    _check_state(problem, f0)
    if not f0.is_positive():
        raise ValueError("initial relativities must be strictly positive")
    iterates, residuals, converged = kernels.rating_iterate(
        *problem.kernel_args,
        np.ascontiguousarray(f0.flat()),
        settings.tolerance,
        settings.max_iters,
        settings.norm_inf,
    )
    return IterationTrace(iterates, residuals, bool(converged), settings.tolerance, problem.dims)


def fixed_point_residual(problem: RatingProblem, f: FactorState, norm: float = math.inf) -> float:
    diff = phi(problem, f).flat() - f.flat()
    return float(np.linalg.norm(diff, ord=norm))


def random_states(dims, n: int, rng: np.random.Generator, low: float = 1e-1,
                  high: float = 1e1) -> list[FactorState]:
    """Log-uniform random relativities in ``[low, high]``."""
    total = int(sum(dims))
    draws = np.exp(rng.uniform(math.log(low), math.log(high), size=(n, total)))
    return [FactorState.from_flat(row, dims) for row in draws]


@dataclass(frozen=True, eq=False)
class MultiStartResult:
    traces: list[IterationTrace]
    spread: float

    @property
    def all_converged(self) -> bool:
        return all(t.converged for t in self.traces)


def multistart(problem: RatingProblem, n_starts: int, rng: np.random.Generator,
               settings: IterationSettings | None = None) -> MultiStartResult:
    """Empirical uniqueness check: iterate from several random starts.

    ``spread`` is the largest inf-norm distance of any limit from the first.
    """
    traces = [iterate(problem, f0, settings) for f0 in random_states(problem.dims, n_starts, rng)]
    ref = traces[0].final
    spread = max(float(np.abs(t.final - ref).max()) for t in traces)
    return MultiStartResult(traces, spread)
