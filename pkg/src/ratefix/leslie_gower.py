"""Multi-species Leslie-Gower competition model.

The population map is ``x_i <- b_i x_i / (1 + sum_j c_ij x_j)``. Its interior
equilibria solve the linear system ``C x = b - 1``; under weak inter-specific
competition with invertible ``C`` that solution is the unique positive
equilibrium and the iteration converges to it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ratefix import linalg
from ratefix._backend import kernels
from ratefix.errors import (
    GrowthNotAboveOne,
    NonPositiveSolution,
    SingularMatrix,
    WeakCompetitionViolated,
)
from ratefix.iteration import IterationSettings, IterationTrace

LG_SETTINGS = IterationSettings(tolerance=1e-12, max_iters=100_000)


@dataclass(frozen=True, eq=False)
class LGModel:
    b: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        C = np.array(self.C, dtype=np.float64)
        d = b.shape[0]
        if C.ndim == 1 and C.size == d * d:
            C = C.reshape(d, d)
        if d < 2:
            raise ValueError(f"need at least 2 species, got {d}")
        if C.shape != (d, d):
            raise ValueError(f"C has shape {C.shape}, expected {(d, d)}")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(C))):
            raise ValueError("coefficients must be finite")
        if np.any(b <= 0):
            raise ValueError("growth coefficients b_i must be positive")
        if np.any(np.diag(C) <= 0):
            raise ValueError("intra-specific coefficients c_ii must be positive")
        if np.any(C < 0):
            raise ValueError("competition coefficients c_ij must be non-negative")
        b.setflags(write=False)
        C = np.ascontiguousarray(C)
        C.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "C", C)

    @property
    def d(self) -> int:
        return self.b.shape[0]

    @property
    def carrying_capacities(self) -> np.ndarray:
        return (self.b - 1.0) / np.diag(self.C)

    def __eq__(self, other):
        if not isinstance(other, LGModel):
            return NotImplemented
        return np.array_equal(self.b, other.b) and np.array_equal(self.C, other.C)


@dataclass(frozen=True, eq=False)
class LGDiagnostics:
    growth_ok: bool
    rank_consistent: bool
    invertible: bool
    rank: int
    rank_augmented: int
    carrying_capacities: np.ndarray
    weak_competition: bool | None = None
    weak_competition_slack: np.ndarray | None = None
    box: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def weak_competition_tight(self) -> bool:
        """True when some species meets the weak-competition bound with equality."""
        return self.weak_competition_slack is not None and bool(
            np.any(self.weak_competition_slack == 0)
        )


def bh_map(model: LGModel, x) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (model.d,):
        raise ValueError(f"state has shape {x.shape}, expected ({model.d},)")
    if np.any(x < 0):
        raise ValueError("populations must be non-negative")
    return kernels.bh_map(model.b, model.C, x)


def check_necessary(model: LGModel) -> LGDiagnostics:
    rhs = model.b - 1.0
    scale = float(np.abs(model.C).max())
    rank = linalg.rank(model.C, scale)
    rank_aug = linalg.rank(np.column_stack([model.C, rhs]), scale)
    return LGDiagnostics(
        growth_ok=bool(np.all(model.b > 1)),
        rank_consistent=rank == rank_aug,
        invertible=rank == model.d,
        rank=rank,
        rank_augmented=rank_aug,
        carrying_capacities=model.carrying_capacities,
    )


def _competition_load(model: LGModel) -> np.ndarray:
    """sum_{j != i} c_ij b_j / c_jj for every i."""
    off = model.C - np.diag(np.diag(model.C))
    return off @ (model.b / np.diag(model.C))


def check_weak_competition(model: LGModel) -> tuple[bool, np.ndarray]:
    slack = model.b - 1.0 - _competition_load(model)
    return bool(np.all(slack >= 0)), slack


def build_box(model: LGModel, shrink: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Invariant box ``[h_i, b_i / c_ii]`` with ``h_i = shrink * slack_i / c_ii``.

    ``slack_i = b_i - 1 - load_i`` is the weak-competition margin. Any lower
    edge at or below ``slack_i / c_ii`` is mapped back above itself, since
    ``b_i h / (1 + load_i + c_ii h) >= h`` exactly when ``c_ii h <= slack_i``.
    A species that meets the weak-competition bound with equality gets
    ``h_i = 0``.
    """
    if not 0 < shrink < 1:
        raise ValueError(f"shrink must lie in (0, 1), got {shrink}")
    ok, slack = check_weak_competition(model)
    if not ok:
        worst = int(np.argmin(slack))
        raise WeakCompetitionViolated(
            f"species {worst} has competition load exceeding b_i - 1 by {-slack[worst]!r}"
        )
    diag = np.diag(model.C)
    lower = shrink * slack / diag
    upper = model.b / diag
    return lower, upper


def diagnose(model: LGModel, shrink: float = 0.5) -> LGDiagnostics:
    base = check_necessary(model)
    ok, slack = check_weak_competition(model)
    box = build_box(model, shrink) if ok else None
    return LGDiagnostics(
        growth_ok=base.growth_ok,
        rank_consistent=base.rank_consistent,
        invertible=base.invertible,
        rank=base.rank,
        rank_augmented=base.rank_augmented,
        carrying_capacities=base.carrying_capacities,
        weak_competition=ok,
        weak_competition_slack=slack,
        box=box,
    )


def solve_linear(model: LGModel) -> np.ndarray:
    """Equilibrium from ``C x = b - 1`` by elimination with partial pivoting.

    Emits :class:`NonPositiveSolution` when the algebraic solution has a
    coordinate <= 0 (it is then not an interior equilibrium).
    """
    x = linalg.solve(model.C, model.b - 1.0)
    if x is None:
        diag = check_necessary(model)
        kind = "infinitely many solutions" if diag.rank_consistent else "no solution"
        raise SingularMatrix(
            f"C is singular (rank {diag.rank} of {model.d}); C x = b - 1 has {kind}",
            rank=diag.rank,
            rank_augmented=diag.rank_augmented,
        )
    if np.any(x <= 0):
        warnings.warn(f"equilibrium {x.tolist()} is not strictly positive", NonPositiveSolution,
                      stacklevel=2)
    return x


def iterate_lg(model: LGModel, x0, settings: IterationSettings | None = None) -> IterationTrace:
    settings = settings or LG_SETTINGS
    x0 = np.array(x0, dtype=np.float64)
    if x0.shape != (model.d,):
        raise ValueError(f"initial state has shape {x0.shape}, expected ({model.d},)")
    if np.any(x0 <= 0):
        raise ValueError("initial populations must be strictly positive")
    iterates, residuals, converged = kernels.lg_iterate(
        model.b, model.C, x0, settings.tolerance, settings.max_iters, settings.norm_inf
    )
    return IterationTrace(iterates, residuals, bool(converged), settings.tolerance)


def to_summers_form(model: LGModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rewrite as ``x_i <- mu_i K_i x_i / (K_i + sum_j ct_ij x_j)``.

    ``mu = b``, ``K_i = (b_i - 1) / c_ii`` and ``ct_ij = K_i c_ij``; the
    diagonal of ``ct`` is then ``mu_i - 1``.
    """
    if np.any(model.b <= 1):
        raise GrowthNotAboveOne("the K-form needs b_i > 1 for every species")
    K = model.carrying_capacities
    return model.b.copy(), K, K[:, None] * model.C


def from_summers_form(mu, K, c_tilde) -> LGModel:
    K = np.asarray(K, dtype=np.float64)
    return LGModel(np.asarray(mu, dtype=np.float64), np.asarray(c_tilde, dtype=np.float64) / K[:, None])


def random_start(model: LGModel, rng: np.random.Generator, high: float | None = None) -> np.ndarray:
    """Uniform positive start in ``(0, high]``, ``high`` defaulting to ``2 max(b_i / c_ii)``."""
    high = 2 * float(np.max(model.b / np.diag(model.C))) if high is None else high
    return high * (1.0 - rng.random(model.d))


def equilibrium_gap(trace: IterationTrace, x) -> float:
    return float(np.abs(trace.final - np.asarray(x)).max())
