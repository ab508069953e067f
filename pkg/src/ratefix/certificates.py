"""Norms, the trapping box, the analytic Jacobian and a-priori contraction bounds.

The bounds ``rho_inf``/``rho_1`` use per-slice exposure extremes; ``r_inf``/
``r_1`` replace those by the global extremes and are therefore weaker. Any of
them below 1 certifies a unique fixed point and global convergence of the
re-rating iteration. They are implemented for exactly three rating factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ratefix.errors import UnsupportedDimension, ZeroExposure
from ratefix.rating import FactorState, RatingProblem, _check_state


def vector_norm(v, p: float = 2) -> float:
    v = np.abs(np.asarray(v, dtype=np.float64))
    if p == 1:
        return float(v.sum())
    if p == 2:
        return float(np.sqrt((v * v).sum()))
    if p == math.inf:
        return float(v.max()) if v.size else 0.0
    raise ValueError(f"unsupported vector norm p={p}")


def matrix_norm(M, p: float) -> float:
    """Operator norm: max absolute column sum (p=1) or row sum (p=inf)."""
    A = np.abs(np.asarray(M, dtype=np.float64))
    if A.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if A.size == 0:
        return 0.0
    if p == 1:
        return float(A.sum(axis=0).max())
    if p == math.inf:
        return float(A.sum(axis=1).max())
    raise ValueError(f"unsupported matrix norm p={p}")


@dataclass(frozen=True, eq=False)
class SliceExtremes:
    """Per-factor slice losses and min/max exposure within each slice."""

    losses: tuple[np.ndarray, ...]
    mins: tuple[np.ndarray, ...]
    maxs: tuple[np.ndarray, ...]
    global_min: float
    global_max: float
    total_loss: float


def slice_extremes(problem: RatingProblem) -> SliceExtremes:
    e = problem.exposures.values
    mins, maxs = [], []
    for t in range(problem.n_factors):
        others = tuple(a for a in range(e.ndim) if a != t)
        mins.append(e.min(axis=others))
        maxs.append(e.max(axis=others))
    mu = float(e.min())
    if mu <= 0:
        raise ZeroExposure("zero exposure cell: the trapping box is unbounded")
    return SliceExtremes(problem.slice_losses, tuple(mins), tuple(maxs), mu, float(e.max()),
                         problem.total_loss)


@dataclass(frozen=True, eq=False)
class BoxU:
    lower: FactorState
    upper: FactorState

    def contains(self, f: FactorState, rel_slack: float = 0.0) -> bool:
        return not self.violations(f, rel_slack).any()

    def violations(self, f: FactorState, rel_slack: float = 0.0) -> np.ndarray:
        x, lo, hi = f.flat(), self.lower.flat(), self.upper.flat()
        return (x < lo * (1 - rel_slack)) | (x > hi * (1 + rel_slack))

    def sample(self, n: int, rng: np.random.Generator) -> list[FactorState]:
        """Log-uniform points, independently per coordinate."""
        lo, hi = np.log(self.lower.flat()), np.log(self.upper.flat())
        draws = np.exp(lo + (hi - lo) * rng.random((n, lo.shape[0])))
        draws = np.clip(draws, self.lower.flat(), self.upper.flat())
        return [FactorState.from_flat(row, self.lower.sizes) for row in draws]


def compute_box(problem: RatingProblem) -> BoxU:
    ext = slice_extremes(problem)
    lower, upper = [], []
    for l, mu, M in zip(ext.losses, ext.mins, ext.maxs):
        ratio = l / l[0]
        lower.append(ratio * mu[0] / M)
        upper.append(ratio * M[0] / mu)
    return BoxU(FactorState(tuple(lower)), FactorState(tuple(upper)))


def _partial_sums(problem: RatingProblem, f: FactorState, t: int, u: int) -> np.ndarray:
    """d E^t_s / d f^u_v as an (n_t, n_u) matrix."""
    n = problem.n_factors
    w = problem.exposures.values
    for a in range(n):
        if a not in (t, u):
            shape = [1] * n
            shape[a] = problem.dims[a]
            w = w * f[a].reshape(shape)
    others = tuple(a for a in range(n) if a not in (t, u))
    w = w.sum(axis=others)
    return w if t < u else w.T


def jacobian(problem: RatingProblem, f: FactorState,
             fixed_base_coordinates: bool = False) -> np.ndarray:
    """Analytic Jacobian of the re-rating map at ``f``.

    Diagonal blocks are identically zero. With ``fixed_base_coordinates`` the
    columns of every block's base coordinate are zeroed, i.e. the Jacobian of
    the map restricted to ``f^t_0 = 1``.
    """
    _check_state(problem, f)
    dims = problem.dims
    offs = problem.offsets
    J = np.zeros((sum(dims), sum(dims)))
    for t in range(problem.n_factors):
        w = problem.exposures.values
        for a in range(problem.n_factors):
            if a != t:
                shape = [1] * problem.n_factors
                shape[a] = dims[a]
                w = w * f[a].reshape(shape)
        E = w.sum(axis=tuple(a for a in range(problem.n_factors) if a != t))
        ratio = problem.slice_losses[t] / problem.slice_losses[t][0]
        for u in range(problem.n_factors):
            if u == t:
                continue
            dE = _partial_sums(problem, f, t, u)
            block = (ratio / E**2)[:, None] * (dE[0][None, :] * E[:, None] - E[0] * dE)
            block[0] = 0.0
            J[offs[t]:offs[t] + dims[t], offs[u]:offs[u] + dims[u]] = block
    if fixed_base_coordinates:
        J[:, offs] = 0.0
    return J


def _require_three(problem: RatingProblem):
    if problem.n_factors != 3:
        raise UnsupportedDimension(
            f"contraction bounds are available for 3 factors, problem has {problem.n_factors}"
        )


def _amplitudes(ext: SliceExtremes, t: int) -> np.ndarray:
    l, mu, M = ext.losses[t], ext.mins[t], ext.maxs[t]
    return (l / l[0]) * (M[0] * M - mu[0] * mu) / mu**2


def _inverse_sum_bound(ext: SliceExtremes, t: int) -> float:
    """Upper bound on 1 / sum(f^t) over the box."""
    l, mu, M = ext.losses[t], ext.mins[t], ext.maxs[t]
    return float(l[0] / (mu[0] * (l / M).sum()))


@dataclass(frozen=True, eq=False)
class RhoBounds:
    rho_inf: float
    rho_1: float
    rho_inf_rows: tuple[np.ndarray, ...]
    rho_1_columns: tuple[float, ...]


def rho_bounds(problem: RatingProblem) -> RhoBounds:
    _require_three(problem)
    ext = slice_extremes(problem)
    n = problem.n_factors
    amp = [_amplitudes(ext, t) for t in range(n)]
    inv = [_inverse_sum_bound(ext, t) for t in range(n)]
    dims = problem.dims
    rows = tuple(
        amp[t] * sum((dims[u] - 1) * inv[u] for u in range(n) if u != t) for t in range(n)
    )
    cols = tuple(
        inv[t] * sum(float(amp[u].sum()) for u in range(n) if u != t) for t in range(n)
    )
    return RhoBounds(max(float(r.max()) for r in rows), max(cols), rows, cols)


def rho_certificates(problem: RatingProblem) -> tuple[float, float]:
    b = rho_bounds(problem)
    return b.rho_inf, b.rho_1


def r_certificates(problem: RatingProblem) -> tuple[float, float]:
    """Global-extreme bounds; never smaller than the per-slice ones."""
    _require_three(problem)
    ext = slice_extremes(problem)
    mu, M, L = ext.global_min, ext.global_max, ext.total_loss
    dims = problem.dims
    base = [float(ext.losses[t][0]) for t in range(3)]
    spread = (M * M - mu * mu) * M / mu**3
    terms = []
    for t in range(3):
        l = ext.losses[t]
        other = sum((dims[u] - 1) * base[u] for u in range(3) if u != t)
        terms.append(float((l * other / base[t]).max()))
    r_inf = spread / L * max(terms)
    r_1 = spread * max(sum(base[t] / base[u] for u in range(3) if u != t) for t in range(3))
    return r_inf, r_1


class Verdict(str, Enum):
    CERTIFIED_UNIQUE = "CertifiedUnique"
    UNCERTIFIED = "Uncertified"


@dataclass(frozen=True, eq=False)
class ConvergenceCertificate:
    rho_inf: float
    rho_1: float
    r_inf: float
    r_1: float
    box: BoxU

    @property
    def rho(self) -> float:
        return min(self.rho_1, self.rho_inf)

    @property
    def r(self) -> float:
        return min(self.r_1, self.r_inf)

    @property
    def verdict(self) -> Verdict:
        if min(self.rho, self.r) < 1:
            return Verdict.CERTIFIED_UNIQUE
        return Verdict.UNCERTIFIED

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.CERTIFIED_UNIQUE


def certify(problem: RatingProblem) -> ConvergenceCertificate:
    rho_inf, rho_1 = rho_certificates(problem)
    r_inf, r_1 = r_certificates(problem)
    return ConvergenceCertificate(rho_inf, rho_1, r_inf, r_1, compute_box(problem))
