"""Data model and one-shot formulas of the multiplicative rating problem.

Cells are addressed by a multi-index over N >= 2 rating factors. The base
cell is always index (0, ..., 0); callers permute their data beforehand
(see :func:`ratefix.io.permute_base_cell`).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from ratefix.errors import (
    DimensionMismatch,
    LossWithoutExposure,
    ZeroBaseSliceLoss,
    ZeroDenominator,
    ZeroExposure,
    ZeroSliceLoss,
)


@dataclass(frozen=True, eq=False)
class RiskTensor:
    """Dense non-negative array over the risk space, one axis per factor."""

    values: np.ndarray
    axis_names: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim < 2:
            raise DimensionMismatch(f"need at least 2 rating factors, got {values.ndim}")
        if values.size == 0:
            raise DimensionMismatch("every factor needs at least one level")
        if not np.all(np.isfinite(values)):
            raise ValueError("tensor values must be finite")
        if np.any(values < 0):
            raise ValueError("tensor values must be non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        names = tuple(self.axis_names) or tuple(f"factor{t}" for t in range(values.ndim))
        if len(names) != values.ndim:
            raise DimensionMismatch(f"{len(names)} axis names for {values.ndim} axes")
        object.__setattr__(self, "axis_names", names)

    @classmethod
    def from_flat(cls, dims: Sequence[int], values: Sequence[float], axis_names=()):
        dims = tuple(int(d) for d in dims)
        flat = np.asarray(values, dtype=np.float64)
        if flat.size != int(np.prod(dims)):
            raise DimensionMismatch(f"{flat.size} values do not fill dims {dims}")
        return cls(flat.reshape(dims), axis_names)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, RiskTensor):
            return NotImplemented
        return self.axis_names == other.axis_names and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class FactorState:
    """Relativity vectors, one block per factor (x; y; z; ...)."""

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = tuple(np.array(b, dtype=np.float64).reshape(-1) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def ones(cls, dims: Sequence[int]) -> FactorState:
        return cls(tuple(np.ones(n) for n in dims))

    @classmethod
    def from_flat(cls, vec, sizes: Sequence[int]) -> FactorState:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (sum(sizes),):
            raise DimensionMismatch(f"vector of length {vec.size} does not split into {tuple(sizes)}")
        cuts = np.cumsum(sizes)[:-1]
        return cls(tuple(np.split(vec, cuts)))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(b.shape[0] for b in self.blocks)

    def flat(self) -> np.ndarray:
        return np.concatenate(self.blocks)

    def is_positive(self) -> bool:
        return all(bool(np.all(b > 0)) for b in self.blocks)

    def scaled(self, block: int, c: float) -> FactorState:
        blocks = list(self.blocks)
        blocks[block] = blocks[block] * c
        return FactorState(tuple(blocks))

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, t):
        return self.blocks[t]

    def __eq__(self, other):
        if not isinstance(other, FactorState):
            return NotImplemented
        return self.sizes == other.sizes and all(
            np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks)
        )


@dataclass(frozen=True, eq=False)
class RatingProblem:
    """Losses and exposures on the same risk space plus the permissible loss ratio.

    In strict mode (the default) every exposure cell and every slice loss must
    be positive; otherwise zero cells are tolerated with a warning, and the
    certificate routines will refuse the problem.
    """

    losses: RiskTensor
    exposures: RiskTensor
    plr: float = 1.0
    current_base_rate: float | None = None
    strict: bool = True
    base_cell: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if not isinstance(self.losses, RiskTensor):
            object.__setattr__(self, "losses", RiskTensor(self.losses))
        if not isinstance(self.exposures, RiskTensor):
            object.__setattr__(self, "exposures", RiskTensor(self.exposures, self.losses.axis_names))
        if self.losses.dims != self.exposures.dims:
            raise DimensionMismatch(
                f"losses have dims {self.losses.dims}, exposures {self.exposures.dims}"
            )
        if not self.plr > 0:
            raise ValueError(f"permissible loss ratio must be positive, got {self.plr}")
        if self.current_base_rate is not None and not self.current_base_rate > 0:
            raise ValueError("current base rate must be positive")
        object.__setattr__(self, "base_cell", (0,) * len(self.dims))

        loss, expo = self.losses.values, self.exposures.values
        bad = np.argwhere((loss > 0) & (expo == 0))
        if bad.size:
            raise LossWithoutExposure(
                f"cell {tuple(int(i) for i in bad[0])} has loss {loss[tuple(bad[0])]!r} "
                "but zero exposure; loss > 0 requires exposure > 0"
            )
        self._check_positivity()

    def _check_positivity(self):
        zeros = np.argwhere(self.exposures.values == 0)
        if zeros.size:
            cell = tuple(int(i) for i in zeros[0])
            msg = f"{len(zeros)} zero-exposure cell(s), first at {cell}; merge neighbouring slices"
            if self.strict:
                raise ZeroExposure(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=3)
        for t, name in enumerate(self.axis_names):
            l = self.slice_losses[t]
            if l[0] <= 0:
                raise ZeroBaseSliceLoss(f"base slice of factor {name!r} has no loss")
            empty = np.flatnonzero(l == 0)
            if empty.size:
                msg = f"factor {name!r} slice {int(empty[0])} has zero loss (relativity would be 0)"
                if self.strict:
                    raise ZeroSliceLoss(msg)
                warnings.warn(msg, RuntimeWarning, stacklevel=3)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.losses.dims

    @property
    def n_factors(self) -> int:
        return len(self.dims)

    @property
    def axis_names(self) -> tuple[str, ...]:
        return self.losses.axis_names

    @property
    def total_loss(self) -> float:
        return float(self.losses.values.sum())

    @cached_property
    def slice_losses(self) -> tuple[np.ndarray, ...]:
        return tuple(_slice_sum(self.losses.values, t) for t in range(self.n_factors))

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.dims)[:-1])).astype(np.intp)

    @cached_property
    def kernel_args(self):
        """Contiguous arrays in the layout the iteration kernels expect."""
        return (
            np.ascontiguousarray(self.exposures.flat),
            np.asarray(self.dims, dtype=np.intp),
            self.offsets,
            np.concatenate(self.slice_losses),
        )


def _slice_sum(arr: np.ndarray, axis: int) -> np.ndarray:
    others = tuple(a for a in range(arr.ndim) if a != axis)
    return arr.sum(axis=others)


def _check_factor(problem: RatingProblem, factor: int):
    if not 0 <= factor < problem.n_factors:
        raise IndexError(f"factor {factor} out of range for {problem.n_factors} factors")


def _check_state(problem: RatingProblem, factors: FactorState):
    if factors.sizes != problem.dims:
        raise DimensionMismatch(f"factor sizes {factors.sizes} do not match dims {problem.dims}")


def slice_losses(problem: RatingProblem, factor: int) -> np.ndarray:
    """Total loss in each slice of ``factor`` (all other indices summed out)."""
    _check_factor(problem, factor)
    return problem.slice_losses[factor].copy()


def adjusted_exposures(problem: RatingProblem, factors: FactorState, factor: int) -> np.ndarray:
    """Slice exposures weighted by the relativities of every other factor."""
    _check_factor(problem, factor)
    _check_state(problem, factors)
    n = problem.n_factors
    w = problem.exposures.values
    for u in range(n):
        if u != factor:
            shape = [1] * n
            shape[u] = problem.dims[u]
            w = w * factors[u].reshape(shape)
    return _slice_sum(w, factor)


def adjusted_loss_costs(problem: RatingProblem, factors: FactorState, factor: int) -> np.ndarray:
    l = slice_losses(problem, factor)
    if l[0] <= 0:
        raise ZeroBaseSliceLoss(f"base slice of factor {problem.axis_names[factor]!r} has no loss")
    E = adjusted_exposures(problem, factors, factor)
    if np.any(E <= 0):
        s = int(np.flatnonzero(E <= 0)[0])
        raise ZeroExposure(
            f"adjusted exposure of factor {problem.axis_names[factor]!r} slice {s} is zero"
        )
    return l / E


def indicated_factors(problem: RatingProblem, factors: FactorState) -> FactorState:
    """One simultaneous loss-ratio sweep: every block from the *input* factors."""
    blocks = []
    for t in range(problem.n_factors):
        costs = adjusted_loss_costs(problem, factors, t)
        out = costs / costs[0]
        out[0] = 1.0
        blocks.append(out)
    return FactorState(tuple(blocks))


def _outer(blocks: Sequence[np.ndarray]) -> np.ndarray:
    out = blocks[0]
    for b in blocks[1:]:
        out = np.multiply.outer(out, b)
    return out


def indicated_base_rate(problem: RatingProblem, indicated: FactorState) -> float:
    _check_state(problem, indicated)
    weighted = float((_outer(indicated.blocks) * problem.exposures.values).sum())
    if weighted == 0:
        raise ZeroDenominator("factor-weighted exposure sum is zero")
    return (problem.total_loss / problem.plr) / weighted


def assemble_rates(base_rate: float, factors: FactorState, axis_names=()) -> RiskTensor:
    """Multiplicative rate table; the base cell carries ``base_rate`` exactly."""
    if not factors.is_positive():
        raise ValueError("relativities must be positive")
    return RiskTensor(base_rate * _outer(factors.blocks), axis_names)
