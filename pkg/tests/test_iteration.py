import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_problem, separable_problem
from oracles import phi_bruteforce
from ratefix.certificates import compute_box
from ratefix.iteration import (
    IterationSettings,
    IterationTrace,
    fixed_point_residual,
    iterate,
    multistart,
    phi,
    random_states,
)
from ratefix.rating import FactorState, RatingProblem, indicated_factors


@pytest.mark.parametrize("dims", [(2, 2), (2, 2, 2), (3, 3, 2), (2, 4, 3), (2, 2, 3, 2)])
def test_phi_matches_bruteforce(rng, dims):
    for _ in range(5):
        p = random_problem(rng, dims, spread=2.0)
        f = FactorState.from_flat(rng.uniform(0.3, 3, sum(dims)), dims)
        got = phi(p, f)
        want = phi_bruteforce(p.losses.values, p.exposures.values, f.blocks)
        for a, b in zip(got.blocks, want):
            np.testing.assert_allclose(a, b, rtol=1e-13)


def test_phi_agrees_with_loss_cost_route(rng):
    for _ in range(20):
        p = random_problem(rng, (3, 3, 2), spread=3.0)
        f = FactorState.from_flat(rng.uniform(0.5, 2, 8), p.dims)
        np.testing.assert_allclose(phi(p, f).flat(), indicated_factors(p, f).flat(), rtol=1e-14)


def test_uniform_data_gives_ones_in_one_step():
    p = RatingProblem(np.full((2, 2, 2), 5.0), np.full((2, 2, 2), 2.0))
    tr = iterate(p)
    assert tr.converged
    assert tr.iterations_used == 1
    assert np.all(tr.final == 1.0)


def test_separable_converges_to_generators():
    p = separable_problem()
    tr = iterate(p, FactorState.from_flat([1, 5, 1, 0.2, 1, 9], (2, 2, 2)))
    assert tr.converged
    assert tr.settled_at == 1
    assert tr.state() == FactorState(([1, 2], [1, 3], [1, 4]))


def test_trace_bookkeeping(rng):
    p = random_problem(rng, (2, 3, 2), spread=0.5)
    tr = iterate(p)
    assert tr.iterates.shape == (tr.iterations_used + 1, 7)
    assert tr.final_residual <= 1e-10
    steps = np.abs(np.diff(tr.iterates, axis=0)).max(axis=1)
    np.testing.assert_array_equal(steps, tr.residuals)


def test_l1_norm_option(rng):
    p = random_problem(rng, (2, 2, 2))
    tr = iterate(p, settings=IterationSettings(norm=1))
    assert tr.converged
    assert tr.final_residual == pytest.approx(np.abs(tr.iterates[-1] - tr.iterates[-2]).sum())


def test_max_iters_is_not_an_error(rng):
    p = random_problem(rng, (3, 3, 3), spread=5.0)
    tr = iterate(p, settings=IterationSettings(tolerance=1e-15, max_iters=2))
    assert not tr.converged
    assert tr.iterations_used == 2


@pytest.mark.parametrize("kwargs", [{"tolerance": 0}, {"max_iters": 0}, {"norm": 2}])
def test_settings_validation(kwargs):
    with pytest.raises(ValueError):
        IterationSettings(**kwargs)


def test_rejects_non_positive_start():
    p = separable_problem()
    with pytest.raises(ValueError):
        iterate(p, FactorState.from_flat([1, 0, 1, 1, 1, 1], (2, 2, 2)))


def test_phi_lands_in_box(rng):
    for _ in range(10):
        p = random_problem(rng, (3, 2, 3), spread=4.0)
        box = compute_box(p)
        for f in random_states(p.dims, 50, rng, 1e-3, 1e3):
            assert box.contains(phi(p, f), rel_slack=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.integers(0, 2),
       c=st.floats(1e-3, 1e3, allow_nan=False))
def test_block_scaling_leaves_phi_unchanged(seed, t, c):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, (2, 3, 2), spread=2.0)
    f = FactorState.from_flat(rng.uniform(0.2, 5, 7), p.dims)
    np.testing.assert_allclose(phi(p, f.scaled(t, c)).flat(), phi(p, f).flat(), rtol=1e-12)


def test_fixed_point_is_idempotent(rng):
    p = random_problem(rng, (3, 3, 2), spread=0.3)
    f = iterate(p).state()
    np.testing.assert_allclose(phi(p, f).flat(), f.flat(), atol=1e-10)
    assert fixed_point_residual(p, f) <= 1e-10
    assert fixed_point_residual(p, f, norm=1) <= 8e-10


def test_random_states_are_log_uniform_within_bounds(rng):
    states = random_states((2, 3), 500, rng, 0.1, 10)
    flat = np.array([s.flat() for s in states])
    assert flat.min() >= 0.1 and flat.max() <= 10
    assert abs(np.log(flat).mean()) < 0.1


def test_multistart_agrees(rng):
    p = random_problem(rng, (2, 3, 2), spread=0.2)
    res = multistart(p, 6, rng)
    assert res.all_converged
    assert res.spread <= 1e-8


def test_settled_at_on_handmade_trace():
    its = np.array([[3.0], [1.5], [1.0 + 1e-12], [1.0]])
    tr = IterationTrace(its, np.array([1.5, 0.5, 1e-12]), True, 1e-10)
    assert tr.settled_at == 2
    with pytest.raises(TypeError):
        tr.state()


def test_norm_is_normalized_to_float():
    assert IterationSettings(norm="inf").norm == math.inf
