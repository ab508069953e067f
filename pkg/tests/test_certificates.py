import math

import numpy as np
import pytest

from conftest import random_problem
from oracles import fd_jacobian, r_transcribed, rho_transcribed
from ratefix.certificates import (
    Verdict,
    certify,
    compute_box,
    jacobian,
    matrix_norm,
    r_certificates,
    rho_bounds,
    rho_certificates,
    vector_norm,
)
from ratefix.errors import UnsupportedDimension, ZeroExposure
from ratefix.iteration import phi
from ratefix.rating import FactorState, RatingProblem


class TestNorms:
    def test_vector(self):
        v = [3.0, -4.0]
        assert vector_norm(v, 1) == 7
        assert vector_norm(v, 2) == 5
        assert vector_norm(v, math.inf) == 4

    def test_matrix(self):
        A = [[1.0, -2.0], [3.0, 4.0]]
        assert matrix_norm(A, 1) == 6
        assert matrix_norm(A, math.inf) == 7

    def test_matrix_against_numpy(self, rng):
        A = rng.normal(size=(5, 7))
        assert matrix_norm(A, 1) == pytest.approx(np.linalg.norm(A, 1))
        assert matrix_norm(A, math.inf) == pytest.approx(np.linalg.norm(A, np.inf))

    def test_unsupported(self):
        with pytest.raises(ValueError):
            vector_norm([1.0], 3)
        with pytest.raises(ValueError):
            matrix_norm([[1.0]], 2)


class TestBox:
    def test_constant_exposure_and_uniform_loss_collapses(self):
        p = RatingProblem(np.full((2, 3, 2), 4.0), np.full((2, 3, 2), 2.0))
        box = compute_box(p)
        np.testing.assert_array_equal(box.lower.flat(), 1.0)
        np.testing.assert_array_equal(box.upper.flat(), 1.0)

    def test_bounds_bracket(self, rng):
        p = random_problem(rng, (3, 2, 2), spread=2.0)
        box = compute_box(p)
        assert np.all(box.lower.flat() <= box.upper.flat())
        assert all(b[0] <= 1.0 for b in box.lower.blocks)
        assert all(b[0] >= 1.0 for b in box.upper.blocks)

    def test_hand_values(self):
        # factor 0: slice losses (2, 6), exposures of slice 0 in [1, 2], slice 1 in [3, 4]
        E = np.array([[[1.0, 2.0]], [[3.0, 4.0]]])
        L = np.array([[[1.0, 1.0]], [[3.0, 3.0]]])
        box = compute_box(RatingProblem(L, E))
        np.testing.assert_allclose(box.lower[0], [0.5, 3 * 1 / 4])
        np.testing.assert_allclose(box.upper[0], [2.0, 3 * 2 / 3])

    def test_sampling_stays_inside(self, rng):
        p = random_problem(rng, (2, 3, 2), spread=3.0)
        box = compute_box(p)
        assert all(box.contains(f) for f in box.sample(100, rng))

    def test_zero_exposure(self):
        E = np.ones((2, 2, 2))
        E[1, 1, 1] = 0.0
        L = E.copy()
        with pytest.warns(RuntimeWarning):
            p = RatingProblem(L, E, strict=False)
        with pytest.raises(ZeroExposure):
            compute_box(p)


class TestJacobian:
    @pytest.mark.parametrize("dims", [(2, 2, 2), (3, 3, 2), (2, 3), (2, 2, 3, 2)])
    def test_against_finite_differences(self, rng, dims):
        for _ in range(3):
            p = random_problem(rng, dims, spread=1.0)
            f = FactorState.from_flat(rng.uniform(0.5, 2, sum(dims)), dims)

            def fun(x):
                return phi(p, FactorState.from_flat(x, dims)).flat()

            np.testing.assert_allclose(jacobian(p, f), fd_jacobian(fun, f.flat()), atol=1e-6)

    def test_fixed_base_columns(self, rng):
        p = random_problem(rng, (3, 2, 2), spread=1.0)
        f = FactorState.from_flat(rng.uniform(0.5, 2, 7), p.dims)
        mask = np.ones(7, dtype=bool)
        mask[list(p.offsets)] = False

        def fun(x):
            return phi(p, FactorState.from_flat(x, p.dims)).flat()

        J = jacobian(p, f, fixed_base_coordinates=True)
        np.testing.assert_allclose(J, fd_jacobian(fun, f.flat(), mask=mask), atol=1e-6)
        assert np.all(J[:, list(p.offsets)] == 0)

    def test_structure(self, rng):
        p = random_problem(rng, (3, 2, 2), spread=1.0)
        J = jacobian(p, FactorState.ones(p.dims))
        for t, (o, d) in enumerate(zip(p.offsets, p.dims)):
            assert np.all(J[o:o + d, o:o + d] == 0)
            assert np.all(J[o] == 0)

    def test_constant_exposure_is_zero(self, rng):
        p = RatingProblem(rng.uniform(1, 3, (2, 3, 2)), np.full((2, 3, 2), 1.7))
        for f in compute_box(p).sample(5, rng):
            assert np.all(jacobian(p, f) == 0)


class TestCertificates:
    def test_transcription_oracle(self, rng):
        for dims in [(2, 2, 2), (3, 3, 2), (2, 4, 3)]:
            for _ in range(5):
                p = random_problem(rng, dims, spread=1.0)
                L, E = p.losses.values, p.exposures.values
                np.testing.assert_allclose(rho_certificates(p), rho_transcribed(L, E), rtol=1e-13)
                np.testing.assert_allclose(r_certificates(p), r_transcribed(L, E), rtol=1e-13)

    def test_rho_dominated_by_r(self, rng):
        for _ in range(30):
            p = random_problem(rng, (3, 2, 3), spread=float(rng.uniform(0, 4)))
            c = certify(p)
            assert c.rho_inf <= c.r_inf * (1 + 1e-12)
            assert c.rho_1 <= c.r_1 * (1 + 1e-12)

    def test_bound_covers_sampled_jacobians(self, rng):
        p = random_problem(rng, (3, 3, 2), spread=1.0)
        b = rho_bounds(p)
        for f in compute_box(p).sample(50, rng):
            J = jacobian(p, f)
            assert matrix_norm(J, math.inf) <= b.rho_inf + 1e-12
            assert matrix_norm(J, 1) <= b.rho_1 + 1e-12

    def test_constant_exposure_all_zero(self, rng):
        p = RatingProblem(rng.uniform(1, 3, (2, 2, 3)), np.full((2, 2, 3), 0.25))
        c = certify(p)
        assert (c.rho_inf, c.rho_1, c.r_inf, c.r_1) == (0.0, 0.0, 0.0, 0.0)
        assert c.verdict is Verdict.CERTIFIED_UNIQUE

    def test_near_uniform_is_certified(self, rng):
        p = random_problem(rng, (2, 3, 2), spread=0.01)
        assert certify(p).certified

    def test_wide_spread_is_uncertified(self, rng):
        E = rng.uniform(1, 1000, (3, 3, 3))
        E[0, 0, 0] = 1.0
        E[2, 2, 2] = 1000.0
        p = RatingProblem(E * rng.uniform(0.5, 2, E.shape), E)
        c = certify(p)
        assert c.verdict is Verdict.UNCERTIFIED
        assert c.verdict.value == "Uncertified"

    @pytest.mark.parametrize("dims", [(2, 2), (2, 2, 2, 2)])
    def test_other_dimensions_unsupported(self, rng, dims):
        p = random_problem(rng, dims)
        with pytest.raises(UnsupportedDimension):
            certify(p)
