import math

import numpy as np
import pytest

from cpls import design
from cpls.bases import HERMITE, LAGUERRE, TRIG, TRIG_NO_CONST, eval_vector
from cpls.design import DimPair, assemble_gram, assemble_z, build_design, empirical_norm_sq, inv_opnorm, subsystem
from cpls.simulate import GridSpec, PathSample

from conftest import make_sample


class TestDimPair:
    def test_validation(self):
        assert DimPair(2, 3).total == 5
        DimPair(1, 0)
        DimPair(0, 1)
        with pytest.raises(ValueError):
            DimPair(0, 0)
        with pytest.raises(ValueError):
            DimPair(-1, 2)

    def test_exceeding_paths_rejected(self, small_sample):
        with pytest.raises(ValueError):
            assemble_gram(small_sample, TRIG, TRIG, DimPair(4, 2))


class TestAssembleGram:
    def test_constant_path_laguerre(self):
        # X constant at c: the integrand l_0(X)^2 is constant in time, so the
        # gram is exactly [2 e^{-2c}] (window normalizer T - t0 cancels).
        c = 0.7
        grid = GridSpec(n_steps=6, dt=0.25, drop_first=0)
        sample = make_sample(grid, np.full((2, 7), c), np.zeros((2, 7)))
        gram = assemble_gram(sample, LAGUERRE, TRIG, DimPair(1, 0))
        assert gram.shape == (1, 1)
        assert gram[0, 0] == pytest.approx(2.0 * math.exp(-2 * c), rel=1e-12)

    def test_hand_computed_two_step_grid(self):
        # 2 paths, 3 grid points, drop_first = 0: left-point sums by hand
        grid = GridSpec(n_steps=2, dt=0.5, drop_first=0)
        x = np.array([[0.1, 0.4, 0.2], [0.8, 0.5, 0.9]])
        y = np.array([[0.3, 0.6, 0.1], [0.2, 0.7, 0.5]])
        sample = make_sample(grid, x, y)
        dims = DimPair(2, 1)
        gram = assemble_gram(sample, TRIG, TRIG_NO_CONST, dims)
        t_norm = 2 * 0.5  # T - t0 = 1.0
        k = dims.total
        expected = np.zeros((k, k))
        for i in range(2):
            for ell in range(2):
                v = np.concatenate([
                    eval_vector(TRIG, 2, x[i, ell]),
                    eval_vector(TRIG_NO_CONST, 1, y[i, ell]),
                ])
                expected += np.outer(v, v) * 0.5
        expected /= 2 * t_norm
        np.testing.assert_allclose(gram, expected, atol=1e-14)

    def test_quadratic_form_equals_empirical_norm(self, small_sample):
        dims = DimPair(3, 2)
        gram = assemble_gram(small_sample, TRIG, TRIG_NO_CONST, dims)
        rng = np.random.default_rng(0)
        for _ in range(20):
            coeffs = rng.standard_normal(dims.total)
            direct = empirical_norm_sq(small_sample, TRIG, TRIG_NO_CONST, coeffs, dims)
            assert coeffs @ gram @ coeffs == pytest.approx(direct, abs=1e-10, rel=1e-10)

    def test_symmetry_and_psd(self, small_sample):
        gram = assemble_gram(small_sample, TRIG, TRIG_NO_CONST, DimPair(3, 3))
        np.testing.assert_allclose(gram, gram.T, atol=1e-12)
        assert np.linalg.eigvalsh(gram)[0] >= -1e-10

    def test_nested_subblock_identity(self, small_sample):
        big = build_design(small_sample, TRIG, TRIG_NO_CONST, DimPair(3, 3))
        for m1, m2 in [(1, 1), (2, 3), (3, 1), (1, 2)]:
            sub = subsystem(big, DimPair(m1, m2))
            direct_gram = assemble_gram(small_sample, TRIG, TRIG_NO_CONST, DimPair(m1, m2))
            direct_z = assemble_z(small_sample, TRIG, TRIG_NO_CONST, DimPair(m1, m2))
            np.testing.assert_allclose(sub.gram, direct_gram, atol=1e-12)
            np.testing.assert_allclose(sub.zvec, direct_z, atol=1e-12)

    def test_trapezoid_rule_option(self, small_sample):
        dims = DimPair(2, 1)
        left = assemble_gram(small_sample, TRIG, TRIG_NO_CONST, dims, rule="left")
        trap = assemble_gram(small_sample, TRIG, TRIG_NO_CONST, dims, rule="trapezoid")
        assert not np.allclose(left, trap)
        with pytest.raises(ValueError):
            assemble_gram(small_sample, TRIG, TRIG_NO_CONST, dims, rule="midpoint")


class TestAssembleZ:
    def test_zero_increments_give_zero_vector(self):
        grid = GridSpec(n_steps=3, dt=0.5, drop_first=0)
        sample = make_sample(grid, np.full((2, 4), 0.3), np.random.default_rng(1).random((2, 4)))
        z = assemble_z(sample, TRIG, TRIG_NO_CONST, DimPair(2, 2))
        np.testing.assert_array_equal(z, np.zeros(4))

    def test_single_path_hand_sum(self):
        grid = GridSpec(n_steps=2, dt=0.5, drop_first=0)
        x = np.array([[0.2, 0.7, 0.4]])
        y = np.array([[0.5, 0.1, 0.9]])
        sample = make_sample(grid, x, y)
        z = assemble_z(sample, TRIG, TRIG_NO_CONST, DimPair(1, 0))
        t_norm = 1.0
        expected = (1.0 * (0.7 - 0.2) + 1.0 * (0.4 - 0.7)) / t_norm
        assert z[0] == pytest.approx(expected, abs=1e-14)

    def test_linear_in_increments(self, toy_grid):
        # bumping only the final observation changes only the last increment,
        # so the z-vector moves by basis(last left point) * bump / (N T0)
        rng = np.random.default_rng(3)
        base = 0.1 + 0.8 * rng.random((2, 5))
        y = 0.1 + 0.8 * rng.random((2, 5))
        bumped = base.copy()
        bumped[0, -1] += 0.05
        s1 = make_sample(toy_grid, base, y)
        s2 = make_sample(toy_grid, bumped, y)
        dims = DimPair(2, 1)
        z1 = assemble_z(s1, TRIG, TRIG_NO_CONST, dims)
        z2 = assemble_z(s2, TRIG, TRIG_NO_CONST, dims)
        t_norm = toy_grid.total_time - toy_grid.t0
        v_last = np.concatenate([
            eval_vector(TRIG, 2, base[0, -2]),
            eval_vector(TRIG_NO_CONST, 1, y[0, -2]),
        ])
        np.testing.assert_allclose(z2 - z1, v_last * 0.05 / (2 * t_norm), atol=1e-14)

    def test_unbiasedness_against_empirical_inner_product(self):
        # E(Z) equals the empirical inner products of the basis with the true
        # drift pair; the martingale part has conditional mean zero, so over
        # many small samples the average gap shrinks at the MC rate.
        from cpls.simulate import explanatory_by_name, generate_sample, make_model

        grid = GridSpec(n_steps=40, dt=0.05, drop_first=4)
        model = make_model(3)
        spec = explanatory_by_name("B")
        dims = DimPair(3, 2)
        n_rep = 1000
        gaps = np.zeros((n_rep, dims.total))
        for r in range(n_rep):
            s = generate_sample(model, spec, grid, 3, seed=10_000 + r)
            z = assemble_z(s, HERMITE, HERMITE, dims)
            # inner product of each basis member with (a, b) under the same
            # left-point rule: sum_l v(s_l) (a(X_l) + b(Y_l)) dt / (N T0)
            lo, hi = grid.drop_first, grid.n_steps
            drift = model.a(s.x[:, lo:hi]) + model.b(s.y[:, lo:hi])
            from cpls.bases import eval_matrix

            vx = eval_matrix(HERMITE, dims.m1, s.x[:, lo:hi].ravel())
            vy = eval_matrix(HERMITE, dims.m2, s.y[:, lo:hi].ravel())
            v = np.hstack([vx, vy])
            ip = v.T @ (drift.ravel() * grid.dt) / (3 * (grid.total_time - grid.t0))
            gaps[r] = z - ip
        mean_gap = gaps.mean(axis=0)
        se = gaps.std(axis=0, ddof=1) / math.sqrt(n_rep)
        assert np.all(np.abs(mean_gap) <= 3 * se + 1e-12)


class TestEmpiricalNorm:
    def test_zero_coeffs(self, small_sample):
        assert empirical_norm_sq(small_sample, TRIG, TRIG_NO_CONST, np.zeros(3), DimPair(2, 1)) == 0.0

    def test_constant_function_norm_is_one(self):
        # tau = phi_1 = 1 on [0,1], nu = 0: the time average of 1 over the
        # window is exactly 1 under the window normalizer
        grid = GridSpec(n_steps=8, dt=0.125, drop_first=2)
        rng = np.random.default_rng(2)
        sample = make_sample(grid, rng.random((3, 9)), rng.random((3, 9)))
        val = empirical_norm_sq(sample, TRIG, TRIG_NO_CONST, np.array([1.0, 0.0]), DimPair(1, 1))
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_length_mismatch(self, small_sample):
        with pytest.raises(ValueError):
            empirical_norm_sq(small_sample, TRIG, TRIG_NO_CONST, np.zeros(5), DimPair(2, 1))


class TestInvOpnorm:
    def test_identity(self):
        assert inv_opnorm(np.eye(4)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert inv_opnorm(np.diag([4.0, 0.25])) == pytest.approx(4.0)

    def test_random_spd_matches_explicit_inverse(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((6, 6))
        spd = a @ a.T + 0.5 * np.eye(6)
        direct = np.linalg.norm(np.linalg.inv(spd), ord=2)
        assert inv_opnorm(spd) == pytest.approx(direct, rel=1e-8)

    def test_singular_sentinel(self):
        gram = np.zeros((3, 3))
        assert inv_opnorm(gram) == math.inf
        near = np.diag([1.0, 1.0, 1e-14])
        assert inv_opnorm(near) == math.inf
