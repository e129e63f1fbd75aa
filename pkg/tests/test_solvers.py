"""Solvers: thresholding primitives, loss calculus, and the four algorithms."""

import numpy as np
import pytest

from nldemix.links import CapabilityError, make_link
from nldemix.measurement import observe, sample_operator
from nldemix.solvers import (
    DemixProblem,
    SolverConfig,
    dht,
    dst,
    hard_threshold,
    loss,
    loss_gradient,
    loss_hessian_matvec,
    nlcd_lasso,
    oneshot,
    project_l1_ball,
    soft_threshold,
)
from nldemix.transforms import Basis, Dictionary, dict_apply


def planted_instance(n, s, m, link_name="linsin", seed=0, phi="identity", psi="dct"):
    """Noiseless problem with +/-1 coefficients on random disjoint supports."""
    rng = np.random.default_rng(seed)
    d = Dictionary(Basis(phi, n), Basis(psi, n))
    w = np.zeros(n)
    z = np.zeros(n)
    w[rng.choice(n, size=s, replace=False)] = rng.choice([-1.0, 1.0], size=s)
    z[rng.choice(n, size=s, replace=False)] = rng.choice([-1.0, 1.0], size=s)
    t_star = np.concatenate([w, z])
    A = sample_operator("gaussian", m, n, seed + 1)
    link = make_link(link_name)
    y = observe(A, link, dict_apply(d, t_star))
    return DemixProblem(A=A, dictionary=d, link=link, y=y, s=s), t_star


def cosine(a, b):
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


class TestHardThreshold:
    def test_hand_values(self):
        v = np.array([3.0, -1.0, 2.0, -4.0])
        np.testing.assert_array_equal(
            hard_threshold(v, 2), np.array([3.0, 0.0, 0.0, -4.0])
        )

    def test_edge_cases(self):
        v = np.array([1.0, -2.0])
        np.testing.assert_array_equal(hard_threshold(v, 0), np.zeros(2))
        np.testing.assert_array_equal(hard_threshold(v, 2), v)
        np.testing.assert_array_equal(hard_threshold(v, 5), v)
        with pytest.raises(ValueError):
            hard_threshold(v, -1)

    def test_ties_break_toward_lowest_index(self):
        v = np.array([1.0, -1.0, 1.0, -1.0])
        np.testing.assert_array_equal(
            hard_threshold(v, 2), np.array([1.0, -1.0, 0.0, 0.0])
        )

    def test_kept_entries_are_the_largest(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            size = rng.integers(1, 12)
            v = rng.standard_normal(size)
            k = int(rng.integers(0, size + 1))
            out = hard_threshold(v, k)
            kept = out != 0
            # kept entries pass through unchanged
            np.testing.assert_array_equal(out[kept], v[kept])
            assert kept.sum() <= k
            if k < size:
                dropped = np.abs(v[~kept])
                if kept.any() and dropped.size:
                    assert np.abs(v[kept]).min() >= dropped.max() - 1e-15

    def test_error_optimality_exhaustive(self):
        # the kept support must achieve the minimal squared drop
        from itertools import combinations

        rng = np.random.default_rng(12)
        for _ in range(100):
            size = int(rng.integers(2, 8))
            v = rng.standard_normal(size)
            k = int(rng.integers(1, size))
            out = hard_threshold(v, k)
            err = np.sum((v - out) ** 2)
            best = min(
                np.sum(v[list(set(range(size)) - set(keep))] ** 2)
                for keep in combinations(range(size), k)
            )
            assert err == pytest.approx(best, abs=1e-12)


class TestSoftThreshold:
    def test_hand_values(self):
        v = np.array([3.0, -2.0, 0.5, 0.0])
        np.testing.assert_array_equal(
            soft_threshold(v, 1.0), np.array([2.0, -1.0, 0.0, 0.0])
        )

    def test_zero_threshold_is_identity(self):
        v = np.random.default_rng(0).standard_normal(10)
        np.testing.assert_array_equal(soft_threshold(v, 0.0), v)

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            soft_threshold(np.zeros(3), -0.5)

    def test_is_prox_of_l1(self):
        # minimizer of 0.5||x - v||^2 + lam ||x||_1, checked against a grid
        rng = np.random.default_rng(5)
        for _ in range(50):
            v = float(rng.uniform(-3, 3))
            lam = float(rng.uniform(0, 2))
            xs = np.linspace(-4, 4, 8001)
            vals = 0.5 * (xs - v) ** 2 + lam * np.abs(xs)
            hand = xs[np.argmin(vals)]
            out = soft_threshold(np.array([v]), lam)[0]
            assert out == pytest.approx(hand, abs=2e-3)


def project_l1_reference(v, r):
    """Bisection on the soft threshold level; independent of the sort rule."""
    a = np.abs(v)
    if a.sum() <= r:
        return v.copy()
    lo, hi = 0.0, a.max()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.maximum(a - mid, 0.0).sum() > r:
            lo = mid
        else:
            hi = mid
    return soft_threshold(v, 0.5 * (lo + hi))


class TestProjectL1Ball:
    def test_inside_ball_unchanged(self):
        v = np.array([0.2, -0.3, 0.1])
        out = project_l1_ball(v, 1.0)
        np.testing.assert_array_equal(out, v)
        out[0] = 99.0  # returned copy, input untouched
        assert v[0] == 0.2

    def test_result_on_boundary_when_outside(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            v = rng.standard_normal(rng.integers(1, 30)) * 3
            r = float(rng.uniform(0.1, 2.0))
            out = project_l1_ball(v, r)
            if np.abs(v).sum() > r:
                assert np.abs(out).sum() == pytest.approx(r, rel=1e-10)

    def test_matches_bisection_reference(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            v = rng.standard_normal(rng.integers(1, 40)) * rng.uniform(0.5, 5)
            r = float(rng.uniform(0.1, 4.0))
            np.testing.assert_allclose(
                project_l1_ball(v, r), project_l1_reference(v, r), atol=1e-10
            )

    def test_is_closest_feasible_point(self):
        rng = np.random.default_rng(10)
        v = rng.standard_normal(12) * 2
        r = 1.5
        out = project_l1_ball(v, r)
        d_out = np.linalg.norm(v - out)
        for _ in range(300):
            u = rng.standard_normal(12)
            u = u / np.abs(u).sum() * r * rng.uniform(0, 1)
            assert d_out <= np.linalg.norm(v - u) + 1e-12

    def test_nonpositive_radius_rejected(self):
        with pytest.raises(ValueError):
            project_l1_ball(np.ones(3), 0.0)


class TestProblemValidation:
    def test_dimension_mismatches(self):
        n, m = 16, 8
        d = Dictionary(Basis("identity", n), Basis("dct", n))
        A = sample_operator("gaussian", m, n, 0)
        link = make_link("linsin")
        with pytest.raises(ValueError):
            DemixProblem(A=A, dictionary=d, link=link, y=np.zeros(m + 1), s=2)
        with pytest.raises(ValueError):
            DemixProblem(A=A, dictionary=d, link=link, y=np.zeros(m), s=-1)
        with pytest.raises(ValueError):
            DemixProblem(A=A, dictionary=d, link=link, y=np.zeros(m), s=n + 1)
        d_bad = Dictionary(Basis("identity", 2 * n), Basis("dct", 2 * n))
        with pytest.raises(ValueError):
            DemixProblem(A=A, dictionary=d_bad, link=link, y=np.zeros(m), s=2)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(step_size="fast")
        with pytest.raises(ValueError):
            SolverConfig(step_size=-0.1)
        with pytest.raises(ValueError):
            SolverConfig(max_iters=0)
        with pytest.raises(ValueError):
            SolverConfig(rel_tol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(init="warm")
        with pytest.raises(ValueError):
            SolverConfig(projection_mode="global")
        with pytest.raises(ValueError):
            SolverConfig(lasso_radius=-1.0)
        with pytest.raises(ValueError):
            SolverConfig(dst_beta=-0.5)


class TestLossCalculus:
    def test_gradient_matches_finite_difference(self):
        problem, t_star = planted_instance(32, 3, 24, seed=1)
        rng = np.random.default_rng(2)
        t = rng.standard_normal(64) * 0.5
        g = loss_gradient(problem, t)
        h = 1e-6
        for _ in range(20):
            v = rng.standard_normal(64)
            v /= np.linalg.norm(v)
            fd = (loss(problem, t + h * v) - loss(problem, t - h * v)) / (2 * h)
            np.testing.assert_allclose(np.dot(g, v), fd, rtol=1e-5, atol=1e-10)

    def test_hessian_matvec_matches_gradient_difference(self):
        problem, _ = planted_instance(24, 2, 20, seed=3)
        rng = np.random.default_rng(4)
        t = rng.standard_normal(48) * 0.3
        h = 1e-6
        for _ in range(10):
            v = rng.standard_normal(48)
            v /= np.linalg.norm(v)
            hv = loss_hessian_matvec(problem, t, v)
            fd = (
                loss_gradient(problem, t + h * v) - loss_gradient(problem, t - h * v)
            ) / (2 * h)
            np.testing.assert_allclose(hv, fd, atol=1e-6)

    def test_hessian_matvec_matches_dense_assembly(self):
        problem, _ = planted_instance(16, 2, 12, seed=5)
        from nldemix.transforms import basis_matrix

        d = problem.dictionary
        G = np.hstack([basis_matrix(d.phi), basis_matrix(d.psi)])
        AG = problem.A.dense() @ G
        rng = np.random.default_rng(6)
        t = rng.standard_normal(32) * 0.4
        gp = 2.0 + np.cos(AG @ t)
        H = AG.T @ (gp[:, None] * AG) / problem.A.m
        for _ in range(10):
            v = rng.standard_normal(32)
            np.testing.assert_allclose(
                loss_hessian_matvec(problem, t, v), H @ v, atol=1e-10
            )

    @pytest.mark.parametrize("link_name", ["linsin", "logistic", "shifted-logistic"])
    def test_gradient_vanishes_at_truth_noiseless(self, link_name):
        problem, t_star = planted_instance(64, 4, 80, link_name=link_name, seed=7)
        np.testing.assert_array_equal(
            loss_gradient(problem, t_star), np.zeros(t_star.size)
        )

    def test_loss_convex_along_segments(self):
        problem, _ = planted_instance(32, 3, 40, seed=8)
        rng = np.random.default_rng(9)
        for _ in range(20):
            a = rng.standard_normal(64)
            b = rng.standard_normal(64)
            mid = loss(problem, 0.5 * (a + b))
            assert mid <= 0.5 * (loss(problem, a) + loss(problem, b)) + 1e-12

    def test_sign_link_lacks_loss_capabilities(self):
        problem, t_star = planted_instance(32, 3, 40, link_name="sign", seed=10)
        with pytest.raises(CapabilityError):
            loss(problem, t_star)
        with pytest.raises(CapabilityError):
            loss_gradient(problem, t_star)
        with pytest.raises(CapabilityError):
            loss_hessian_matvec(problem, t_star, t_star)

    def test_wrong_length_rejected(self):
        problem, _ = planted_instance(32, 3, 40, seed=11)
        with pytest.raises(ValueError):
            loss(problem, np.zeros(63))


class TestOneShot:
    def test_matches_direct_formula(self):
        problem, _ = planted_instance(64, 4, 100, seed=12)
        from nldemix.transforms import basis_adjoint

        x_lin = problem.A.adjoint(problem.y) / problem.A.m
        d = problem.dictionary
        w_ref = hard_threshold(basis_adjoint(d.phi, x_lin), problem.s)
        z_ref = hard_threshold(basis_adjoint(d.psi, x_lin), problem.s)
        res = oneshot(problem)
        np.testing.assert_array_equal(res.w_hat, w_ref)
        np.testing.assert_array_equal(res.z_hat, z_ref)
        np.testing.assert_allclose(
            res.x_hat, dict_apply(d, np.concatenate([w_ref, z_ref])), atol=1e-12
        )

    def test_non_iterative_contract(self):
        problem, _ = planted_instance(64, 4, 100, seed=13)
        res = oneshot(problem)
        assert res.iterations_run == 0
        assert res.converged
        assert len(res.trace) == 1
        assert np.count_nonzero(res.w_hat) <= problem.s
        assert np.count_nonzero(res.z_hat) <= problem.s

    def test_recovers_supports_with_many_measurements(self):
        hits = 0
        for seed in range(5):
            problem, t_star = planted_instance(128, 2, 4000, seed=100 + seed)
            res = oneshot(problem)
            if np.array_equal(res.t_hat != 0, t_star != 0):
                hits += 1
            assert cosine(res.t_hat, t_star) > 0.9
        assert hits >= 4

    def test_works_for_sign_link(self):
        problem, t_star = planted_instance(128, 2, 4000, link_name="sign", seed=14)
        res = oneshot(problem)
        assert cosine(res.t_hat, t_star) > 0.9

    def test_zero_sparsity_returns_zero(self):
        problem, _ = planted_instance(32, 3, 40, seed=15)
        problem0 = DemixProblem(
            A=problem.A, dictionary=problem.dictionary, link=problem.link,
            y=problem.y, s=0,
        )
        res = oneshot(problem0)
        np.testing.assert_array_equal(res.t_hat, np.zeros(64))
        assert res.converged


class TestDht:
    def test_noiseless_recovery(self):
        for seed in range(3):
            problem, t_star = planted_instance(256, 3, 160, seed=20 + seed)
            res = dht(problem, SolverConfig(max_iters=400, rel_tol=1e-9))
            err = np.linalg.norm(res.t_hat - t_star) / np.linalg.norm(t_star)
            assert err < 1e-5

    def test_truth_is_fixed_point(self):
        problem, t_star = planted_instance(128, 4, 200, seed=30)
        res = dht(problem, SolverConfig(init=t_star))
        np.testing.assert_array_equal(res.t_hat, t_star)
        assert res.converged
        assert res.iterations_run == 1
        assert res.trace[-1].step_norm == 0.0

    def test_sign_link_rejected(self):
        problem, _ = planted_instance(64, 3, 100, link_name="sign", seed=31)
        with pytest.raises(CapabilityError):
            dht(problem)

    def test_stacked_projection_sparsity(self):
        problem, _ = planted_instance(128, 4, 150, seed=32)
        res = dht(problem, SolverConfig(max_iters=50, keep_iterates=True))
        for it in res.iterates[1:]:
            assert np.count_nonzero(it) <= 2 * problem.s

    def test_perblocks_projection_sparsity(self):
        problem, _ = planted_instance(128, 4, 150, seed=33)
        res = dht(
            problem,
            SolverConfig(max_iters=50, projection_mode="perblocks", keep_iterates=True),
        )
        for it in res.iterates[1:]:
            assert np.count_nonzero(it[:128]) <= problem.s
            assert np.count_nonzero(it[128:]) <= problem.s

    def test_trace_and_iterates_are_aligned(self):
        problem, _ = planted_instance(96, 3, 120, seed=34)
        res = dht(problem, SolverConfig(max_iters=40, keep_iterates=True))
        assert len(res.iterates) == res.iterations_run + 1
        assert [r.iteration for r in res.trace] == list(
            range(1, res.iterations_run + 1)
        )
        for rec, it in zip(res.trace, res.iterates[1:]):
            assert rec.loss == pytest.approx(loss(problem, it), rel=1e-12)
            assert rec.support_size == np.count_nonzero(it)
        norms = [np.linalg.norm(a - b) for a, b in zip(res.iterates[1:], res.iterates)]
        np.testing.assert_allclose([r.step_norm for r in res.trace], norms, rtol=1e-12)

    def test_loss_never_increases(self):
        problem, _ = planted_instance(128, 5, 140, seed=35)
        res = dht(problem, SolverConfig(max_iters=100))
        losses = [r.loss for r in res.trace]
        for prev, nxt in zip(losses, losses[1:]):
            assert nxt <= prev + 1e-10

    def test_oversized_manual_step_is_tamed_by_backtracking(self):
        problem, t_star = planted_instance(128, 3, 150, seed=36)
        res = dht(problem, SolverConfig(step_size=50.0, max_iters=300))
        losses = [r.loss for r in res.trace]
        for prev, nxt in zip(losses, losses[1:]):
            assert nxt <= prev + 1e-10
        assert cosine(res.t_hat, t_star) > 0.99

    def test_zero_init_also_recovers(self):
        problem, t_star = planted_instance(128, 3, 150, seed=37)
        res = dht(problem, SolverConfig(init="zero", max_iters=400, rel_tol=1e-9))
        assert np.linalg.norm(res.t_hat - t_star) / np.linalg.norm(t_star) < 1e-4

    def test_x_hat_consistent_with_t_hat(self):
        problem, _ = planted_instance(64, 3, 90, seed=38)
        res = dht(problem, SolverConfig(max_iters=60))
        np.testing.assert_array_equal(
            res.x_hat, dict_apply(problem.dictionary, res.t_hat)
        )


class TestDst:
    def test_direction_recovery(self):
        for seed in range(3):
            problem, t_star = planted_instance(256, 3, 200, seed=40 + seed)
            res = dst(problem, SolverConfig(max_iters=300))
            assert cosine(res.t_hat, t_star) > 0.99

    def test_trace_reports_plain_loss(self):
        problem, _ = planted_instance(96, 3, 120, seed=41)
        res = dst(problem, SolverConfig(max_iters=40, keep_iterates=True))
        for rec, it in zip(res.trace, res.iterates[1:]):
            assert rec.loss == pytest.approx(loss(problem, it), rel=1e-12)

    def test_composite_objective_never_increases(self):
        problem, _ = planted_instance(128, 4, 150, seed=42)
        beta = 0.5
        res = dst(problem, SolverConfig(max_iters=80, dst_beta=beta, keep_iterates=True))
        comp = [
            loss(problem, it) + beta * np.abs(it).sum() for it in res.iterates
        ]
        for prev, nxt in zip(comp, comp[1:]):
            assert nxt <= prev + 1e-10

    def test_larger_beta_sparser_result(self):
        problem, _ = planted_instance(128, 4, 150, seed=43)
        small = dst(problem, SolverConfig(max_iters=150, dst_beta=0.1))
        large = dst(problem, SolverConfig(max_iters=150, dst_beta=1.5))
        assert np.count_nonzero(large.t_hat) <= np.count_nonzero(small.t_hat)

    def test_sign_link_rejected(self):
        problem, _ = planted_instance(64, 3, 100, link_name="sign", seed=44)
        with pytest.raises(CapabilityError):
            dst(problem)


class TestNlcdLasso:
    def test_feasible_default_radius(self):
        problem, _ = planted_instance(128, 4, 200, seed=50)
        res = nlcd_lasso(problem, SolverConfig(max_iters=200))
        assert np.abs(res.t_hat).sum() <= 2.0 * np.sqrt(problem.s) + 1e-9

    def test_custom_radius_respected(self):
        problem, _ = planted_instance(128, 4, 200, seed=51)
        res = nlcd_lasso(problem, SolverConfig(max_iters=200, lasso_radius=0.7))
        assert np.abs(res.t_hat).sum() <= 0.7 + 1e-9

    def test_objective_never_increases(self):
        problem, _ = planted_instance(96, 3, 150, seed=52)
        res = nlcd_lasso(problem, SolverConfig(max_iters=100))
        losses = [r.loss for r in res.trace]
        for prev, nxt in zip(losses, losses[1:]):
            assert nxt <= prev + 1e-12

    def test_sign_link_supported(self):
        problem, t_star = planted_instance(
            128, 2, 3000, link_name="sign", seed=53
        )
        res = nlcd_lasso(problem, SolverConfig(max_iters=300))
        assert cosine(res.t_hat, t_star) > 0.8

    def test_direction_recovery_with_many_measurements(self):
        problem, t_star = planted_instance(128, 2, 3000, seed=54)
        res = nlcd_lasso(problem, SolverConfig(max_iters=300))
        assert cosine(res.t_hat, t_star) > 0.85

    def test_result_shapes_and_consistency(self):
        problem, _ = planted_instance(64, 3, 90, seed=55)
        res = nlcd_lasso(problem, SolverConfig(max_iters=50, keep_iterates=True))
        assert res.w_hat.shape == (64,)
        assert res.z_hat.shape == (64,)
        np.testing.assert_array_equal(
            res.x_hat, dict_apply(problem.dictionary, res.t_hat)
        )
        assert len(res.iterates) == res.iterations_run + 1
