import math

import numpy as np
import pytest
from sklearn.base import clone

from bisaddle import (
    AcceleratedGradient,
    AcceleratedPrimalDual,
    InexactAcceleratedPrimalDual,
    InexactSplitProximalPoint,
    QuadraticFunction,
    SplitProximalPoint,
    Unbalanced,
    accel_fb_tolerance,
    agd_steps_for,
    inexact_prox_inner_counts,
    inexact_prox_tolerances,
    monitor_bound,
    problem_from_spec,
    reference_saddle,
)


def make_problem(seed=0, dx=5, dy=4, Lx=6.0, Ly=3.0, mux=1.0, muy=0.5, normA=2.0):
    return problem_from_spec(dict(seed=seed, dx=dx, dy=dy, Lx=Lx, Ly=Ly,
                                  mux=mux, muy=muy, normA=normA))


def fitted(est, p, seed=0, **kwargs):
    ref = reference_saddle(p)
    rng = np.random.default_rng(seed)
    x0, y0 = rng.standard_normal(p.dx), rng.standard_normal(p.dy)
    return est.fit(p, x0=x0, y0=y0, reference=ref, **kwargs), ref


class TestAcceleratedGradient:
    def test_identity_hessian_one_step(self):
        f = QuadraticFunction(np.eye(1), np.zeros(1), L=1.0, mu=1.0)
        est = AcceleratedGradient(max_iter=1).fit(f, x0=np.array([5.0]))
        np.testing.assert_allclose(est.x_, [0.0], atol=1e-15)

    def test_two_step_hand_arithmetic(self):
        # phi = 0.5*(4 x1^2 + x2^2): eta=1/4, theta=1/3
        f = QuadraticFunction(np.diag([4.0, 1.0]), np.zeros(2), L=4.0, mu=1.0)
        est = AcceleratedGradient(max_iter=2).fit(f, x0=np.array([1.0, 1.0]))
        np.testing.assert_allclose(est.trace_.xs[0], [0.0, 0.75])
        # momentum point after step 1 is (-1/3, 2/3); step 2 lands at (0, 1/2)
        np.testing.assert_allclose(est.trace_.xs[1], [0.0, 0.5])

    def test_rate_bound_every_iteration(self):
        from bisaddle.linalg import random_spd_with_spectrum
        H = random_spd_with_spectrum(90, 50, 1.0, 100.0)
        c = np.random.default_rng(91).standard_normal(50)
        f = QuadraticFunction(H, c, L=100.0, mu=1.0)
        x0 = np.random.default_rng(92).standard_normal(50)
        est = AcceleratedGradient(max_iter=200).fit(f, x0=x0)
        report = monitor_bound(est.trace_, "agd")
        assert report.failures == 0

    def test_exact_gradient_count(self):
        f = QuadraticFunction(np.diag([2.0, 1.0]), np.zeros(2), L=2.0, mu=1.0)
        est = AcceleratedGradient(max_iter=37).fit(f, x0=np.ones(2))
        assert est.tally_.snapshot() == (37, 0, 0, 0)

    def test_estimator_clones(self):
        est = AcceleratedGradient(max_iter=12)
        assert clone(est).get_params() == {"max_iter": 12}


class TestAgdStepsFor:
    def test_unit_condition_number(self):
        for a in (1.5, 7.0, 3000.0):
            assert agd_steps_for(1.0, a) == math.floor(math.log(a)) + 1

    def test_worked_example(self):
        # effective condition number sqrt(4) = 2, argument 3840
        assert agd_steps_for(2.0, 3840.0) == 12

    def test_target_already_met(self):
        assert agd_steps_for(4.0, 1.0) == 0
        assert agd_steps_for(4.0, 0.5) == 0

    def test_doubling_argument_bounded_increment(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            kappa = float(rng.uniform(1.0, 50.0))
            a = float(rng.uniform(1.5, 1e6))
            step = math.ceil(math.sqrt(kappa) * math.log(2.0)) + 1
            assert agd_steps_for(kappa, 2 * a) - agd_steps_for(kappa, a) <= step

    def test_monotone(self):
        assert agd_steps_for(9.0, 100.0) >= agd_steps_for(4.0, 100.0)
        assert agd_steps_for(9.0, 200.0) >= agd_steps_for(9.0, 100.0)


class TestAcceleratedPrimalDual:
    def test_parameter_formulas(self):
        p = make_problem(seed=1, Lx=6.0, Ly=6.0, mux=1.0, muy=4.0, normA=2.0)
        est, _ = fitted(AcceleratedPrimalDual(max_iter=1), p)
        params = est.trace_.params
        assert params["gamma"] == pytest.approx(1.0, rel=1e-8)
        assert params["sigma"] == pytest.approx(0.25, rel=1e-8)
        assert params["theta"] == pytest.approx(0.5, rel=1e-8)

    def test_decoupled_problem_converges_immediately(self):
        p = make_problem(seed=2, normA=0.0)
        est, ref = fitted(AcceleratedPrimalDual(max_iter=3), p)
        # with no coupling the prox step length blows up and each half
        # jumps straight to its own minimizer
        assert est.trace_.dist_sq_x[0] <= 1e-18
        assert est.trace_.dist_sq_y[0] <= 1e-18
        assert monitor_bound(est.trace_, "apfb").failures == 0

    def test_weighted_distance_bound_every_iteration(self):
        p = make_problem(seed=3, dx=20, dy=20, Lx=10.0, Ly=9.0, mux=1.0,
                         muy=4.0, normA=3.0)
        est, _ = fitted(AcceleratedPrimalDual(max_iter=300), p)
        report = monitor_bound(est.trace_, "apfb")
        assert report.failures == 0

    def test_oracle_cost_per_iteration(self):
        p = make_problem(seed=4)
        est, _ = fitted(AcceleratedPrimalDual(max_iter=25), p)
        assert est.tally_.snapshot() == (0, 0, 25, 25)


class TestSplitProximalPoint:
    def test_kappa_one_reaches_fixed_point_in_one_step(self):
        p = make_problem(seed=5, Lx=2.0, Ly=2.0, mux=2.0, muy=2.0, normA=1.5)
        est, _ = fitted(SplitProximalPoint(max_iter=3), p)
        zs = est.trace_.aux["z_dist_sq"]
        ws = est.trace_.aux["w_dist_sq"]
        assert est.trace_.params["eta"] == 0.0
        # (z_2, w_2) is already the fixed point
        assert zs[1] + ws[1] <= 1e-20 * (1 + zs[0] + ws[0])

    def test_eta_formula(self):
        p = make_problem(seed=6, Lx=4.0, Ly=4.0, mux=1.0, muy=1.0, normA=1.0)
        est, _ = fitted(SplitProximalPoint(max_iter=2), p)
        assert est.trace_.params["eta"] == pytest.approx(1.0 / 9.0)

    def test_contraction_and_final_bound(self):
        p = make_problem(seed=7, dx=15, dy=15, Lx=8.0, Ly=8.0, mux=0.5,
                         muy=0.5, normA=4.0)
        est, _ = fitted(SplitProximalPoint(max_iter=60), p)
        for name in ("dppa", "dppa_remark", "coro_dppa"):
            assert monitor_bound(est.trace_, name).failures == 0
        # explicit per-step ratio while distances are far from the float floor
        eta = est.trace_.params["eta"]
        zs = np.array(est.trace_.aux["z_dist_sq"]) + np.array(est.trace_.aux["w_dist_sq"])
        for i in range(len(zs) - 1):
            if zs[i] > 1e-20:
                assert zs[i + 1] <= (eta + 1e-10) * zs[i] + 1e-12

    def test_unbalanced_rejected(self):
        p = make_problem(seed=8, Lx=6.0, Ly=3.0)
        with pytest.raises(Unbalanced):
            SplitProximalPoint(max_iter=1).fit(p)


class TestInexactProxSchedules:
    def test_worked_tolerances(self):
        eps1, delta1 = inexact_prox_tolerances(1, kappa=4.0, L=4.0, mu=1.0,
                                               norm_A=2.0, C0=1.0)
        assert eps1 == pytest.approx((1.0 / 16.0) * 0.75**2)
        assert eps1 == pytest.approx(9.0 / 256.0)
        assert delta1 == pytest.approx(3.0 / 64.0)

    def test_geometric_ratio_exact(self):
        for k in range(1, 8):
            e1, d1 = inexact_prox_tolerances(k, 9.0, 18.0, 2.0, 5.0, 3.0)
            e2, d2 = inexact_prox_tolerances(k + 1, 9.0, 18.0, 2.0, 5.0, 3.0)
            rho = 1.0 / 6.0
            assert e2 / e1 == pytest.approx(1.0 - rho, rel=1e-14)
            assert d2 / d1 == pytest.approx(1.0 - rho, rel=1e-14)

    def test_worked_inner_counts(self):
        K1, K2 = inexact_prox_inner_counts(kappa=4.0, norm_A=2.0, L=4.0, mu=1.0,
                                           rho=0.25, C=10.0)
        assert (K1, K2) == (12, 16)

    def test_k1_nondecreasing_in_C(self):
        counts = [
            inexact_prox_inner_counts(4.0, 2.0, 4.0, 1.0, 0.25, C)[0]
            for C in (5.0, 10.0, 50.0, 500.0)
        ]
        assert counts == sorted(counts)


class TestInexactSplitProximalPoint:
    def test_zero_coupling_decouples(self):
        p = make_problem(seed=9, Lx=5.0, Ly=5.0, mux=1.0, muy=1.0, normA=0.0)
        est, _ = fitted(InexactSplitProximalPoint(max_iter=30), p)
        assert monitor_bound(est.trace_, "dippa_out").failures == 0
        assert est.trace_.dist_sq_x[-1] + est.trace_.dist_sq_y[-1] <= 1e-12

    def test_oracle_count_audit(self):
        p = make_problem(seed=10, Lx=4.0, Ly=4.0, mux=1.0, muy=1.0, normA=2.0)
        K = 5
        est, _ = fitted(InexactSplitProximalPoint(max_iter=K), p)
        K1 = est.trace_.params["K1"]
        K2 = est.trace_.params["K2"]
        assert (K1, K2) == (12, 16)
        grad_g, grad_h, n_fwd, n_adj = est.tally_.snapshot()
        assert grad_g == K * K1
        assert grad_h == K * K1
        assert n_fwd + n_adj == K * (2 * K2 + 2)

    def test_certificates_and_outer_bound(self):
        p = make_problem(seed=11, dx=10, dy=10, Lx=8.0, Ly=8.0, mux=0.5,
                         muy=0.5, normA=5.0)
        est, _ = fitted(InexactSplitProximalPoint(max_iter=40), p)
        assert monitor_bound(est.trace_, "dippa_out").failures == 0
        assert monitor_bound(est.trace_, "dippa_inner").failures == 0

    def test_deterministic(self):
        p = make_problem(seed=12, Lx=4.0, Ly=4.0, mux=1.0, muy=1.0, normA=1.0)
        a, _ = fitted(InexactSplitProximalPoint(max_iter=10), p, seed=3)
        b, _ = fitted(InexactSplitProximalPoint(max_iter=10), p, seed=3)
        assert np.array_equal(a.x_, b.x_)
        assert a.trace_.dist_sq_x == b.trace_.dist_sq_x

    def test_requires_c0_or_reference(self):
        from bisaddle import BadC0
        p = make_problem(seed=13, Lx=4.0, Ly=4.0, mux=1.0, muy=1.0, normA=1.0)
        with pytest.raises(BadC0):
            InexactSplitProximalPoint(max_iter=5).fit(p)
        # explicit c0 works without a reference
        est = InexactSplitProximalPoint(max_iter=5, c0=100.0).fit(p)
        assert est.n_iter_ == 5


class TestAccelFbTolerance:
    def test_worked_example(self):
        # mu_x = mu_y = 1, |A| = 2: rho = 1/10, theta = 2/3
        eps1 = accel_fb_tolerance(1, 1.0, 1.0, 2.0, C0=1.0)
        assert eps1 == pytest.approx(1.0 / 480.0)

    def test_zero_coupling(self):
        eps1 = accel_fb_tolerance(1, 1.0, 1.0, 0.0, C0=1.0)
        assert eps1 == pytest.approx(1.0 / 32.0)

    def test_ratio_exact(self):
        vals = [accel_fb_tolerance(k, 1.0, 4.0, 3.0, 2.0) for k in range(1, 6)]
        rho = 2.0 / (4.0 + 12.0)
        for a, b in zip(vals, vals[1:]):
            assert b / a == pytest.approx(1.0 - rho, rel=1e-14)


class TestInexactAcceleratedPrimalDual:
    def test_wellconditioned_decoupled(self):
        p = make_problem(seed=14, Lx=2.0, Ly=2.0, mux=2.0, muy=2.0, normA=0.0)
        est, _ = fitted(InexactAcceleratedPrimalDual(max_iter=20), p)
        assert est.trace_.params["rho"] == pytest.approx(0.5)
        assert monitor_bound(est.trace_, "aipfb_out").failures == 0

    def test_effective_inner_condition_number(self):
        # kappa_x = kappa_y = kt -> inner condition number (2 kt)/(1 + kt) < 2
        kt = 5.0
        eff = (kt + kt) / (1.0 + kt)
        assert eff < 2.0

    def test_inner_counts_match_formulas(self):
        p = make_problem(seed=15, dx=8, dy=6, Lx=10.0, Ly=5.0, mux=1.0,
                         muy=2.0, normA=3.0)
        est, _ = fitted(InexactAcceleratedPrimalDual(max_iter=3), p)
        params = est.trace_.params
        norm_A = params["norm_A"]
        kt = norm_A / math.sqrt(1.0 * 2.0)
        theta, rho, C = params["theta"], params["rho"], params["C"]
        k1 = math.floor(math.sqrt((5.0 / 2.0 + kt) / (1 + kt)) * math.log(
            320.0 * C * (1 - rho) * (5.0 / 2.0 + 2 * kt + 1) / (rho * (1 - theta)))) + 1
        k2 = math.floor(math.sqrt((10.0 + kt) / (1 + kt)) * math.log(
            80.0 * C * (10.0 + 2 * kt + 1) / (rho * (1 - theta)))) + 1
        assert params["K1"] == k1
        assert params["K2"] == k2

    def test_unbalanced_bound_and_inner_certificates(self):
        p = make_problem(seed=16, dx=12, dy=12, Lx=50.0, Ly=10.0, mux=1.0,
                         muy=2.0, normA=4.0)
        est, _ = fitted(InexactAcceleratedPrimalDual(max_iter=150), p)
        assert monitor_bound(est.trace_, "aipfb_out").failures == 0
        assert monitor_bound(est.trace_, "aipfb_inner").failures == 0

    def test_oracle_count_audit(self):
        p = make_problem(seed=17, Lx=6.0, Ly=4.0, mux=1.0, muy=1.0, normA=2.0)
        T = 7
        est, _ = fitted(InexactAcceleratedPrimalDual(max_iter=T), p)
        K1, K2 = est.trace_.params["K1"], est.trace_.params["K2"]
        assert est.tally_.snapshot() == (T * K2, T * K1, T, T)


class TestTallyAudit:
    def test_tally_matches_wrapped_coupling_calls(self, monkeypatch):
        import bisaddle.solvers as solvers_mod
        calls = {"forward": 0, "adjoint": 0}
        original = solvers_mod.couple

        def spy(A, direction, v, tally=None):
            calls[direction] += 1
            return original(A, direction, v, tally)

        monkeypatch.setattr(solvers_mod, "couple", spy)
        p = make_problem(seed=40, Lx=4.0, Ly=4.0, mux=1.0, muy=1.0, normA=2.0)
        est, _ = fitted(InexactSplitProximalPoint(max_iter=6), p)
        assert est.tally_.n_Ay == calls["forward"]
        assert est.tally_.n_ATx == calls["adjoint"]


class TestEarlyStopping:
    def test_stops_at_target(self):
        p = make_problem(seed=18, dx=6, dy=6, Lx=4.0, Ly=4.0, mux=1.0,
                         muy=1.0, normA=1.0)
        est, ref = fitted(SplitProximalPoint(max_iter=500), p, target_eps=1e-6)
        assert est.n_iter_ < 500
        dist = (np.linalg.norm(est.x_ - ref.x_star)
                + np.linalg.norm(est.y_ - ref.y_star))
        assert dist <= 1e-6
