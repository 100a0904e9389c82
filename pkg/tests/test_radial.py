import math

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from eigendesign.errors import PastPrincipalBranchError
from eigendesign.radial import (
    LimitConfig,
    check_identities,
    compensated_tail,
    eval_profile,
    limit_constants,
    matching_mismatch,
    shooting_profile,
    solution_for_mu,
    solve_limit,
    unit_ball_volume,
)


def test_config_validation():
    with pytest.raises(ValueError):
        LimitConfig(0, 1.0)
    with pytest.raises(ValueError):
        LimitConfig(2, -1.0)
    with pytest.raises(ValueError):
        LimitConfig(2, 1.0, mass=0.0)


def test_unit_ball_volume():
    assert unit_ball_volume(1) == pytest.approx(2.0, abs=1e-15)
    assert unit_ball_volume(2) == pytest.approx(math.pi, abs=1e-14)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, abs=1e-14)
    assert unit_ball_volume(0) == pytest.approx(1.0, abs=1e-15)


class TestMatching:
    def test_1d_closed_form_root(self):
        # in 1D the matching reduces to tan(sqrt(mu)/2) = sqrt(beta)
        cfg = LimitConfig(1, 1.0)
        assert matching_mismatch(cfg, math.pi ** 2 / 4) == pytest.approx(0.0, abs=1e-12)

    def test_1d_sign_below_root(self):
        # tan(0.5) < 1, so the defect is negative below the eigenvalue
        val = matching_mismatch(LimitConfig(1, 1.0), 1.0)
        assert val < 0
        assert val == pytest.approx(math.tan(0.5) - 1.0, abs=1e-12)

    @pytest.mark.parametrize("beta", [0.3, 1.0, 2.5, 7.0])
    def test_1d_matches_tan_formula(self, beta):
        cfg = LimitConfig(1, beta)
        for mu in (0.5, 1.5, 2.2):
            expected = math.sqrt(mu) * (math.tan(math.sqrt(mu) / 2) - math.sqrt(beta))
            assert matching_mismatch(cfg, mu) == pytest.approx(expected, abs=1e-12)

    def test_zero_at_solved_eigenvalue_2d(self):
        cfg = LimitConfig(2, 1.0)
        sol = solve_limit(cfg)
        assert abs(matching_mismatch(cfg, sol.mu)) < 1e-10

    @pytest.mark.parametrize("dim,beta", [(1, 1.0), (2, 1.0), (3, 0.5), (2, 4.0)])
    def test_shooting_agrees_with_bessel(self, dim, beta):
        cfg = LimitConfig(dim, beta)
        mu_star = solve_limit(cfg).mu
        for mu in (0.4 * mu_star, 0.9 * mu_star, mu_star):
            a = matching_mismatch(cfg, mu, method="bessel")
            b = matching_mismatch(cfg, mu, method="shooting")
            assert b == pytest.approx(a, abs=1e-8)

    def test_monotone_through_root(self):
        cfg = LimitConfig(2, 1.0)
        mu_star = solve_limit(cfg).mu
        grid = np.linspace(0.3 * mu_star, 1.3 * mu_star, 25)
        vals = [matching_mismatch(cfg, m) for m in grid]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_past_branch_raises(self):
        with pytest.raises(PastPrincipalBranchError):
            matching_mismatch(LimitConfig(1, 1.0), 12.0)


class TestSolveLimit:
    def test_1d_beta1(self):
        sol = solve_limit(LimitConfig(1, 1.0))
        assert sol.mu == pytest.approx(math.pi ** 2 / 4, abs=1e-10)
        assert sol.rbar == pytest.approx(0.5, rel=1e-14)

    def test_1d_beta3(self):
        assert solve_limit(LimitConfig(1, 3.0)).mu == pytest.approx(
            4 * math.pi ** 2 / 9, abs=1e-10)

    def test_1d_mass_scaling_examples(self):
        assert solve_limit(LimitConfig(1, 1.0, mass=2.0)).mu == pytest.approx(
            math.pi ** 2 / 16, abs=1e-12)

    @pytest.mark.parametrize("dim", [1, 2])
    @pytest.mark.parametrize("beta", [0.5, 1.0, 4.0])
    def test_scaling_law(self, dim, beta):
        mu1 = solve_limit(LimitConfig(dim, beta, mass=1.0)).mu
        for k in (0.5, 2.0, 3.7):
            muk = solve_limit(LimitConfig(dim, beta, mass=k)).mu
            assert muk / mu1 == pytest.approx(k ** (-2.0 / dim), rel=1e-9)

    def test_regression_2d_beta1(self):
        # frozen from the first converged build; guards against drift
        assert solve_limit(LimitConfig(2, 1.0)).mu == pytest.approx(
            8.190277132365622, rel=1e-12)


class TestProfile:
    def test_origin(self):
        sol = solve_limit(LimitConfig(2, 1.0))
        w, dw = eval_profile(sol, 0.0)
        assert w == 1.0
        assert dw == 0.0

    def test_1d_closed_form_value(self):
        sol = solve_limit(LimitConfig(1, 1.0))
        w, dw = eval_profile(sol, 0.5)
        assert w == pytest.approx(math.cos(math.pi / 4), abs=1e-12)
        assert dw == pytest.approx(-(math.pi / 2) * math.sin(math.pi / 4), abs=1e-12)

    def test_1d_closed_form_grid(self):
        sol = solve_limit(LimitConfig(1, 1.0))
        s = math.pi / 2
        r = np.linspace(0.0, 3.0, 301)
        w, dw = eval_profile(sol, r)
        inside = r <= 0.5
        assert np.allclose(w[inside], np.cos(s * r[inside]), atol=1e-12)
        wall = math.cos(math.pi / 4)
        outside = ~inside
        assert np.allclose(
            w[outside], wall * np.exp(-s * (r[outside] - 0.5)), atol=1e-12)

    def test_monotone_decreasing(self):
        for dim, beta in ((1, 1.0), (2, 1.0), (3, 2.0)):
            sol = solve_limit(LimitConfig(dim, beta))
            r = np.linspace(1e-9, 10 * sol.rbar, 500)
            _, dw = eval_profile(sol, r)
            assert np.all(dw <= 0)
            w, _ = eval_profile(sol, r)
            assert np.all(w > 0)

    def test_c1_across_interface(self):
        for dim, beta in ((2, 1.0), (3, 4.0)):
            sol = solve_limit(LimitConfig(dim, beta))
            eps = 1e-9 * sol.rbar
            wl, dwl = eval_profile(sol, sol.rbar - eps)
            wr, dwr = eval_profile(sol, sol.rbar + eps)
            assert wr == pytest.approx(wl, rel=1e-7)
            assert dwr == pytest.approx(dwl, rel=1e-6)

    def test_negative_radius_rejected(self):
        sol = solve_limit(LimitConfig(1, 1.0))
        with pytest.raises(ValueError):
            eval_profile(sol, -0.1)

    def test_tail_flatness(self):
        # compensated amplitude varies slowly between 10 rbar and 20 rbar
        for dim, beta in ((2, 1.0), (3, 1.0)):
            sol = solve_limit(LimitConfig(dim, beta))
            s = math.sqrt(sol.mu * beta)

            def comp(r):
                w, _ = eval_profile(sol, r)
                return w * r ** ((dim - 1) / 2) * math.exp(s * r)

            a, b = comp(10 * sol.rbar), comp(20 * sol.rbar)
            assert abs(a / b - 1) < 0.10

    def test_tail_cauchy_rate(self):
        sol = solve_limit(LimitConfig(2, 1.0))
        r = np.linspace(10 * sol.rbar, 30 * sol.rbar, 40)
        comp = compensated_tail(sol, r)
        diffs = np.abs(np.diff(comp))
        # increments decay like 1/r^2 (derivative of the 1/r flattening)
        bound = 1.0 * np.diff(r) / r[:-1] ** 2
        assert np.all(diffs <= bound)

    @pytest.mark.parametrize("dim,beta", [(1, 1.0), (2, 1.0), (2, 4.0), (3, 0.5)])
    def test_dual_route_profiles(self, dim, beta):
        sol = solve_limit(LimitConfig(dim, beta))
        radii = np.linspace(0.0, 5 * sol.rbar, 160)
        w_c, dw_c = eval_profile(sol, radii)
        w_s, dw_s = shooting_profile(sol, radii)
        assert np.max(np.abs(w_c - w_s)) < 1e-8
        assert np.max(np.abs(dw_c - dw_s)) < 1e-7


def closed_form_1d_integrals():
    """Independent quadrature on the closed-form 1D beta=1 profile."""
    s = math.pi / 2
    wall = math.cos(math.pi / 4)

    def w(r):
        return math.cos(s * r) if r <= 0.5 else wall * math.exp(-s * (r - 0.5))

    def dw(r):
        if r <= 0.5:
            return -s * math.sin(s * r)
        return -s * wall * math.exp(-s * (r - 0.5))

    def seg(f, lo, hi):
        return quad(f, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)[0]

    grad_half = seg(lambda r: dw(r) ** 2, 0, 0.5) + seg(lambda r: dw(r) ** 2, 0.5, 25)
    mass_half = seg(lambda r: w(r) ** 2, 0, 0.5) - seg(lambda r: w(r) ** 2, 0.5, 25)
    gamma = 0.5 * (seg(lambda r: dw(r) ** 2 * r, 0, 0.5)
                   + seg(lambda r: dw(r) ** 2 * r, 0.5, 25))
    gamma1 = seg(lambda r: w(r) ** 2 * r, 0, 0.5) - seg(lambda r: w(r) ** 2 * r, 0.5, 25)
    return grad_half, mass_half, gamma, gamma1, wall


class TestConstants:
    def test_1d_against_independent_quadrature(self):
        sol = solve_limit(LimitConfig(1, 1.0))
        c = limit_constants(sol)
        grad_half, mass_half, gamma, gamma1, wall = closed_form_1d_integrals()
        assert c.grad_half == pytest.approx(grad_half, rel=1e-8)
        assert c.mass_half == pytest.approx(mass_half, rel=1e-8)
        assert c.gamma == pytest.approx(gamma, rel=1e-8)
        assert c.gamma1 == pytest.approx(gamma1, rel=1e-8)
        assert c.wall_value == pytest.approx(wall, rel=1e-12)

    def test_1d_analytic_values(self):
        c = limit_constants(solve_limit(LimitConfig(1, 1.0)))
        assert c.grad_half == pytest.approx(math.pi ** 2 / 16, rel=1e-10)
        assert c.mass_half == pytest.approx(0.25, rel=1e-10)
        assert c.gamma == pytest.approx(math.pi ** 2 / 128 + 0.125, rel=1e-10)
        assert c.gamma1 == pytest.approx(1 / 16 - 1 / math.pi ** 2, rel=1e-9)

    def test_gamma_vertical_moment_2d(self):
        # gamma = (1/2) * int (dw/dz_2)^2 z_2 over the half plane, computed
        # here by an explicit polar double integral
        sol = solve_limit(LimitConfig(2, 1.0))
        c = limit_constants(sol)

        def integrand(theta, r):
            _, dw = eval_profile(sol, r)
            return dw ** 2 * math.sin(theta) ** 3 * r ** 2

        val, _ = dblquad(integrand, 0, sol.rbar + 25, 0, math.pi,
                         epsabs=1e-12, epsrel=1e-9)
        assert c.gamma == pytest.approx(0.5 * val, rel=1e-6)

    @pytest.mark.parametrize("dim,beta", [(1, 1.0), (2, 1.0), (3, 4.0)])
    def test_eigen_quotient(self, dim, beta):
        c = limit_constants(solve_limit(LimitConfig(dim, beta)))
        sol = solve_limit(LimitConfig(dim, beta))
        assert c.grad_half / c.mass_half == pytest.approx(sol.mu, rel=1e-6)

    def test_big_gamma_dimension(self):
        assert limit_constants(solve_limit(LimitConfig(1, 2.0))).big_gamma == 0.0
        assert limit_constants(solve_limit(LimitConfig(2, 1.0))).big_gamma > 0
        assert limit_constants(solve_limit(LimitConfig(3, 1.0))).big_gamma > 0


class TestIdentities:
    @pytest.mark.parametrize("dim,beta", [(1, 1.0), (2, 1.0)])
    def test_residuals_small_at_solution(self, dim, beta):
        res = check_identities(solve_limit(LimitConfig(dim, beta)))
        assert set(res) == {"moment_balance", "pohozaev", "c1_matching"}
        for name, val in res.items():
            assert val < 1e-6, name

    def test_perturbed_eigenvalue_detected(self):
        cfg = LimitConfig(2, 1.0)
        sol = solve_limit(cfg)
        bad = solution_for_mu(cfg, sol.mu * 1.01)
        res = check_identities(bad)
        assert res["moment_balance"] > 1e-3
        assert res["c1_matching"] > 1e-3

    def test_solution_for_mu_rejects_past_branch(self):
        with pytest.raises(PastPrincipalBranchError):
            solution_for_mu(LimitConfig(1, 1.0), 11.0)
