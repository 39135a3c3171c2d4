import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annealed_ising.cm2 import pressure_cm2
from annealed_ising.cm12 import (
    Cm12Params,
    b_coeff,
    boundary_contribution_check,
    cm12_thermo,
    critical_residuals,
    laplace_constant,
    laplace_prefactor,
    line_ingredients,
    lines_gf,
    log_lines_gf,
    magnetization_cm12,
    magnetization_cm12_direct,
    mn_pmf,
    pressure_cm12,
    pressure_cm12_finite,
    sigma2_variance,
    sigma2_variance_direct,
    sigma2_variance_finite,
    solve_saddle,
    surface_grad,
    surface_H,
    surface_hessian,
    tori_limit_law,
)
from annealed_ising.exact import exact_annealed_Z_cm, exact_quenched_Z
from annealed_ising.graphs import Multigraph
from annealed_ising.verify import composition_gf

P, A, R = 0.5, 0.3, 0.4


@pytest.fixture(scope="module")
def saddle():
    return solve_saddle(P, A, R)


class TestParams:
    def test_parity_fix(self):
        prm = Cm12Params(0.5, 11)
        assert (prm.n1, prm.n2) == (6, 5) and prm.N == 11
        prm = Cm12Params(0.5, 10)
        assert (prm.n1, prm.n2, prm.ell) == (6, 5, 16) and prm.N == 11

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.2])
    def test_invalid_p(self, p):
        with pytest.raises(ValueError):
            Cm12Params(p, 10)


class TestIngredients:
    def test_zero_field_has_no_correction(self):
        ing = line_ingredients(0.7, 0.0)
        assert ing.a == 0.0 and np.all(ing.c(np.arange(1, 6)) == 1.0)

    @pytest.mark.parametrize("beta,B", [(0.5, 0.2), (1.2, -0.7), (0.1, 1.5)])
    @pytest.mark.parametrize("n", [2, 3, 5, 8])
    def test_reproduces_path_enumeration(self, beta, B, n):
        ing = line_ingredients(beta, B)
        val = ing.A_plus * ing.lambda_plus**n + ing.A_minus * ing.lambda_minus**n
        assert val == pytest.approx(exact_quenched_Z(Multigraph.path(n), beta, B).value(), rel=1e-12)

    def test_strong_coupling_ratio_below_one(self):
        assert 0 < line_ingredients(3.0, 0.3).r < 1

    def test_beta_zero_flagged(self):
        assert line_ingredients(0.0, 0.0).degenerate


class TestPairingLaw:
    def test_small_exact(self):
        np.testing.assert_allclose(mn_pmf(2, 1), [2 / 3, 1 / 3], rtol=1e-14)
        np.testing.assert_allclose(mn_pmf(2, 0), [1.0])

    @pytest.mark.parametrize("n1,n2", [(2, 50), (400, 400), (100, 1000), (4000, 4000)])
    def test_normalised(self, n1, n2):
        assert abs(mn_pmf(n1, n2).sum() - 1) < 1e-10

    @pytest.mark.parametrize("n1,n2", [(3, 2), (0, 3), (2, -1)])
    def test_invalid(self, n1, n2):
        with pytest.raises(ValueError):
            mn_pmf(n1, n2)

    def test_converges_to_limit_law(self):
        p = 0.5
        n2 = 5000
        n1 = 2 * round((n2 / p - n2) / 2)
        pmf = mn_pmf(n1, n2)
        lim = tori_limit_law(p).pmf(n2)
        assert 0.5 * np.abs(pmf - lim).sum() < 5e-3


class TestToriLaw:
    def test_rate_example(self):
        assert tori_limit_law(0.5).rates(1)[0] == pytest.approx(1 / 3)

    def test_mgf(self):
        law = tori_limit_law(0.3)
        assert law.mgf(1.0) == pytest.approx(1.0)
        pmf = law.pmf(400)
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.dot(pmf, 1.2 ** np.arange(401)) == pytest.approx(law.mgf(1.2), rel=1e-10)
        with pytest.raises(ValueError):
            law.mgf(law.mgf_radius)

    def test_small_p_concentrates_at_zero(self):
        assert tori_limit_law(1e-6).pmf(3)[0] == pytest.approx(1.0, abs=1e-5)


class TestLinesGf:
    def test_trivial_term(self):
        assert b_coeff(0, 0, 4, 2, 0, A, R).value() == pytest.approx(1.0)

    def test_zero_a_kills_corrections(self):
        assert b_coeff(1, 0, 4, 2, 0, 0.0, R).value() == 0.0
        assert lines_gf(6, 7, 2, 0.0, R) == pytest.approx(1.0)

    def test_negative_a_sign(self):
        assert b_coeff(1, 0, 4, 2, 0, -0.3, R).sign == -1

    @pytest.mark.parametrize("j", [0, 1, 4])
    def test_single_line(self, j):
        assert lines_gf(2, j, 0, A, R) == pytest.approx(1 + A * R ** (j + 2), rel=1e-13)

    def test_frozen_value(self):
        assert lines_gf(4, 5, 1, A, R) == pytest.approx(1.0317313024, rel=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 4), st.integers(0, 6), st.floats(-0.9, 2.0), st.floats(0.05, 0.95), st.data())
    def test_matches_compositions(self, L, n2, a, r, data):
        m = data.draw(st.integers(0, n2))
        ref = composition_gf(2 * L, n2, m, a, r)
        assert lines_gf(2 * L, n2, m, a, r) == pytest.approx(ref, rel=1e-10, abs=1e-14)

    def test_restricted_sum_is_tail(self):
        full = log_lines_gf(20, 30, 0, A, R).value()
        low = sum(b_coeff(l, k, 20, 30, 0, A, R).value() for l in range(3) for k in range(31))
        assert full - low == pytest.approx(log_lines_gf(20, 30, 0, A, R, l_min=3).value(), rel=1e-10)


class TestSurface:
    def test_gradient_matches_fd(self):
        s, t = 0.1, 0.2
        h = 1e-6
        fd = [
            (surface_H(s + h, t, P, A, R) - surface_H(s - h, t, P, A, R)) / (2 * h),
            (surface_H(s, t + h, P, A, R) - surface_H(s, t - h, P, A, R)) / (2 * h),
        ]
        np.testing.assert_allclose(surface_grad(s, t, P, A, R), fd, atol=1e-6)

    def test_hessian_matches_fd_of_gradient(self):
        s, t, h = 0.05, 0.3, 1e-6
        col0 = (surface_grad(s + h, t, P, A, R) - surface_grad(s - h, t, P, A, R)) / (2 * h)
        col1 = (surface_grad(s, t + h, P, A, R) - surface_grad(s, t - h, P, A, R)) / (2 * h)
        np.testing.assert_allclose(surface_hessian(s, t, P, A, R), np.column_stack([col0, col1]), atol=1e-5)

    def test_negative_definite_on_random_points(self, rng):
        q = (1 - P) / 2
        for _ in range(100):
            s, t = rng.uniform(0, q), rng.uniform(0, P)
            if s + t >= (1 + P) / 2 - 1e-9 or min(s, t) < 1e-9:
                continue
            assert np.all(np.linalg.eigvalsh(surface_hessian(s, t, P, A, R)) < 0)

    def test_finite_on_grid(self):
        q = (1 - P) / 2
        for s in np.linspace(0, q, 50):
            for t in np.linspace(0, P, 50):
                assert np.isfinite(surface_H(s, t, P, A, R))

    def test_outside_domain(self):
        with pytest.raises(ValueError):
            surface_H(0.5, 0.1, P, A, R)


class TestSaddle:
    def test_frozen_values(self, saddle):
        assert saddle.s_star == pytest.approx(0.0052882544652199691, rel=1e-10)
        assert saddle.t_star == pytest.approx(0.0019382820594594226, rel=1e-10)
        assert saddle.H_star == pytest.approx(0.0053704461384115556, rel=1e-10)

    def test_residuals(self, saddle):
        assert saddle.converged
        assert max(abs(e) for e in critical_residuals(saddle.s_star, saddle.t_star, P, A, R)) < 1e-10
        assert saddle.b_star < (1 + P) / (2 * P)
        assert np.all(np.linalg.eigvalsh(saddle.hessian) < 0)

    def test_grid_argmax(self, saddle):
        q = (1 - P) / 2
        best = max(
            ((surface_H(s, t, P, A, R), s, t) for s in np.linspace(0, 0.02, 401) for t in np.linspace(0, 0.02, 401)),
            key=lambda x: x[0],
        )
        assert abs(best[1] - saddle.s_star) <= 0.02 / 400 and abs(best[2] - saddle.t_star) <= 0.02 / 400
        assert best[0] <= saddle.H_star + 1e-15
        assert q > 0.02

    def test_small_a_limit(self):
        s = [solve_saddle(P, a, R).s_star for a in (1e-2, 1e-4, 1e-6)]
        assert s[0] > s[1] > s[2] and s[2] < 1e-5

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.05, 0.95), st.floats(0.01, 5.0), st.floats(0.05, 0.95))
    def test_random_triples_converge(self, p, a, r):
        sol = solve_saddle(p, a, r)
        assert sol.converged and sol.grad_norm < 1e-8

    @pytest.mark.parametrize("a,r", [(0.0, 0.5), (-0.1, 0.5), (0.3, 1.0)])
    def test_rejects_bad_inputs(self, a, r):
        with pytest.raises(ValueError):
            solve_saddle(P, a, r)


class TestLaplace:
    def test_prefactor_structure(self, saddle):
        base = laplace_prefactor(saddle, 0)
        det = np.linalg.det(saddle.hessian)
        assert base == pytest.approx(2 * math.pi * laplace_constant(saddle.s_star, saddle.t_star, P) / math.sqrt(det))
        assert laplace_prefactor(saddle, 3) / laplace_prefactor(saddle, 2) == pytest.approx(saddle.b_star, rel=1e-14)

    def test_prefactor_matches_exact_sums(self, saddle):
        gaps = []
        for N in (200, 400, 800, 1600):
            prm = Cm12Params(P, N)
            val = math.exp(log_lines_gf(prm.n1, prm.n2, 0, A, R).log_abs - prm.N * saddle.H_star)
            gaps.append(abs(val - laplace_prefactor(saddle)))
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert laplace_prefactor(saddle) == pytest.approx(0.99052619, abs=2e-8)

    def test_boundary_contribution_vanishes(self):
        ratios = [boundary_contribution_check(N, P, A, R, 0.1) for N in (200, 400)]
        assert ratios[1] < ratios[0] < 1e-20


class TestPressure:
    def test_finite_small_instance(self):
        assert pressure_cm12_finite(3, 0.5, 0.3, 0.34) == pytest.approx(
            exact_annealed_Z_cm([1, 1, 2], 0.5, 0.3).log_abs / 3, rel=1e-10
        )

    def test_converges_with_N(self):
        lim = pressure_cm12(0.5, 0.3, 0.5)
        gaps = [abs(pressure_cm12_finite(N, 0.5, 0.3, 0.5) - lim) for N in (500, 1000, 2000)]
        assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 5e-3

    def test_continuous_at_zero_field(self):
        assert pressure_cm12(0.5, 1e-7, 0.5) == pytest.approx(pressure_cm12(0.5, 0.0, 0.5), abs=1e-10)

    def test_approaches_cm2_as_p_to_one(self):
        gaps = [abs(pressure_cm12(0.5, 0.3, p) - pressure_cm2(0.5, 0.3)) for p in (0.9, 0.99, 0.999)]
        assert gaps[0] > gaps[1] > gaps[2]

    @pytest.mark.parametrize("beta", [0.1, 0.01])
    def test_weak_coupling(self, beta):
        assert abs(pressure_cm12(beta, 0.3, 0.5) - math.log(2 * math.cosh(0.3))) < 2 * beta


class TestResponse:
    def test_two_routes_agree(self):
        assert magnetization_cm12(0.4, 0.2, 0.5) == pytest.approx(magnetization_cm12_direct(0.4, 0.2, 0.5), abs=1e-5)

    @pytest.mark.parametrize("B", [0.1, 0.6, 2.0])
    def test_odd(self, B):
        assert magnetization_cm12(0.5, -B, 0.5) == pytest.approx(-magnetization_cm12(0.5, B, 0.5), abs=1e-13)

    def test_vanishes_at_zero_field(self):
        ms = [abs(magnetization_cm12(0.5, B, 0.5)) for B in (0.1, 0.01, 0.001)]
        assert ms[0] > ms[1] > ms[2] and magnetization_cm12(0.5, 0.0, 0.5) == 0.0

    def test_variance_routes(self):
        s = sigma2_variance(0.4, 0.2, 0.5)
        assert s > 0
        assert s == pytest.approx(sigma2_variance_direct(0.4, 0.2, 0.5), abs=1e-5)

    @pytest.mark.slow
    def test_variance_vs_finite_N(self):
        assert abs(sigma2_variance(0.4, 0.2, 0.5) - sigma2_variance_finite(4000, 0.4, 0.2, 0.5)) < 1e-2

    @pytest.mark.parametrize("B", [0.0, 0.3, 1.0])
    def test_beta_zero(self, B):
        t = cm12_thermo(0.0, B, 0.5)
        assert t.pressure == pytest.approx(math.log(2 * math.cosh(B)), abs=1e-12)
        assert t.magnetization == pytest.approx(math.tanh(B), abs=1e-12)
        assert t.sigma2 == pytest.approx(1 / math.cosh(B) ** 2, abs=1e-10)

    def test_variance_continuous_at_zero_field(self):
        at_zero = sigma2_variance(0.5, 0.0, 0.5)
        gaps = [abs(sigma2_variance(0.5, B, 0.5) - at_zero) for B in (1e-2, 1e-3, 1e-4)]
        assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-6

    def test_zero_field_branch(self):
        t = cm12_thermo(0.6, 0.0, 0.5)
        assert t.H_star == 0.0 and t.b_star == 1.0 and t.sigma2 > 1
