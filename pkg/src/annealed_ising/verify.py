"""Oracle cross-checks shared by the ``verify`` subcommand and the test-suite."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import cm2, cm12, exact, grg
from .graphs import Multigraph, WeightSequence, build_weights, grg_prob_matrix


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def check_transfer_matrices(n_points: int = 20, nmax: int = 10, seed: int = 0) -> CheckResult:
    """Cycle and path transfer-matrix values against spin enumeration."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for beta, B in zip(rng.uniform(0, 2, n_points), rng.uniform(-1.5, 1.5, n_points)):
        for n in range(1, nmax + 1):
            cyc = Multigraph(1, [[0, 0]]) if n == 1 else Multigraph.cycle(n)
            z = exact.exact_quenched_Z(cyc, beta, B).value()
            worst = max(worst, _rel(exact.transfer_matrix_cycle_Z(n, beta, B).value(), z))
            if n >= 2:
                z = exact.exact_quenched_Z(Multigraph.path(n), beta, B).value()
                worst = max(worst, _rel(exact.transfer_matrix_line_Z(n, beta, B).value(), z))
    return CheckResult("transfer matrices vs enumeration", worst <= 1e-12, f"max rel err {worst:.2e}")


def grg_graph_average_Z(weights: WeightSequence, beta: float, B: float) -> float:
    """Average of the quenched partition function over all edge subsets, weighted by their probability."""
    N = weights.N
    P = grg_prob_matrix(weights)
    pairs = list(itertools.combinations(range(N), 2))
    total = 0.0
    for mask in itertools.product((0, 1), repeat=len(pairs)):
        prob = 1.0
        edges = []
        for (i, j), on in zip(pairs, mask):
            prob *= P[i, j] if on else 1.0 - P[i, j]
            if on:
                edges.append((i, j))
        total += prob * exact.exact_quenched_Z(Multigraph(N, np.array(edges).reshape(-1, 2)), beta, B).value()
    return total


def check_grg_product(beta: float = 0.7, B: float = 0.25) -> CheckResult:
    w = WeightSequence(np.array([1.0, 1.5, 0.7, 2.0]))
    direct = exact.exact_annealed_Z_grg(w, beta, B).value()
    avg = grg_graph_average_Z(w, beta, B)
    err = _rel(direct, avg)
    return CheckResult("GRG annealed Z vs graph average (N=4)", err <= 1e-12, f"rel err {err:.2e}")


def check_cm2_finite() -> CheckResult:
    a = cm2.pressure_cm2_finite(5, 0.7, 0.2)
    b = exact.exact_annealed_Z_cm([2] * 5, 0.7, 0.2).log_abs / 5
    ok = abs(a - b) <= 1e-10
    gaps = []
    for N in (10, 100, 1000):
        gap = cm2.pressure_cm2_finite(N, 0.7, 0.2) - cm2.pressure_cm2(0.7, 0.2)
        bound = math.log(cm2.two_to_K_expectation(N)) / N
        ok &= 0.0 <= gap <= bound
        gaps.append(f"N={N}: {gap:.2e} <= {bound:.2e}")
    return CheckResult("CM(2) finite pressure", ok, f"enum diff {abs(a - b):.2e}; " + "; ".join(gaps))


def check_beta_zero() -> CheckResult:
    worst = 0.0
    w = build_weights("powerlaw", 200, tau=5)
    for B in (0.0, 0.3, 1.0):
        psi, mag, chi = math.log(2 * math.cosh(B)), math.tanh(B), 1.0 / math.cosh(B) ** 2
        m = grg.AnnealedGrgModel(w, 0.0, B)
        got = [
            (grg.annealed_pressure(m), psi), (grg.annealed_magnetization(m), mag), (grg.annealed_susceptibility(m), chi),
            (cm2.pressure_cm2(0, B), psi), (cm2.magnetization_cm2(0, B), mag), (cm2.susceptibility_cm2(0, B), chi),
            (cm12.pressure_cm12(0, B, 0.5), psi), (cm12.magnetization_cm12(0, B, 0.5), mag), (cm12.sigma2_variance(0, B, 0.5), chi),
        ]
        worst = max(worst, max(abs(a - b) for a, b in got))
    return CheckResult("beta = 0 identities", worst <= 1e-10, f"max abs err {worst:.2e}")


def check_mn_pmf(nmax: int = 400, step: int = 1) -> CheckResult:
    ok = np.allclose(cm12.mn_pmf(2, 1), [2 / 3, 1 / 3], rtol=1e-14, atol=0)
    worst = 0.0
    for n1 in range(2, nmax + 1, 2 * step):
        for n2 in range(0, nmax + 1, step):
            worst = max(worst, abs(float(np.exp(cm12.log_mn_pmf(n1, n2)).sum()) - 1.0))
    return CheckResult("M_N law", ok and worst <= 1e-10, f"max normalisation err {worst:.2e}")


def composition_gf(n1: int, n2: int, m: int, a: float, r: float) -> float:
    """Average of ``prod (1 + a r^{j+2})`` over all placements of ``n2 - m`` vertices on ``n1/2`` lines."""
    L, J = n1 // 2, n2 - m
    total, count = 0.0, 0
    for comp in itertools.product(range(J + 1), repeat=L):
        if sum(comp) == J:
            count += 1
            total += math.prod(1.0 + a * r ** (c + 2) for c in comp)
    return total / count


def check_lines_gf(L_max: int = 4, n2_max: int = 8) -> CheckResult:
    worst = 0.0
    for a, r in itertools.product((0.1, 0.5), (0.2, 0.8)):
        for L in range(1, L_max + 1):
            for n2 in range(n2_max + 1):
                for m in range(n2 + 1):
                    worst = max(worst, _rel(cm12.lines_gf(2 * L, n2, m, a, r), composition_gf(2 * L, n2, m, a, r)))
    return CheckResult("line generating function vs compositions", worst <= 1e-10, f"max rel err {worst:.2e}")


def check_cm12_finite_small() -> CheckResult:
    worst = 0.0
    for deg in ([1, 1, 2], [1, 1, 1, 1, 2, 2, 2]):
        d = np.array(deg)
        n1, n2 = int((d == 1).sum()), int((d == 2).sum())
        for beta, B in ((0.5, 0.3), (1.1, -0.4)):
            ing = cm12.line_ingredients(beta, B)
            lhs = len(d) * math.log(ing.lambda_plus) + n1 / 2 * math.log(ing.A_plus) + cm12.log_mixture_sum(n1, n2, ing.a, ing.r)
            worst = max(worst, abs(lhs - exact.exact_annealed_Z_cm(deg, beta, B).log_abs))
    return CheckResult("CM(1,2) decomposition vs pairing enumeration", worst <= 1e-10, f"max abs err {worst:.2e}")


def check_concavity(seed: int = 0, n_triples: int = 5, n_points: int = 100) -> CheckResult:
    rng = np.random.default_rng(seed)
    ok = True
    worst_fd = 0.0
    for _ in range(n_triples):
        p, a, r = rng.uniform(0.05, 0.95), rng.uniform(0.01, 2.0), rng.uniform(0.05, 0.95)
        q = (1 - p) / 2
        for _ in range(n_points):
            s, t = rng.uniform(0.02, 0.98) * q, rng.uniform(0.02, 0.98) * p
            ok &= bool(np.all(np.linalg.eigvalsh(cm12.surface_hessian(s, t, p, a, r)) < 0))
            # step scaled to the distance from the boundary, where third derivatives blow up
            h = 1e-3 * min(s, q - s, t, p - t)
            fd = [
                cm12.first_derivative(lambda x: cm12.surface_H(x, t, p, a, r), s, h),
                cm12.first_derivative(lambda y: cm12.surface_H(s, y, p, a, r), t, h),
            ]
            worst_fd = max(worst_fd, float(np.max(np.abs(np.array(fd) - cm12.surface_grad(s, t, p, a, r)))))
    return CheckResult("surface concavity and gradient", ok and worst_fd <= 1e-6, f"max FD gap {worst_fd:.2e}")


def check_critical_temperature() -> CheckResult:
    beta_c = grg.bifurcation_beta(build_weights("constant", 4, w=2.0))
    ok = abs(beta_c - math.asinh(0.5)) <= 1e-3
    for nu in (1.5, 2.0, 5.0):
        an, qu = grg.critical_betas(nu)
        ok &= an < qu
    return CheckResult("annealed critical temperature", ok, f"onset {beta_c:.6f} vs {math.asinh(0.5):.6f}")


def check_laplace(N_list=(200, 400, 800, 1600), p: float = 0.5, a: float = 0.3, r: float = 0.4) -> CheckResult:
    sol = cm12.solve_saddle(p, a, r)
    gaps = []
    for N in N_list:
        prm = cm12.Cm12Params(p, N)
        gaps.append(abs(cm12.log_lines_gf(prm.n1, prm.n2, 0, a, r).log_abs / prm.N - sol.H_star))
    ok = all(b < a_ for a_, b in zip(gaps, gaps[1:])) and gaps[-1] <= 0.01
    return CheckResult("Laplace rate convergence", ok, " ".join(f"{g:.2e}" for g in gaps))


def check_cm12_pressure(N: int = 2000) -> CheckResult:
    gap = abs(cm12.pressure_cm12_finite(N, 0.5, 0.3, 0.5) - cm12.pressure_cm12(0.5, 0.3, 0.5))
    return CheckResult(f"CM(1,2) pressure at N={N}", gap <= 5e-3, f"gap {gap:.2e}")


SUITES = {
    "small": [
        check_transfer_matrices,
        check_grg_product,
        check_cm2_finite,
        check_beta_zero,
        lambda: check_mn_pmf(nmax=60),
        lambda: check_lines_gf(L_max=3, n2_max=6),
        check_cm12_finite_small,
        check_concavity,
    ],
}
SUITES["full"] = SUITES["small"][:4] + [
    check_mn_pmf,
    check_lines_gf,
    check_cm12_finite_small,
    check_concavity,
    check_critical_temperature,
    check_laplace,
    check_cm12_pressure,
]


def run_suite(name: str = "small") -> list[CheckResult]:
    return [check() for check in SUITES[name]]
