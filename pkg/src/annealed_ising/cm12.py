"""Annealed Ising model on the configuration model with degrees in {1, 2}.

Components are lines (paths between two degree-1 vertices) and tori (cycles of
degree-2 vertices). The annealed partition function factorises as
``lambda_+^N A_+^{n1/2}`` times an average over the number M of vertices in
tori, the torus product and the line generating function.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .cm2 import torus_product_table
from .logmath import LogValue, log_binom, log_double_factorial_odd
from .transfer import lambda_pm, line_amplitudes, log_amplitudes_dB, log_lambda_plus_dB


@dataclass(frozen=True)
class Cm12Params:
    """Vertex counts for a requested size N and degree-2 fraction p.

    When ``N - floor(pN)`` is odd one extra degree-1 vertex is added so that
    the degree-1 vertices pair into lines.
    """

    p: float
    N_requested: int
    n1: int = field(init=False)
    n2: int = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        n2 = int(math.floor(self.p * self.N_requested))
        n1 = self.N_requested - n2
        if n1 % 2:
            n1 += 1
        if n1 < 2:
            raise ValueError("need at least two degree-1 vertices")
        object.__setattr__(self, "n1", n1)
        object.__setattr__(self, "n2", n2)

    @property
    def N(self) -> int:
        return self.n1 + self.n2

    @property
    def ell(self) -> int:
        return self.n1 + 2 * self.n2

    @property
    def degrees(self) -> np.ndarray:
        return np.concatenate([np.ones(self.n1, np.int64), np.full(self.n2, 2, np.int64)])


@dataclass(frozen=True)
class LineIngredients:
    beta: float
    B: float
    lambda_plus: float
    lambda_minus: float
    A_plus: float
    A_minus: float
    r: float
    a: float
    degenerate: bool = False

    def c(self, l):
        """Line correction factor ``1 + a r^l`` for a line of l vertices."""
        return 1.0 + self.a * np.power(self.r, l)


def line_ingredients(beta: float, B: float) -> LineIngredients:
    lp, lm = lambda_pm(beta, B)
    ap, am = line_amplitudes(beta, B)
    if beta == 0.0:
        return LineIngredients(beta, B, lp, 0.0, 1.0, 0.0, 0.0, 0.0, degenerate=True)
    return LineIngredients(beta, B, lp, lm, ap, am, lm / lp, am / ap)


def log_mn_pmf(n1: int, n2: int) -> np.ndarray:
    """Log probabilities of M (vertices on tori) for m = 0..n2."""
    if n1 < 2 or n1 % 2:
        raise ValueError("n1 must be even and >= 2")
    if n2 < 0:
        raise ValueError("n2 must be >= 0")
    m = np.arange(n2 + 1)
    norm = (
        n2 * math.log(2)
        + log_double_factorial_odd(n1 - 1)
        + gammaln(n2 + 1)
        - log_double_factorial_odd(n1 + 2 * n2 - 1)
    )
    return (
        norm
        - 2 * m * math.log(2)
        + log_binom(2 * m, m)
        + log_binom(n1 // 2 + n2 - m - 1, n2 - m)
    )


def mn_pmf(n1: int, n2: int) -> np.ndarray:
    return np.exp(log_mn_pmf(n1, n2))


@dataclass(frozen=True)
class ToriLaw:
    """Limiting compound-Poisson law of M: ``sum_l l * Poisson(lambda_l)``."""

    p: float

    @property
    def x(self) -> float:
        return 2.0 * self.p / (1.0 + self.p)

    @property
    def mgf_radius(self) -> float:
        return (1.0 + self.p) / (2.0 * self.p)

    def rates(self, lmax: int) -> np.ndarray:
        l = np.arange(1, lmax + 1)
        return self.x**l / (2.0 * l)

    def mgf(self, b: float) -> float:
        """``E[b^M] = exp(sum_l (b^l - 1) lambda_l)``."""
        if b >= self.mgf_radius:
            raise ValueError("generating function diverges for b >= (1+p)/(2p)")
        return math.sqrt((1.0 - self.x) / (1.0 - self.x * b))

    def pmf(self, mmax: int) -> np.ndarray:
        """Probabilities for m = 0..mmax by the compound Poisson (Panjer) recursion."""
        lam = self.rates(max(mmax, 1))
        P = np.zeros(mmax + 1)
        P[0] = math.sqrt(1.0 - self.x)
        ll = np.arange(1, mmax + 1) * lam[:mmax]
        for m in range(1, mmax + 1):
            P[m] = np.dot(ll[:m], P[m - 1 :: -1][:m]) / m
        return P


def tori_limit_law(p: float) -> ToriLaw:
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    return ToriLaw(p)


def b_coeff(l: int, k: int, n1: int, n2: int, m: int, a: float, r: float) -> LogValue:
    """Term ``(l, k)`` of the line generating function as a signed log value.

    ``l`` lines are selected to carry the correction ``a r^{length}`` and ``k``
    of the ``J = n2 - m`` line-interior vertices sit on those lines.
    """
    L, J = n1 // 2, n2 - m
    if not (0 <= l <= L and 0 <= k <= J):
        raise ValueError("index out of range")
    logs, signs = _b_grid(L, J, a, r, np.array([l]), np.array([k]))
    return LogValue(int(signs[0, 0]) if np.isfinite(logs[0, 0]) else 0, float(logs[0, 0]))


def _b_grid(L: int, J: int, a: float, r: float, l=None, k=None):
    """Log-magnitude and sign grids of all ``(l, k)`` terms."""
    l = np.arange(L + 1)[:, None] if l is None else np.asarray(l)[:, None]
    k = np.arange(J + 1)[None, :] if k is None else np.asarray(k)[None, :]
    with np.errstate(divide="ignore"):
        log_ar2 = math.log(abs(a)) + 2 * math.log(r) if a != 0 and r > 0 else -math.inf
        log_r = math.log(r) if r > 0 else -math.inf
    out = (
        log_binom(L, l)
        + _xlogy(l, log_ar2)
        + _xlogy(k, log_r)
        + log_binom(l + k - 1, k)
        + log_binom(L - l + J - k - 1, J - k)
        - log_binom(L + J - 1, J)
    )
    sign = np.where((a < 0) & (l % 2 == 1), -1.0, 1.0) * np.ones_like(out)
    return out, sign


def _xlogy(n, logx):
    """``n * logx`` with ``0 * (-inf) = 0``."""
    n = np.asarray(n, dtype=float)
    if math.isinf(logx):
        return np.where(n == 0, 0.0, -np.inf)
    return n * logx


def log_lines_gf(n1: int, n2: int, m: int, a: float, r: float, l_min: int = 0) -> LogValue:
    """Signed log of the line generating function, optionally restricted to ``l >= l_min``."""
    if n1 < 2 or n1 % 2:
        raise ValueError("n1 must be even and >= 2")
    if not 0 <= m <= n2:
        raise ValueError("need 0 <= m <= n2")
    val, sgn = _LinesGrid(n1 // 2, n2 - m, a, r).log_gf(n2 - m, l_min, exhaustive=True)
    return LogValue(int(sgn), val)


def lines_gf(n1: int, n2: int, m: int, a: float, r: float) -> float:
    """``E[prod_lines (1 + a r^{length})]`` over uniform placements of the
    ``n2 - m`` line-interior vertices on the ``n1/2`` lines."""
    return log_lines_gf(n1, n2, m, a, r).value()


# exponential-rate surface of the line generating function


def _check_domain(s, t, p):
    q = (1.0 - p) / 2.0
    if not (0.0 <= s <= q and 0.0 <= t <= p):
        raise ValueError(f"(s, t) = ({s}, {t}) outside the domain for p = {p}")


def _xlx(x: float) -> float:
    return x * math.log(x) if x > 0 else 0.0


def surface_H(s: float, t: float, p: float, a: float, r: float) -> float:
    """Rate ``lim (1/N) log`` of the ``(l, k) = (sN, tN)`` term of the line generating function."""
    _check_domain(s, t, p)
    q, u = (1.0 - p) / 2.0, (1.0 + p) / 2.0
    return (
        (1.0 - p) * math.log(q)
        - 2.0 * _xlx(s)
        - 2.0 * _xlx(q - s)
        + (s * math.log(a * r * r) if s > 0 else 0.0)
        + (t * math.log(r) if t > 0 else 0.0)
        + _xlx(s + t)
        - _xlx(t)
        + _xlx(u - s - t)
        - _xlx(p - t)
        - _xlx(u)
        + _xlx(p)
    )


def surface_grad(s: float, t: float, p: float, a: float, r: float) -> np.ndarray:
    q, u = (1.0 - p) / 2.0, (1.0 + p) / 2.0
    if not (0.0 < s < q and 0.0 < t < p):
        raise ValueError("gradient needs an interior point")
    ds = 2 * math.log(q - s) - math.log(u - s - t) + math.log(s + t) - 2 * math.log(s) + math.log(a * r * r)
    dt = math.log(s + t) - math.log(t) - math.log(u - s - t) + math.log(p - t) + math.log(r)
    return np.array([ds, dt])


def surface_hessian(s: float, t: float, p: float, a: float, r: float) -> np.ndarray:
    q, u = (1.0 - p) / 2.0, (1.0 + p) / 2.0
    if not (0.0 < s < q and 0.0 < t < p):
        raise ValueError("Hessian needs an interior point")
    A = 1.0 / (u - s - t) + 1.0 / (s + t)
    return np.array([[A - 2.0 / (q - s) - 2.0 / s, A], [A, A - 1.0 / (p - t) - 1.0 / t]])


def laplace_constant(s: float, t: float, p: float) -> float:
    """Stirling prefactor ``C(s, t)`` of the ``(sN, tN)`` term: term ~ ``C e^{N H} / N``."""
    u = (1.0 + p) / 2.0
    return math.sqrt(p * u / (t * (p - t) * (s + t) * (u - s - t))) / (2.0 * math.pi)


@dataclass(frozen=True)
class SaddleSolution:
    p: float
    a: float
    r: float
    s_star: float
    t_star: float
    H_star: float
    grad_norm: float
    hessian: np.ndarray
    C_star: float
    b_star: float
    iterations: int
    converged: bool

    @property
    def residuals(self) -> tuple[float, float]:
        return critical_residuals(self.s_star, self.t_star, self.p, self.a, self.r)


def critical_residuals(s, t, p, a, r) -> tuple[float, float]:
    """Residuals of the stationarity equations written in product form."""
    q, u = (1.0 - p) / 2.0, (1.0 + p) / 2.0
    e1 = a * r * r * (q - s) ** 2 * (s + t) - s * s * (u - s - t)
    e2 = r * (s + t) * (p - t) - t * (u - s - t)
    return e1, e2


def solve_saddle(p: float, a: float, r: float, tol: float = 1e-12, max_iter: int = 500) -> SaddleSolution:
    """Maximise the strictly concave surface by damped Newton steps.

    Steps are halved until they stay inside the domain and increase the
    surface. Projected gradient ascent takes over if Newton stalls.
    """
    if not a > 0:
        raise ValueError("saddle branch needs a > 0; use the a = 0 branch")
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    q = (1.0 - p) / 2.0
    x = np.array([q / 2.0, p / 2.0])

    def inside(y):
        return 0.0 < y[0] < q and 0.0 < y[1] < p

    def Hf(y):
        return surface_H(y[0], y[1], p, a, r)

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = surface_grad(*x, p, a, r)
        if np.max(np.abs(g)) <= tol:
            converged = True
            break
        Hm = surface_hessian(*x, p, a, r)
        try:
            d = np.linalg.solve(Hm, -g)
        except np.linalg.LinAlgError:
            d = g
        if d @ g <= 0:
            d = g
        h0 = Hf(x)
        lam = 1.0
        while lam > 1e-30:
            y = x + lam * d
            if inside(y) and Hf(y) >= h0 - 1e-15 * max(1.0, abs(h0)):
                break
            lam *= 0.5
        else:
            break
        if np.all(y == x):
            g = surface_grad(*x, p, a, r)
            converged = np.max(np.abs(g)) <= max(tol, 1e-9)
            break
        x = y
    if not converged:
        x, converged = _gradient_ascent(x, p, a, r, tol)
    s, t = float(x[0]), float(x[1])
    g = surface_grad(s, t, p, a, r)
    Hm = surface_hessian(s, t, p, a, r)
    u = (1.0 + p) / 2.0
    sol = SaddleSolution(
        p, a, r, s, t,
        surface_H(s, t, p, a, r),
        float(np.max(np.abs(g))),
        Hm,
        laplace_constant(s, t, p),
        (1.0 + p) / (2.0 * p) * (p - t) / (u - s - t),
        it,
        converged,
    )
    if not converged:
        warnings.warn(f"saddle solver did not converge: |grad| = {sol.grad_norm:.3e}", RuntimeWarning, stacklevel=2)
    return sol


def _gradient_ascent(x, p, a, r, tol, max_iter=100000):
    q = (1.0 - p) / 2.0
    step = 1e-3
    for _ in range(max_iter):
        g = surface_grad(*x, p, a, r)
        if np.max(np.abs(g)) <= tol:
            return x, True
        y = x + step * g
        y = np.clip(y, [1e-300, 1e-300], [q * (1 - 1e-16), p * (1 - 1e-16)])
        if surface_H(*y, p, a, r) > surface_H(*x, p, a, r):
            x = y
            step *= 1.2
        else:
            step *= 0.5
            if step < 1e-300:
                break
    return x, False


def laplace_prefactor(solution: SaddleSolution, m: int = 0) -> float:
    """Limit of ``e^{-N H*} * lines_gf(n1, n2, m)``: ``2 pi C det(-Hess)^{-1/2} (b*)^m``."""
    det = float(np.linalg.det(solution.hessian))
    return 2.0 * math.pi * solution.C_star / math.sqrt(det) * solution.b_star**m


def saddle_rate(beta: float, B: float, p: float) -> tuple[float, SaddleSolution | None]:
    """Maximal rate ``H*`` and the saddle (None on the ``a = 0`` branch)."""
    ing = line_ingredients(beta, B)
    if ing.a <= 0.0 or ing.r <= 0.0:
        return 0.0, None
    sol = solve_saddle(p, ing.a, ing.r)
    return sol.H_star, sol


def pressure_cm12(beta: float, B: float, p: float) -> float:
    """Limiting annealed pressure ``log lambda_+ + ((1-p)/2) log A_+ + H*``."""
    ing = line_ingredients(beta, B)
    H, _ = saddle_rate(beta, B, p)
    return math.log(ing.lambda_plus) + 0.5 * (1.0 - p) * math.log(ing.A_plus) + H


class _LinesGrid:
    """All line generating functions for a fixed number of lines and ``J <= Jmax``.

    The ``(l, k)`` terms split into a J-free part, computed once, and a
    J-dependent binomial read from a log-factorial table.
    """

    def __init__(self, L: int, Jmax: int, a: float, r: float):
        self.L, self.Jmax = L, Jmax
        self.lgf = gammaln(np.arange(L + Jmax + 2, dtype=float) + 1.0)
        with np.errstate(divide="ignore"):
            log_ar2 = math.log(abs(a)) + 2 * math.log(r) if a != 0 and r > 0 else -math.inf
            log_r = math.log(r) if r > 0 else -math.inf
        l = np.arange(L + 1)[:, None]
        k = np.arange(Jmax + 1)[None, :]
        lg = self.lgf
        # log C(l + k - 1, k), with the l = 0 row equal to 1 only at k = 0
        lk = lg[np.maximum(l + k - 1, 0)] - lg[k] - lg[np.maximum(l - 1, 0)]
        lk = np.where(l == 0, np.where(k == 0, 0.0, -np.inf), lk)
        self.F = log_binom(L, l) + _xlogy(l, log_ar2) + _xlogy(k, log_r) + lk
        self.sign = np.where((a < 0) & (l % 2 == 1), -1.0, 1.0) * np.ones((1, Jmax + 1))

    def log_gf(self, J: int, l_min: int = 0, exhaustive: bool = False) -> tuple[float, float]:
        """Signed log of the sum over ``l >= l_min`` of the ``(l, k)`` terms.

        Rows are processed in blocks of l. Unless ``exhaustive``, scanning
        stops once two successive blocks fall ``_ROW_CUT`` nats below the best
        row; the terms are unimodal in l, so the remainder is negligible.
        """
        L, lg = self.L, self.lgf
        k = np.arange(J + 1)[None, :]
        norm = float(log_binom(L + J - 1, J))
        vals, sgns = [], []
        best, quiet = -math.inf, 0
        for lo in range(l_min, L + 1, _ROW_BLOCK):
            l = np.arange(lo, min(lo + _ROW_BLOCK, L + 1))[:, None]
            R, j = L - l, J - k
            # log C(R + j - 1, j), with the R = 0 row equal to 1 only at j = 0
            g = lg[np.maximum(R + j - 1, 0)] - lg[j] - lg[np.maximum(R - 1, 0)]
            g = np.where(R == 0, np.where(j == 0, 0.0, -np.inf), g)
            terms = self.F[lo : lo + l.shape[0], : J + 1] + g
            top = float(np.max(terms))
            if np.isfinite(top):
                v, sg = logsumexp(terms, b=self.sign[lo : lo + l.shape[0], : J + 1], return_sign=True)
                vals.append(float(v))
                sgns.append(float(sg))
            if exhaustive:
                continue
            if top < best - _ROW_CUT:
                quiet += 1
                if quiet >= 2:
                    break
            else:
                quiet = 0
            best = max(best, top)
        if not vals:
            return -math.inf, 0.0
        val, sgn = logsumexp(vals, b=sgns, return_sign=True)
        return float(val) - norm, float(sgn)


_ROW_BLOCK = 32
_ROW_CUT = 60.0


def _log_mixture_terms(
    n1: int, n2: int, a: float, r: float, l_min: int = 0, rel_cut: float = 45.0, exhaustive: bool = False
):
    """Per-m log terms of ``E_m[torus product] * lines_gf(m) * P(M = m)``.

    The sum over m stops once terms have dropped ``rel_cut`` nats below the
    running maximum and keep decreasing.
    """
    logq = log_mn_pmf(n1, n2)
    grid = _LinesGrid(n1 // 2, n2, a, r)
    chunk = 64
    terms: list[float] = []
    best = -math.inf
    Z = torus_product_table(min(n2, chunk), 1.0, r)
    for m in range(n2 + 1):
        if m >= Z.size:
            Z = torus_product_table(min(n2, 2 * Z.size), 1.0, r)
        g, sg = grid.log_gf(n2 - m, l_min, exhaustive)
        lt = math.log(Z[m]) + g + float(logq[m]) if sg > 0 else -math.inf
        terms.append(lt)
        best = max(best, lt)
        if m > 2 and lt < best - rel_cut and lt <= terms[-2]:
            break
    return np.array(terms)


def log_mixture_sum(n1: int, n2: int, a: float, r: float) -> float:
    return float(logsumexp(_log_mixture_terms(n1, n2, a, r)))


def pressure_cm12_finite(N: int, beta: float, B: float, p: float) -> float:
    """Exact finite-size annealed pressure from the decomposition over M."""
    prm = Cm12Params(p, N)
    ing = line_ingredients(beta, B)
    s = log_mixture_sum(prm.n1, prm.n2, ing.a, ing.r)
    return math.log(ing.lambda_plus) + prm.n1 / (2.0 * prm.N) * math.log(ing.A_plus) + s / prm.N


def magnetization_cm12(beta: float, B: float, p: float) -> float:
    """Derivative in B of the limiting pressure by the envelope theorem.

    Only the explicit B-dependence through ``lambda_+``, ``A_+``, ``a r^2``
    and ``r`` is differentiated, in closed form. At B = 0 the value is 0 by
    symmetry.
    """
    if B == 0.0:
        return 0.0
    dlp = log_lambda_plus_dB(beta, B)
    d_ap, d_am = log_amplitudes_dB(beta, B)
    m = dlp + 0.5 * (1.0 - p) * d_ap
    _, sol = saddle_rate(beta, B, p)
    if sol is not None:
        dlr = -2.0 * dlp
        m += sol.s_star * (d_am - d_ap + 2.0 * dlr) + sol.t_star * dlr
    return float(m)


def magnetization_cm12_direct(beta: float, B: float, p: float, h: float = 1e-4) -> float:
    """Central difference of the limiting pressure in B (cross-check route)."""
    return (pressure_cm12(beta, B + h, p) - pressure_cm12(beta, B - h, p)) / (2 * h)


def first_derivative(f, x: float, h: float) -> float:
    """Central difference refined by one Richardson step (stencil +-h, +-2h)."""
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + 2 * h) - f(x - 2 * h)) / (4 * h)
    return (4 * d1 - d2) / 3


def second_derivative(f, x: float, h: float) -> float:
    """Central second difference refined by one Richardson step (stencil +-h, +-2h)."""
    f0 = f(x)
    d1 = (f(x + h) - 2 * f0 + f(x - h)) / h**2
    d2 = (f(x + 2 * h) - 2 * f0 + f(x - 2 * h)) / (4 * h**2)
    return (4 * d1 - d2) / 3


def sigma2_variance(beta: float, B: float, p: float, h: float = 1e-3) -> float:
    """Limiting variance of ``S_N / sqrt(N)``: the B-derivative of the magnetization."""
    return first_derivative(lambda b: magnetization_cm12(beta, b, p), B, h)


def sigma2_variance_direct(beta: float, B: float, p: float) -> float:
    """Second difference of the limiting pressure (cross-check route)."""
    h = 1e-2 if abs(B) < 5e-2 else 1e-3
    return second_derivative(lambda b: pressure_cm12(beta, b, p), B, h)


def sigma2_variance_finite(N: int, beta: float, B: float, p: float) -> float:
    h = 1e-2 if abs(B) < 5e-2 else 1e-3
    return second_derivative(lambda b: pressure_cm12_finite(N, beta, b, p), B, h)


def boundary_contribution_check(N: int, p: float, a: float, r: float, eps: float) -> float:
    """Share of the mixture sum coming from terms with more than ``(1 - eps) n1/2`` corrected lines."""
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    prm = Cm12Params(p, N)
    if a == 0.0:
        return 0.0
    L = prm.n1 // 2
    l_min = int(math.floor((1.0 - eps) * L)) + 1
    total = logsumexp(_log_mixture_terms(prm.n1, prm.n2, a, r))
    if l_min > L:
        return 0.0
    # the tail terms are not truncated early: they peak at large m differently
    tail = logsumexp(_log_mixture_terms(prm.n1, prm.n2, a, r, l_min=l_min, rel_cut=math.inf, exhaustive=True))
    return float(math.exp(tail - total))


@dataclass(frozen=True)
class Cm12Thermo:
    beta: float
    B: float
    p: float
    s_star: float
    t_star: float
    H_star: float
    b_star: float
    pressure: float
    pressure_finite_N: float | None
    magnetization: float
    sigma2: float


def cm12_thermo(beta: float, B: float, p: float, N: int | None = None) -> Cm12Thermo:
    H, sol = saddle_rate(beta, B, p)
    return Cm12Thermo(
        beta,
        B,
        p,
        sol.s_star if sol else 0.0,
        sol.t_star if sol else 0.0,
        H,
        sol.b_star if sol else 1.0,
        pressure_cm12(beta, B, p),
        pressure_cm12_finite(N, beta, B, p) if N else None,
        magnetization_cm12(beta, B, p),
        sigma2_variance(beta, B, p),
    )
