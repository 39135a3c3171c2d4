"""Annealed Ising model on the generalized random graph.

Averaging over independent edges turns the model into an inhomogeneous
Curie-Weiss model with couplings ``beta_ij``; its pressure follows from a
one-dimensional variational problem over z.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .graphs import WeightSequence, grg_prob_matrix
from .logmath import log_cosh


class NonUniquenessWarning(RuntimeWarning):
    """Raised when B = 0 and beta is above the annealed critical point."""


class IllConditionedWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class EffectiveCouplings:
    beta_ij: np.ndarray
    log_C: np.ndarray
    log_G2: float

    @property
    def diagonal_factors(self) -> np.ndarray:
        return np.exp(-0.5 * np.diag(self.beta_ij))


def effective_couplings(weights: WeightSequence, beta: float) -> EffectiveCouplings:
    """Exact couplings ``beta_ij`` and constants ``C_ij`` of the averaged edge factors.

    ``e^{beta s s'} p + 1 - p = C e^{beta_ij s s'}`` for ``s s' = +-1``.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    P = grg_prob_matrix(weights)
    gp = np.log1p(P * math.expm1(beta))
    gm = np.log1p(P * math.expm1(-beta))
    bij = 0.5 * (gp - gm)
    logC = 0.5 * (gp + gm)
    iu = np.triu_indices(weights.N, k=1)
    log_G2 = float(logC[iu].sum() - 0.5 * np.trace(bij))
    return EffectiveCouplings(bij, logC, log_G2)


@dataclass(frozen=True, eq=False)
class AnnealedGrgModel:
    weights: WeightSequence
    beta: float
    B: float

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if not isinstance(self.weights, WeightSequence):
            object.__setattr__(self, "weights", WeightSequence(self.weights))

    @property
    def N(self) -> int:
        return self.weights.N

    @property
    def nu(self) -> float:
        return self.weights.nu

    @property
    def scale(self) -> float:
        """``sqrt(sinh(beta) / E[W])``."""
        return math.sqrt(math.sinh(self.beta) / self.weights.mean)

    @cached_property
    def alpha(self) -> float:
        """``(1/N) log G2`` at this N, a finite-size stand-in for its limit."""
        return effective_couplings(self.weights, self.beta).log_G2 / self.N

    def with_field(self, B: float) -> "AnnealedGrgModel":
        m = AnnealedGrgModel(self.weights, self.beta, B)
        if "alpha" in self.__dict__:
            m.__dict__["alpha"] = self.alpha
        return m


def cw_objective(model: AnnealedGrgModel, z: float) -> float:
    """``E[log cosh(c W z + B)] - z^2 / 2`` with ``c = sqrt(sinh(beta)/E[W])``."""
    cw = model.scale * model.weights.weights
    return float(np.mean(log_cosh(cw * z + model.B)) - 0.5 * z * z)


def fixed_point_map(model: AnnealedGrgModel, z: float) -> float:
    cw = model.scale * model.weights.weights
    return float(np.mean(np.tanh(cw * z + model.B) * cw))


@dataclass(frozen=True)
class FixedPointResult:
    z_star: float
    iterations: int
    residual: float
    branch: str
    converged: bool = True


def solve_fixed_point(
    model: AnnealedGrgModel,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    damping: float = 0.5,
    branch: str = "positive",
) -> FixedPointResult:
    """Solve ``z = E[tanh(c W z + B) c W]`` for the maximiser of the objective.

    For B = 0 above the critical point the root of sign ``branch`` is
    returned ("positive" is the B -> 0+ limit).
    """
    c = model.scale
    top = c * float(model.weights.weights.max())
    B = model.B
    if c == 0.0:
        return FixedPointResult(0.0, 0, 0.0, "symmetric-zero")
    if B == 0.0:
        slope = math.sinh(model.beta) * model.nu
        if slope <= 1.0:
            return FixedPointResult(0.0, 0, 0.0, "symmetric-zero")
        sgn = -1.0 if branch == "negative" else 1.0
    else:
        sgn = 1.0 if B > 0 else -1.0
    mirrored = model if sgn > 0 else model.with_field(-B)

    def g(z):
        return z - fixed_point_map(mirrored, z)

    z = top
    it = 0
    ok = False
    for it in range(1, max_iter + 1):
        z_new = (1.0 - damping) * z + damping * fixed_point_map(mirrored, z)
        if abs(z_new - z) <= tol * damping:
            z = z_new
            ok = abs(g(z)) <= 10 * tol
            break
        z = z_new
    if not ok:
        lo = 0.0
        if g(lo) >= 0.0:
            lo = top / 2
            while g(lo) >= 0.0 and lo > 1e-300:
                lo /= 2
        z = brentq(g, lo, top, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=1000)
    # Newton polish so that quantities depending on z* at first order are exact
    cw = mirrored.scale * mirrored.weights.weights
    for _ in range(3):
        th = np.tanh(cw * z + mirrored.B)
        dg = 1.0 - float(np.mean((1.0 - th * th) * cw * cw))
        if dg <= 0.0:
            break
        z_new = z - g(z) / dg
        if not 0.0 < z_new <= top or abs(g(z_new)) > abs(g(z)):
            break
        z = z_new
    res = abs(g(z))
    return FixedPointResult(sgn * z, it, res, "positive" if sgn > 0 else "negative", res <= max(10 * tol, 1e-10))


def _pressure(model: AnnealedGrgModel, z: float) -> float:
    return math.log(2.0) + model.alpha + cw_objective(model, z)


def annealed_pressure(model: AnnealedGrgModel) -> float:
    """``log 2 + alpha + F(z*) - z*^2/2``."""
    fp = solve_fixed_point(model)
    if not fp.converged:
        raise ArithmeticError(f"fixed point failed at beta={model.beta}, B={model.B}: residual {fp.residual}")
    return _pressure(model, fp.z_star)


def in_uniqueness(beta: float, B: float, nu: float) -> bool:
    """Annealed uniqueness regime: B != 0, or B = 0 below ``asinh(1/nu)``."""
    if B != 0.0:
        return beta >= 0.0
    return 0.0 < beta < math.asinh(1.0 / nu)


uniqueness_check = in_uniqueness


def annealed_magnetization(model: AnnealedGrgModel) -> float:
    """``E[tanh(c W z* + B)]``; at B = 0 above criticality, the B -> 0+ value with a warning."""
    if model.B == 0.0 and math.sinh(model.beta) * model.nu > 1.0:
        warnings.warn("B = 0 above the annealed critical point: returning the B -> 0+ branch", NonUniquenessWarning, stacklevel=2)
    fp = solve_fixed_point(model)
    cw = model.scale * model.weights.weights
    return float(np.mean(np.tanh(cw * fp.z_star + model.B)))


def annealed_susceptibility(model: AnnealedGrgModel, h: float = 1e-3) -> float:
    """B-derivative of the magnetization, i.e. the second B-derivative of the pressure.

    The magnetization is the exact first derivative (envelope theorem), so a
    central difference with one Richardson step gives the second. M varies on
    a field scale of order 1/chi, so the step is shrunk by the implicit
    estimate of chi near criticality.
    """
    if model.B == 0.0 and abs(math.sinh(model.beta) * model.nu - 1.0) < 1e-3:
        warnings.warn("susceptibility is ill-conditioned this close to the critical point", IllConditionedWarning, stacklevel=2)
    if model.B == 0.0 and math.sinh(model.beta) * model.nu > 1.0:
        warnings.warn("B = 0 above the annealed critical point", NonUniquenessWarning, stacklevel=2)

    def M(b):
        m = model.with_field(b)
        fp = solve_fixed_point(m)
        return float(np.mean(np.tanh(m.scale * m.weights.weights * fp.z_star + b)))

    B = model.B
    h = h / max(1.0, susceptibility_implicit(model))
    d1 = (M(B + h) - M(B - h)) / (2 * h)
    d2 = (M(B + 2 * h) - M(B - 2 * h)) / (4 * h)
    return (4 * d1 - d2) / 3


def annealed_susceptibility_fd2(model: AnnealedGrgModel, h: float = 1e-3) -> float:
    """Second difference of the pressure with one Richardson step (cross-check route)."""

    def f(b):
        m = model.with_field(b)
        return _pressure(m, solve_fixed_point(m).z_star)

    B = model.B
    f0 = f(B)
    d1 = (f(B + h) - 2 * f0 + f(B - h)) / h**2
    d2 = (f(B + 2 * h) - 2 * f0 + f(B - 2 * h)) / (4 * h**2)
    return (4 * d1 - d2) / 3


def susceptibility_implicit(model: AnnealedGrgModel) -> float:
    """Susceptibility by implicit differentiation of the fixed-point equation."""
    z = solve_fixed_point(model).z_star
    cw = model.scale * model.weights.weights
    sech2 = 1.0 - np.tanh(cw * z + model.B) ** 2
    a = float(np.mean(sech2 * cw))
    dz = a / (1.0 - float(np.mean(sech2 * cw * cw)))
    return float(np.mean(sech2)) + a * dz


def critical_betas(nu: float) -> tuple[float, float]:
    """Annealed ``asinh(1/nu)`` and quenched ``atanh(1/nu)`` (infinite when nu <= 1)."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    quenched = math.atanh(1.0 / nu) if nu > 1.0 else math.inf
    return math.asinh(1.0 / nu), quenched


def bifurcation_beta(weights: WeightSequence, beta_lo: float = 0.0, beta_hi: float = 5.0, tol: float = 1e-6) -> float:
    """Bisection for the smallest beta at which z = 0 stops maximising the B = 0 objective.

    Symmetry breaking is detected by maximising the objective on a grid of
    positive z and comparing with z = 0, without using the linearised map.
    """
    zs = np.linspace(0.0, 1.0, 2001)[1:]

    def broken(beta):
        m = AnnealedGrgModel(weights, beta, 0.0)
        zmax = m.scale * float(weights.weights.max())
        if zmax == 0.0:
            return False
        grid = zs * zmax
        cw = m.scale * weights.weights
        vals = np.mean(log_cosh(np.outer(grid, cw)), axis=1) - 0.5 * grid**2
        i = int(np.argmax(vals))
        # refine the best grid point with a local maximiser of the objective
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]
        res = minimize_scalar(lambda z: -cw_objective(m, z), bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
        return -res.fun > 1e-15

    lo, hi = beta_lo, beta_hi
    if broken(lo) or not broken(hi):
        raise ValueError("bracket does not straddle the bifurcation")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if broken(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ThermoResult:
    beta: float
    B: float
    N: int
    z_star: float
    pressure: float
    magnetization: float
    susceptibility: float
    beta_c_an: float
    beta_c_qu: float
    in_uniqueness: bool
    alpha: float
    fixed_point: FixedPointResult


def grg_thermo(model: AnnealedGrgModel) -> ThermoResult:
    fp = solve_fixed_point(model)
    bc_an, bc_qu = critical_betas(model.nu)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonUniquenessWarning)
        mag = annealed_magnetization(model)
        chi = annealed_susceptibility(model)
    return ThermoResult(
        model.beta,
        model.B,
        model.N,
        fp.z_star,
        _pressure(model, fp.z_star),
        mag,
        chi,
        bc_an,
        bc_qu,
        in_uniqueness(model.beta, model.B, model.nu),
        model.alpha,
        fp,
    )
