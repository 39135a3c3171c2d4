"""Annealed Ising model on the 2-regular configuration model."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import first_cycle_law_cm2
from .transfer import lambda_pm

__all__ = [
    "Cm2Thermo",
    "cm2_thermo",
    "lambda_pm",
    "magnetization_cm2",
    "pressure_cm2",
    "pressure_cm2_finite",
    "susceptibility_cm2",
    "torus_product_recursion",
    "torus_product_table",
    "two_to_K_expectation",
]


@dataclass(frozen=True)
class Cm2Thermo:
    beta: float
    B: float
    lambda_plus: float
    lambda_minus: float
    pressure: float
    magnetization: float
    susceptibility: float
    N: int | None = None
    pressure_finite_N: float | None = None

    @property
    def r(self) -> float:
        return self.lambda_minus / self.lambda_plus


def pressure_cm2(beta: float, B: float) -> float:
    return math.log(lambda_pm(beta, B)[0])


def magnetization_cm2(beta: float, B: float) -> float:
    sh = math.sinh(B)
    return sh / math.sqrt(sh * sh + math.exp(-4.0 * beta))


def susceptibility_cm2(beta: float, B: float) -> float:
    """Derivative in B of the magnetization."""
    sh = math.sinh(B)
    e4 = math.exp(-4.0 * beta)
    return math.cosh(B) * e4 / (sh * sh + e4) ** 1.5


def torus_product_table(N: int, alpha: float, gamma: float) -> np.ndarray:
    """Values ``Z_0..Z_N`` of ``Z_n = sum_l q_n(l) (1 + alpha gamma^l) Z_{n-l}``, ``Z_0 = 1``.

    ``Z_n`` is the expectation of the product over cycles of ``1 + alpha gamma^{length}``
    for the 2-regular configuration model on n vertices.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    if alpha <= -1.0:
        raise ValueError("alpha must exceed -1")
    if N < 0:
        raise ValueError("N must be >= 0")
    Z = np.ones(N + 1)
    if alpha == 0.0 or gamma == 0.0 or N == 0:
        return Z
    # beyond lmax the factor 1 + alpha gamma^l is 1 to double precision
    lmax = N if gamma == 0 else min(N, int(math.ceil(math.log(1e-18) / math.log(gamma))) + 1)
    weights_full = 1.0 + alpha * gamma ** np.arange(1, N + 1, dtype=float)
    for n in range(1, N + 1):
        q = first_cycle_law_cm2(n)
        k = min(n, lmax)
        head = q[:k] * weights_full[:k]
        total = float(np.dot(head, Z[n - 1 :: -1][:k]))
        if k < n:
            total += float(np.dot(q[k:], Z[n - k - 1 :: -1]))
        Z[n] = total
    return Z


def torus_product_recursion(N: int, alpha: float, gamma: float) -> float:
    return float(torus_product_table(N, alpha, gamma)[N])


def pressure_cm2_finite(N: int, beta: float, B: float) -> float:
    """Exact annealed pressure at finite N via the cycle recursion."""
    if N < 1:
        raise ValueError("N must be >= 1")
    lp, lm = lambda_pm(beta, B)
    return math.log(lp) + math.log(torus_product_recursion(N, 1.0, lm / lp)) / N


def two_to_K_expectation(N: int) -> float:
    """``E[2^K]`` for the cycle count K of the 2-regular configuration model."""
    if N < 1:
        raise ValueError("N must be >= 1")
    i = np.arange(1, N + 1)
    return float(np.exp(np.sum(np.log1p(1.0 / (2 * N - 2 * i + 1)))))


def cm2_thermo(beta: float, B: float, N: int | None = None) -> Cm2Thermo:
    lp, lm = lambda_pm(beta, B)
    return Cm2Thermo(
        beta,
        B,
        lp,
        lm,
        math.log(lp),
        magnetization_cm2(beta, B),
        susceptibility_cm2(beta, B),
        N,
        pressure_cm2_finite(N, beta, B) if N else None,
    )
