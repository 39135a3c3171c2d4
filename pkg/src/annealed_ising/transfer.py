"""Eigen-structure of the one-dimensional Ising transfer matrix."""
from __future__ import annotations

import math


def lambda_pm(beta: float, B: float) -> tuple[float, float]:
    """Eigenvalues ``e^beta [cosh B +- sqrt(sinh^2 B + e^{-4 beta})]``.

    The smaller one is evaluated in product form to avoid cancellation.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    sh, ch = math.sinh(B), math.cosh(B)
    root = math.sqrt(sh * sh + math.exp(-4.0 * beta))
    lp = math.exp(beta) * (ch + root)
    # lambda_+ lambda_- = e^{2 beta} - e^{-2 beta}
    lm = 2.0 * math.sinh(2.0 * beta) / lp
    return lp, lm


def _x_shift(beta: float, B: float) -> float:
    """``lambda_+ - e^{beta + B}`` without cancellation."""
    sh = math.sinh(B)
    e4 = math.exp(-4.0 * beta)
    root = math.sqrt(sh * sh + e4)
    if sh > 0:
        diff = e4 / (root + sh)
    else:
        diff = root - sh
    return math.exp(beta) * diff


def line_amplitudes(beta: float, B: float) -> tuple[float, float]:
    """Amplitudes ``(A_+, A_-)`` with free-boundary path weight ``A_+ l_+^n + A_- l_-^n``."""
    lp, lm = lambda_pm(beta, B)
    if beta == 0.0:
        return 1.0, 0.0
    x = _x_shift(beta, B)
    eb = math.exp(-beta)
    hp, hm = math.exp(B / 2), math.exp(-B / 2)
    den = eb * eb + x * x
    a_plus = (eb * hp + x * hm) ** 2 / (den * lp)
    # at B = 0 the lambda_- eigenvector is odd and the amplitude vanishes exactly
    a_minus = 0.0 if B == 0.0 else (eb * hm - x * hp) ** 2 / (den * lm)
    return a_plus, a_minus


def log_lambda_plus_dB(beta: float, B: float) -> float:
    """``d/dB log lambda_+``, which is also ``-d/dB log lambda_-``."""
    sh = math.sinh(B)
    return sh / math.sqrt(sh * sh + math.exp(-4.0 * beta))


def log_amplitudes_dB(beta: float, B: float) -> tuple[float, float]:
    """``d/dB log A_+`` and ``d/dB log A_-`` in closed form.

    The second is singular at B = 0, where ``A_-`` vanishes.
    """
    sh, ch = math.sinh(B), math.cosh(B)
    R = math.sqrt(sh * sh + math.exp(-4.0 * beta))
    x = _x_shift(beta, B)
    dx = -x * ch / R
    eb = math.exp(-beta)
    hp, hm = math.exp(B / 2), math.exp(-B / 2)
    dlp = sh / R
    dden = 2.0 * x * dx / (eb * eb + x * x)
    up = eb * hp + x * hm
    um = eb * hm - x * hp
    d_plus = 2.0 * (0.5 * eb * hp - 0.5 * x * hm + dx * hm) / up - dden - dlp
    d_minus = 2.0 * (-0.5 * eb * hm - 0.5 * x * hp - dx * hp) / um - dden + dlp if um != 0.0 else math.inf
    return d_plus, d_minus
