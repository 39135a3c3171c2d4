"""Signed log-domain arithmetic and log-gamma combinatorics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class LogValue:
    """A real number stored as ``sign * exp(log_abs)``."""

    sign: int
    log_abs: float

    @classmethod
    def from_float(cls, x: float) -> "LogValue":
        if x == 0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, log_abs: float) -> "LogValue":
        return cls(1, float(log_abs))

    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs)

    def __float__(self) -> float:
        return self.value()

    def __add__(self, other: "LogValue") -> "LogValue":
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log_abs >= other.log_abs else (other, self)
        d = lo.log_abs - hi.log_abs
        if hi.sign == lo.sign:
            return LogValue(hi.sign, hi.log_abs + math.log1p(math.exp(d)))
        if d == 0.0:
            return LogValue(0, -math.inf)
        return LogValue(hi.sign, hi.log_abs + math.log1p(-math.exp(d)))

    def __mul__(self, other: "LogValue") -> "LogValue":
        if self.sign == 0 or other.sign == 0:
            return LogValue(0, -math.inf)
        return LogValue(self.sign * other.sign, self.log_abs + other.log_abs)

    def __neg__(self) -> "LogValue":
        return LogValue(-self.sign, self.log_abs)


def log_binom(n, k):
    """log C(n, k) for arrays, with C(-1, 0) = 1 and C(n, k) = 0 outside 0 <= k <= n."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    valid = (k >= 0) & (k <= n)
    with np.errstate(invalid="ignore"):
        out = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    out = np.where(valid, out, -np.inf)
    out = np.where((n == -1) & (k == 0), 0.0, out)
    return out if out.ndim else float(out)


def log_double_factorial_odd(n: int) -> float:
    """log n!! for odd n >= -1, with (-1)!! = 1."""
    if n < -1 or (n % 2 == 0):
        raise ValueError("n must be odd and >= -1")
    k = (n + 1) // 2
    # n!! = (2k)! / (2^k k!)
    return float(gammaln(2 * k + 1) - k * math.log(2) - gammaln(k + 1))


def log_cosh(x):
    """Overflow-free log cosh."""
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)
