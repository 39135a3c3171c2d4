"""Moment estimates with error bars, normality diagnostics and concentration scans.

Standard errors are 1 SE throughout; callers compare at 3 SE.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .graphs import make_rng


class InsufficientSamplesError(ValueError):
    pass


def finite_size_skewness(dchi_dB: float, chi: float, N: int) -> float:
    """Leading skewness of S from the B-derivative of the susceptibility."""
    return dchi_dB / (chi**1.5 * math.sqrt(N))


def _values(batch) -> tuple[np.ndarray, int]:
    if hasattr(batch, "S"):
        return np.asarray(batch.S, dtype=float), int(batch.N)
    return np.asarray(batch, dtype=float), 1


def integrated_autocorr_time(x, c: float = 5.0) -> float:
    """Integrated autocorrelation time with Sokal's adaptive window."""
    x = np.asarray(x, dtype=float)
    n = x.size
    x = x - x.mean()
    var = float(np.dot(x, x)) / n
    if var == 0.0:
        return 1.0
    f = np.fft.rfft(x, n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (n * var)
    taus = 2.0 * np.cumsum(acf) - 1.0
    window = np.arange(n) < c * taus
    m = int(np.argmin(window)) if not window.all() else n - 1
    return float(max(taus[m], 1.0 / n))


@dataclass(frozen=True)
class VarianceEstimate:
    """Moments of ``S/N`` (mean) and ``S/sqrt(N)`` (variance) with batch-means errors."""

    mean: float
    mean_se: float
    variance: float
    variance_se: float
    ess: float
    tau_int: float
    n_samples: int
    n_batches: int


def estimate_moments(batch, N: int | None = None, min_ess: float = 100.0, min_batches: int = 20) -> VarianceEstimate:
    """Batch means with ``sqrt(n)``-sized batches; variance SE by delete-one-batch jackknife.

    ``batch`` is a SampleBatch or an array of total spins (then pass N).
    """
    S, n_vert = _values(batch)
    N = n_vert if N is None else N
    n = S.size
    b = max(1, int(math.isqrt(n)))
    nb = n // b
    if nb < min_batches:
        b = max(1, n // min_batches)
        nb = n // b
    if nb < min_batches:
        raise InsufficientSamplesError(f"{n} samples give fewer than {min_batches} batches")
    x = S[: nb * b] / math.sqrt(N)
    m = x.size
    var = float(np.var(x))
    bx = x.reshape(nb, b)
    bmeans = bx.mean(axis=1)
    sigma2_bm = b * float(np.var(bmeans, ddof=1))
    if var == 0.0:
        ess = float(m)
    elif sigma2_bm == 0.0:
        ess = float(m)
    else:
        ess = m * var / sigma2_bm
    ess = min(ess, float(m)) if var > 0 else ess
    if ess < min_ess:
        raise InsufficientSamplesError(f"effective sample size {ess:.1f} below {min_ess}")
    # jackknife over batches for the variance
    s1 = bx.sum(axis=1)
    s2 = (bx * bx).sum(axis=1)
    n_loo = m - b
    mean_loo = (s1.sum() - s1) / n_loo
    var_loo = (s2.sum() - s2) / n_loo - mean_loo**2
    var_se = math.sqrt((nb - 1) / nb * float(np.sum((var_loo - var_loo.mean()) ** 2)))
    mean_se = math.sqrt(sigma2_bm / m) / math.sqrt(N)
    return VarianceEstimate(
        float(x.mean()) / math.sqrt(N),
        mean_se,
        var,
        var_se,
        ess,
        integrated_autocorr_time(x),
        m,
        nb,
    )


@dataclass(frozen=True)
class CltReport:
    variance_ratio: float
    variance_z: float
    skewness: float
    skewness_se: float
    excess_kurtosis: float
    kurtosis_se: float
    ks_distance: float
    ks_pvalue: float
    ess: float
    skewness_ok: bool
    kurtosis_ok: bool
    variance_ok: bool
    ks_ok: bool

    @property
    def passed(self) -> bool:
        return self.skewness_ok and self.kurtosis_ok and self.variance_ok and self.ks_ok


def clt_diagnostics(batch, predicted_variance: float, N: int | None = None, alpha: float = 0.01,
                    min_ess: float = 500.0, seed=0, lattice_spacing: float | None = None,
                    predicted_skewness: float = 0.0, predicted_kurtosis: float = 0.0) -> CltReport:
    """Normality checks on ``(S - mean) / sqrt(N * predicted_variance)``.

    Moment tests use the effective sample size: skewness within ``4 sqrt(6/ESS)``
    of ``predicted_skewness`` and excess kurtosis within ``4 sqrt(24/ESS)`` of
    ``predicted_kurtosis``. Long chains resolve the O(N^-1/2) skewness of S,
    so pass it in when known (see ``finite_size_skewness``). Integer-valued
    spins are dequantised by uniform jitter over one lattice cell before the
    KS test.
    """
    S, n_vert = _values(batch)
    N = n_vert if N is None else N
    est = estimate_moments(S, N, min_ess=min_ess)
    ess = est.ess
    spacing = (2.0 if hasattr(batch, "S") else 0.0) if lattice_spacing is None else lattice_spacing
    x = S.astype(float)
    if spacing > 0:
        x = x + make_rng(seed).uniform(-spacing / 2, spacing / 2, size=x.size)
    z = (x - x.mean()) / math.sqrt(N * predicted_variance + spacing**2 / 12.0)
    skew = float(sps.skew(z))
    kurt = float(sps.kurtosis(z))
    skew_se = math.sqrt(6.0 / ess)
    kurt_se = math.sqrt(24.0 / ess)
    d = float(sps.kstest(z, "norm").statistic)
    pval = float(sps.kstwo.sf(d, max(int(ess), 1)))
    vz = (est.variance - predicted_variance) / est.variance_se if est.variance_se > 0 else 0.0
    return CltReport(
        est.variance / predicted_variance,
        vz,
        skew,
        skew_se,
        kurt,
        kurt_se,
        d,
        pval,
        ess,
        abs(skew - predicted_skewness) <= 4 * skew_se,
        abs(kurt - predicted_kurtosis) <= 4 * kurt_se,
        abs(vz) <= 3.0,
        pval > alpha,
    )


@dataclass(frozen=True)
class SllnRow:
    N: int
    frequency: float
    n_samples: int


@dataclass(frozen=True)
class SllnTable:
    eps: float
    rows: tuple[SllnRow, ...]

    @property
    def rate(self) -> float:
        """Slope of log-frequency against N over rows with nonzero frequency."""
        pts = [(r.N, math.log(r.frequency)) for r in self.rows if r.frequency > 0]
        if len(pts) < 2:
            return math.nan
        Ns, lf = zip(*pts)
        return float(np.polyfit(Ns, lf, 1)[0])

    def nonincreasing(self) -> bool:
        f = [r.frequency for r in self.rows]
        return all(b <= a for a, b in zip(f, f[1:]))


def slln_scan(make_batch, magnetization, eps: float, N_list) -> SllnTable:
    """Frequency of ``|S/N - M| >= eps`` per system size.

    ``make_batch(N)`` returns a SampleBatch; ``magnetization`` is a number or
    a callable of N.
    """
    N_list = list(N_list)
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be increasing")
    rows = []
    for N in N_list:
        batch = make_batch(N)
        M = magnetization(N) if callable(magnetization) else magnetization
        dev = np.abs(np.asarray(batch.S, dtype=float) / N - M)
        rows.append(SllnRow(N, float(np.mean(dev >= eps)), int(dev.size)))
    return SllnTable(eps, tuple(rows))


def empirical_law(codes, n_states: int) -> np.ndarray:
    """Frequencies of integer state codes ``0..n_states-1``."""
    codes = np.asarray(codes, dtype=np.int64)
    return np.bincount(codes, minlength=n_states) / codes.size


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
