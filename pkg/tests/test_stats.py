import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annealed_ising.stats import (
    InsufficientSamplesError,
    clt_diagnostics,
    empirical_law,
    estimate_moments,
    finite_size_skewness,
    integrated_autocorr_time,
    slln_scan,
    total_variation,
)


def ar1(n, phi, seed):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / math.sqrt(1 - phi**2)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + e[i]
    return x


class Batch:
    def __init__(self, S, N):
        self.S, self.N = np.asarray(S), N


def test_constant_series():
    est = estimate_moments(np.full(10_000, 3.0), N=1)
    assert est.variance == 0 and est.variance_se == 0 and est.mean == 3.0


def test_iid_signs():
    x = np.random.default_rng(0).choice([-1.0, 1.0], 40_000)
    est = estimate_moments(x, N=1)
    assert abs(est.variance - 1) < 3 * est.variance_se
    assert abs(integrated_autocorr_time(x) - 1) < 0.1
    assert est.ess > 20_000


@pytest.mark.parametrize("phi", [0.5, 0.9])
def test_ar1_autocorrelation(phi):
    x = ar1(200_000, phi, 1)
    tau = (1 + phi) / (1 - phi)
    assert integrated_autocorr_time(x) == pytest.approx(tau, rel=0.1)
    est = estimate_moments(x, N=1)
    assert est.ess == pytest.approx(x.size / tau, rel=0.25)
    assert abs(est.variance - 1 / (1 - phi**2)) < 3 * est.variance_se


def test_normalisation_by_N():
    S = np.random.default_rng(2).normal(0, 10, 10_000)
    est = estimate_moments(Batch(S, 100))
    assert est.variance == pytest.approx(1.0, rel=0.05)


def test_insufficient_samples():
    with pytest.raises(InsufficientSamplesError):
        estimate_moments(np.arange(10.0), N=1)
    with pytest.raises(InsufficientSamplesError):
        estimate_moments(ar1(2000, 0.99, 3), N=1, min_ess=500)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_variance_invariant_under_reordering(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=2500)
    a = estimate_moments(x, N=1, min_ess=1)
    b = estimate_moments(rng.permutation(x), N=1, min_ess=1)
    assert a.variance == pytest.approx(b.variance, rel=1e-12)
    assert a.mean == pytest.approx(b.mean, rel=1e-9, abs=1e-12)


class TestClt:
    def test_gaussian_passes(self):
        x = np.random.default_rng(4).normal(0, 2, 50_000)
        rep = clt_diagnostics(x, 4.0, N=1, lattice_spacing=0.0)
        assert rep.passed

    def test_exponential_fails_moments(self):
        x = np.random.default_rng(5).exponential(1.0, 50_000)
        rep = clt_diagnostics(x, 1.0, N=1, lattice_spacing=0.0)
        assert not rep.skewness_ok and not rep.kurtosis_ok and not rep.passed

    def test_wrong_variance_flagged(self):
        x = np.random.default_rng(6).normal(0, 1, 50_000)
        rep = clt_diagnostics(x, 1.5, N=1, lattice_spacing=0.0)
        assert not rep.variance_ok and not rep.ks_ok

    def test_lattice_values_pass_with_jitter(self):
        # sums of +-1 spins live on a lattice of spacing 2
        rng = np.random.default_rng(7)
        S = 2 * rng.binomial(400, 0.5, 40_000) - 400
        rep = clt_diagnostics(Batch(S, 400), 1.0)
        assert rep.ks_ok and rep.variance_ok

    def test_predicted_skewness_used(self):
        rng = np.random.default_rng(8)
        x = rng.gamma(400.0, 1.0, 200_000) - 400
        plain = clt_diagnostics(x, 400.0, N=1, lattice_spacing=0.0)
        fitted = clt_diagnostics(x, 400.0, N=1, lattice_spacing=0.0, predicted_skewness=2 / math.sqrt(400))
        assert not plain.skewness_ok and fitted.skewness_ok

    def test_finite_size_skewness(self):
        assert finite_size_skewness(-0.5, 1.0, 100) == pytest.approx(-0.05)


class TestSlln:
    def test_frequencies_and_rate(self):
        rng = np.random.default_rng(9)

        def make(N):
            return Batch(2 * rng.binomial(N, 0.5, 20_000) - N, N)

        table = slln_scan(make, 0.0, 0.1, [100, 200, 400])
        assert table.nonincreasing() and table.rate < 0
        assert [r.N for r in table.rows] == [100, 200, 400]

    def test_requires_increasing_sizes(self):
        with pytest.raises(ValueError):
            slln_scan(lambda N: None, 0.0, 0.1, [200, 100])


def test_empirical_law_and_tv():
    p = empirical_law([0, 1, 1, 3], 4)
    np.testing.assert_allclose(p, [0.25, 0.5, 0, 0.25])
    assert total_variation(p, [0.25, 0.25, 0.25, 0.25]) == pytest.approx(0.25)
