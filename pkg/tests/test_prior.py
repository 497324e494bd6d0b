import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robust_amp.errors import DomainError
from robust_amp.prior import SignalPrior, denoise, denoise_oracle, sample_signal

RHOS = (0.05, 0.3, 0.7, 1.0)
SIGMA2S = (1e-6, 1e-2, 1.0, 1e2)
RS = (-5.0, -1.0, 0.0, 0.3, 2.0, 8.0)


def test_conjugate_gaussian():
    a, c = denoise(SignalPrior(1.0), 1.0, 2.0)
    assert a == pytest.approx(1.0, abs=1e-15)
    assert c == pytest.approx(0.5, abs=1e-15)


def test_zero_input_gives_zero_mean():
    a, c = denoise(SignalPrior(0.5), 0.5, 0.0)
    assert a == 0.0
    assert c > 0


def test_empty_prior():
    a, c = denoise(SignalPrior(0.0), 1.0, 5.0)
    assert a == 0.0 and c == 0.0
    a, c = denoise_oracle(SignalPrior(0.0), 1.0, 5.0)
    assert a == 0.0 and c == 0.0


@pytest.mark.parametrize("rho,sigma2,r", [(0.5, 0.5, 1.0), (0.3, 0.1, -0.7), (1.0, 1.0, 2.0)])
def test_spot_values_match_oracle(rho, sigma2, r):
    prior = SignalPrior(rho)
    a, c = denoise(prior, sigma2, r)
    ao, co = denoise_oracle(prior, sigma2, r)
    assert abs(a - ao) < 1e-10
    assert abs(c - co) < 1e-10


def test_full_grid_against_oracle():
    worst = 0.0
    for rho, sigma2, r in itertools.product(RHOS, SIGMA2S, RS):
        prior = SignalPrior(rho)
        a, c = denoise(prior, sigma2, r)
        ao, co = denoise_oracle(prior, sigma2, r)
        worst = max(worst, abs(a - ao), abs(c - co))
    assert worst < 1e-10


def test_vectorised_matches_scalar():
    prior = SignalPrior(0.3)
    r = np.array(RS)
    sigma2 = np.array([1e-2, 1.0, 3.0, 0.5, 1e-6, 1e2])
    a, c = denoise(prior, sigma2, r)
    for i in range(len(r)):
        ai, ci = denoise(prior, sigma2[i], r[i])
        assert a[i] == ai and c[i] == ci


def test_odd_and_even_symmetry():
    prior = SignalPrior(0.2)
    half = np.linspace(0, 6, 21)
    r = np.concatenate([-half[::-1], half[1:]])
    a, c = denoise(prior, 0.3, r)
    np.testing.assert_array_equal(a, -a[::-1])
    np.testing.assert_array_equal(c, c[::-1])


def test_large_variance_returns_prior():
    for rho in RHOS:
        a, c = denoise(SignalPrior(rho), 1e10, 0.7)
        assert abs(a) < 1e-6
        assert abs(c - rho) < 1e-6


def test_extreme_inputs_stay_finite():
    prior = SignalPrior(0.05)
    a, c = denoise(prior, 1e-12, np.array([-1e6, 1e-8, 1e6]))
    assert np.all(np.isfinite(a)) and np.all(np.isfinite(c))
    assert a[2] == pytest.approx(1e6 / (1 + 1e-12))


@settings(max_examples=60, deadline=None)
@given(rho=st.floats(0.01, 1.0), sigma2=st.floats(1e-4, 1e3), r=st.floats(-20, 20))
def test_moments_are_consistent(rho, sigma2, r):
    a, c = denoise(SignalPrior(rho), sigma2, r)
    assert c >= 0
    # the posterior of x shrinks toward zero: |a| never exceeds the slab mean
    assert abs(a) <= abs(r) / (1 + sigma2) * (1 + 1e-12)


def test_rejects_bad_inputs():
    with pytest.raises(DomainError):
        SignalPrior(1.5)
    with pytest.raises(DomainError):
        denoise(SignalPrior(0.5), -1.0, 0.0)
    with pytest.raises(DomainError):
        denoise(SignalPrior(0.5), 1.0, np.nan)


def test_sampling():
    assert not sample_signal(SignalPrior(0.0), 100, 1).any()
    s = sample_signal(SignalPrior(1.0), 100_000, 2)
    assert abs(s.var() - 1) < 0.03
    n, rho = 100_000, 0.1
    frac = np.count_nonzero(sample_signal(SignalPrior(rho), n, 3)) / n
    assert abs(frac - rho) < 4 * np.sqrt(rho * (1 - rho) / n)


def test_sampling_is_seeded():
    a = sample_signal(SignalPrior(0.3), 1000, 11)
    b = sample_signal(SignalPrior(0.3), 1000, 11)
    np.testing.assert_array_equal(a, b)
