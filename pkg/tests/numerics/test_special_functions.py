import math

import mpmath
import numpy as np
import pytest
import scipy.special

from fracsource.core.exceptions import SpecialFunctionError
from fracsource.core.models.enum import Regime
from fracsource.core.numerics.special_functions import (
    MLParams,
    evaluate_mittag_leffler,
    gamma,
    mittag_leffler,
    mittag_leffler_array,
    mittag_leffler_real,
    ml_bound_check,
)


def ml_oracle(alpha: float, beta: float, z: complex, terms: int = 20_000) -> complex:
    """Taylor sum in extended precision.

    The largest term grows like exp(|z|^{1/α}), so the working precision grows with it.
    """
    dps = 30 + int(abs(z) ** (1 / alpha) / 2.3)
    with mpmath.workdps(dps):
        z_mp = mpmath.mpc(z)
        total, power = mpmath.mpc(0), mpmath.mpc(1)
        for k in range(terms):
            term = power * mpmath.rgamma(alpha * k + beta)
            total += term
            if k > 10 and abs(term) < mpmath.mpf(10) ** -25 * max(abs(total), mpmath.mpf(10) ** -10):
                break
            power *= z_mp
        return complex(total)


def test_gamma_values():
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-15)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gamma(4.7) == pytest.approx(float(mpmath.gamma(mpmath.mpf("4.7"))), rel=1e-13)


@pytest.mark.parametrize("x", [0, -1, -3])
def test_gamma_poles(x):
    with pytest.raises(SpecialFunctionError):
        gamma(float(x))


def test_exponential_identity():
    assert mittag_leffler(MLParams(alpha=1.0, beta=1.0), 1.0) == pytest.approx(math.e, rel=1e-14)
    z = np.array([-4.0, -1.0, 0.5, 3.0 + 1.0j])
    np.testing.assert_allclose(mittag_leffler_array(1.0, 1.0, z), np.exp(z), rtol=1e-12)


def test_cosine_identity():
    assert abs(mittag_leffler(MLParams(alpha=2.0, beta=1.0), -((math.pi / 2) ** 2))) < 1e-13
    t = np.linspace(0.0, 2.0, 9)
    np.testing.assert_allclose(mittag_leffler_real(2.0, 1.0, -(t**2)), np.cos(t), atol=1e-13)


@pytest.mark.parametrize(
    "alpha, beta, z",
    [
        (0.5, 0.5, -3.0),
        (0.5, 1.0, -1.0),
        (0.7, 0.7, -2.5),
        (0.9, 1.9, -4.0),
        (1.5, 1.5, -2.0),
        (0.6, 1.0, 1.0 + 2.0j),
    ],
)
def test_series_regime_against_extended_precision(alpha, beta, z):
    value = mittag_leffler(MLParams(alpha=alpha, beta=beta), z)
    assert value == pytest.approx(ml_oracle(alpha, beta, z), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize(
    "alpha, beta, z",
    [
        (0.5, 0.5, -8.0),
        (0.8, 1.0, -9.0),
        (0.4, 1.4, -7.5),
        (0.9, 1.0, -5.5),
        (0.75, 1.0, -5.5),
        (0.7, 1.0, -5.5),
    ],
)
def test_large_arguments_against_extended_precision(alpha, beta, z):
    expected = ml_oracle(alpha, beta, z)
    value, regime = evaluate_mittag_leffler(MLParams(alpha=alpha, beta=beta), z)
    assert regime != Regime.SERIES
    assert value == pytest.approx(expected, rel=1e-8, abs=1e-10)
    assert mittag_leffler_array(alpha, beta, np.array([z]))[0] == pytest.approx(expected, rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("x", [12.0, 40.0, 200.0])
def test_asymptotic_regime_half_order(x):
    # E_{1/2,1}(−x) = exp(x²) erfc(x)
    value, regime = evaluate_mittag_leffler(MLParams(alpha=0.5, beta=1.0), -x)
    assert regime == Regime.ASYMPTOTIC
    assert value.real == pytest.approx(float(scipy.special.erfcx(x)), rel=1e-12)
    assert abs(value.imag) < 1e-15


@pytest.mark.parametrize("alpha", [0.6, 0.7, 0.75, 0.8, 0.9])
def test_asymptotic_regime_is_never_divergent(alpha):
    # relaxation kernels E_{α,1}(−x) lie in (0, 1] and decrease in x
    x = np.linspace(5.0, 60.0, 221)
    values = mittag_leffler_real(alpha, 1.0, -x)
    assert np.all(values > 0)
    assert np.all(values <= 1)
    assert np.all(np.diff(values) < 0)


def test_real_wrapper_matches_complex():
    x = -np.linspace(0.0, 20.0, 11)
    np.testing.assert_array_equal(mittag_leffler_real(0.5, 0.5, x), mittag_leffler_array(0.5, 0.5, x).real)


@pytest.mark.parametrize("alpha, beta", [(0.0, 1.0), (2.5, 1.0), (0.5, 0.0), (0.5, -1.0)])
def test_parameter_ranges(alpha, beta):
    with pytest.raises(ValueError):
        mittag_leffler_array(alpha, beta, np.array([1.0]))


def test_decay_bound():
    report = ml_bound_check(0.5, np.logspace(-3, 1, 40), [1.0, 10.0, 100.0])
    assert report.max_ratio < 2
    small = ml_bound_check(0.5, [1e-12], [1.0])
    assert small.ratio_at_smallest_t == pytest.approx(1 / math.gamma(0.5), rel=1e-5)
