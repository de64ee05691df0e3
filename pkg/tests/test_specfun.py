import math
from itertools import product

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logvol.errors import CombinatorialLimitError, DomainError, UnsupportedOrderError
from logvol.specfun import (
    MAX_MOMENT_ORDER,
    digamma,
    integer_partitions,
    log_beta_central_moment,
    log_beta_cumulant,
    log_beta_moment,
    log_gamma,
    partition_shapes,
    polygamma,
    set_partition_count,
    trigamma,
)

EULER = 0.5772156649015329


def _mp_loggamma(z):
    with mpmath.workdps(30):
        return complex(mpmath.loggamma(mpmath.mpc(z.real, z.imag)))


def _mp_polygamma(k, z):
    with mpmath.workdps(30):
        return complex(mpmath.psi(k, mpmath.mpc(z.real, z.imag)))


class TestLogGamma:
    def test_trivial_values(self):
        assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-14)
        assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-14)
        assert log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-14)

    def test_complex_against_multiprecision(self):
        # Frozen from mpmath.loggamma(10+5j) at 30 digits.
        ref = complex(11.541857048436381, 11.472105247651001)
        val = log_gamma(10 + 5j)
        assert abs(val - _mp_loggamma(10 + 5j)) < 1e-12
        assert abs(val - ref) < 1e-11

    @pytest.mark.parametrize("z", [0.5, 0.75, 1.3, 7.0, 33.3, 1e3, 1e5, 1e6, 2 + 3j, 0.6 + 40j, 100 - 250j, 1e6 + 1e6j])
    def test_matches_multiprecision(self, z):
        ref = _mp_loggamma(complex(z))
        val = complex(log_gamma(z))
        assert abs(val - ref) <= 1e-13 * max(1.0, abs(ref))

    def test_exp_matches_gamma_moderate(self):
        # exp amplifies the absolute log error by |log Gamma|, so keep it moderate.
        for x in np.linspace(0.5, 30.0, 60):
            assert math.exp(log_gamma(float(x))) == pytest.approx(math.gamma(x), rel=1e-13)

    def test_branch_is_continuous_along_imaginary_line(self):
        t = np.linspace(0.0, 200.0, 2001)
        vals = log_gamma(2.0 + 1j * t)
        assert np.max(np.abs(np.diff(vals.imag))) < 1.0

    def test_array_input(self):
        z = np.array([1.0, 2.0, 3.0, 4.0])
        np.testing.assert_allclose(log_gamma(z), np.log([1.0, 1.0, 2.0, 6.0]), atol=1e-14)

    @pytest.mark.parametrize("z", [0.0, -1.0, -0.5 + 2j, float("nan"), float("inf")])
    def test_domain_errors(self, z):
        with pytest.raises(DomainError):
            log_gamma(z)


class TestPolygamma:
    def test_trivial_values(self):
        assert digamma(1.0) == pytest.approx(-EULER, rel=1e-14)
        assert trigamma(1.0) == pytest.approx(math.pi**2 / 6, rel=1e-14)
        assert polygamma(2, 1.0) == pytest.approx(-2 * 1.2020569031595942, rel=1e-13)

    def test_sandwich_example(self):
        v = polygamma(1, 10.0)
        assert 0.1 + 1 / 200 <= v <= 0.1 + 1 / 100

    @pytest.mark.parametrize("k", range(7))
    @pytest.mark.parametrize("z", [0.5, 1.7, 9.99, 12.5, 250.0, 3e4, 1 + 1j, 0.5 - 7j, 30 + 80j])
    def test_matches_multiprecision(self, k, z):
        ref = _mp_polygamma(k, complex(z))
        val = complex(polygamma(k, z))
        assert abs(val - ref) <= 1e-12 * max(1.0, abs(ref))

    @pytest.mark.parametrize("k", range(4))
    def test_recurrence(self, k):
        z = np.linspace(0.3, 60.0, 200)
        lhs = polygamma(k, z + 1) - polygamma(k, z)
        rhs = (-1) ** k * math.factorial(k) / z ** (k + 1)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.abs(rhs).max())

    def test_order_limit(self):
        with pytest.raises(UnsupportedOrderError):
            polygamma(7, 1.0)
        with pytest.raises(UnsupportedOrderError):
            polygamma(-1, 1.0)

    def test_domain(self):
        with pytest.raises(DomainError):
            polygamma(1, -0.1)
        with pytest.raises(DomainError):
            polygamma(0, 0.0 + 1j)

    @settings(max_examples=300, deadline=None)
    @given(k=st.integers(1, 3), z=st.floats(0.5, 1e4))
    def test_sandwich_property(self, k, z):
        # The bound applies to |psi_k| = (-1)^(k-1) psi_k on the positive axis.
        v = (-1) ** (k - 1) * polygamma(k, z)
        lo = math.factorial(k - 1) / z**k + math.factorial(k) / (2 * z ** (k + 1))
        hi = math.factorial(k - 1) / z**k + math.factorial(k) / z ** (k + 1)
        assert lo * (1 - 1e-12) <= v <= hi * (1 + 1e-12)

    @settings(max_examples=300, deadline=None)
    @given(k=st.integers(1, 6), x=st.floats(0.5, 1e3), y=st.floats(-1e3, 1e3))
    def test_complex_modulus_bound(self, k, x, y):
        c = math.factorial(k - 1) + 2 * math.factorial(k)
        assert abs(polygamma(k, complex(x, y))) <= c / x**k * (1 + 1e-12)


class TestPartitions:
    def test_bell_numbers(self):
        assert [set_partition_count(k) for k in range(1, 8)] == [1, 2, 5, 15, 52, 203, 877]
        assert set_partition_count(12) == 4213597

    def test_singleton_free_counts(self):
        assert [set_partition_count(k, singleton_free=True) for k in range(1, 8)] == [0, 1, 1, 4, 11, 41, 162]

    def test_brute_force_set_partitions(self):
        # Enumerate set partitions by restricted growth strings.
        def brute(k, singleton_free):
            count = 0
            for rgs in product(range(k), repeat=k):
                if rgs[0] != 0 or any(rgs[i] > max(rgs[:i]) + 1 for i in range(1, k)):
                    continue
                sizes = np.bincount(rgs)
                if singleton_free and np.any(sizes == 1):
                    continue
                count += 1
            return count

        for k in range(1, 7):
            assert set_partition_count(k) == brute(k, False)
            assert set_partition_count(k, True) == brute(k, True)

    def test_integer_partitions(self):
        assert sorted(integer_partitions(4)) == sorted([(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)])
        assert len(integer_partitions(12)) == 77

    def test_shapes_weights_sum_to_bell(self):
        for k in range(1, 10):
            assert sum(w for _, w in partition_shapes(k)) == set_partition_count(k)


def _mp_log_beta_moment(k, a, b):
    with mpmath.workdps(30):
        f = lambda u: mpmath.log(u) ** k * u ** (a - 1) * (1 - u) ** (b - 1)
        return float(mpmath.quad(f, [0, 0.5, 1]) / mpmath.beta(a, b))


class TestLogBetaMoments:
    def test_uniform(self):
        assert log_beta_moment(1, 1, 1).value == pytest.approx(-1.0, rel=1e-14)
        assert log_beta_moment(2, 1, 1).value == pytest.approx(2.0, rel=1e-14)
        assert log_beta_moment(5, 1, 1).value == pytest.approx(-120.0, rel=1e-13)
        assert log_beta_central_moment(2, 1, 1).value == pytest.approx(1.0, rel=1e-14)

    def test_moment_record(self):
        m = log_beta_central_moment(4, 3.0, 2.0)
        assert m.order == 4 and m.central

    @pytest.mark.parametrize("k", range(1, 7))
    @pytest.mark.parametrize("a,b", [(2.5, 1.5), (0.7, 3.0), (20.0, 4.5)])
    def test_raw_against_quadrature(self, k, a, b):
        ref = _mp_log_beta_moment(k, a, b)
        assert log_beta_moment(k, a, b).value == pytest.approx(ref, rel=1e-11)

    @pytest.mark.parametrize("k", range(2, 7))
    @pytest.mark.parametrize("a,b", [(2.5, 1.5), (50.0, 50.0), (0.6, 0.9)])
    def test_central_equals_binomial_expansion(self, k, a, b):
        mu = log_beta_moment(1, a, b).value
        raw = [1.0] + [log_beta_moment(j, a, b).value for j in range(1, k + 1)]
        ref = sum(math.comb(k, j) * raw[j] * (-mu) ** (k - j) for j in range(k + 1))
        scale = max(1.0, max(abs(raw[j] * mu ** (k - j)) for j in range(k + 1)))
        assert abs(log_beta_central_moment(k, a, b).value - ref) <= 1e-12 * scale

    def test_variance_is_trigamma_difference(self):
        a, b = 3.3, 2.2
        expect = float(polygamma(1, a) - polygamma(1, a + b))
        assert log_beta_central_moment(2, a, b).value == pytest.approx(expect, rel=1e-14)
        assert log_beta_cumulant(2, a, b) == pytest.approx(expect, rel=1e-14)

    def test_fourth_moment_dominates_third_absolute(self):
        for a, b in [(1, 1), (5, 3), (100, 2), (0.5, 0.5)]:
            m4 = log_beta_central_moment(4, a, b).value
            with mpmath.workdps(25):
                mu = log_beta_moment(1, a, b).value
                f = lambda u: abs(mpmath.log(u) - mu) ** 3 * u ** (a - 1) * (1 - u) ** (b - 1)
                m3abs = float(mpmath.quad(f, [0, math.exp(mu), 1]) / mpmath.beta(a, b))
            assert m4**0.75 >= m3abs

    def test_mc_third_moment(self):
        rng = np.random.default_rng(7)
        x = np.log(rng.beta(2.5, 1.5, size=10**6)) ** 3
        sd = x.std() / math.sqrt(x.size)
        assert abs(x.mean() - log_beta_moment(3, 2.5, 1.5).value) < 4 * sd

    @settings(max_examples=50, deadline=None)
    @given(a=st.floats(0.2, 200.0), b=st.floats(0.2, 200.0))
    def test_variance_positive(self, a, b):
        assert log_beta_central_moment(2, a, b).value > 0

    def test_limits(self):
        assert log_beta_moment(MAX_MOMENT_ORDER, 2.0, 2.0).value > 0
        with pytest.raises(CombinatorialLimitError):
            log_beta_moment(MAX_MOMENT_ORDER + 1, 2.0, 2.0)
        with pytest.raises(DomainError):
            log_beta_moment(2, -1.0, 2.0)
        with pytest.raises(DomainError):
            log_beta_moment(0, 1.0, 2.0)
