import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import legendre as npleg
from scipy import special as sp

from spherefield.errors import BudgetError, DomainError, FitError
from spherefield.geometry import SpherePoint
from spherefield.special import (
    POLYLOG_CROSSOVER, AccuracyPolicy, b_ln, harmonic_number, incomplete_beta, legendre_batch,
    legendre_deficit_series, legendre_p, legendre_power_deficit, legendre_power_sum, legendre_series,
    legendre_series_sum, mehler_dirichlet_p, normalized_alf, polylog, polylog_expansion, riemann_zeta,
    spherical_harmonic, sum_poly_asymptotic_check, sum_poly_case, zeta_continued,
)

# Li_s(exp(i psi)) from mpmath at 30 digits, frozen.
POLYLOG_REFERENCE = {
    (2.5, 0.1): complex(1.295944559632375, 0.20842781931443702),
    (3.0, 0.05): complex(1.1964372161160821, 0.08029362460058437),
    (2.0, 1.0): complex(0.3241377400533298, 1.0139591323607684),
    (1.5, 2.5): complex(-0.6862798298025512, 0.3827852705321737),
}
ZETA_REFERENCE = {2.5: 1.341487257250917, 3.7: 1.1062882414646793}


class TestLegendre:
    @pytest.mark.parametrize("ell", [0, 1, 5, 40, 300])
    def test_value_at_one(self, ell):
        assert legendre_p(ell, 1.0) == pytest.approx(1.0, abs=1e-13)

    def test_examples(self):
        assert legendre_p(1, 0.3) == pytest.approx(0.3)
        assert legendre_p(2, 0.5) == pytest.approx(-0.125)
        np.testing.assert_allclose(legendre_batch(2, 1.0), [1, 1, 1])
        np.testing.assert_allclose(legendre_batch(2, 0.5), [1, 0.5, -0.125])

    def test_against_numpy_legval(self):
        t = np.linspace(-1, 1, 41)
        for ell in (3, 17, 50):
            c = np.zeros(ell + 1)
            c[ell] = 1
            np.testing.assert_allclose(legendre_p(ell, t), npleg.legval(t, c), atol=1e-12)

    def test_series_and_deficit_series(self):
        rng = np.random.default_rng(1)
        c = rng.standard_normal(60)
        theta = np.array([1e-6, 0.01, 0.7, 2.9])
        t = np.cos(theta)
        np.testing.assert_allclose(legendre_series(c, t), npleg.legval(t, c), atol=1e-11)
        direct = np.sum(c[1:, None] * (1 - legendre_batch(59, t)[1:]), axis=0)
        np.testing.assert_allclose(legendre_deficit_series(c, theta), direct, atol=1e-11)

    def test_deficit_series_keeps_relative_accuracy_at_tiny_angles(self):
        # 1 - P_1(cos theta) = 2 sin^2(theta/2), which cancels catastrophically if formed directly
        c = np.array([0.0, 1.0])
        theta = 1e-9
        assert legendre_deficit_series(c, theta) == pytest.approx(2 * math.sin(theta / 2) ** 2, rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            legendre_p(3, 1.5)
        with pytest.raises(DomainError):
            legendre_p(-1, 0.2)

    @given(st.integers(0, 2000), st.floats(-1, 1))
    def test_bounded_by_one(self, ell, t):
        assert abs(legendre_p(ell, t)) <= 1 + 1e-12


class TestSphericalHarmonics:
    def test_north_pole_examples(self):
        north = SpherePoint.north_pole()
        assert spherical_harmonic(3, 0, north) == pytest.approx(math.sqrt(7 / (4 * math.pi)))
        assert spherical_harmonic(3, 2, north) == pytest.approx(0.0, abs=1e-15)

    def test_against_scipy(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            theta, phi = rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)
            ell = int(rng.integers(0, 30))
            m = int(rng.integers(-ell, ell + 1))
            ref = sp.sph_harm_y(ell, m, theta, phi)
            assert spherical_harmonic(ell, m, SpherePoint.from_angles(theta, phi)) == pytest.approx(ref, abs=1e-12)

    def test_alf_table_against_scipy(self):
        theta = np.array([0.2, 1.3, 2.8])
        lam = normalized_alf(12, theta)
        for ell in range(13):
            for m in range(ell + 1):
                np.testing.assert_allclose(lam[ell, m], sp.sph_harm_y(ell, m, theta, 0.0).real, atol=1e-13)

    @settings(max_examples=40)
    @given(st.integers(0, 40), st.floats(0, math.pi), st.floats(0, 2 * math.pi), st.floats(0, math.pi),
           st.floats(0, 2 * math.pi))
    def test_addition_theorem(self, ell, t1, p1, t2, p2):
        x, y = SpherePoint.from_angles(t1, p1), SpherePoint.from_angles(t2, p2)
        lhs = sum(spherical_harmonic(ell, m, x).conjugate() * spherical_harmonic(ell, m, y)
                  for m in range(-ell, ell + 1))
        dot = float(np.clip(x.unit_vector @ y.unit_vector, -1, 1))
        assert lhs.real == pytest.approx((2 * ell + 1) / (4 * math.pi) * legendre_p(ell, dot), abs=1e-10)
        assert abs(lhs.imag) < 1e-10


class TestMehlerDirichlet:
    def test_examples(self):
        assert mehler_dirichlet_p(10, 0.5) == pytest.approx(legendre_p(10, math.cos(0.5)), abs=1e-8)
        assert mehler_dirichlet_p(1, 1.0) == pytest.approx(math.cos(1.0), abs=1e-8)
        assert mehler_dirichlet_p(25, 1e-9) == pytest.approx(1.0, abs=1e-8)

    @given(st.integers(0, 200), st.floats(0.01, 3.1))
    def test_matches_recurrence(self, ell, theta):
        assert mehler_dirichlet_p(ell, theta) == pytest.approx(legendre_p(ell, math.cos(theta)), abs=1e-8)


class TestZetaFamily:
    def test_classical_values(self):
        assert riemann_zeta(2) == pytest.approx(math.pi ** 2 / 6, rel=1e-14)
        assert riemann_zeta(4) == pytest.approx(math.pi ** 4 / 90, rel=1e-14)

    def test_brute_force_with_tail(self):
        s, n = 2.5, 10 ** 7
        head = np.sum(np.arange(1, n + 1, dtype=float) ** (-s))
        tail = n ** (1 - s) / (s - 1) - 0.5 * n ** (-s) + s / 12 * n ** (-s - 1)
        assert riemann_zeta(s) == pytest.approx(head + tail, abs=1e-10)

    @pytest.mark.parametrize("s", sorted(ZETA_REFERENCE))
    def test_frozen_reference(self, s):
        assert riemann_zeta(s) == pytest.approx(ZETA_REFERENCE[s], rel=1e-13)

    @pytest.mark.parametrize("s", [-3.5, -2.0, -1.5, -0.25, 0.0, 0.5, 1.5])
    def test_continuation_against_mpmath(self, s):
        assert zeta_continued(s) == pytest.approx(float(mpmath.zeta(s)), rel=1e-12, abs=1e-15)

    def test_domain(self):
        with pytest.raises(DomainError):
            riemann_zeta(1.0)
        with pytest.raises(DomainError):
            zeta_continued(1.0)

    def test_harmonic_numbers(self):
        assert harmonic_number(0) == 0
        assert harmonic_number(1) == 1
        assert harmonic_number(3) == pytest.approx(11 / 6)

    def test_incomplete_beta(self):
        assert incomplete_beta(1.0, 2.5, 1.5) == pytest.approx(sp.beta(2.5, 1.5))
        assert incomplete_beta(1.0, 1, 1) == pytest.approx(1.0)
        assert incomplete_beta(0.5, 1, 1) == pytest.approx(0.5)

    def test_b_ln(self):
        assert b_ln(1, 1) == pytest.approx(-1.0, abs=1e-12)
        for a, b in ((0.5, 0.5), (2.5, 1.5), (1.5, 0.5)):
            ref = sp.beta(a, b) * (sp.digamma(a) - sp.digamma(a + b))
            assert b_ln(a, b) == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("gamma", [1.5, 2.0, 3.0])
    @pytest.mark.parametrize("theta", [0.1, 0.5])
    def test_change_of_variable_integral(self, gamma, theta):
        # tanh-sinh quadrature copes with the inverse-square-root endpoint directly
        with mpmath.workdps(25):
            lhs = mpmath.quad(lambda p: mpmath.sin(p / 2) ** (gamma - 1) * mpmath.cos(p / 2)
                              / mpmath.sqrt(mpmath.cos(p) - mpmath.cos(theta)), [0, theta])
        rhs = math.sqrt(2) / 2 * incomplete_beta(1.0, gamma / 2, 0.5) * math.sin(theta / 2) ** (gamma - 1)
        assert float(lhs) == pytest.approx(rhs, abs=1e-8)


class TestPolylog:
    def test_limits(self):
        assert polylog(2, 0.0) == pytest.approx(math.pi ** 2 / 6)
        assert polylog(2, 1e-12) == pytest.approx(math.pi ** 2 / 6, abs=1e-9)
        assert polylog(2, math.pi) == pytest.approx(-math.pi ** 2 / 12, abs=1e-12)

    @pytest.mark.parametrize("key", sorted(POLYLOG_REFERENCE))
    def test_frozen_reference(self, key):
        s, psi = key
        assert polylog(s, psi) == pytest.approx(POLYLOG_REFERENCE[key], abs=1e-12)

    @pytest.mark.parametrize("s", [1.5, 2.0, 2.5, 3.0, 4.2])
    def test_branches_agree_near_crossover(self, s):
        psi = np.linspace(POLYLOG_CROSSOVER - 0.1, POLYLOG_CROSSOVER + 0.3, 9)
        direct = np.array([polylog(s, p) for p in psi])
        np.testing.assert_allclose(polylog_expansion(s, psi), direct, atol=1e-12)

    @pytest.mark.parametrize("s", [1.5, 2.0, 3.0])
    @pytest.mark.parametrize("psi", [0.1, 0.5, 1.0])
    def test_cosine_series_identity(self, s, psi):
        n = 2_000_000
        ell = np.arange(1, n + 1, dtype=float)
        partial = np.sum(ell ** (-s) * np.cos((ell + 0.5) * psi))
        resummed = (np.exp(0.5j * psi) * polylog(s, psi)).real
        assert partial == pytest.approx(resummed, abs=5 * n ** (-s) / math.sin(psi / 2) + 1e-13)

    @given(st.sampled_from([1.5, 2.0, 2.5, 3.0, 5.0]), st.floats(1e-3, 3.1))
    def test_conjugate_symmetry_and_period(self, s, psi):
        v = polylog(s, psi)
        assert polylog(s, -psi) == pytest.approx(v.conjugate(), abs=1e-12)
        assert polylog(s, psi + 2 * math.pi) == pytest.approx(v, abs=1e-11)

    def test_domain(self):
        with pytest.raises(DomainError):
            polylog(1.0, 0.3)
        with pytest.raises(DomainError):
            polylog_expansion(2.5, 0.0)


def hurwitz_deficit(s, theta, n=100_000):
    """``sum_{l<=n} l**(-s) (1 - P_l) + zeta(s, n+1)``: exact up to the tiny oscillating tail of ``sum l**(-s) P_l``."""
    c = np.zeros(n + 1)
    c[1:] = np.arange(1, n + 1, dtype=float) ** (-s)
    return float(legendre_deficit_series(c, theta)) + float(mpmath.zeta(s, n + 1))


class TestResummedSeries:
    @pytest.mark.parametrize("s", [2.5, 3.0, 3.5])
    @pytest.mark.parametrize("theta", [0.01, 0.3, 2.0])
    def test_against_hurwitz_oracle(self, s, theta):
        assert legendre_power_deficit(s, theta).value == pytest.approx(hurwitz_deficit(s, theta), abs=1e-8)

    def test_against_direct_partial_sum(self):
        direct = legendre_series_sum(3.5, 0.5)
        resummed = legendre_power_sum(3.5, 0.5)
        assert resummed.value == pytest.approx(direct.value, abs=direct.tail_bound + 1e-12)

    def test_examples(self):
        assert abs(legendre_power_sum(2.0, math.pi).value) <= riemann_zeta(2.0)
        assert legendre_power_sum(3.0, 1e-8).value == pytest.approx(riemann_zeta(3.0), abs=1e-12)
        assert legendre_power_deficit(3.0, 0.0).value == 0.0

    def test_direct_sum_budget(self):
        with pytest.raises(BudgetError):
            legendre_series_sum(1.5, 0.1)
        loose = legendre_series_sum(1.5, 0.5, AccuracyPolicy(abs_tol=1e-2))
        assert loose.tail_bound <= 1e-2

    @given(st.sampled_from([1.5, 2.0, 2.5, 3.0, 4.0, 5.5]), st.floats(1e-5, math.pi))
    def test_deficit_nonnegative(self, s, theta):
        d = legendre_power_deficit(s, theta)
        assert d.value >= -d.tail_bound - 1e-13
        assert d.value <= 2 * riemann_zeta(s) + d.tail_bound

    def test_deterministic(self):
        a = legendre_power_deficit(2.5, 0.013).value
        b = legendre_power_deficit(2.5, 0.013).value
        assert a == b


class TestSumPolyOrders:
    grid = np.geomspace(1e-4, 1e-2, 12)

    def test_cases(self):
        assert sum_poly_case(2.0) == ("even", 1.0)
        assert sum_poly_case(2.5) == ("less3", 1.5)
        assert sum_poly_case(3.0) == ("log", 2.0)
        assert sum_poly_case(5.0) == ("odd", 2.0)
        assert sum_poly_case(4.5) == ("great3", 2.0)

    def test_even_coefficient(self):
        rep = sum_poly_asymptotic_check(2.0, self.grid)
        small = rep.theta <= 1e-3
        assert np.all(np.abs(rep.ratio[small] - 2) < 0.02)

    @pytest.mark.parametrize("s,slope", [(2.5, 1.5), (5.0, 2.0)])
    def test_slopes(self, s, slope):
        assert sum_poly_asymptotic_check(s, self.grid).fitted_slope == pytest.approx(slope, abs=0.05)

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            sum_poly_asymptotic_check(2.0, self.grid[:5])
        with pytest.raises(DomainError):
            sum_poly_asymptotic_check(2.0, np.linspace(0.05, 0.09, 10))

    def test_residual_gate(self):
        with pytest.raises(FitError):
            sum_poly_asymptotic_check(2.5, self.grid, max_residual=1e-12)
