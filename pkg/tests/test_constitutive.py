import math

import numpy as np
import pytest
from scipy.integrate import quad

from shearband.constitutive import (
    AgingLaw,
    FrictionLaw,
    StiffnessLaw,
    aging_rhs,
    dissipation_R,
    mu,
    negative_age_clamps,
    plastic_rate_Pi,
    reset_negative_age_clamps,
    theta_f,
    stiffness,
)

FR = FrictionLaw()
AG = AgingLaw()


class TestYieldStress:
    def test_rest_value(self):
        assert mu(0.0, 0.0, FR) == pytest.approx(1.0, abs=1e-15)

    def test_unit_rate_log(self):
        # ln(e) = 1 exactly for the reference law
        assert mu(math.e - 1.0, 0.0, FR) == pytest.approx(2.0, rel=1e-14)

    def test_combined(self):
        expected = 1.0 + math.log(2.0) + math.log(41.0)
        assert mu(1.0, 10.0, FR) == pytest.approx(expected, rel=1e-14)

    def test_even_in_rate(self, rng):
        rates = rng.uniform(0.0, 20.0, 50)
        ages = rng.uniform(0.0, 10.0, 50)
        assert np.allclose(mu(rates, ages, FR), mu(-rates, ages, FR))

    def test_lower_bound_and_monotone(self, rng):
        rates = rng.uniform(-50.0, 50.0, 200)
        ages = rng.uniform(0.0, 10.0, 200)
        vals = mu(rates, ages, FR)
        assert np.all(vals >= FR.mu0)
        r = np.sort(np.abs(rates))
        assert np.all(np.diff(mu(r, 3.0, FR)) >= 0.0)
        a = np.sort(ages)
        assert np.all(np.diff(mu(1.0, a, FR)) >= 0.0)


class TestDissipation:
    def test_zero_at_rest(self):
        assert dissipation_R(0.0, 5.0, FR) == 0.0

    def test_unit_rate_closed_form(self):
        # mu0*1 + int_0^1 ln(1+s) ds = 1 + (2 ln 2 - 1)
        assert dissipation_R(1.0, 0.0, FR) == pytest.approx(2.0 * math.log(2.0), rel=1e-14)

    def test_even(self):
        assert dissipation_R(-1.0, 0.0, FR) == dissipation_R(1.0, 0.0, FR)

    def test_quadrature_oracle(self, rng):
        # independent route: R(p, age) = integral of mu(s, age) ds
        for p, age in rng.uniform(0.1, 8.0, (10, 2)):
            ref, _ = quad(lambda s: mu(s, age, FR), 0.0, p)
            assert dissipation_R(p, age, FR) == pytest.approx(ref, rel=1e-10)

    def test_rate_derivative_is_yield_stress(self, rng):
        # central differences of R against mu * sign, away from the kink
        for p, age in rng.uniform(0.2, 6.0, (20, 2)):
            h = 1e-6 * (1.0 + p)
            fd = (dissipation_R(p + h, age, FR) - dissipation_R(p - h, age, FR)) / (2 * h)
            assert fd == pytest.approx(mu(p, age, FR), rel=1e-6)
            fd_neg = (dissipation_R(-p + h, age, FR) - dissipation_R(-p - h, age, FR)) / (2 * h)
            assert fd_neg == pytest.approx(-mu(p, age, FR), rel=1e-6)

    def test_convex_in_rate(self, rng):
        ps = np.linspace(-5.0, 5.0, 201)
        vals = dissipation_R(ps, 2.0, FR)
        assert np.all(np.diff(vals, 2) >= -1e-12)


class TestPlasticRate:
    def test_at_threshold(self):
        assert plastic_rate_Pi(1.0, 0.0, FR) == 0.0

    def test_unit_inversion(self):
        assert plastic_rate_Pi(1.0 + math.log(2.0), 0.0, FR) == pytest.approx(1.0, rel=1e-14)

    def test_aged_inversion(self):
        sigma = 1.0 + math.log(41.0) + math.log(3.0)
        assert plastic_rate_Pi(sigma, 10.0, FR) == pytest.approx(2.0, rel=1e-13)

    def test_left_inverse_identity(self, rng):
        ages = rng.uniform(0.0, 10.0, 100)
        sigmas = FR.mu0 + FR.state_term(ages) + rng.uniform(1e-3, 5.0, 100)
        rates = plastic_rate_Pi(sigmas, ages, FR)
        back = FR.mu0 + FR.rate_term(rates) + FR.state_term(ages)
        assert np.max(np.abs(back - sigmas)) < 1e-10

    def test_monotone_in_stress(self, rng):
        ages = rng.uniform(0.0, 10.0, 50)
        s1 = rng.uniform(-6.0, 6.0, 50)
        s2 = s1 + rng.uniform(0.0, 3.0, 50)
        assert np.all(plastic_rate_Pi(s2, ages, FR) >= plastic_rate_Pi(s1, ages, FR))

    def test_odd_in_stress(self, rng):
        s = rng.uniform(0.0, 6.0, 50)
        a = rng.uniform(0.0, 10.0, 50)
        assert np.allclose(plastic_rate_Pi(-s, a, FR), -plastic_rate_Pi(s, a, FR))

    def test_custom_law_newton_inversion(self):
        # quadratic rate term: closed form available as an oracle
        law = FrictionLaw(rate_fn=lambda p: np.abs(p) + 0.5 * p**2)
        y = 1.7
        rate = plastic_rate_Pi(law.mu0 + law.state_term(2.0) + y, 2.0, law)
        assert rate == pytest.approx(-1.0 + math.sqrt(1.0 + 2.0 * y), rel=1e-10)


class TestAging:
    def test_saturated(self):
        assert aging_rhs(10.0, 0.0, AG) == 0.0

    def test_fresh(self):
        assert aging_rhs(0.0, 5.0, AG) == pytest.approx(1.0)

    def test_balance(self):
        assert aging_rhs(1.0, 0.09, AG) == pytest.approx(0.0, abs=1e-14)

    def test_equilibrium_age_values(self):
        assert theta_f(0.0, AG) == 10.0
        assert theta_f(0.09, AG) == pytest.approx(1.0, rel=1e-14)
        assert theta_f(1.4923, AG) == pytest.approx(10.0 / 150.23, rel=1e-12)

    def test_equilibrium_consistency(self, rng):
        rates = rng.uniform(0.0, 30.0, 100)
        res = aging_rhs(theta_f(rates, AG), rates, AG)
        assert np.max(np.abs(res)) < 1e-10

    def test_custom_law_bisection(self):
        # nonlinear healing with a known balance point
        law = AgingLaw(
            theta_inf=10.0,
            healing_fn=lambda t: (1.0 - t / 10.0) ** 2,
            weakening_fn=lambda t: t**2,
        )
        root = theta_f(1.0, law)
        assert aging_rhs(root, 1.0, law) == pytest.approx(0.0, abs=1e-11)
        assert not law.is_default_form

    def test_primitives(self):
        assert AG.healing_primitive(10.0) == pytest.approx(5.0)
        assert AG.weakening_primitive(2.0) == pytest.approx(20.0)


class TestStiffness:
    def test_constant_mode(self):
        law = StiffnessLaw(mode="constant", C0=1.0)
        C, dC = stiffness(0.37, law)
        assert C == 1.0 and dC == 0.0

    def test_quadratic_mode(self):
        law = StiffnessLaw(mode="damage-modulated", C0=1.0, ell_ratio=1.0)
        assert stiffness(1.0, law) == pytest.approx((2.0, 2.0))
        assert stiffness(0.0, law) == pytest.approx((1.0, 0.0))

    def test_positive_lower_bound(self):
        law = StiffnessLaw(mode="damage-modulated", C0=2.0, ell_ratio=0.5)
        assert law.minimum() == pytest.approx(0.5)
        alphas = np.linspace(0.0, 1.0, 11)
        C, _ = law(alphas)
        assert np.all(C >= law.minimum())


def test_negative_age_clamped_and_counted():
    reset_negative_age_clamps()
    v = mu(1.0, -0.5, FR)
    assert v == pytest.approx(mu(1.0, 0.0, FR))
    assert negative_age_clamps() == 1
    base = negative_age_clamps()
    out = aging_rhs(np.array([-1.0, 2.0, -3.0]), 0.0, AG)
    assert np.allclose(out, aging_rhs(np.array([0.0, 2.0, 0.0]), 0.0, AG))
    assert negative_age_clamps() > base
    reset_negative_age_clamps()
    assert negative_age_clamps() == 0


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        FrictionLaw(mu0=0.0)
    with pytest.raises(ValueError):
        FrictionLaw(h_ref=-1.0)
    with pytest.raises(ValueError):
        AgingLaw(theta_inf=0.0)
    with pytest.raises(ValueError):
        StiffnessLaw(mode="nonsense")
