"""Closed forms against mpmath-computed references (frozen below) and exact identities."""

import math

import numpy as np
import pytest
from scipy import integrate, special

from hitlab import closedform as C

LOG3 = math.log(3.0)
SQ = math.sqrt(2.0 / math.pi)

# mpmath (30 digits) references
PHI_HALF = 0.967824194666955190459921722225
PHI_FOUR = 3.96805437799855697527142142974
PHI_PRIME_0 = 0.0615407175847625787682435499734
PHI_PRIME_1 = 0.324753643535128040066220692943
PHI_SECOND_0 = 0.315672379215649210615283019239
I_PLUS = {0: 0.450693855665945154302377381539, 0.5: 0.281331161611955760522069219874,
          1: 0.219141445859146343336453994461, 2: 0.196006797249819621908927678718,
          3: 0.242551483063384055224565369624, 4: 0.372005097937364716431695759039}
I_MINUS = {0: 0.549306144334054845697622618461, 0.5: 0.319349188659750494768655061543,
           1: 0.219141445859146343336453994461, 2: 0.137326536083513711424405654615,
           3: 0.109570722929573171668226997231, 4: 0.102994902062635283568304240961}
H_VALUES = {0.3: 0.494622269731322149313056562466, 1.0: 0.132017426919286983676279825827,
            2.0: 0.0123504503050971056972718499527}
H_CDF_HALF = 0.830830520631224964219045084817
COND = {  # (y, t): (density, cdf)
    (0.5, 1.0): (0.776869839851570171066719529236, 0.780829679403067214111750878154),
    (-0.7, 0.25): (0.0114113457077977771147917969196, 0.00156011869840526513899389813151),
    (0.2, 4.0): (0.762433216387718264018622997271, 0.891021025468202769924674405829),
    (-2.0, 4.0): (0.0000901880548839660514944400721257, 0.00000959675181113797126592815269887),
}


class TestGaussMoment:
    def test_trivial_orders(self):
        assert C.gauss_abs_moment(0) == pytest.approx(1.0, abs=1e-15)
        assert C.gauss_abs_moment(2) == pytest.approx(1.0, abs=1e-15)

    def test_first_order(self):
        assert C.gauss_abs_moment(1) == pytest.approx(0.797884560802865, abs=1e-15)

    def test_fractional_and_large(self):
        assert C.gauss_abs_moment(0.5) == pytest.approx(0.822178958662458579866957516408, rel=1e-14)
        assert C.gauss_abs_moment(7) == pytest.approx(38.2984589185375344642254512492, rel=1e-13)
        assert math.isfinite(C.gauss_abs_moment(100))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            C.gauss_abs_moment(-0.1)


class TestPhi:
    @pytest.mark.parametrize("m, value", [
        (0, 2 - LOG3), (1, LOG3), (2, 8 / 3 - LOG3), (3, 4 / 3 + LOG3), (-1, LOG3),
        (0.5, PHI_HALF), (4, PHI_FOUR),
    ])
    def test_values(self, m, value):
        assert C.phi(m) == pytest.approx(value, abs=1e-12)

    def test_derivatives(self):
        assert C.phi_prime(0) == pytest.approx(PHI_PRIME_0, abs=1e-12)
        assert C.phi_prime(1) == pytest.approx(PHI_PRIME_1, abs=1e-12)
        assert C.phi_second(0) == pytest.approx(PHI_SECOND_0, abs=1e-12)

    def test_phi_prime_zero_matches_delta(self):
        assert C.phi_prime(0) == pytest.approx(C.delta_fn(2.0), abs=1e-12)

    def test_error_estimate_reported(self):
        value, err = C.phi_with_error(1.0)
        assert value == pytest.approx(LOG3, abs=1e-13)
        assert 0 <= err < 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            C.phi(-2.0)

    def test_convex_increasing_on_grid(self):
        for m in np.arange(0.0, 10.01, 0.5):
            assert C.phi_prime(m) > 0
            assert C.phi_second(m) > 0


class TestMoments:
    @pytest.mark.parametrize("m", sorted(I_PLUS))
    def test_against_references(self, m):
        assert C.moment_i_plus(m) == pytest.approx(I_PLUS[m], rel=1e-12)
        assert C.moment_i_minus(m) == pytest.approx(I_MINUS[m], rel=1e-12)

    def test_centering(self):
        assert abs(C.moment_i(1)) < 1e-14

    def test_third_order(self):
        assert C.moment_i(3) == pytest.approx(SQ / 6, abs=1e-13)

    def test_sign_structure(self):
        assert C.moment_i(0) < 0 and C.moment_i(0.5) < 0
        assert C.moment_i(2) > 0 and C.moment_i(3) > 0

    def test_minus_zero_is_half_log3(self):
        assert C.moment_i_minus(0) == pytest.approx(LOG3 / 2, abs=1e-15)


class TestDensity:
    def test_origin_both_branches(self):
        assert C.alpha_density(0.0) == pytest.approx(SQ * LOG3, abs=1e-14)
        assert C.alpha_density(1e-12) == pytest.approx(C.alpha_density(-1e-12), abs=1e-10)

    def test_negative_branch(self):
        assert C.alpha_density(-1.0) == pytest.approx(SQ * LOG3 * math.exp(-2.0), abs=1e-15)

    @pytest.mark.parametrize("y", sorted(H_VALUES))
    def test_positive_branch(self, y):
        assert C.alpha_density(y) == pytest.approx(H_VALUES[y], rel=1e-11)

    def test_vanishes_beyond_two_sigma_scale(self):
        assert C.alpha_density(6.0) < 1e-7

    def test_cdf(self):
        assert C.alpha_cdf(0.0) == pytest.approx(LOG3 / 2, abs=1e-12)
        assert C.alpha_cdf(0.5) == pytest.approx(H_CDF_HALF, abs=1e-10)
        cdf = C.AlphaCDF()
        ys = np.array([-3.0, -0.4, 0.0, 0.5, 1.7, 9.0])
        expect = [C.alpha_cdf(y) for y in ys]
        assert np.allclose(cdf(ys), expect, atol=1e-9)

    def test_hitting_time_density_normalized(self):
        val, _ = integrate.quad(C.hitting_time_density, 0, np.inf, limit=200)
        assert val == pytest.approx(1.0, abs=1e-8)


class TestConditional:
    @pytest.mark.parametrize("key", sorted(COND))
    def test_references(self, key):
        y, t = key
        dens, cdf = COND[key]
        assert C.alpha_density_conditional(y, t) == pytest.approx(dens, rel=1e-11)
        assert C.alpha_cdf_conditional(y, t) == pytest.approx(cdf, rel=1e-9, abs=1e-14)

    def test_edge_of_support(self):
        t = 2.0
        assert C.alpha_density_conditional(1 / math.sqrt(t), t) == 0.0
        assert C.alpha_density_conditional(1.0, t) == 0.0
        assert C.alpha_cdf_conditional(5.0, t) == pytest.approx(1.0, abs=1e-12)

    def test_small_t_is_finite(self):
        v = C.alpha_density_conditional(0.3, 1e-3)
        assert math.isfinite(v) and v > 0
        assert math.isfinite(C.alpha_cdf_conditional(-0.5, 1e-3))

    def test_rejects_nonpositive_t(self):
        with pytest.raises(ValueError):
            C.alpha_density_conditional(0.1, 0.0)


class TestLocalTime:
    def test_examples(self):
        assert C.local_time_laplace(1.0, b=0.5) == pytest.approx(math.exp(-1) - math.exp(-2), abs=1e-15)
        assert C.local_time_laplace(1.0, x=0.0) == pytest.approx(math.exp(-1) - math.exp(-3), abs=1e-15)

    def test_small_mu_limit(self):
        assert C.local_time_laplace(1e-7, b=0.3) == pytest.approx(2 * 0.7, rel=1e-6)

    def test_invalid(self):
        with pytest.raises(ValueError):
            C.local_time_laplace(0.0, b=0.5)
        with pytest.raises(ValueError):
            C.local_time_laplace(1.0, b=1.5)
        with pytest.raises(ValueError):
            C.local_time_laplace(1.0, b=0.5, x=0.2)

    def test_i_mu_example(self):
        expect = math.exp(-1) - (math.exp(-1) - math.exp(-3)) / 2
        assert C.i_mu_monomial("plus", 0, 1.0) == pytest.approx(expect, abs=1e-12)

    def test_i_mu_large_mu(self):
        assert C.i_mu_monomial("minus", 1, 200.0) < 1e-80

    @pytest.mark.parametrize("side, oracle", [("plus", C.moment_i_plus), ("minus", C.moment_i_minus)])
    def test_mu_integral_reconstructs_moment(self, side, oracle):
        m = 1.0
        norm = 2 ** (m / 2) * math.gamma(1 + m / 2)
        val, _ = integrate.quad(lambda mu: mu ** (1 + m) * C.i_mu_monomial(side, m, mu), 0, np.inf,
                                epsabs=1e-12, epsrel=1e-11, limit=200)
        assert val / norm == pytest.approx(oracle(m), abs=1e-8)


class TestSmallFormulas:
    def test_max_crossing(self):
        assert C.max_conditional_crossing(1.0, 1.0) == 0.0
        assert C.max_conditional_crossing(1.0, 2.0) == 0.0
        assert C.max_conditional_crossing(2.0, 0.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)
        assert C.max_conditional_crossing(0.5, -50.0) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            C.max_conditional_crossing(0.0, 0.0)

    def test_inverse_gaussian(self):
        assert C.inverse_gaussian_integral(0.0, 2.0) == 0.5
        val, _ = integrate.quad(lambda s: math.exp(-1 / (2 * s) - s / 2) / math.sqrt(2 * math.pi * s),
                                0, np.inf, epsabs=1e-13)
        assert C.inverse_gaussian_integral(1.0, 1.0) == pytest.approx(val, abs=1e-10)
        assert C.inverse_gaussian_integral(-0.7, 1.3) == C.inverse_gaussian_integral(0.7, 1.3)

    def test_lab(self):
        assert C.lab_integral(2.0, 2.0, 1.0) == 0.0
        assert C.lab_integral(1.0, 3.0, 1.0) == pytest.approx(LOG3, abs=1e-15)
        assert C.lab_integral(1.0, 5.0, 2.0) == -C.lab_integral(5.0, 1.0, 2.0)

    def test_bessel_exp_moment(self):
        assert C.bessel_exp_moment(1.0) == pytest.approx(math.sqrt(2) / (math.gamma(1.5) * 4), abs=1e-15)
        assert C.bessel_exp_moment(1e-9) == pytest.approx(2 * SQ, rel=1e-8)
        # chi(3) density oracle
        val, _ = integrate.quad(lambda r: r * math.exp(-r * r / 2) * SQ * r * r * math.exp(-r * r / 2),
                                0, np.inf)
        assert C.bessel_exp_moment(1.0) == pytest.approx(val, abs=1e-12)

    def test_ray_knight_mean(self):
        assert C.ray_knight_mean(0.0, 1.0) == 0.0
        assert C.ray_knight_mean(1.0, 1.0) == pytest.approx(1 - math.exp(-2), abs=1e-15)
        assert C.ray_knight_mean(0.4, 1e-8) == pytest.approx(0.8, rel=1e-7)


class TestDilog:
    @pytest.mark.parametrize("x, value", [
        (-0.5, -0.448414206923646202443064405916),
        (0.9, 1.2997147230049587819795713031),
        (-1 / 3, -0.309033126487808472317033009393),
    ])
    def test_references(self, x, value):
        assert C.dilog(x) == pytest.approx(value, abs=1e-14)

    def test_exact_points(self):
        assert C.dilog(0.0) == 0.0
        assert C.dilog(-1.0) == pytest.approx(-math.pi ** 2 / 12, abs=1e-15)
        assert C.dilog(1.0) == pytest.approx(math.pi ** 2 / 6, abs=1e-15)

    @pytest.mark.parametrize("x", [-1.0, -0.5, 0.0, 0.5])
    def test_integral_representation(self, x):
        val, _ = integrate.quad(lambda u: -math.log1p(-u) / u if u != 0 else 1.0, 0, x,
                                epsabs=1e-14, epsrel=1e-13)
        assert C.dilog(x) == pytest.approx(val, abs=1e-10)

    def test_matches_scipy_spence(self):
        # Li2(x) = spence(1 - x)
        for x in np.linspace(-1, 1, 41):
            assert C.dilog(x) == pytest.approx(float(special.spence(1 - x)), abs=1e-13)

    def test_domain(self):
        with pytest.raises(ValueError):
            C.dilog(1.5)

    def test_delta_fn(self):
        assert C.delta_fn(1.0) == pytest.approx(math.pi ** 2 / 12 - 1, abs=1e-14)
        assert C.delta_fn(2.0) == pytest.approx(0.0615, abs=1e-4)
        assert C.delta_fn(3.0) == pytest.approx(0.712212265933420070374325026665, abs=1e-13)
        with pytest.raises(ValueError):
            C.delta_fn(0.5)


class TestMeanderKernel:
    def test_zero_at_origin(self):
        for y in (0.5, 1.0, 2.0):
            assert C.meander_conditional_kernel(y, 0.0) == 0.0

    @pytest.mark.parametrize("y", [0.5, 1.0, 2.0])
    def test_normalized(self, y):
        f = lambda z: C.meander_conditional_kernel(y, z)  # noqa: E731
        inner, _ = integrate.quad(f, 0, y, epsabs=1e-13, limit=200)
        outer, _ = integrate.quad(f, y, np.inf, epsabs=1e-13, limit=200)
        assert inner + outer == pytest.approx(1.0, abs=1e-8)

    def test_gaussian_decay_above_endpoint(self):
        y = 1.0
        assert C.meander_conditional_kernel(y, y + 4.0) < 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            C.meander_conditional_kernel(0.0, 0.5)
        with pytest.raises(ValueError):
            C.meander_conditional_kernel(1.0, -0.5)
