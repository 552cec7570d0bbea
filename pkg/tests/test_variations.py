import math
from fractions import Fraction as F

import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from shapevar import (
    InputError,
    ModeSpectrum,
    PreconditionError,
    ProblemParams,
    ball_capacity,
    ball_torsion,
    check_jacobian_expansion,
    first_variation_capacity,
    first_variation_torsion,
    perimeter_variation,
    product_coefficients,
    second_variation_capacity,
    second_variation_product,
    second_variation_torsion,
    volume_variation,
)
from shapevar.fields import PolynomialField
from shapevar.harmonics import sphere_area
from shapevar.variations import (
    ALL_MODES,
    corrected_mode_signs,
    corrected_tail_slope,
    exterior_exponent,
    interior_exponent,
    jacobian_cubic_coefficient,
    mode_sign_coefficients,
    product_coefficient_arrays,
    product_prefactor,
)

P222 = ProblemParams(3, 2.0, 2.0, 1.0)


def modes_of(modes, R=1.0, kind="rho"):
    return ModeSpectrum.from_modes(modes, R=R, kind=kind)


def frac_pow(base, num, den):
    """base^(num/den) for Fractions when the root is exact (den == 1 here)."""
    assert den == 1
    return base**num


# exact paper-mode coefficients for q with integral n = 1/(q-1)
def paper_c2_c3(d, p, n):
    d, p = F(d), F(p)
    s = F(1, n)
    a = d ** -(1 + n)       # d^{-q/(q-1)}
    b = d ** (n - 1)        # d^{-(q-2)/(q-1)}
    lin = p * d - 2 * d - 2 * p + 3
    c2 = p * s * lin / (d * s + 1) * a - (d - 1) * b
    c3 = p * s * (p - 1) / (d * s + 1) * a - s * b
    return c2, c3


# derived Z(k) / |S^{d-1}|, assembled from the component series and the radial ball values at R = 1
def derived_z_over_sigma(d, p, n, k):
    d, p = F(d), F(p)
    s = F(1, n)
    q = 1 + s
    ratio = (d - p) / (p - 1)
    dd = d ** (n - 1)       # d^{(2-q)/(q-1)}
    cap = p * ((p - 1) * (d - 2 + k) - (d - 1))
    tor = q * ((q - 1) * k + d - 1)
    return cap * s * dd / (d * s + q) - tor * dd / ratio


class TestSpectrum:
    def test_construction_and_merging(self):
        s = ModeSpectrum.from_modes({2: 0.5, (2, 0): 0.25, (3, -1): 1.0})
        assert s.coefficient(2) == 0.75
        assert s.max_degree == 3
        assert s.degree_weights() == {2: 0.5625, 3: 1.0}

    @pytest.mark.parametrize(
        "modes,kwargs", [({2: math.nan}, {}), ({2: 1.0}, {"R": 0.0}), ({2: 1.0}, {"kind": "phi"}), ({(2, 3): 1.0}, {})]
    )
    def test_rejects(self, modes, kwargs):
        with pytest.raises(InputError):
            ModeSpectrum.from_modes(modes, **kwargs)

    def test_add_and_scale(self):
        a, b = modes_of({2: 1.0}), modes_of({2: 0.5, 3: 1.0})
        assert (a + b).coefficient(2) == 1.5
        assert a.scaled(3.0).coefficient(2) == 3.0
        with pytest.raises(InputError):
            a + modes_of({2: 1.0}, R=2.0)

    def test_constraints(self):
        assert modes_of({2: 1.0}).is_volume_preserving()
        assert not modes_of({0: 1.0}).is_volume_preserving()
        assert not modes_of({(1, -1): 1.0}).is_barycenter_preserving()

    def test_kind_conversion(self):
        params = ProblemParams(4, 2.5, 3.0, 1.5)
        g, gt = 1.0 / 1.5 * (4 - 2.5) / 1.5, (1.5 / 4) ** 0.5
        rho = modes_of({2: 0.3, 5: -0.2}, R=1.5)
        u = modes_of({2: 0.3 * g, 5: -0.2 * g}, R=1.5, kind="u_prime")
        psi = modes_of({2: 0.3 * gt, 5: -0.2 * gt}, R=1.5, kind="psi_prime")
        for other in (u, psi):
            conv = other.to_rho(params)
            assert conv.kind == "rho"
            for k in (2, 5):
                assert conv.coefficient(k) == pytest.approx(rho.coefficient(k), rel=1e-14)
        a = second_variation_capacity(params, rho).second
        assert second_variation_capacity(params, u).second == pytest.approx(a, rel=1e-13)
        with pytest.raises(InputError):
            u.to_rho()

    def test_radius_mismatch(self):
        with pytest.raises(InputError):
            second_variation_capacity(P222, modes_of({2: 1.0}, R=2.0))

    def test_boundary_values_normalised_on_radius(self):
        from shapevar import integrate, make_quadrature

        quad = make_quadrature(12)
        for R in (1.0, 2.5):
            rho = modes_of({2: 0.3, (4, -3): 0.7}, R=R)
            vals = rho.boundary_values(quad.theta, quad.phi)
            # dS = R^2 dOmega
            assert integrate(quad, vals**2) * R**2 == pytest.approx(0.58, rel=1e-13)


class TestVolumePerimeter:
    def test_zero(self):
        assert tuple(volume_variation(modes_of({}))[:2]) == (0.0, 0.0)
        assert perimeter_variation(modes_of({})) == (0.0, 0.0)

    def test_y20(self):
        eps = 0.1
        first, second, flux = volume_variation(modes_of({2: eps}))
        assert first == 0.0
        assert second == pytest.approx(2 * eps**2, rel=1e-14)
        assert flux == 0.0
        assert perimeter_variation(modes_of({2: eps}))[1] == pytest.approx(4 * eps**2, rel=1e-14)

    def test_auto_w_cancels(self):
        first, second, flux = volume_variation(modes_of({3: 0.2, 5: 0.1}, R=2.0), "auto")
        assert second == 0.0
        assert flux == pytest.approx(-(2 / 2.0) * 0.05, rel=1e-14)
        assert volume_variation(modes_of({3: 0.2}), 0.5).second == pytest.approx(2 * 0.04 + 0.5)
        with pytest.raises(InputError):
            volume_variation(modes_of({3: 0.2}), "manual")

    def test_translation_mode_is_free(self):
        assert perimeter_variation(modes_of({(1, 1): 0.3}))[1] == 0.0

    def test_inflation_first_variations(self):
        # uniform rho on dB_R: coefficient a of the constant harmonic gives rho = a / sqrt(|dB_R|)
        R, a = 1.3, 0.2
        rho = a / math.sqrt(4 * math.pi * R**2)
        s = modes_of({0: a}, R=R)
        assert volume_variation(s).first == pytest.approx(4 * math.pi * R**2 * rho, rel=1e-14)
        assert perimeter_variation  # k = 0 refused below

    def test_perimeter_refuses_volume_change(self):
        with pytest.raises(PreconditionError):
            perimeter_variation(modes_of({0: 0.1, 2: 1.0}))

    @pytest.mark.parametrize("d", [3, 4, 7])
    def test_perimeter_general_d(self, d):
        R = 0.5
        second = perimeter_variation(modes_of({3: 1.0}, R=R), d=d)[1]
        assert second == pytest.approx((3 * (3 + d - 2) - (d - 1)) / R**2, rel=1e-14)


class TestFirstVariations:
    @pytest.mark.parametrize("d,p,q,R", [(3, 2.0, 2.0, 1.0), (5, 1.7, 3.5, 0.8), (8, 6.2, 1.3, 2.0)])
    def test_match_radius_derivative(self, d, p, q, R):
        # uniform rho = c moves R to R + t c
        area = sphere_area(d) * R ** (d - 1)
        a = 0.3
        s = modes_of({0: a}, R=R)
        c = a / math.sqrt(area)
        h = 1e-5 * R
        central = lambda f: (f(R + h) - f(R - h)) / (2 * h)
        dC = central(lambda r: ball_capacity(ProblemParams(d, p, q, r)))
        dT = central(lambda r: ball_torsion(ProblemParams(d, p, q, r)))
        params = ProblemParams(d, p, q, R)
        assert first_variation_capacity(params, s) == pytest.approx(dC * c, rel=1e-8)
        assert first_variation_torsion(params, s) == pytest.approx(dT * c, rel=1e-8)

    def test_examples_d3(self):
        delta = 0.1
        s = modes_of({0: delta})
        assert first_variation_capacity(P222, s) == pytest.approx(delta * math.sqrt(4 * math.pi), rel=1e-14)
        assert first_variation_torsion(P222, s) == pytest.approx(delta * math.sqrt(4 * math.pi) / 9, rel=1e-14)

    @pytest.mark.parametrize("modes", [{2: 1.0}, {3: 0.5}, {2: 0.1, 7: 2.0}])
    def test_vanish_when_volume_preserving(self, modes):
        assert first_variation_capacity(P222, modes_of(modes)) == 0.0
        assert first_variation_torsion(P222, modes_of(modes)) == 0.0


class TestComponentSeries:
    def test_capacity_examples(self):
        eps = 0.1
        assert second_variation_capacity(P222, modes_of({2: eps})).second == pytest.approx(2 * eps**2, rel=1e-14)
        assert second_variation_capacity(P222, modes_of({3: eps})).second == pytest.approx(4 * eps**2, rel=1e-14)

    @pytest.mark.parametrize("d", range(3, 11))
    def test_capacity_vanishes_at_threshold(self, d):
        params = ProblemParams(d, 1 + (d - 1) / d, 2.0, 1.3)
        assert abs(second_variation_capacity(params, modes_of({2: 1.0}, R=1.3)).second) < 1e-13

    def test_torsion_series_literal(self):
        eps = 0.1
        rep = second_variation_torsion(P222, modes_of({2: eps}), "paper")
        assert rep.second == pytest.approx(-8 * eps**2 / 9, rel=1e-14)
        assert rep.flags

    def test_zero_spectrum(self):
        for fn in (second_variation_capacity, second_variation_torsion, second_variation_product):
            assert fn(P222, modes_of({})).second == 0.0

    @pytest.mark.parametrize("fn", [second_variation_capacity, second_variation_torsion, second_variation_product])
    @pytest.mark.parametrize("bad,needle", [({0: 0.1}, "k=0"), ({(1, -1): 0.1}, "k=1")])
    def test_preconditions(self, fn, bad, needle):
        with pytest.raises(PreconditionError, match=needle) as info:
            fn(P222, modes_of({2: 1.0, **bad}))
        assert info.value.modes

    def test_unknown_mode(self):
        with pytest.raises(InputError):
            second_variation_capacity(P222, modes_of({2: 1.0}), "exact")

    @settings(max_examples=200, deadline=None)
    @given(
        d=st.integers(3, 10),
        qf=st.floats(1.01, 20.0),
        R=st.floats(0.5, 2.0),
        coeffs=st.dictionaries(st.integers(2, 40), st.floats(-5, 5).filter(lambda x: abs(x) > 1e-3), min_size=1, max_size=5),
        mode=st.sampled_from(ALL_MODES),
    )
    def test_torsion_strictly_negative(self, d, qf, R, coeffs, mode):
        params = ProblemParams(d, 1.5, qf, R)
        rep = second_variation_torsion(params, modes_of(coeffs, R=R), mode)
        assert rep.second < 0
        assert all(v < 0 for v in rep.per_mode_terms.values())

    @settings(max_examples=100, deadline=None)
    @given(
        d=st.integers(3, 9),
        pf=st.floats(0.01, 0.99),
        q=st.floats(1.05, 8.0),
        R=st.floats(0.3, 3.0),
        a=st.dictionaries(st.integers(2, 30), st.floats(-3, 3), min_size=1, max_size=4),
        b=st.dictionaries(st.integers(2, 30), st.floats(-3, 3), min_size=1, max_size=4),
        mode=st.sampled_from(ALL_MODES),
    )
    def test_mode_additivity(self, d, pf, q, R, a, b, mode):
        # disjoint orders within a degree so the two spectra are orthogonal
        params = ProblemParams(d, 1 + pf * (d - 1), q, R)
        sa = modes_of({(k, 0): v for k, v in a.items()}, R=R)
        sb = modes_of({(k, 1): v for k, v in b.items()}, R=R)
        for fn in (second_variation_capacity, second_variation_torsion, second_variation_product):
            whole = fn(params, sa + sb, mode).second
            parts = fn(params, sa, mode).second + fn(params, sb, mode).second
            assert whole == pytest.approx(parts, rel=1e-13, abs=1e-300)

    @settings(max_examples=100, deadline=None)
    @given(
        d=st.integers(3, 9),
        pf=st.floats(0.01, 0.99),
        q=st.floats(1.05, 8.0),
        k=st.integers(2, 30),
        lam=st.floats(0.25, 4.0),
        mode=st.sampled_from(ALL_MODES),
    )
    def test_radius_scaling(self, d, pf, q, k, lam, mode):
        # fixed coefficients (so oint rho^2 is fixed): capacity ~ R^{-p-1}, torsion ~ R^{1/(q-1)}
        p = 1 + pf * (d - 1)
        a, b = ProblemParams(d, p, q, 1.0), ProblemParams(d, p, q, lam)
        ra, rb = modes_of({k: 1.0}), modes_of({k: 1.0}, R=lam)
        assume(second_variation_capacity(a, ra, mode).second != 0.0)
        cap = second_variation_capacity(b, rb, mode).second / second_variation_capacity(a, ra, mode).second
        tor = second_variation_torsion(b, rb, mode).second / second_variation_torsion(a, ra, mode).second
        assert cap == pytest.approx(lam ** (-p - 1), rel=1e-11)
        assert tor == pytest.approx(lam ** (1 / (q - 1)), rel=1e-11)
        prod_a = second_variation_product(a, ra, mode).second
        if prod_a != 0.0:
            prod = second_variation_product(b, rb, mode).second / prod_a
            assert prod == pytest.approx(lam ** (d - p + 1 / (q - 1)), rel=1e-10)

    @pytest.mark.parametrize("mode", ALL_MODES)
    def test_report_sums_terms(self, mode):
        params = ProblemParams(5, 2.2, 1.7, 0.9)
        rep = second_variation_product(params, modes_of({2: 0.4, 3: -1.1, 9: 0.05}, R=0.9), mode)
        assert rep.second == pytest.approx(math.fsum(rep.per_mode_terms.values()), abs=1e-12 * abs(rep.second))
        d = rep.to_dict()
        assert d["mode"] == mode and set(d["per_mode_terms"]) == {"2", "3", "9"}


class TestCorrected:
    @settings(max_examples=100, deadline=None)
    @given(d=st.integers(3, 12), x=st.floats(1.001, 30.0), k=st.integers(0, 80))
    def test_exponents_solve_their_quadratics(self, d, x, k):
        lam = k * (k + d - 2)
        if x < d:
            s = float(exterior_exponent(d, x, k))
            assert s >= 0
            assert (x - 1) * s * s + (x - d) * s == pytest.approx(lam, rel=1e-9, abs=1e-9)
        t = float(interior_exponent(d, x, k))
        assert t >= 0
        assert (x - 1) * t * t + ((x - 1) * (d - 1) - 1) * t == pytest.approx(lam, rel=1e-9, abs=1e-9)

    @pytest.mark.parametrize("d", [3, 4, 6])
    @pytest.mark.parametrize("k", [0, 1, 2, 5])
    def test_exponent_special_values(self, d, k):
        assert float(exterior_exponent(d, 2.0, k)) == pytest.approx(d - 2 + k, rel=1e-14, abs=1e-14)
        assert float(interior_exponent(d, 2.0, k)) == pytest.approx(k, rel=1e-14, abs=1e-14)
        assert float(exterior_exponent(d, 1.7, 1)) == pytest.approx((d - 1) / 0.7, rel=1e-13)
        assert float(interior_exponent(d, 3.5, 1)) == pytest.approx(1 / 2.5, rel=1e-13)

    @pytest.mark.parametrize("which", ["capacity", "torsion"])
    @pytest.mark.parametrize("d,x,k", [(3, 1.4, 2), (5, 3.3, 4), (7, 2.0, 3), (4, 3.5, 6), (8, 7.9, 5)])
    def test_exponents_solve_linearised_equation(self, which, d, x, k):
        # sympy: div(|f0'|^{x-2} ((x-1) w_r e_r + w_tangential)) = 0 for w = r^e Y_k around the radial solution
        r = sp.symbols("r", positive=True)
        xs = sp.nsimplify(x)
        lam = k * (k + d - 2)
        if which == "capacity":
            f0 = r ** (-(d - xs) / (xs - 1))
            e = -sp.Float(float(exterior_exponent(d, x, k)), 30)
        else:
            f0 = -(r ** (xs / (xs - 1)))
            e = sp.Float(float(interior_exponent(d, x, k)), 30)
        g = sp.Abs(sp.diff(f0, r)) ** (xs - 2)
        w = r**e
        residual = sp.diff(r ** (d - 1) * g * (xs - 1) * sp.diff(w, r), r) / r ** (d - 1) - g * lam * w / r**2
        val = sp.N(residual.subs(r, sp.Rational(13, 10)) / (g * w / r**2).subs(r, sp.Rational(13, 10)), 20)
        assert abs(float(val)) < 1e-10

    @pytest.mark.parametrize("d,p,q", [(3, 2.0, 2.0), (5, 1.4, 3.0), (9, 7.5, 1.2)])
    def test_translation_modes_are_neutral(self, d, p, q):
        from shapevar.variations import capacity_mode_factor, torsion_mode_factor

        params = ProblemParams(d, p, q)
        assert abs(capacity_mode_factor(params, 1, "corrected")) < 1e-12
        assert abs(torsion_mode_factor(params, 1, "corrected")) < 1e-12
        # the literal series does not vanish there
        assert abs(torsion_mode_factor(params, 1, "paper")) > 0.1

    def test_d3_values(self):
        for k in (2, 3, 4):
            rho = modes_of({k: 1.0})
            assert second_variation_torsion(P222, rho, "corrected").second == pytest.approx(-2 * (k - 1) / 9, rel=1e-14)
            assert second_variation_capacity(P222, rho, "corrected").second == pytest.approx(2 * (k - 1), rel=1e-14)

    def test_capacity_series_is_exact_at_p2(self):
        for d in (3, 4, 8):
            params = ProblemParams(d, 2.0, 3.0)
            for k in range(2, 9):
                rho = modes_of({k: 1.0})
                a = second_variation_capacity(params, rho, "derived").second
                b = second_variation_capacity(params, rho, "corrected").second
                assert a == pytest.approx(b, rel=1e-13)

    @settings(max_examples=80, deadline=None)
    @given(d=st.integers(3, 10), pf=st.floats(0.02, 0.98), q=st.floats(1.05, 9.0), k=st.integers(2, 40))
    def test_sign_function_matches_product_terms(self, d, pf, q, k):
        p = 1 + pf * (d - 1)
        params = ProblemParams(d, p, q)
        term = second_variation_product(params, modes_of({k: 1.0}), "corrected").second
        z = float(corrected_mode_signs(d, p, q, k))
        gamma = (d - p) / (p - 1)
        scale = sphere_area(d) * gamma ** (p - 1) * d ** (-1 / (q - 1))
        assert term == pytest.approx(scale * z, rel=1e-9, abs=1e-12 * scale)

    @pytest.mark.parametrize("d,p,q", [(3, 2.0, 2.0), (7, 6.5, 3.0), (4, 1.2, 1.5)])
    def test_tail_slope(self, d, p, q):
        k = 10.0**7
        ratio = float(corrected_mode_signs(d, p, q, k)) / k
        assert ratio == pytest.approx(float(corrected_tail_slope(d, p, q)), rel=1e-5)

    def test_d3_p2_q2_closed_form(self):
        for k in range(2, 8):
            assert float(corrected_mode_signs(3, 2.0, 2.0, k)) == pytest.approx(-(8 / 15) * (k - 1), rel=1e-13)


class TestProduct:
    def test_paper_coefficients_d3(self):
        co = product_coefficients(P222, "paper")
        assert co.c2 == pytest.approx(float(F(-37, 18)), rel=1e-14)
        assert co.c3 == pytest.approx(float(F(-17, 18)), rel=1e-14)
        assert co.c2 + 2 * co.c3 == pytest.approx(float(F(-71, 18)), rel=1e-14)
        assert paper_c2_c3(3, 2, 1) == (F(-37, 18), F(-17, 18))

    def test_paper_product_d3(self):
        eps = 0.1
        rep = second_variation_product(P222, modes_of({2: eps}), "paper")
        assert rep.second == pytest.approx(float(F(-71, 162)) * eps**2, rel=1e-14)

    @settings(max_examples=150, deadline=None)
    @given(
        d=st.integers(3, 12),
        pn=st.integers(1, 99),
        n=st.sampled_from([1, 2, 3, 4]),
    )
    def test_paper_coefficients_rational(self, d, pn, n):
        p = 1 + F(pn, 100) * (d - 1)
        if p >= d:
            return
        c2, c3 = paper_c2_c3(d, p, n)
        co = product_coefficients(ProblemParams(d, float(p), 1 + 1 / n), "paper")
        assert co.c2 == pytest.approx(float(c2), rel=1e-12, abs=1e-12)
        assert co.c3 == pytest.approx(float(c3), rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("d,p,n", [(3, 2, 1), (5, 3, 2), (7, 4, 3), (10, 2, 4)])
    def test_paper_c0_c1_integral_p(self, d, p, n):
        dq, pq = F(d), F(p)
        s = F(1, n)
        ratio = (dq - pq) / (pq - 1)
        c0 = pq * s / (dq * s + 1) * ratio**p * dq ** -(1 + n)
        c1 = ratio ** (p - 1) * dq ** (n - 1)
        co = product_coefficients(ProblemParams(d, float(p), 1 + 1 / n), "paper")
        assert co.c0 == pytest.approx(float(c0), rel=1e-13)
        assert co.c1 == pytest.approx(float(c1), rel=1e-13)

    @settings(max_examples=150, deadline=None)
    @given(d=st.integers(3, 12), pn=st.integers(1, 99), n=st.sampled_from([1, 2, 3, 4]), k=st.integers(2, 50))
    def test_derived_coefficients_rational(self, d, pn, n, k):
        p = 1 + F(pn, 100) * (d - 1)
        if p >= d:
            return
        z = derived_z_over_sigma(d, p, n, k)
        co = product_coefficients(ProblemParams(d, float(p), 1 + 1 / n), "derived")
        got = (co.c2 + k * co.c3) / sphere_area(d)
        assert got == pytest.approx(float(z), rel=1e-11, abs=1e-11 * float(abs(z) + 1))

    @settings(max_examples=80, deadline=None)
    @given(d=st.integers(3, 9), pf=st.floats(0.02, 0.98), q=st.floats(1.05, 9.0), k=st.integers(2, 40),
           R=st.floats(0.3, 3.0), mode=st.sampled_from(["paper", "derived"]))
    def test_z_matches_per_mode_terms(self, d, pf, q, k, R, mode):
        p = 1 + pf * (d - 1)
        params = ProblemParams(d, p, q, R)
        co = product_coefficients(params, mode)
        gt = (R / d) ** (1 / (q - 1))
        term = second_variation_product(params, modes_of({k: 1.0}, R=R), mode).per_mode_terms[k]
        expected = product_prefactor(params) * gt**2 * (co.c2 + k * co.c3)
        assert term == pytest.approx(expected, rel=1e-10, abs=1e-13 * abs(product_prefactor(params) * gt**2 * co.c2))

    @settings(max_examples=80, deadline=None)
    @given(d=st.integers(3, 9), pf=st.floats(0.02, 0.98), q=st.floats(1.05, 9.0), mode=st.sampled_from(["paper", "derived"]))
    def test_scaled_signs_share_sign(self, d, pf, q, mode):
        p = 1 + pf * (d - 1)
        c0, c1, c2, c3 = product_coefficient_arrays(d, p, q, mode)
        s2, s3 = mode_sign_coefficients(d, p, q, mode)
        scale = c3 / s3 if s3 != 0 else c2 / s2
        assert scale > 0
        assert float(c2) == pytest.approx(float(s2) * float(scale), rel=1e-9, abs=1e-12 * abs(float(c2)) + 1e-300)

    @pytest.mark.parametrize("d", [3, 4, 5, 6])
    @pytest.mark.parametrize("k", [2, 3, 10])
    def test_negative_for_small_dimensions(self, d, k):
        params = ProblemParams(d, d - 1e-6, 2.0)
        assert second_variation_product(params, modes_of({k: 1.0}), "paper").second < 0

    def test_sign_agreement_flags(self):
        params = ProblemParams(7, 6.95, 6.77)
        rep = second_variation_product(params, modes_of({k: 1.0 for k in range(2, 12)}), "paper")
        disagree = [k for k, ok in rep.sign_agreement.items() if not ok]
        assert disagree, "expected a sign split at this parameter point"
        flagged = [f for f in rep.flags if "differ in sign" in f]
        assert len(flagged) == len(disagree)
        for k in disagree:
            assert any(f.startswith(f"k={k}:") for f in flagged)

    def test_no_sign_flags_when_modes_agree(self):
        rep = second_variation_product(P222, modes_of({2: 1.0, 5: 1.0}), "derived")
        assert all(rep.sign_agreement.values())
        assert not [f for f in rep.flags if "differ in sign" in f]

    def test_paper_and_derived_not_proportional(self):
        # the two modes differ by more than the torsion-constant factor: their ratio depends on k
        params = ProblemParams(5, 3.0, 2.5)
        ratios = []
        for k in (2, 3, 6):
            a = second_variation_product(params, modes_of({k: 1.0}), "paper").second
            b = second_variation_product(params, modes_of({k: 1.0}), "derived").second
            ratios.append(a / b)
        assert (max(ratios) - min(ratios)) / min(ratios) > 1e-2


class TestJacobian:
    def test_zero_fields(self):
        z = PolynomialField.zero()
        assert check_jacobian_expansion(z, z, 1e-3, np.zeros((4, 3))) == 0.0

    def test_linear_field_residual_is_cubic_coefficient(self):
        M = np.array([[0.3, -0.2, 0.5], [0.1, 0.4, -0.6], [0.7, 0.2, -0.1]])
        v, w = PolynomialField.linear(M), PolynomialField.zero()
        r = check_jacobian_expansion(v, w, 1e-4, np.zeros((1, 3)))
        assert r == pytest.approx(abs(np.linalg.det(M)), rel=1e-3)

    def test_cubic_coefficient_matches_symbolic_expansion(self):
        rng = np.random.default_rng(7)
        Dv = rng.normal(size=(3, 3))
        Dw = rng.normal(size=(3, 3))
        t = sp.symbols("t")
        A = sp.eye(3) + t * sp.Matrix(Dv) + t**2 / 2 * sp.Matrix(Dw)
        coeff = float(sp.Poly(sp.expand(A.det()), t).coeff_monomial(t**3))
        assert float(jacobian_cubic_coefficient(Dv, Dw)) == pytest.approx(coeff, rel=1e-12)

    def test_random_fields_halving(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-1, 1, size=(100, 3))
        for _ in range(5):
            v, w = PolynomialField.random(rng), PolynomialField.random(rng)
            c1 = check_jacobian_expansion(v, w, 1e-3, x)
            c2 = check_jacobian_expansion(v, w, 5e-4, x)
            assert c2 == pytest.approx(c1, rel=0.05)
            limit = np.max(np.abs(jacobian_cubic_coefficient(v.jacobian(x), w.jacobian(x))))
            assert c2 <= 1.01 * limit + 1e-3

    def test_zero_t_rejected(self):
        z = PolynomialField.zero()
        with pytest.raises(InputError):
            check_jacobian_expansion(z, z, 0.0, np.zeros((1, 3)))
