import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from surface_maryland.errors import BadInput, ConvergenceFailure, NearPole, SingularPotential
from surface_maryland.lattice_green import ComplexEnergy
from surface_maryland.surface_symbols import (
    GOLDEN,
    ModelParams,
    b_hat,
    dlogP_dE,
    energy_symbol,
    gamma0_hat,
    k_gamma_measure,
    k_gamma_measure_exact,
    k_gamma_membership,
    partial_product_P,
    potential_cayley,
    potential_v,
    symbols,
    t_coefficient,
    t_series,
)

momentum = st.floats(0.0, 1.0, exclude_max=True, allow_nan=False)


class TestParams:
    def test_rejects_nonpositive_coupling(self):
        with pytest.raises(BadInput):
            ModelParams(g=0.0)

    def test_rejects_phase_out_of_range(self):
        with pytest.raises(BadInput):
            ModelParams(g=1.0, omega=1.0)

    def test_rejects_pole_on_lattice(self):
        with pytest.raises(SingularPotential):
            ModelParams(g=1.0, alpha=Fraction(1, 4), omega=0.25)

    def test_rational_accessors(self):
        p = ModelParams(g=1.0, alpha=Fraction(2, 5), omega=0.2)
        assert (p.p, p.q, p.d) == (2, 5, 2)
        assert abs(p.sigma) == pytest.approx(1.0)

    def test_irrational_has_no_q(self):
        with pytest.raises(BadInput):
            ModelParams(g=1.0).q

    def test_exact_rational_shift(self):
        p = ModelParams(g=1.0, alpha=Fraction(2, 5), omega=0.2)
        assert float(p.shift(0.1, 3)) == pytest.approx((0.1 + 6 / 5) % 1.0, abs=1e-15)

    def test_replace(self):
        p = ModelParams(g=1.0).replace(g=2.0)
        assert p.g == 2.0 and p.alpha == GOLDEN


class TestPotential:
    def test_quarter_phase(self):
        assert potential_v(0, ModelParams(g=1.0, omega=0.25)) == pytest.approx(1.0, abs=1e-15)

    def test_zero_phase(self):
        assert potential_v(0, ModelParams(g=2.0, omega=0.0)) == 0.0

    def test_rational_site(self):
        p = ModelParams(g=1.0, alpha=Fraction(1, 3), omega=0.2)
        assert potential_v(1, p) == pytest.approx(-9.5143644542225871, rel=1e-12)

    @given(st.integers(-50, 50), st.floats(0.01, 0.99), st.floats(0.1, 5.0))
    def test_cayley_form(self, x2, omega, g):
        p = ModelParams(g=g, omega=omega)
        try:
            v = potential_v(x2, p)
        except SingularPotential:
            return
        assume(abs(v) < 1e6)
        assert potential_cayley(x2, p) == pytest.approx(v, rel=1e-7, abs=1e-9)

    def test_pole_raises(self):
        with pytest.raises(SingularPotential):
            potential_v(0, ModelParams(g=1.0, omega=0.5))


class TestSymbols:
    def test_energy_symbol(self):
        assert energy_symbol([0.0, 0.0], 2) == pytest.approx(-2.0)
        assert energy_symbol([0.25, 0.25, 0.25], 3) == pytest.approx(0.0, abs=1e-15)
        assert energy_symbol([1 / 3, 1 / 6], 2) == pytest.approx(0.0, abs=1e-15)

    def test_gamma0_centre(self):
        p = ModelParams(g=1.0)
        assert gamma0_hat(0.25, 0.0, p).value == pytest.approx(1j, abs=1e-15)

    def test_gamma0_outside(self):
        p = ModelParams(g=1.0)
        assert gamma0_hat(0.0, 3.0, p).value == pytest.approx(-1 / math.sqrt(15), abs=1e-15)

    @given(momentum, st.floats(-3, 3), st.floats(0.01, 3))
    def test_gamma0_herglotz(self, k, re, im):
        assert gamma0_hat(k, complex(re, im), ModelParams(g=1.0)).value.imag > 0

    def test_b_vanishes_when_gamma_is_i(self):
        assert abs(complex(b_hat(0.25, 0.0, ModelParams(g=1.0)))) < 1e-15

    @given(momentum, st.floats(1.01, 4.0), st.floats(0.1, 4.0))
    def test_b_unimodular_outside_band(self, k, lam, g):
        E = lam - math.cos(2 * math.pi * k)
        assert abs(complex(b_hat(k, E, ModelParams(g=g)))) == pytest.approx(1.0, abs=1e-12)

    @given(momentum, st.floats(-3, 3), st.floats(0.0, 3), st.floats(0.1, 4.0))
    def test_b_contracts_in_upper_half_plane(self, k, re, im, g):
        z = complex(re, im) if im > 0 else re
        assert abs(complex(b_hat(k, z, ModelParams(g=g)))) <= 1.0 + 1e-12

    def test_regular_form_matches_gamma_form(self):
        p = ModelParams(g=1.3)
        k = np.linspace(0.01, 0.99, 41)
        s = symbols(k, 0.4 + 0.3j, p)
        c = 1.0 / (p.g * s.gamma + 1j)
        assert np.max(np.abs(s.c - c)) < 1e-13
        assert np.max(np.abs(s.b - (p.g * s.gamma - 1j) * c)) < 1e-13

    def test_higher_transverse_dimension_uses_time_route(self):
        p = ModelParams(g=1.0, alpha=GOLDEN, d1=2, d2=1)
        s = symbols(0.3, 0.2 + 0.5j, p)
        from surface_maryland.lattice_green import green_nd

        ref = green_nd(2, (0, 0), 0.2 + 0.5j + math.cos(2 * math.pi * 0.3)).value
        assert abs(complex(s.gamma) - ref) < 1e-10
        with pytest.raises(BadInput):
            symbols(0.3, 0.2, p)


class TestKGamma:
    def test_membership(self):
        p = ModelParams(g=1.0)
        assert bool(k_gamma_membership(0.25, 0.0, 0.1, p))
        assert not bool(k_gamma_membership(0.5, 1.95, 0.1, p))

    @pytest.mark.parametrize("E", [0.0, 0.5, -1.3, 1.8])
    def test_measure(self, E):
        p = ModelParams(g=1.0)
        assert abs(k_gamma_measure(E, 0.1, p) - k_gamma_measure_exact(E, 0.1)) < 1e-3

    def test_contraction_on_k_gamma(self):
        p = ModelParams(g=1.0)
        k = np.linspace(0, 1, 2001)
        inside = k_gamma_membership(k, 0.3, 0.1, p)
        b = np.abs(symbols(k[inside], 0.3, p).b)
        assert b.max() < 1.0
        assert np.all(np.abs(symbols(k[~inside], 0.3, p).b) <= 1.0 + 1e-14)


class TestProducts:
    def test_single_factor_zero(self):
        p = ModelParams(g=1.0)
        k2 = (0.25 - GOLDEN) % 1.0
        assert abs(complex(np.ravel(partial_product_P(1, k2, 0.0, p))[0])) < 1e-14

    @given(momentum, st.floats(-2, 2), st.floats(0.05, 2))
    def test_full_period_product_is_periodic(self, k, re, im):
        p = ModelParams(g=1.0, alpha=Fraction(2, 5), omega=0.2)
        z = complex(re, im)
        a = partial_product_P(5, k, z, p)
        b = partial_product_P(5, (k + 0.2) % 1.0, z, p)
        assert abs(complex(np.ravel(a)[0]) - complex(np.ravel(b)[0])) < 1e-12

    def test_geometric_bound(self):
        # |P_m| <= (1 - delta)**(m |K|/2) with delta from the contraction on K_gamma
        p = ModelParams(g=1.0)
        E, gam = 0.3, 0.1
        k = np.linspace(0, 1, 20001)
        inside = k_gamma_membership(k, E, gam, p)
        delta = 1.0 - np.abs(symbols(k[inside], E, p).b).max()
        meas = k_gamma_measure_exact(E, gam)
        m = 400
        bound = (1 - delta) ** (m * meas / 2)
        vals = np.abs(partial_product_P(m, np.linspace(0.01, 0.99, 7), E, p))
        assert np.all(vals <= bound)


class TestCoefficients:
    def test_m0(self):
        p = ModelParams(g=1.7)
        z = 0.2 + 0.4j
        g0 = gamma0_hat(0.3, z, p).value
        want = -p.g / (p.g * g0 + 1j)
        assert complex(t_coefficient(0, 0.3, z, p)) == pytest.approx(want, abs=1e-14)
        pr = ModelParams(g=1.7, alpha=Fraction(1, 3), omega=0.2)
        assert complex(t_coefficient(0, 0.3, z, pr)) == pytest.approx(want, abs=1e-14)

    def test_series_generator_matches_single_terms(self):
        p = ModelParams(g=1.0)
        z = 0.1 + 0.2j
        terms = list(t_series(0.37, z, p, 6))
        for m, t in enumerate(terms):
            assert complex(t) == pytest.approx(complex(t_coefficient(m, 0.37, z, p)), abs=1e-14)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_resummation(self, m):
        # the resummed coefficient collects series terms m, m + q, m + 2q, ...
        p = ModelParams(g=1.0, alpha=Fraction(1, 3), omega=0.2)
        z, k2 = 0.3 + 1j, 0.21
        series = sum(complex(t_coefficient(m + 3 * n, k2, z, p, resummed=False)) for n in range(80))
        assert abs(series - complex(t_coefficient(m, k2, z, p, resummed=True))) < 1e-10

    @pytest.mark.parametrize("z", [0.3 + 1j, -1.1 + 0.2j, 2.5 + 0.5j])
    def test_constant_potential_t_matrix(self, z):
        # q = 1: t_0 + t_1 = -v / (1 + v gamma0) with v = g tan(pi omega)
        p = ModelParams(g=1.0, alpha=Fraction(0, 1), omega=0.25)
        k2 = 0.13
        tot = complex(t_coefficient(0, k2, z, p)) + complex(t_coefficient(1, k2, z, p))
        v = math.tan(math.pi * 0.25)
        g0 = gamma0_hat(k2, z, p).value
        assert abs(tot - (-v / (1 + v * g0))) < 1e-12

    def test_series_below_axis_refused(self):
        with pytest.raises(ConvergenceFailure):
            t_coefficient(2, 0.1, ComplexEnergy.lower(0.3), ModelParams(g=1.0))

    def test_resummed_pole(self):
        from surface_maryland.band_structure import solve_band

        p = ModelParams(g=1.0, alpha=Fraction(0, 1), omega=0.25)
        E = solve_band(1, 0.2, p)
        with pytest.raises(NearPole):
            t_coefficient(1, 0.2, E, p)

    def test_energy_derivative(self):
        p = ModelParams(g=1.0, alpha=Fraction(1, 3), omega=0.2)
        k2, E, h = 0.31, 2.4, 1e-6
        def logP(e):
            return np.log(complex(np.ravel(partial_product_P(3, k2, e, p))[0]))
        fd = (logP(E + h) - logP(E - h)) / (2 * h)
        assert abs(complex(np.ravel(dlogP_dE(k2, E, p))[0]) - fd) < 1e-7
