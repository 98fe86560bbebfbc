import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from surface_maryland.errors import BadInput, ChannelAtThreshold, DegenerateEnergy, NearSingularEnergy
from surface_maryland.lattice_green import ComplexEnergy
from surface_maryland.resolvent_series import SeriesControl
from surface_maryland.scattering_states import (
    ScatteringState,
    Window,
    amplitudes,
    lippmann_schwinger_residual,
    point_potential_amplitudes,
    psi_periodic_surface,
    psi_periodic_volume,
    psi_qp,
    schrodinger_residual,
    split_volume_surface,
    surface_decay_fit,
    surface_normalization,
)
from surface_maryland.surface_symbols import ModelParams, t_coefficient

QP = ModelParams(g=1.0, omega=0.3)
WIN = Window(10, ((-10, 10),))


def residual(state, params=QP, mismatched=False):
    return schrodinger_residual(lambda a, b: state.evaluate(a, b, mismatched), state.energy, params, WIN)


class TestQuasiPeriodic:
    @pytest.mark.parametrize("k", [(0.1, 0.2), (0.3, 0.15), (0.22, 0.7)])
    @pytest.mark.parametrize("sign", ["minus", "plus"])
    def test_eigen_equation(self, k, sign):
        st_ = psi_qp(k, sign, QP)
        assert residual(st_) < 1e-8

    def test_negative_control(self):
        st_ = psi_qp((0.1, 0.2), "minus", QP)
        assert residual(st_, mismatched=True) > 1e3 * max(residual(st_), 1e-12)

    def test_plus_is_conjugate_of_minus_at_reversed_momentum(self):
        k = (0.3, 0.15)
        plus = psi_qp(k, "plus", QP)
        minus = psi_qp((0.7, 0.85), "minus", QP)
        x1, x2 = np.arange(-4, 5), np.arange(-3, 4)
        assert np.max(np.abs(plus.evaluate(x1, x2) - np.conj(minus.evaluate(x1, x2)))) < 1e-13

    def test_channel_coefficients_are_series_coefficients(self):
        k = (0.1, 0.2)
        st_ = psi_qp(k, "minus", QP)
        E = st_.energy
        for t in st_.terms[:6]:
            kap = QP.shift(0.2, -t.m)
            want = complex(t_coefficient(t.m, kap, ComplexEnergy.upper(E), QP, resummed=False))
            assert abs(t.coefficient - want) < 1e-12
            assert t.momentum[0] == pytest.approx(float(kap), abs=1e-12)

    def test_sign_validation(self):
        with pytest.raises(BadInput):
            psi_qp((0.1, 0.2), "up", QP)

    def test_amplitudes(self):
        a = amplitudes((0.1, 0.2), QP)
        assert a.t0 == pytest.approx(1 + a.r0, abs=1e-15)
        assert a.channels[0][1] in ("volume", "surface")

    def test_weak_coupling_channels_are_small(self):
        # the series is not certified at g = 1e-8; each individual channel must still be O(g)
        p = ModelParams(g=1e-8, omega=0.3)
        st_ = psi_qp((0.1, 0.2), "minus", p, SeriesControl(max_terms=200), strict=False)
        coefs = np.array([abs(t.coefficient) for t in st_.terms])
        assert coefs.max() < 1e-6
        x1, x2 = np.arange(-3, 4), np.arange(-3, 4)
        pw = np.exp(2j * np.pi * (0.1 * x1[:, None] + 0.2 * x2[None, :]))
        assert np.max(np.abs(st_.evaluate(x1, x2) - pw)) < 1e-4


class TestSplit:
    def _state(self, lam):
        return ScatteringState(incident=(0.1, 0.2), energy=0.0, sign="minus", params=QP,
                               m=np.arange(len(lam)), amp=np.ones(len(lam), complex),
                               kappa=np.linspace(0.1, 0.5, len(lam)), lam=np.array(lam, float))

    def test_classes(self):
        vol, surf = split_volume_surface(self._state([0.3, 2.0, -1.5]))
        assert [t.m for t in vol] == [0] and [t.m for t in surf] == [1, 2]

    def test_threshold_raises(self):
        with pytest.raises(ChannelAtThreshold):
            split_volume_surface(self._state([0.3, 1.0]))

    def test_decay_rate_of_closed_channel(self):
        t = self._state([2.0]).terms[0]
        assert t.eta.imag == pytest.approx(math.log(2 + math.sqrt(3)), abs=1e-14)

    def test_parts_sum_to_state(self):
        st_ = psi_qp((0.3, 0.15), "minus", QP)
        vol, surf = st_.split()
        x1, x2 = np.arange(-3, 4), np.arange(-2, 3)
        tot = vol.evaluate(x1, x2) + surf.evaluate(x1, x2)
        assert np.max(np.abs(tot - st_.evaluate(x1, x2))) < 1e-13


class TestPointPotential:
    @given(st.floats(0.01, 0.49), st.floats(-5, 5))
    def test_reflection_formula(self, k1, v):
        t, r = point_potential_amplitudes(k1, v)
        want = -1j * v / (1j * v + math.sin(2 * math.pi * k1))
        assert abs(r - want) < 1e-12
        assert abs(t) ** 2 + abs(r) ** 2 == pytest.approx(1.0, abs=1e-12)


class TestPeriodic:
    @pytest.mark.parametrize("q", [1, 3, 5])
    @pytest.mark.parametrize("sign", ["minus", "plus"])
    def test_volume_eigen_equation(self, q, sign):
        p = ModelParams(g=1.0, alpha=Fraction(1, q) if q > 1 else Fraction(0, 1), omega=0.2)
        st_ = psi_periodic_volume((0.13, 0.07), sign, p)
        assert residual(st_, p) < 1e-9

    def test_quasi_bloch(self):
        p = ModelParams(g=1.0, alpha=Fraction(2, 5), omega=0.2)
        st_ = psi_periodic_volume((0.13, 0.07), "minus", p)
        x1 = np.arange(-4, 5)
        a = st_.evaluate(x1, np.arange(0, 3))
        b = st_.evaluate(x1, np.arange(5, 8))
        assert np.max(np.abs(b - np.exp(2j * np.pi * 0.07 * 5) * a)) < 1e-12

    def test_surface_state_q1(self):
        p = ModelParams(g=1.0, alpha=Fraction(0, 1), omega=0.25)
        st_ = psi_periodic_surface(0.1, 1, "minus", p)
        assert st_.energy == pytest.approx(math.sqrt(2) - math.cos(0.2 * math.pi), abs=1e-12)
        fit, pred = surface_decay_fit(st_)
        assert pred == pytest.approx(math.log(math.sqrt(2) + 1), abs=1e-12)
        assert fit == pytest.approx(pred, rel=1e-3)
        assert residual(st_, p) < 1e-10

    def test_surface_state_square_summable(self):
        p = ModelParams(g=1.0, alpha=Fraction(2, 5), omega=0.2)
        from surface_maryland.band_structure import positive_bands

        bf = positive_bands(p, 64)[0]
        i = np.flatnonzero(bf.in_domain)[len(np.flatnonzero(bf.in_domain)) // 2]
        st_ = psi_periodic_surface(float(bf.k2[i]), bf.j, "minus", p)
        vals = st_.evaluate(np.arange(-40, 41), np.arange(5))
        mass = np.sum(np.abs(vals) ** 2)
        edge = np.sum(np.abs(vals[[0, -1]]) ** 2)
        assert np.isfinite(mass) and edge < 1e-10 * mass
        assert residual(st_, p) < 1e-9

    def test_surface_refuses_open_channels(self):
        p = ModelParams(g=1.0, alpha=Fraction(0, 1), omega=0.25)
        from surface_maryland.errors import NearBandEdge

        with pytest.raises(NearBandEdge):
            psi_periodic_surface(0.1, 1, "minus", p, energy=-0.5)

    @pytest.mark.parametrize("E,k2", [(2.5, 0.1), (1.3, 0.1), (0.8, 0.0)])
    def test_normalization_against_quadrature(self, E, k2):
        f = lambda k1: (-math.cos(2 * math.pi * k1) - math.cos(2 * math.pi * k2) - E) ** -2  # noqa: E731
        ref = math.sqrt(integrate.quad(f, 0, 1, epsabs=1e-13, epsrel=1e-13)[0])
        assert surface_normalization(E, k2) == pytest.approx(ref, rel=1e-10)

    def test_normalization_diverges_in_band(self):
        with pytest.raises(DegenerateEnergy):
            surface_normalization(0.2, 0.25)


class TestSurfaceEquation:
    @pytest.mark.parametrize("k", [(0.1, 0.2), (0.3, 0.15)])
    def test_residual(self, k):
        r = lippmann_schwinger_residual(k, "minus", QP)
        assert r.residual <= 1e-4

    def test_wrong_side_kernel(self):
        r = lippmann_schwinger_residual((0.1, 0.2), "minus", QP, kernel_side="lower", tail_tol=10)
        assert r.residual >= 0.1

    def test_van_hove_energy_refused(self):
        with pytest.raises(NearSingularEnergy):
            lippmann_schwinger_residual((0.25, 0.25), "minus", QP)
