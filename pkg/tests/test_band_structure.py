import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from surface_maryland.band_structure import (
    alpha_omega,
    assemble_spectrum,
    band_curve,
    band_diagnostics,
    band_range,
    convergents,
    critical_energies,
    dPhi_dE,
    diophantine_f,
    diophantine_root,
    limit_energy,
    negative_bands,
    phase_Phi_q,
    phase_phi,
    positive_bands,
    solve_band,
)
from surface_maryland.errors import BadInput, NoRoot, OutsideDomain
from surface_maryland.oracle import StripSpec, strip_eigenvalues
from surface_maryland.surface_symbols import ModelParams

Q1 = ModelParams(g=1.0, alpha=Fraction(0, 1), omega=0.25)


class TestPhases:
    def test_phi_values(self):
        assert phase_phi(0.0, math.sqrt(2) - 1.0, 1.0) == pytest.approx(0.25, abs=1e-15)
        assert phase_phi(0.25, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_phi_refuses_below_threshold(self):
        with pytest.raises(OutsideDomain):
            phase_phi(0.0, -0.5, 1.0)

    @given(st.floats(0, 1, exclude_max=True), st.floats(2.05, 6.0), st.floats(0.2, 3.0))
    def test_phi_bounded_and_increasing(self, k, E, g):
        a = float(phase_phi(k, E, g))
        b = float(phase_phi(k, E + 0.01, g))
        assert 0.0 <= a < b < 0.5

    def test_energy_derivative(self):
        p = ModelParams(g=1.0, alpha=Fraction(2, 5), omega=0.2)
        k, E, h = np.array([0.03, 0.11, 0.17]), 2.6, 1e-6
        fd = (phase_Phi_q(k, E + h, p) - phase_Phi_q(k, E - h, p)) / (2 * h)
        assert np.max(np.abs(dPhi_dE(k, E, p) - fd)) < 1e-7

    def test_phase_sum_is_period_invariant(self):
        p = ModelParams(g=1.0, alpha=Fraction(2, 5), omega=0.2)
        k = np.array([0.01, 0.07, 0.13])
        assert np.allclose(phase_Phi_q(k, 2.5, p), phase_Phi_q(k + 0.2, 2.5, p), atol=1e-13)


class TestQ1:
    @pytest.mark.parametrize("k2", [0.0, 0.1, 0.3, 0.5, 0.77])
    def test_closed_form(self, k2):
        assert solve_band(1, k2, Q1) == pytest.approx(math.sqrt(2) - math.cos(2 * math.pi * k2), abs=1e-12)

    def test_spectrum(self):
        sp = assemble_spectrum(Q1)
        assert sp.intervals[0][0] == pytest.approx(-2.0)
        assert sp.intervals[-1][1] == pytest.approx(math.sqrt(2) + 1, abs=1e-10)
        assert sp.contains(2.3) and not sp.contains(2.5)

    def test_critical_energies(self):
        crit = sorted(critical_energies(Q1))
        for want in (-2.0, 2.0, math.sqrt(2) - 1, math.sqrt(2) + 1):
            assert min(abs(c - want) for c in crit) < 1e-8

    def test_zero_index_refused(self):
        with pytest.raises(BadInput):
            solve_band(0, 0.1, Q1)


class TestBands:
    @pytest.mark.parametrize("q", range(2, 14))
    def test_count_bounded_by_half_period(self, q):
        p = ModelParams(g=1.0, alpha=Fraction(1, q), omega=0.17)
        assert len(positive_bands(p, 128)) <= q / 2

    def test_bands_increase_with_index(self):
        p = ModelParams(g=1.0, alpha=Fraction(3, 8), omega=0.2)
        bands = positive_bands(p, 256)
        for a, b in zip(bands[:-1], bands[1:]):
            both = a.in_domain & b.in_domain
            assert np.all(b.energies[both] > a.energies[both])

    def test_band_above_threshold(self):
        p = ModelParams(g=1.0, alpha=Fraction(2, 5), omega=0.2)
        for bf in positive_bands(p, 256):
            assert np.nanmin(bf.energies) >= 1.0 - 1e-9
            assert band_range(bf, p)[1] > 1.0

    def test_negative_bands_mirror(self):
        p = ModelParams(g=1.0, alpha=Fraction(2, 5), omega=0.2)
        for bf in negative_bands(p, 128):
            assert np.nanmax(bf.energies) <= -1.0 + 1e-9

    def test_strip_oracle_contains_band_samples(self):
        # band energies must coincide with eigenvalues of the Bloch strip
        p = ModelParams(g=1.0, alpha=Fraction(2, 5), omega=0.2)
        for bf in positive_bands(p, 64):
            idx = np.flatnonzero(bf.in_domain)[:: max(1, bf.in_domain.sum() // 3)]
            for i in idx:
                levels = strip_eigenvalues(p, StripSpec(5, float(bf.k2[i]), 120))
                E = bf.energies[i]
                assert min(abs(l.energy - E) for l in levels) < 1e-3

    def test_diagnostics(self):
        d = band_diagnostics(ModelParams(g=1.0, alpha=Fraction(3, 8), omega=0.2), 128)
        assert d.q == 8 and d.n_positive == len(d.widths)
        assert all(w >= 0 for w in d.widths.values())
        assert all(s > 0 for s in d.separations.values())
        assert d.fourier[0] >= d.fourier[-1]

    def test_alpha_omega_integer(self):
        assert isinstance(alpha_omega(ModelParams(g=1.0, alpha=Fraction(2, 5), omega=0.2)), int)

    def test_band_curve_fields(self):
        bf = band_curve(1, Q1, 32)
        assert bf.q == 1 and bf.k2.shape == bf.energies.shape
        assert bf.width == pytest.approx(2.0, abs=1e-6)


class TestIrrationalLimit:
    def test_f_monotone_and_bounded(self):
        E = [2.0, 2.5, 4.0, 10.0, 100.0]
        v = [diophantine_f(e, 1.0) for e in E]
        assert all(a < b for a, b in zip(v[:-1], v[1:]))
        assert v[-1] < 0.5

    def test_f_refuses_inside(self):
        with pytest.raises(OutsideDomain):
            diophantine_f(1.5, 1.0)

    def test_root_roundtrip(self):
        E = diophantine_root(0.4, 1.0)
        assert diophantine_f(E, 1.0) == pytest.approx(0.4, abs=1e-12)

    def test_root_out_of_range(self):
        with pytest.raises(NoRoot):
            diophantine_root(0.6, 1.0)

    def test_limit_energy_sign(self):
        alpha = (math.sqrt(5) - 1) / 2
        E = limit_energy(0, alpha, 0.4, 2.5)
        assert E > 2
        assert limit_energy(0, alpha, 0.6, 2.5) == pytest.approx(-E, abs=1e-10)

    def test_convergents(self):
        conv = convergents((math.sqrt(5) - 1) / 2, 8)
        assert conv[:7] == [(0, 1), (1, 1), (1, 2), (2, 3), (3, 5), (5, 8), (8, 13)]
        assert convergents(0.5, 5) == [(0, 1), (1, 2)]


def test_count_can_exceed_half_period_at_special_phases():
    # q = 3, omega = 0.13: a narrow second band appears; both are confirmed by the strip oracle
    p = ModelParams(g=1.0, alpha=Fraction(1, 3), omega=0.13)
    bands = positive_bands(p, 512)
    assert len(bands) == 2
    for bf in bands:
        i = np.flatnonzero(bf.in_domain)[bf.in_domain.sum() // 2]
        levels = strip_eigenvalues(p, StripSpec(3, float(bf.k2[i]), 200))
        assert min(abs(l.energy - bf.energies[i]) for l in levels) < 1e-6
