import math
from fractions import Fraction

import numpy as np
import pytest

from surface_maryland.errors import BadInput
from surface_maryland.lattice_green import green_nd
from surface_maryland.oracle import (
    BoxResolvent,
    BoxSpec,
    StripSpec,
    box_hamiltonian,
    box_resolvent,
    quadrature_green,
    strip_eigenvalues,
    strip_green,
    strip_hamiltonian,
)
from surface_maryland.resolvent_series import green_constant_potential
from surface_maryland.surface_symbols import ModelParams, potential_v


def test_box_limits():
    with pytest.raises(BadInput):
        BoxSpec(-1, 3)
    with pytest.raises(BadInput):
        BoxSpec(200, 200)
    with pytest.raises(BadInput):
        BoxSpec(2, 2).index((3, 0))
    assert BoxSpec(1, 2).n_sites == 15


def test_box_hamiltonian_structure():
    p = ModelParams(g=1.0, omega=0.3)
    box = BoxSpec(3, 4)
    H = box_hamiltonian(p, box)
    assert abs(H - H.T).max() == 0
    d = H.diagonal()
    for x2 in range(-4, 5):
        assert d[box.index((0, x2))] == pytest.approx(potential_v(x2, p))
        assert d[box.index((1, x2))] == 0.0


def test_weak_coupling_spectrum_inside_laplacian_range():
    H = box_hamiltonian(ModelParams(g=1e-8, omega=0.3), BoxSpec(10, 10))
    vals = np.linalg.eigvalsh(H.toarray())
    assert vals.min() > -2.0 and vals.max() < 2.0


def test_box_resolvent_approaches_free_far_from_spectrum():
    p = ModelParams(g=1e-8, omega=0.3)
    z = 5j
    got = box_resolvent((1, 2), (0, 0), z, p, BoxSpec(20, 20))
    assert abs(got - green_nd(2, (1, 2), z).value) < 1e-6


def test_box_resolvent_adjoint():
    p = ModelParams(g=1.0, omega=0.3)
    box = BoxSpec(8, 8)
    z = 0.4 + 0.2j
    a = BoxResolvent(p, box, z).entry((1, 2), (-3, 0))
    b = BoxResolvent(p, box, np.conj(z)).entry((-3, 0), (1, 2))
    assert abs(a - np.conj(b)) < 1e-12
    # real symmetric H: the resolvent is also symmetric
    c = BoxResolvent(p, box, z).entry((-3, 0), (1, 2))
    assert abs(a - c) < 1e-12


def test_box_resolvent_against_direct_solve():
    p = ModelParams(g=1.0, omega=0.3)
    box = BoxSpec(4, 4)
    z = 0.1 + 0.3j
    A = box_hamiltonian(p, box).toarray() - z * np.eye(box.n_sites)
    inv = np.linalg.inv(A)
    assert abs(box_resolvent((2, -1), (0, 3), z, p, box) - inv[box.index((2, -1)), box.index((0, 3))]) < 1e-12


def test_strip_hermitian_and_q_mismatch():
    p = ModelParams(g=1.0, alpha=Fraction(2, 5), omega=0.2)
    H = strip_hamiltonian(p, StripSpec(5, 0.13, 6))
    assert np.allclose(H, H.conj().T)
    with pytest.raises(BadInput):
        strip_eigenvalues(p, StripSpec(3, 0.1, 4))


def test_strip_q1_surface_level():
    p = ModelParams(g=1.0, alpha=Fraction(0, 1), omega=0.25)
    levels = strip_eigenvalues(p, StripSpec(1, 0.0, 60))
    cands = [l for l in levels if l.surface_candidate]
    assert len(cands) == 1
    assert cands[0].energy == pytest.approx(math.sqrt(2) - 1, abs=1e-10)


def test_quadrature_green():
    assert quadrature_green(1, 0, 2.0 + 1j) == pytest.approx(green_nd(1, (0,), 2.0 + 1j).value, abs=1e-12)
    assert quadrature_green(2, (1, 1), 0.3 + 0.5j) == pytest.approx(green_nd(2, (1, 1), 0.3 + 0.5j).value, abs=1e-8)
    with pytest.raises(BadInput):
        quadrature_green(1, 0, 0.5)


def test_strip_green_q1_is_constant_potential():
    p = ModelParams(g=1.0, alpha=Fraction(0, 1), omega=0.2)
    z = 0.3 + 0.8j
    ref = green_constant_potential((1, 2), (0, 0), z, math.tan(math.pi * 0.2)).value
    assert abs(strip_green((1, 2), (0, 0), z, p, L1=60, n_k=256) - ref) < 1e-8


def test_far_weight_separates_localized_from_extended():
    p = ModelParams(g=1.0, alpha=Fraction(0, 1), omega=0.25)
    levels = strip_eigenvalues(p, StripSpec(1, 0.0, 60))
    loc = [l for l in levels if l.outside_bands]
    ext = [l for l in levels if not l.outside_bands]
    assert len(loc) == 1 and loc[0].far_weight < 1e-12
    assert min(l.far_weight for l in ext) > 0.1
