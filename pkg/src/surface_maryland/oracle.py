"""Independent ground truth by brute force.

Three oracles, none of which touches the Cayley machinery:

* a Dirichlet box ``|x1| <= L1, |x2| <= L2`` with the Hamiltonian assembled
  site by site, solved with a sparse LU factorization;
* the Bloch strip ``H_q(k2)`` of width ``q`` in ``x2`` (periodic alpha),
  diagonalized densely;
* tensor-grid torus quadrature of the free Green function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BadInput, SolveFailure
from .surface_symbols import ModelParams, potential_v


@dataclass(frozen=True)
class BoxSpec:
    """Dirichlet box ``[-L1, L1] x [-L2, L2]`` in ``Z^2``."""

    L1: int
    L2: int

    def __post_init__(self) -> None:
        if self.L1 < 0 or self.L2 < 0:
            raise BadInput("half-widths must be nonnegative")
        if self.n_sites > 100_000:
            raise BadInput("box exceeds 1e5 sites")

    @property
    def n_sites(self) -> int:
        return (2 * self.L1 + 1) * (2 * self.L2 + 1)

    def index(self, x) -> int:
        x1, x2 = int(x[0]), int(x[1])
        if abs(x1) > self.L1 or abs(x2) > self.L2:
            raise BadInput(f"site {x} outside the box")
        return (x1 + self.L1) * (2 * self.L2 + 1) + (x2 + self.L2)


@dataclass(frozen=True)
class StripSpec:
    """Bloch strip ``|x1| <= L1``, ``x2 in 1..q`` with quasi-momentum ``k2``."""

    q: int
    k2: float
    L1: int

    def __post_init__(self) -> None:
        if self.q < 1 or self.L1 < 0:
            raise BadInput("need q >= 1 and L1 >= 0")


def _chain(n: int) -> sp.csr_matrix:
    off = -0.5 * np.ones(n - 1)
    return sp.diags([off, off], [-1, 1], shape=(n, n), format="csr")


def _require_2d(params: ModelParams) -> None:
    if params.d1 != 1 or params.d2 != 1:
        raise BadInput("the oracles are implemented for d1 = d2 = 1")


def box_hamiltonian(params: ModelParams, box: BoxSpec) -> sp.csr_matrix:
    """Sparse real symmetric Hamiltonian on the Dirichlet box."""
    _require_2d(params)
    n1, n2 = 2 * box.L1 + 1, 2 * box.L2 + 1
    H = sp.kron(_chain(n1), sp.identity(n2)) + sp.kron(sp.identity(n1), _chain(n2))
    v = np.array([potential_v(x2, params) for x2 in range(-box.L2, box.L2 + 1)])
    diag = np.zeros(n1 * n2)
    start = box.L1 * n2
    diag[start:start + n2] = v
    return (H + sp.diags(diag)).tocsr()


class BoxResolvent:
    """Factorized ``(H_box - z)^{-1}`` for repeated entry queries."""

    def __init__(self, params: ModelParams, box: BoxSpec, z: complex) -> None:
        self.box = box
        H = box_hamiltonian(params, box)
        A = (H - complex(z) * sp.identity(box.n_sites)).tocsc().astype(complex)
        try:
            self._lu = spla.splu(A)
        except RuntimeError as exc:
            raise SolveFailure(str(exc)) from exc
        self._cols: dict[int, np.ndarray] = {}

    def column(self, y) -> np.ndarray:
        j = self.box.index(y)
        if j not in self._cols:
            rhs = np.zeros(self.box.n_sites, dtype=complex)
            rhs[j] = 1.0
            col = self._lu.solve(rhs)
            if not np.all(np.isfinite(col)):
                raise SolveFailure("non-finite resolvent column")
            self._cols[j] = col
        return self._cols[j]

    def entry(self, x, y) -> complex:
        return complex(self.column(y)[self.box.index(x)])


def box_resolvent(x, y, z: complex, params: ModelParams, box: BoxSpec) -> complex:
    """Single entry ``(H_box - z)^{-1}(x, y)``."""
    return BoxResolvent(params, box, z).entry(x, y)


def strip_hamiltonian(params: ModelParams, strip: StripSpec) -> np.ndarray:
    """Dense Hermitian Bloch matrix on ``(2 L1 + 1) q`` sites."""
    _require_2d(params)
    q, L1 = strip.q, strip.L1
    n1 = 2 * L1 + 1
    H = np.zeros((n1 * q, n1 * q), dtype=complex)
    idx = lambda x1, x2: (x1 + L1) * q + (x2 - 1)  # noqa: E731
    seam = np.exp(2j * np.pi * strip.k2 * q)
    for x1 in range(-L1, L1 + 1):
        for x2 in range(1, q + 1):
            i = idx(x1, x2)
            if x1 < L1:
                j = idx(x1 + 1, x2)
                H[i, j] += -0.5
                H[j, i] += -0.5
            if x2 < q:
                j = idx(x1, x2 + 1)
                H[i, j] += -0.5
                H[j, i] += -0.5
            else:
                j = idx(x1, 1)
                H[i, j] += -0.5 * seam
                H[j, i] += -0.5 * np.conj(seam)
        if x1 == 0:
            for x2 in range(1, q + 1):
                H[idx(0, x2), idx(0, x2)] += potential_v(x2, params)
    return H


@dataclass(frozen=True)
class StripLevel:
    energy: float
    surface_weight: float
    surface_candidate: bool
    outside_bands: bool = False
    far_weight: float = 0.0


def strip_eigenvalues(
    params: ModelParams, strip: StripSpec, window: int = 2, weight_cut: float = 0.5
) -> list[StripLevel]:
    """Eigenvalues of ``H_q(k2)`` with their weight on ``|x1| <= window``.

    ``far_weight`` is the mass on ``|x1| > L1/2``; it is negligible for levels
    that decay exponentially away from the surface.

    A level is a surface candidate when its weight exceeds ``weight_cut`` and
    it lies outside every transverse band
    ``[-1 - cos 2 pi (k2 + l/q), 1 - cos 2 pi (k2 + l/q)]``.
    """
    if params.q != strip.q:
        raise BadInput("strip period must equal the denominator of alpha")
    H = strip_hamiltonian(params, strip)
    vals, vecs = scipy.linalg.eigh(H)
    q, L1 = strip.q, strip.L1
    mass = np.abs(vecs) ** 2
    x1 = np.repeat(np.arange(-L1, L1 + 1), q)
    weights = mass[np.abs(x1) <= window].sum(axis=0)
    far = mass[np.abs(x1) > L1 // 2].sum(axis=0)
    c = np.cos(2 * np.pi * (strip.k2 + np.arange(q) / q))
    lo, hi = -1.0 - c, 1.0 - c
    out = []
    for E, w, f in zip(vals, weights, far):
        outside = bool(np.all((E < lo) | (E > hi)))
        out.append(StripLevel(float(E), float(w), bool(w > weight_cut and outside), outside, float(f)))
    return out


def quadrature_green(nu: int, x, z: complex, n: int | None = None) -> complex:
    """Free Green function by midpoint quadrature on an ``n**nu`` torus grid."""
    if nu not in (1, 2):
        raise BadInput("quadrature oracle supports nu = 1, 2")
    z = complex(z)
    if z.imag == 0:
        raise BadInput("quadrature oracle needs Im z != 0")
    x = np.atleast_1d(np.asarray(x, dtype=int))
    if x.size != nu:
        raise BadInput("lattice vector has the wrong length")
    n = n or (4096 if nu == 1 else 1024)
    k = (np.arange(n) + 0.5) / n
    c = np.cos(2 * np.pi * k)
    if nu == 1:
        return complex(np.mean(np.exp(2j * np.pi * k * x[0]) / (-c - z)))
    e1 = np.exp(2j * np.pi * k * x[0])
    e2 = np.exp(2j * np.pi * k * x[1])
    denom = -c[:, None] - c[None, :] - z
    return complex(np.mean((e1[:, None] * e2[None, :]) / denom))


def strip_green(x, y, z: complex, params: ModelParams, L1: int = 200, n_k: int = 512) -> complex:
    """Green function of the periodic model assembled from Bloch strips.

    ``G(x, y) = q * integral over k2 in [0, 1/q) of (H_q(k2) - z)^{-1}`` with
    the Bloch phase of the quasi-periodic continuation restored.
    """
    q = params.q
    L = L1
    ks = (np.arange(n_k) + 0.5) / (n_k * q)
    x1, x2 = int(x[0]), int(x[1])
    y1, y2 = int(y[0]), int(y[1])
    # reduce the x2 coordinates into the strip 1..q
    rx, nx = (x2 - 1) % q + 1, (x2 - 1) // q
    ry, ny = (y2 - 1) % q + 1, (y2 - 1) // q
    i = (x1 + L) * q + rx - 1
    j = (y1 + L) * q + ry - 1
    total = 0.0j
    for k2 in ks:
        H = strip_hamiltonian(params, StripSpec(q, float(k2), L))
        rhs = np.zeros(H.shape[0], dtype=complex)
        rhs[j] = 1.0
        col = scipy.linalg.solve(H - z * np.eye(H.shape[0]), rhs)
        total += col[i] * np.exp(2j * np.pi * k2 * q * (nx - ny))
    return complex(total / n_k)
