"""Green functions of the discrete Laplacian on Z^nu.

The free Hamiltonian is ``H0 = -1/2 * (sum over nearest neighbours)`` with
momentum symbol ``E_nu(k) = -sum_i cos(2 pi k_i)``, so that its spectrum is
``[-nu, nu]``.  Its Green function is

    G0(x; z) = integral over the unit torus of exp(2 pi i k.x) / (E_nu(k) - z).

In one dimension this has the closed form ``-rho**|x| / s`` with
``s = sqrt(z**2 - 1)`` (the branch behaving like ``z`` at infinity) and
``rho = -z + s``.  Higher dimensions go through the Bessel time integral

    G0(x; z) = i * int_0^inf exp(i z t) prod_l i**x_l J_{x_l}(t) dt,

valid for ``Im z > 0``.  Boundary values ``E +- i0`` are obtained by closed
form (nu = 1) or by Richardson extrapolation in the imaginary part.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy import special

from .errors import BadInput, BranchPoint, ConvergenceFailure, NearSingularEnergy


class Side(str, enum.Enum):
    """Which boundary value of the resolvent is requested."""

    UPPER = "upper"
    LOWER = "lower"
    OFF_AXIS = "off-axis"


@dataclass(frozen=True)
class ComplexEnergy:
    """Spectral parameter ``z = re + i*im`` with a boundary-side marker.

    ``side`` is ``upper`` / ``lower`` for the limits ``E + i0`` / ``E - i0``
    (then ``im`` must be 0) and ``off-axis`` for a genuine complex number.
    Off-axis energies may lie in either half plane so that conjugation
    symmetries can be exercised; the boundary sides carry ``im = 0``.
    """

    re: float
    im: float = 0.0
    side: Side = Side.OFF_AXIS

    def __post_init__(self) -> None:
        object.__setattr__(self, "side", Side(self.side))
        object.__setattr__(self, "re", float(self.re))
        object.__setattr__(self, "im", float(self.im))
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise BadInput("energy must be finite")
        if self.side is Side.OFF_AXIS and self.im == 0.0:
            raise BadInput("off-axis energy needs a nonzero imaginary part")
        if self.side is not Side.OFF_AXIS and self.im != 0.0:
            raise BadInput("boundary energies carry im = 0")

    @classmethod
    def upper(cls, E: float) -> "ComplexEnergy":
        return cls(E, 0.0, Side.UPPER)

    @classmethod
    def lower(cls, E: float) -> "ComplexEnergy":
        return cls(E, 0.0, Side.LOWER)

    @classmethod
    def at(cls, z: complex) -> "ComplexEnergy":
        z = complex(z)
        return cls(z.real, z.imag, Side.OFF_AXIS)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def on_axis(self) -> bool:
        return self.side is not Side.OFF_AXIS

    def conjugate(self) -> "ComplexEnergy":
        if self.side is Side.UPPER:
            return ComplexEnergy.lower(self.re)
        if self.side is Side.LOWER:
            return ComplexEnergy.upper(self.re)
        return ComplexEnergy(self.re, -self.im, Side.OFF_AXIS)

    def shifted(self, delta: float) -> "ComplexEnergy":
        """Energy ``z + delta`` for real ``delta``, keeping the side."""
        return ComplexEnergy(self.re + delta, self.im, self.side)


EnergyLike = Union[ComplexEnergy, complex, float]


def as_energy(z: EnergyLike) -> ComplexEnergy:
    """Coerce a plain number into a :class:`ComplexEnergy`.

    Real numbers are read as upper boundary values ``E + i0``.
    """
    if isinstance(z, ComplexEnergy):
        return z
    z = complex(z)
    if z.imag == 0.0:
        return ComplexEnergy.upper(z.real)
    return ComplexEnergy.at(z)


@dataclass(frozen=True)
class GreenValue:
    """A complex value with an a-posteriori absolute error estimate."""

    value: complex
    err: float = 0.0

    def __post_init__(self) -> None:
        if not (self.err >= 0.0 and math.isfinite(self.err)):
            raise BadInput("err must be finite and nonnegative")

    def __complex__(self) -> complex:
        return complex(self.value)


# ---------------------------------------------------------------------------
# one dimension, vectorized over energies


def _side_name(side: Union[Side, str, None]) -> str:
    if side is None:
        return "upper"
    side = Side(side)
    return "upper" if side is Side.OFF_AXIS else side.value


def sqrt_z2m1(w, side: Union[Side, str, None] = "upper") -> np.ndarray:
    """Branch of ``sqrt(w**2 - 1)`` that behaves like ``w`` at infinity.

    Entries of ``w`` with zero imaginary part are read as ``w + i0``
    (``side='upper'``) or ``w - i0`` (``side='lower'``).
    """
    w = np.asarray(w, dtype=complex)
    axis = w.imag == 0.0
    wu = np.where(axis, w.real + 0.0j, w)
    s = np.sqrt(wu - 1.0) * np.sqrt(wu + 1.0)
    if _side_name(side) == "lower":
        s = np.where(axis, np.conj(s), s)
    return s


def _rho(w, s, side) -> np.ndarray:
    """``-w + s``, the root of modulus <= 1 of ``rho**2 + 2 w rho + 1``."""
    w = np.asarray(w, dtype=complex)
    rho = -w + s
    axis = w.imag == 0.0
    sign = 1.0 if _side_name(side) == "upper" else -1.0
    fixed = rho.real + 1j * sign * np.abs(rho.imag)
    return np.where(axis, fixed, rho)


def eta_values(w, side: Union[Side, str, None] = "upper") -> np.ndarray:
    """Vectorized phase function ``eta(w) = -i log(-w + sqrt(w**2 - 1))``."""
    w = np.asarray(w, dtype=complex)
    s = sqrt_z2m1(w, "upper")
    rho = _rho(w, s, "upper")
    eta = -1j * np.log(rho)
    if _side_name(side) == "lower":
        axis = w.imag == 0.0
        eta = np.where(axis, -np.conj(eta), eta)
    return eta


def green_1d_values(x: int, w, side: Union[Side, str, None] = "upper") -> np.ndarray:
    """Vectorized ``G0^(1)(x; w)``; on-axis entries use the requested side.

    Branch points ``w = +-1`` on the axis give ``inf``.
    """
    w = np.asarray(w, dtype=complex)
    s = sqrt_z2m1(w, side)
    rho = _rho(w, s, side)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -(rho ** abs(int(x))) / s
    return np.where(s == 0, np.inf + 0j, out)


def eta(z: EnergyLike) -> complex:
    """Phase ``eta`` with ``-cos(eta) = z`` and ``Im eta >= 0`` in the upper half plane.

    Parameters
    ----------
    z : ComplexEnergy or number
        Spectral parameter; the side of a boundary value selects the branch.

    Returns
    -------
    complex
        For ``E + i0``: ``eta`` in ``(0, pi)`` when ``|E| < 1``, in
        ``pi + i R+`` when ``E > 1`` and in ``i R+`` when ``E < -1``.
    """
    ze = as_energy(z)
    return complex(eta_values(np.array([ze.value]), _side_name(ze.side))[0])


def green_1d(x: int, z: EnergyLike) -> GreenValue:
    """Closed-form one dimensional Green function ``-exp(i eta |x|) / sqrt(z**2-1)``.

    Raises
    ------
    BranchPoint
        If ``z = +-1`` exactly on the real axis.
    """
    ze = as_energy(z)
    if ze.on_axis and abs(ze.re) == 1.0:
        raise BranchPoint(f"G0 diverges at z = {ze.re:+g} on the axis; use Im z > 0")
    val = green_1d_values(int(x), np.array([ze.value]), _side_name(ze.side))[0]
    return GreenValue(complex(val), 0.0)


def dos_1d(E: float) -> float:
    """``Im G0^(1)(0; E + i0)``, equal to ``(1 - E**2)**-1/2`` inside the band."""
    E = float(E)
    if abs(E) >= 1.0:
        return 0.0
    return 1.0 / math.sqrt(1.0 - E * E)


# ---------------------------------------------------------------------------
# Bessel time integral for nu >= 2


@lru_cache(maxsize=8)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def _time_nodes(T: float, freq: float, n: int):
    """Composite Gauss-Legendre nodes on ``[0, T]``."""
    h = min(2.0, 12.0 / max(freq, 1.0))
    n_panels = max(1, int(math.ceil(T / h)))
    edges = np.linspace(0.0, T, n_panels + 1)
    xg, wg = _gauss_legendre(n)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    wt = (half[:, None] * wg[None, :]).ravel()
    return t, wt


def _bessel_product(x: Sequence[int], t: np.ndarray) -> np.ndarray:
    prod = np.ones_like(t, dtype=complex)
    for xl in x:
        n = abs(int(xl))
        prod = prod * (1j ** n) * special.jv(n, t)
    return prod


def green_time_values(
    x: Sequence[int],
    w,
    tol: float = 1e-12,
    t_max: float = 2.0e5,
) -> tuple[np.ndarray, np.ndarray]:
    """Bessel time integral for many energies ``w`` sharing one lattice vector.

    Energies in the lower half plane are handled through conjugation.

    Returns
    -------
    values, errs : ndarray
        Green function values and error estimates (tail bound plus the
        difference between two Gauss-Legendre orders).
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if np.any(w.imag == 0.0):
        raise BadInput("the time-integral route needs Im z != 0")
    flip = w.imag < 0
    wu = np.where(flip, np.conj(w), w)
    eps = float(np.min(wu.imag))
    T = math.log(1.0 / (eps * tol)) / eps
    if T > t_max:
        raise ConvergenceFailure(
            f"time cutoff {T:.3g} exceeds t_max = {t_max:.3g} for Im z = {eps:.3g}"
        )
    T = max(T, 1.0)
    freq = float(np.max(np.abs(wu.real))) + len(x)
    out = []
    for n in (32, 20):
        t, wt = _time_nodes(T, freq, n)
        f = _bessel_product(x, t) * wt
        chunk = max(1, int(4.0e6 // max(t.size, 1)))
        vals = np.empty(wu.size, dtype=complex)
        for i in range(0, wu.size, chunk):
            ph = np.exp(1j * np.outer(wu[i:i + chunk], t))
            vals[i:i + chunk] = 1j * (ph @ f)
        out.append(vals)
    tail = np.exp(-wu.imag * T) / wu.imag
    err = np.abs(out[0] - out[1]) + tail
    vals = np.where(flip, np.conj(out[0]), out[0])
    return vals, err


def _as_vector(nu: int, x) -> tuple[int, ...]:
    if np.isscalar(x):
        x = (int(x),) + (0,) * (nu - 1)
    x = tuple(int(v) for v in x)
    if len(x) != nu:
        raise BadInput(f"lattice vector {x} does not have {nu} components")
    return x


def green_nd(
    nu: int,
    x,
    z: EnergyLike,
    tol: float = 1e-12,
    t_max: float = 2.0e5,
) -> GreenValue:
    """Green function of the ``nu``-dimensional Laplacian.

    Parameters
    ----------
    nu : int
        Dimension, 1 to 3.
    x : int or sequence of int
        Lattice vector.
    z : ComplexEnergy or complex
        Off-axis energy for ``nu >= 2``; ``nu = 1`` uses the closed form.
    tol : float
        Target size of the truncated tail of the time integral.

    Raises
    ------
    ConvergenceFailure
        If the time cutoff needed for ``tol`` exceeds ``t_max``.
    """
    if nu not in (1, 2, 3):
        raise BadInput("supported dimensions are 1, 2, 3")
    xv = _as_vector(nu, x)
    ze = as_energy(z)
    if nu == 1:
        return green_1d(xv[0], ze)
    if ze.on_axis:
        return green_nd_boundary(nu, xv, ze.re, ze.side)
    vals, errs = green_time_values(xv, np.array([ze.value]), tol=tol, t_max=t_max)
    return GreenValue(complex(vals[0]), float(errs[0]))


def singular_energies(nu: int) -> np.ndarray:
    """Van Hove energies of the ``nu``-dimensional Laplacian."""
    return np.array([nu - 2.0 * j for j in range(nu + 1)])


def green_nd_boundary(
    nu: int,
    x,
    E: float,
    side: Union[Side, str] = "upper",
    eps0: float = 0.2,
    levels: int = 6,
    exclusion: float = 0.02,
    tol: float = 1e-12,
) -> GreenValue:
    """Boundary value ``G0(x; E +- i0)``.

    For ``nu >= 2`` the values at ``eps_j = eps0 * 2**-j`` are extrapolated
    to ``eps = 0`` with a Richardson table.  The table is only meaningful
    while the smallest ``eps`` is well below the distance to the nearest van
    Hove energy (``nu - 2 j``), so energies closer than ``exclusion`` are
    refused: there the error estimate was seen to understate the true error
    by orders of magnitude.

    Raises
    ------
    NearSingularEnergy
        When ``E`` is within ``exclusion`` of a van Hove energy.
    """
    side = Side(side)
    if side is Side.OFF_AXIS:
        raise BadInput("side must be upper or lower")
    xv = _as_vector(nu, x)
    if nu == 1:
        return green_1d(xv[0], ComplexEnergy(E, 0.0, side))
    E = float(E)
    dist = float(np.min(np.abs(singular_energies(nu) - E)))
    if dist < exclusion:
        raise NearSingularEnergy(f"E = {E} is within {exclusion} of a van Hove energy")
    e0 = min(eps0, max(0.5 * dist, 0.02))
    eps = e0 * 2.0 ** -np.arange(levels)
    vals, errs = green_time_values(xv, E + 1j * eps, tol=tol, t_max=1e7)
    table = [vals.copy()]
    for k in range(1, levels):
        prev = table[-1]
        fac = 2.0 ** k
        table.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
    best = complex(table[-1][0])
    err = float(abs(table[-1][0] - table[-2][-1])) + float(np.max(errs))
    if side is Side.LOWER:
        best = best.conjugate()
    return GreenValue(best, err)
