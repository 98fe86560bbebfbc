"""Model parameters, the surface potential and its momentum-space symbols.

The potential lives on the plane ``x1 = 0`` of ``Z^d = Z^d1 x Z^d2`` and
equals ``g tan(pi (alpha . x2 + omega))`` there.  Everything the resolvent
needs is expressed through the local symbol

    gamma0(k2; z) = G0^(d1)(0; z - E_d2(k2)),

its Cayley transform ``b(k2; z) = (g gamma0 - i) / (g gamma0 + i)`` and the
shifted products ``P_m(k2; z) = sigma**m prod_{l=1..m} b(k2 + l alpha; z)``
with ``sigma = exp(-2 pi i omega)``.  The T-operator coefficients are

    t_0(k2)  = -g c(k2),
    t_m(k2)  = 2 i g sigma c(k2) c(k2 + m alpha) P_{m-1}(k2),   m >= 1,

where ``c = 1 / (g gamma0 + i)``.  For rational ``alpha = p/q`` the series
over ``m`` resums into ``q`` terms divided by ``1 - P_q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import BadInput, ConvergenceFailure, NearPole, SingularPotential
from .lattice_green import (
    ComplexEnergy,
    EnergyLike,
    GreenValue,
    Side,
    as_energy,
    green_1d_values,
    green_time_values,
    sqrt_z2m1,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
POLE_TOL = 1e-9

AlphaLike = Union[Fraction, float, Sequence[float]]


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the surface potential ``g tan(pi (alpha . x2 + omega))``.

    Parameters
    ----------
    g : float
        Coupling, strictly positive.
    alpha : Fraction, float or sequence of float
        A :class:`fractions.Fraction` selects the periodic case ``p/q``
        (``d2 = 1`` only); a float or a vector is treated as a generic
        (quasiperiodic) frequency.
    omega : float
        Phase in ``[0, 1)``.
    d1, d2 : int
        Transverse and surface dimensions, ``d1 + d2 <= 4``.
    """

    g: float
    alpha: AlphaLike = GOLDEN
    omega: float = 0.2
    d1: int = 1
    d2: int = 1
    _alpha_vec: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (self.g > 0 and math.isfinite(self.g)):
            raise BadInput("g must be a positive finite number")
        if not (0.0 <= self.omega < 1.0):
            raise BadInput("omega must lie in [0, 1)")
        if self.d1 < 1 or self.d2 < 1 or self.d1 + self.d2 > 4 or self.d1 > 3:
            raise BadInput("need d1, d2 >= 1, d1 <= 3 and d1 + d2 <= 4")
        alpha = self.alpha
        if isinstance(alpha, Fraction):
            if self.d2 != 1:
                raise BadInput("rational alpha is supported for d2 = 1 only")
            if alpha.denominator < 1:
                raise BadInput("q must be positive")
            vec = np.array([float(alpha)])
        else:
            vec = np.atleast_1d(np.asarray(alpha, dtype=float))
            if vec.shape != (self.d2,):
                raise BadInput(f"alpha needs {self.d2} components")
            if self.d2 == 1:
                object.__setattr__(self, "alpha", float(vec[0]))
            else:
                object.__setattr__(self, "alpha", tuple(float(a) for a in vec))
        object.__setattr__(self, "_alpha_vec", vec)
        if self.is_rational:
            p, q = self.p, self.q
            for x2 in range(q):
                frac = ((p * x2) % q) / q + self.omega
                if abs((frac % 1.0) - 0.5) < POLE_TOL:
                    raise SingularPotential(
                        f"omega = {self.omega} puts x2 = {x2} (mod {q}) on a tan pole"
                    )

    @property
    def d(self) -> int:
        return self.d1 + self.d2

    @property
    def is_rational(self) -> bool:
        return isinstance(self.alpha, Fraction)

    @property
    def p(self) -> int:
        self._need_rational()
        return self.alpha.numerator

    @property
    def q(self) -> int:
        self._need_rational()
        return self.alpha.denominator

    def _need_rational(self) -> None:
        if not self.is_rational:
            raise BadInput("this operation needs rational alpha = p/q")

    @property
    def alpha_vector(self) -> np.ndarray:
        return self._alpha_vec

    @property
    def sigma(self) -> complex:
        return complex(np.exp(-2j * np.pi * self.omega))

    def replace(self, **changes) -> "ModelParams":
        kw = dict(g=self.g, alpha=self.alpha, omega=self.omega, d1=self.d1, d2=self.d2)
        kw.update(changes)
        return ModelParams(**kw)

    def shift(self, k2, m: int) -> np.ndarray:
        """``k2 + m alpha`` reduced to ``[0, 1)`` componentwise.

        Rational shifts are exact; irrational ones are accumulated in
        extended precision.
        """
        k2 = np.asarray(k2, dtype=float)
        if self.is_rational:
            off = ((m * self.p) % self.q) / self.q
            return np.mod(k2 + off, 1.0)
        a = np.mod(np.longdouble(m) * self._alpha_vec.astype(np.longdouble), 1.0)
        if self.d2 == 1:
            return np.mod(k2 + float(a[0]), 1.0)
        return np.mod(k2 + a.astype(float), 1.0)


def energy_symbol(k, nu: int | None = None) -> np.ndarray:
    """``E_nu(k) = -sum_i cos(2 pi k_i)``.

    ``k`` has shape ``(..., nu)``; with ``nu = 1`` a plain array of scalars is
    also accepted.
    """
    k = np.asarray(k, dtype=float)
    if nu == 1 and (k.ndim == 0 or k.shape[-1] != 1):
        return -np.cos(2 * np.pi * k)
    if nu is not None and k.shape[-1] != nu:
        raise BadInput(f"momentum needs {nu} components")
    return -np.sum(np.cos(2 * np.pi * k), axis=-1)


def surface_energy(k2, params: ModelParams) -> np.ndarray:
    """``E_d2(k2)`` for ``k2`` of shape ``(...)`` (d2 = 1) or ``(..., d2)``."""
    return energy_symbol(k2, params.d2)


def _frac_phase(x2, params: ModelParams) -> float:
    if params.is_rational:
        x2 = int(np.ravel(x2)[0])
        return (((params.p * x2) % params.q) / params.q + params.omega) % 1.0
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    return float((np.dot(params.alpha_vector, x2) + params.omega) % 1.0)


def potential_v(x2, params: ModelParams) -> float:
    """Surface potential ``g tan(pi (alpha . x2 + omega))`` at site ``x2``.

    Raises
    ------
    SingularPotential
        If the argument lies within 1e-9 of a pole.
    """
    phase = _frac_phase(x2, params)
    if abs(phase - 0.5) < POLE_TOL:
        raise SingularPotential(f"tan pole at x2 = {x2}")
    return params.g * math.tan(math.pi * phase)


def potential_cayley(x2, params: ModelParams) -> float:
    """The same potential written as ``(g/i) (1 - sigma u) / (1 + sigma u)``."""
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    u = np.exp(-2j * np.pi * float(np.dot(params.alpha_vector, x2)))
    su = params.sigma * u
    return complex(params.g / 1j * (1 - su) / (1 + su)).real


# ---------------------------------------------------------------------------
# symbols, vectorized over k2


@dataclass(frozen=True)
class ChannelSymbols:
    """Pointwise symbols at one set of surface momenta."""

    gamma: np.ndarray
    c: np.ndarray
    b: np.ndarray


def _channel_energy(k2, z: ComplexEnergy, params: ModelParams) -> np.ndarray:
    return z.value - surface_energy(k2, params)


def symbols(k2, z: EnergyLike, params: ModelParams) -> ChannelSymbols:
    """``gamma0``, ``c = 1/(g gamma0 + i)`` and ``b`` at momenta ``k2``.

    For ``d1 = 1`` the Cayley quantities are written through
    ``s = sqrt(w**2 - 1)``, which keeps them finite at the thresholds
    ``w = +-1`` where ``gamma0`` itself diverges.
    """
    ze = as_energy(z)
    w = np.asarray(_channel_energy(k2, ze, params), dtype=complex)
    g = params.g
    side = "lower" if ze.side is Side.LOWER else "upper"
    if params.d1 == 1:
        s = sqrt_z2m1(w, side)
        with np.errstate(divide="ignore", invalid="ignore"):
            gamma = np.where(s == 0, np.inf + 0j, -1.0 / s)
        c = s / (-g + 1j * s)
        b = (g + 1j * s) / (g - 1j * s)
        return ChannelSymbols(gamma, c, b)
    if ze.on_axis:
        raise BadInput("on-axis symbols are implemented for d1 = 1 only")
    flat = w.ravel()
    gamma, _ = green_time_values((0,) * params.d1, flat)
    gamma = gamma.reshape(w.shape)
    c = 1.0 / (g * gamma + 1j)
    b = (g * gamma - 1j) * c
    return ChannelSymbols(gamma, c, b)


def gamma0_hat(k2, z: EnergyLike, params: ModelParams) -> GreenValue:
    """Local symbol ``G0^(d1)(0; z - E_d2(k2))`` at a single momentum."""
    ze = as_energy(z)
    w = complex(_channel_energy(k2, ze, params))
    if params.d1 == 1:
        side = "lower" if ze.side is Side.LOWER else "upper"
        val = green_1d_values(0, np.array([w]), side)[0]
        return GreenValue(complex(val), 0.0)
    vals, errs = green_time_values((0,) * params.d1, np.array([w]))
    return GreenValue(complex(vals[0]), float(errs[0]))


def b_hat(k2, z: EnergyLike, params: ModelParams) -> np.ndarray:
    """Cayley transform of ``g gamma0``; modulus at most 1 when ``Im z >= 0``."""
    return symbols(k2, z, params).b


def k_gamma_membership(k2, E: float, gamma: float, params: ModelParams) -> np.ndarray:
    """Indicator of ``E - E_d2(k2)`` in ``[-d1 + gamma, d1 - gamma]``."""
    if not (0.0 < gamma < params.d1):
        raise BadInput("need 0 < gamma < d1")
    lam = E - surface_energy(k2, params)
    return np.abs(lam) <= params.d1 - gamma


def k_gamma_measure(E: float, gamma: float, params: ModelParams, n: int = 4096) -> float:
    """Lebesgue measure of ``K_gamma(E)`` by midpoint grid counting."""
    k = (np.arange(n) + 0.5) / n
    if params.d2 == 1:
        return float(np.mean(k_gamma_membership(k, E, gamma, params)))
    grids = np.meshgrid(*([k] * params.d2), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    return float(np.mean(k_gamma_membership(pts, E, gamma, params)))


def k_gamma_measure_exact(E: float, gamma: float, d1: int = 1) -> float:
    """Arc length of ``K_gamma(E)`` for ``d2 = 1``: ``cos(2 pi k)`` in an interval."""
    lo = max(-d1 + gamma - E, -1.0)
    hi = min(d1 - gamma - E, 1.0)
    if hi <= lo:
        return 0.0
    return (math.acos(lo) - math.acos(hi)) / math.pi


def partial_product_P(m: int, k2, z: EnergyLike, params: ModelParams) -> np.ndarray:
    """``P_m(k2; z) = sigma**m prod_{l=1..m} b(k2 + l alpha; z)``; ``P_0 = 1``."""
    if m < 0:
        raise BadInput("m must be nonnegative")
    k2 = np.asarray(k2, dtype=float)
    out = np.ones(np.shape(surface_energy(k2, params)), dtype=complex)
    sig = params.sigma
    for l in range(1, m + 1):
        out = out * sig * symbols(params.shift(k2, l), z, params).b
    return out


def _check_series_side(z: ComplexEnergy) -> None:
    if z.side is Side.LOWER or (not z.on_axis and z.im < 0):
        raise ConvergenceFailure(
            "the Cayley series diverges below the real axis; use conjugation"
        )


def t_series(k2, z: EnergyLike, params: ModelParams, m_max: int) -> Iterator[np.ndarray]:
    """Yield series coefficients ``t_0, t_1, ..., t_{m_max}`` at momenta ``k2``."""
    ze = as_energy(z)
    _check_series_side(ze)
    k2 = np.asarray(k2, dtype=float)
    g, sig = params.g, params.sigma
    base = symbols(k2, ze, params)
    yield -g * base.c
    prod = np.ones_like(base.c)
    for m in range(1, m_max + 1):
        cur = symbols(params.shift(k2, m), ze, params)
        yield 2j * g * sig * base.c * cur.c * prod
        prod = prod * sig * cur.b


def t_coefficient(
    m: int,
    k2,
    z: EnergyLike,
    params: ModelParams,
    resummed: bool | None = None,
    pole_tol: float = 1e-8,
) -> np.ndarray:
    """T-operator coefficient ``t_m(k2; z)``.

    Parameters
    ----------
    resummed : bool, optional
        Use the periodic (geometrically resummed) form, valid for rational
        alpha and ``0 <= m <= q``.  Defaults to ``True`` for rational alpha.

    Raises
    ------
    NearPole
        Resummed form with ``|1 - P_q| < pole_tol``.
    ConvergenceFailure
        Series form requested below the real axis.
    """
    if m < 0:
        raise BadInput("m must be nonnegative")
    if resummed is None:
        resummed = params.is_rational
    ze = as_energy(z)
    k2 = np.asarray(k2, dtype=float)
    g, sig = params.g, params.sigma
    base = symbols(k2, ze, params)
    if m == 0:
        return -g * base.c
    if not resummed:
        _check_series_side(ze)
    cur = symbols(params.shift(k2, m), ze, params)
    val = 2j * g * sig * base.c * cur.c * partial_product_P(m - 1, k2, ze, params)
    if not resummed:
        return val
    q = params.q
    if m > q:
        raise BadInput("resummed coefficients exist for 0 <= m <= q")
    denom = 1.0 - partial_product_P(q, k2, ze, params)
    if np.any(np.abs(denom) < pole_tol):
        raise NearPole("|1 - P_q| below tolerance")
    return val / denom


def dlogP_dE(k2, E: float, params: ModelParams, q: int | None = None) -> np.ndarray:
    """Energy derivative of ``log P_q`` on the real axis, ``d1 = 1``.

    Uses ``d/dE log b = 2 i g gamma' / ((g gamma)**2 + 1)`` with
    ``gamma' = w / s**3``.
    """
    if params.d1 != 1:
        raise BadInput("analytic derivative implemented for d1 = 1")
    q = params.q if q is None else q
    g = params.g
    k2 = np.asarray(k2, dtype=float)
    total = np.zeros(np.shape(k2), dtype=complex)
    for l in range(1, q + 1):
        w = E - surface_energy(params.shift(k2, l), params) + 0j
        s = sqrt_z2m1(w, "upper")
        gam = -1.0 / s
        dgam = w / s ** 3
        total = total + 2j * g * dgam / ((g * gam) ** 2 + 1.0)
    return total
