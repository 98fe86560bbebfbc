"""Generalized eigenfunctions, their channel decomposition and residual checks.

Every state built here has the form

    Psi(x) = [plane wave] + sum_m a_m c(kappa_m) G0(x1; lambda_m) exp(2 pi i kappa_m.x2)

with channel momentum ``kappa_m = k2 - m alpha``, channel energy
``lambda_m = E - E_d2(kappa_m)`` and ``c = 1/(g gamma0 + i)``.  The product
``c G0 = -rho**|x1| / (-g + i s)`` is finite even at a threshold
``lambda = +-1`` where ``G0`` alone diverges, so it is evaluated as one
factor.  Transverse dimension ``d1 = 1`` throughout.

Sign convention: ``Psi_minus`` uses ``z = E + i0`` (outgoing waves) and
``Psi_plus`` uses ``z = E - i0``.  The Cayley series only converges on the
upper side, so ``Psi_plus(x, k) = conj(Psi_minus(x, -k))``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BadInput,
    ChannelAtThreshold,
    ConvergenceFailure,
    DegenerateEnergy,
    NearBandEdge,
    NearSingularEnergy,
)
from .lattice_green import ComplexEnergy, _rho, eta_values, sqrt_z2m1
from .resolvent_series import SeriesControl, lyapunov_exponent
from .surface_symbols import ModelParams, potential_v, surface_energy, symbols

THRESHOLD_TOL = 1e-9


@dataclass(frozen=True)
class ChannelTerm:
    """One scattered channel of a generalized eigenfunction."""

    m: int
    coefficient: complex
    momentum: tuple
    lam: float
    eta: complex
    cls: str


@dataclass
class ScatteringState:
    """Plane wave plus channel terms, evaluated lazily on lattice windows.

    Attributes
    ----------
    incident : tuple
        Momentum ``k = (k1, k2...)``; ``None`` entries for surface states.
    energy : float
    sign : str
        ``"minus"`` (``E + i0``), ``"plus"`` (``E - i0``) or ``"surface"``.
    """

    incident: tuple
    energy: float
    sign: str
    params: ModelParams
    m: np.ndarray
    amp: np.ndarray
    kappa: np.ndarray
    lam: np.ndarray
    side: str = "upper"
    plane_wave: bool = True
    conjugated: bool = False
    tail: float = 0.0
    scale: complex = 1.0

    @property
    def n_terms(self) -> int:
        return int(self.m.size)

    def _c_times_g0(self, x1: np.ndarray, prop_side: str | None = None) -> np.ndarray:
        """``c(kappa_m) G0(x1; lambda_m)`` for all terms, shape ``(n_terms, len(x1))``."""
        g = self.params.g
        side = self.side
        lam = self.lam.astype(complex)
        s = sqrt_z2m1(lam, side)
        rho = _rho(lam, s, side)
        ax = np.abs(np.asarray(x1, dtype=int))
        cg = -(rho[:, None] ** ax[None, :]) / (-g + 1j * s)[:, None]
        if prop_side is None or prop_side == side:
            return cg
        # mismatched propagator: keep c on the state's side, swap G0
        s2 = sqrt_z2m1(lam, prop_side)
        rho2 = _rho(lam, s2, prop_side)
        c = s / (-g + 1j * s)
        with np.errstate(divide="ignore", invalid="ignore"):
            g0 = -(rho2[:, None] ** ax[None, :]) / s2[:, None]
        return c[:, None] * g0

    def evaluate(self, x1, x2, mismatched: bool = False) -> np.ndarray:
        """Values on the product grid ``x1 x x2``.

        Parameters
        ----------
        x1 : array of int
        x2 : array of int, shape ``(n2,)`` for ``d2 = 1`` or ``(n2, d2)``
        mismatched : bool
            Negative control: pair the coefficients with the propagator of
            the opposite boundary side.
        """
        x1 = np.atleast_1d(np.asarray(x1, dtype=int))
        x2 = np.asarray(x2, dtype=float)
        if self.params.d2 == 1:
            x2 = x2.reshape(-1, 1)
        kap = self.kappa.reshape(self.n_terms, self.params.d2)
        other = {"upper": "lower", "lower": "upper"}[self.side]
        cg = self._c_times_g0(x1, other if mismatched else None)
        ph = np.exp(2j * np.pi * (kap @ x2.T))
        vals = (self.amp[:, None] * cg).T @ ph
        if self.plane_wave:
            k = np.asarray(self.incident, dtype=float)
            if self.conjugated:
                k = -k
            pw = np.exp(2j * np.pi * k[0] * x1)[:, None] * np.exp(2j * np.pi * (x2 @ k[1:]))[None, :]
            vals = vals + pw
        vals = self.scale * vals
        return np.conj(vals) if self.conjugated else vals

    def __call__(self, x) -> complex:
        x = tuple(int(v) for v in x)
        x2 = np.array([x[1:]], dtype=float)
        return complex(self.evaluate([x[0]], x2)[0, 0])

    def subset(self, mask: np.ndarray, plane_wave: bool) -> "ScatteringState":
        """The state restricted to the terms selected by ``mask``."""
        mask = np.asarray(mask, dtype=bool)
        return replace(self, m=self.m[mask], amp=self.amp[mask], kappa=self.kappa[mask],
                       lam=self.lam[mask], plane_wave=plane_wave)

    def split(self) -> tuple["ScatteringState", "ScatteringState"]:
        """Volume part (plane wave and open channels) and surface part (closed channels)."""
        open_ = np.abs(self.lam) < 1.0
        return self.subset(open_, self.plane_wave), self.subset(~open_, False)

    @property
    def terms(self) -> list[ChannelTerm]:
        """Channel table: coefficient ``t_m`` at the channel momentum, ``eta`` at ``lambda + i0``."""
        g = self.params.g
        s = sqrt_z2m1(self.lam.astype(complex), self.side)
        c = s / (-g + 1j * s)
        coef = self.scale * self.amp * c
        kap = self.kappa.reshape(self.n_terms, self.params.d2)
        eta = eta_values(self.lam.astype(complex), "upper")
        if self.conjugated:
            coef = np.conj(coef)
            kap = np.mod(-kap, 1.0)
        out = []
        for i in range(self.n_terms):
            lam = float(self.lam[i])
            cls = "volume" if abs(lam) < 1.0 else "surface"
            out.append(ChannelTerm(int(self.m[i]), complex(coef[i]),
                                   tuple(float(v) for v in kap[i]), lam, complex(eta[i]), cls))
        return out


def _as_momentum(k, params: ModelParams) -> tuple:
    k = tuple(float(v) % 1.0 for v in np.ravel(k))
    if len(k) != params.d:
        raise BadInput(f"momentum needs {params.d} components")
    if params.d1 != 1:
        raise BadInput("scattering states are implemented for d1 = 1")
    return k


def _k2(k: tuple, params: ModelParams):
    return k[1] if params.d2 == 1 else np.array(k[1:])


def _bulk_energy(k: tuple) -> float:
    return -float(np.sum(np.cos(2 * np.pi * np.array(k))))


def _lyapunov_rate(E: float, params: ModelParams) -> float:
    if params.d2 != 1 or params.is_rational:
        return 0.0
    return math.exp(lyapunov_exponent(E, params, m_max=16).integral)


def _minus_state_qp(k: tuple, params: ModelParams, ctrl: SeriesControl, strict: bool = True) -> ScatteringState:
    E = _bulk_energy(k)
    d = params.d
    if not abs(E) < d:
        raise BadInput("need |E_d(k)| < d")
    z = ComplexEnergy.upper(E)
    k2 = _k2(k, params)
    g, sig = params.g, params.sigma
    c0 = complex(np.ravel(symbols(k2, z, params).c)[0])
    ms, amps, kaps, lams = [0], [-g + 0j], [np.atleast_1d(k2)], [E - float(surface_energy(k2, params))]
    Q = 1.0 + 0j
    qs = [1.0]
    rate_lyap = _lyapunov_rate(E, params)
    tail = float("inf")
    for m in range(1, ctrl.max_terms + 1):
        kap = params.shift(k2, -m)
        sym = symbols(kap, z, params)
        cm = complex(np.ravel(sym.c)[0])
        bm = complex(np.ravel(sym.b)[0])
        amp = 2j * g * sig * c0 * Q
        ms.append(m)
        amps.append(amp)
        kaps.append(np.atleast_1d(kap))
        lams.append(E - float(surface_energy(kap, params)))
        Q = Q * sig * bm
        qs.append(abs(Q))
        # |c G0| <= 1/g, so |term_m| <= 2 |c0| |Q_{m-1}|
        window = min(m, 200)
        ratio = (qs[m] / qs[m - window]) ** (1.0 / window) if qs[m - window] > 0 else 0.0
        rho = max(ratio, rate_lyap)
        bound = 2.0 * abs(c0) * abs(Q)
        if rho < 1.0:
            tail = bound * rho / (1.0 - rho) + bound
        if abs(amp) * abs(cm) < ctrl.tol / 10 and tail < ctrl.tol / 2:
            break
    else:
        if strict:
            raise ConvergenceFailure(f"eigenfunction series not converged in {ctrl.max_terms} terms")
    return ScatteringState(
        incident=k, energy=E, sign="minus", params=params, m=np.array(ms),
        amp=np.array(amps), kappa=np.array(kaps), lam=np.array(lams), side="upper", tail=tail,
    )


def psi_qp(k, sign: str, params: ModelParams, ctrl: SeriesControl | None = None,
           strict: bool = True) -> ScatteringState:
    """Generalized eigenfunction ``Psi_+-(., k)`` from the Cayley series.

    Parameters
    ----------
    k : sequence of float
        Incident momentum, ``d`` components.
    sign : {"plus", "minus"}
        ``minus`` uses ``E + i0``; ``plus`` uses ``E - i0`` via conjugation.
    strict : bool
        If False, return the sum truncated at ``ctrl.max_terms`` instead of
        raising; ``state.tail`` then holds the (uncertified) tail estimate.
        Needed at weak coupling, where the Cayley ratios are ``1 - O(g)``.
    """
    ctrl = ctrl or SeriesControl()
    k = _as_momentum(k, params)
    if sign == "minus":
        return _minus_state_qp(k, params, ctrl, strict)
    if sign != "plus":
        raise BadInput("sign must be 'plus' or 'minus'")
    mk = tuple((-v) % 1.0 for v in k)
    st = _minus_state_qp(mk, params, ctrl, strict)
    return replace(st, incident=k, sign="plus", conjugated=True)


def _check_window_sites(params: ModelParams, x2_points: np.ndarray) -> np.ndarray:
    return np.array([potential_v(p if params.d2 > 1 else int(p[0]), params) for p in x2_points])


def _x2_grid(ranges: Sequence[tuple[int, int]]) -> np.ndarray:
    axes = [np.arange(lo, hi + 1) for lo, hi in ranges]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass(frozen=True)
class Window:
    """Residual window ``|x1| <= x1_max`` times a box of ``x2`` ranges."""

    x1_max: int = 10
    x2_ranges: tuple = ((-10, 10),)


def schrodinger_residual(
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray],
    E: float,
    params: ModelParams,
    window: Window = Window(),
) -> float:
    """``max |(H0 Psi)(x) + V(x) Psi(x) - E Psi(x)|`` over the window.

    ``evaluate(x1, x2)`` returns values on the product grid, with ``x2`` of
    shape ``(n2, d2)``.

    Raises
    ------
    SingularPotential
        If a window site sits on a pole of the potential.
    """
    d2 = params.d2
    if len(window.x2_ranges) != d2:
        raise BadInput("window needs one x2 range per surface dimension")
    W = window.x1_max
    x1 = np.arange(-W - 1, W + 2)
    ext = [(lo - 1, hi + 1) for lo, hi in window.x2_ranges]
    x2 = _x2_grid(ext)
    shape2 = tuple(hi - lo + 1 for lo, hi in ext)
    psi = evaluate(x1, x2).reshape((len(x1),) + shape2)
    inner = (slice(1, -1),) * (1 + d2)
    lap = np.zeros_like(psi[inner])
    for ax in range(1 + d2):
        up = [slice(1, -1)] * (1 + d2)
        dn = [slice(1, -1)] * (1 + d2)
        up[ax] = slice(2, None)
        dn[ax] = slice(None, -2)
        lap = lap + psi[tuple(up)] + psi[tuple(dn)]
    center = psi[inner]
    res = -0.5 * lap - E * center
    x2_in = _x2_grid(window.x2_ranges)
    v = _check_window_sites(params, x2_in).reshape(shape2 and tuple(s - 2 for s in shape2))
    res[W] = res[W] + v * center[W]
    return float(np.max(np.abs(res)))


def split_volume_surface(state: ScatteringState) -> tuple[list[ChannelTerm], list[ChannelTerm]]:
    """Partition channel terms into open (``|lambda| < 1``) and closed ones.

    Raises
    ------
    ChannelAtThreshold
        If some ``| |lambda_m| - 1 | < 1e-9``.
    """
    vol, surf = [], []
    for t in state.terms:
        if abs(abs(t.lam) - 1.0) < THRESHOLD_TOL:
            raise ChannelAtThreshold(f"channel m = {t.m} at threshold, lambda = {t.lam}")
        (vol if t.cls == "volume" else surf).append(t)
    return vol, surf


@dataclass(frozen=True)
class Amplitudes:
    """Far-field amplitudes of the outgoing (``E + i0``) state."""

    channels: dict
    t0: complex
    r0: complex


def amplitudes(k, params: ModelParams, ctrl: SeriesControl | None = None) -> Amplitudes:
    """Coefficients ``Psi_m`` of ``exp(i eta_m |x1|)`` in each channel.

    ``Psi_m = -t_m / sqrt(lambda_m**2 - 1)``; transmission ``t0 = 1 + Psi_0``
    and reflection ``r0 = Psi_0`` for the incident channel.
    """
    st = psi_qp(k, "minus", params, ctrl)
    out = {}
    for t in st.terms:
        s = complex(sqrt_z2m1(np.array([t.lam + 0j]), "upper")[0])
        if s == 0:
            raise ChannelAtThreshold(f"channel m = {t.m} at threshold")
        out[t.m] = (-t.coefficient / s, t.cls)
    psi0 = out[0][0]
    return Amplitudes(out, 1.0 + psi0, psi0)


def point_potential_amplitudes(k1: float, v: float) -> tuple[complex, complex]:
    """Transmission and reflection of a 1-D chain with potential ``v delta(x)``.

    Built from ``G0^(1)(0; -cos 2 pi k1 + i0)``; for ``k1 in (0, 1/2)`` the
    reflection equals ``-i v / (i v + sin 2 pi k1)``.
    """
    E = -math.cos(2 * math.pi * k1)
    s = complex(sqrt_z2m1(np.array([E + 0j]), "upper")[0])
    g00 = -1.0 / s
    r = -v * g00 / (1.0 + v * g00)
    return 1.0 + r, r


# ---------------------------------------------------------------------------
# periodic frequency


def _side_energy(E: float, sign: str) -> ComplexEnergy:
    return ComplexEnergy.upper(E) if sign == "minus" else ComplexEnergy.lower(E)


def psi_periodic_volume(k, sign: str, params: ModelParams, pole_tol: float = 1e-8) -> ScatteringState:
    """Volume state for ``alpha = p/q``: finite sum over ``m = 0..q``.

    Uses resummed coefficients at ``z = E_2(k) -+ i0`` directly on either side.

    Raises
    ------
    DegenerateEnergy
        If ``|1 - P_q| < pole_tol`` (the energy hits a surface band).
    """
    if not params.is_rational or params.d2 != 1:
        raise BadInput("periodic states need rational alpha and d2 = 1")
    if sign not in ("plus", "minus"):
        raise BadInput("sign must be 'plus' or 'minus'")
    k = _as_momentum(k, params)
    E = _bulk_energy(k)
    z = _side_energy(E, sign)
    side = "upper" if sign == "minus" else "lower"
    q, g, sig = params.q, params.g, params.sigma
    k2 = k[1]
    kaps = [params.shift(k2, -m) for m in range(q + 1)]
    syms = [symbols(kp, z, params) for kp in kaps]
    Pq = sig ** q * np.prod([complex(s.b) for s in syms[1:]])
    if abs(1.0 - Pq) < pole_tol:
        raise DegenerateEnergy("1 - P_q vanishes: energy on a surface band")
    c0 = complex(syms[0].c)
    amps, Q = [-g + 0j], 1.0 + 0j
    for m in range(1, q + 1):
        amps.append(2j * g * sig * c0 * Q / (1.0 - Pq))
        Q = Q * sig * complex(syms[m].b)
    lams = [E - float(surface_energy(kp, params)) for kp in kaps]
    return ScatteringState(
        incident=k, energy=E, sign=sign, params=params, m=np.arange(q + 1),
        amp=np.array(amps), kappa=np.array(kaps), lam=np.array(lams), side=side,
    )


def surface_normalization(E: float, k2: float) -> float:
    """``[int dk1 |E_2(k) - E|**-2]**1/2`` for ``E`` above the transverse band.

    With ``lam = E + cos 2 pi k2 > 1`` the integral is ``lam / (lam**2 - 1)**1.5``.
    """
    lam = E + math.cos(2 * math.pi * k2)
    if abs(lam) <= 1.0:
        raise DegenerateEnergy("normalization diverges inside the transverse band")
    lam = abs(lam)
    return math.sqrt(lam / (lam * lam - 1.0) ** 1.5)


def psi_periodic_surface(k2: float, j: int, sign: str, params: ModelParams,
                         energy: float | None = None) -> ScatteringState:
    """Surface state on band ``j``: ``m = 1..q`` closed channels only.

    The coefficients are the series ``t_m(k2 - m alpha; E_j)`` divided by
    ``d P_q / dE`` (the residue of ``1/(1 - P_q)``) and multiplied by the
    normalization :func:`surface_normalization`.

    Raises
    ------
    NearBandEdge
        If some channel energy is within ``1e-9`` of a threshold.
    DegenerateEnergy
        If ``d P_q / dE`` vanishes.
    """
    from .band_structure import solve_band
    from .surface_symbols import dlogP_dE

    if not params.is_rational or params.d2 != 1:
        raise BadInput("periodic states need rational alpha and d2 = 1")
    if sign not in ("plus", "minus"):
        raise BadInput("sign must be 'plus' or 'minus'")
    E = solve_band(j, k2, params) if energy is None else float(energy)
    q, g, sig = params.q, params.g, params.sigma
    kaps = [params.shift(k2, -m) for m in range(q + 1)]
    lams = np.array([E - float(surface_energy(kp, params)) for kp in kaps])
    if np.any(np.abs(np.abs(lams) - 1.0) < THRESHOLD_TOL) or np.any(np.abs(lams) < 1.0):
        raise NearBandEdge("surface state needs every channel closed")
    z = ComplexEnergy.upper(E)
    syms = [symbols(kp, z, params) for kp in kaps]
    dP = complex(dlogP_dE(k2, E, params))
    if abs(dP) < 1e-14:
        raise DegenerateEnergy("d P_q / dE vanishes")
    norm = surface_normalization(E, k2)
    c0 = complex(syms[0].c)
    amps, Q = [], 1.0 + 0j
    for m in range(1, q + 1):
        amps.append(2j * g * sig * c0 * Q * norm / dP)
        Q = Q * sig * complex(syms[m].b)
    return ScatteringState(
        incident=(None, k2), energy=E, sign="surface", params=params, m=np.arange(1, q + 1),
        amp=np.array(amps), kappa=np.array(kaps[1:]), lam=lams[1:], side="upper",
        plane_wave=False,
    )


def surface_decay_fit(state: ScatteringState, x1_range=(5, 30)) -> tuple[float, float]:
    """Fitted decay rate of ``|Psi|`` in ``|x1|`` and the prediction ``min Im eta``.

    The profile is summed over one period of ``x2``, which removes the cross
    terms between channels with distinct momenta; its log-slope is then
    ``-2 min_m Im eta_m`` up to exponentially small corrections.
    """
    q = state.params.q
    x1 = np.arange(x1_range[0], x1_range[1] + 1)
    vals = state.evaluate(x1, np.arange(q))
    prof = np.sum(np.abs(vals) ** 2, axis=1)
    slope = np.polyfit(x1, np.log(prof), 1)[0]
    etas = eta_values(state.lam.astype(complex), "upper")
    return -0.5 * float(slope), float(np.min(etas.imag))


# ---------------------------------------------------------------------------
# Lippmann-Schwinger restriction to the surface


@lru_cache(maxsize=8)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _gauss_pieces(breaks: list[float], n: int):
    """Cosine-mapped Gauss nodes on each piece, with exact offsets to both ends."""
    xg, wg = _leggauss(n)
    theta = 0.5 * np.pi * (xg + 1.0)
    wth = 0.5 * np.pi * wg
    ks, ws, left, right = [], [], [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        # k = a + (b - a)(1 - cos theta)/2 removes inverse square-root endpoints
        dl = (b - a) * np.sin(0.5 * theta) ** 2
        dr = (b - a) * np.cos(0.5 * theta) ** 2
        ks.append(a + dl)
        ws.append(0.5 * (b - a) * np.sin(theta) * wth)
        left.append(np.column_stack([np.full(n, a), dl]))
        right.append(np.column_stack([np.full(n, b), dr]))
    return np.concatenate(ks), np.concatenate(ws), np.concatenate(left), np.concatenate(right)


def surface_green_lattice(E: float, n_max: int, side: str = "upper", n_nodes: int = 4096) -> np.ndarray:
    """``gamma0(n) = G0^(2)((0, n); E +- i0)`` for ``n = 0..n_max``.

    The symbol ``G0^(1)(0; E + cos 2 pi k)`` has inverse square-root
    singularities at the thresholds; each smooth piece between them is mapped
    with a cosine substitution before Gauss-Legendre quadrature, and
    ``lambda -+ 1`` is formed as a product of sines so it stays accurate
    next to the breakpoints.
    """
    crit = {}
    for t in (-1.0, 1.0):
        c = t - E
        if -1.0 <= c <= 1.0:
            crit[t] = math.acos(c) / (2 * math.pi)
    brk = sorted({0.0, 0.5, *crit.values()})
    k, w, left, right = _gauss_pieces(brk, n_nodes)
    factors = []
    for t in (-1.0, 1.0):
        if t in crit:
            kt = crit[t]
            off = k - kt
            off = np.where(left[:, 0] == kt, left[:, 1], off)
            off = np.where(right[:, 0] == kt, -right[:, 1], off)
            factors.append(-2.0 * np.sin(np.pi * (k + kt)) * np.sin(np.pi * off))
        else:
            factors.append(E + np.cos(2 * np.pi * k) - t)
    lam_p1, lam_m1 = factors[0], factors[1]
    s = np.sqrt(lam_m1 + 0j) * np.sqrt(lam_p1 + 0j)
    if side == "lower":
        s = np.conj(s)
    sym = -1.0 / s
    n = np.arange(n_max + 1)
    out = np.empty(n_max + 1, dtype=complex)
    chunk = max(1, int(2e7 // k.size))
    for i in range(0, n.size, chunk):
        out[i:i + chunk] = 2.0 * (np.cos(2 * np.pi * np.outer(n[i:i + chunk], k)) @ (w * sym))
    return out


@dataclass(frozen=True)
class LSResidual:
    """Residual of the surface equation with its empirical truncation error."""

    residual: float
    tail: float


def lippmann_schwinger_residual(
    k,
    sign: str,
    params: ModelParams,
    window_x2: tuple[int, int] = (-5, 5),
    ctrl: SeriesControl | None = None,
    half_width: int = 512,
    kernel_side: str | None = None,
    strict: bool = True,
    tail_tol: float = 1e-3,
) -> LSResidual:
    """``max |psi(x2) + (gamma0 v psi)(x2) - exp(2 pi i k2 x2)|`` on a window.

    The convolution is a lattice sum tapered by a smooth window of
    ``half_width`` sites and extrapolated from the full and half widths;
    ``tail`` is the size of that extrapolation step.  ``kernel_side``
    overrides the side of ``gamma0`` (negative control).  ``strict`` is
    forwarded to :func:`psi_qp`.

    Raises
    ------
    ConvergenceFailure
        If ``tail > tail_tol``: on the axis ``gamma0`` decays only like
        ``|n|**-1/2``, so the truncated sum has no exponential tail.
    NearSingularEnergy
        Within ``1e-6`` of the van Hove energy ``E = 0``.
    """
    if params.d1 != 1 or params.d2 != 1:
        raise BadInput("surface equation check implemented for d1 = d2 = 1")
    st = psi_qp(k, sign, params, ctrl, strict=strict)
    E = st.energy
    if abs(E) < 1e-6:
        raise NearSingularEnergy("gamma0 diverges logarithmically at E = 0")
    side = kernel_side or ("upper" if sign == "minus" else "lower")
    N = int(half_width)
    lo, hi = window_x2
    ys = np.arange(lo - N, hi + N + 1)
    psi = st.evaluate([0], ys)[0]
    v = np.array([potential_v(int(y), params) for y in ys])
    f = v * psi
    gam = surface_green_lattice(E, hi - lo + 2 * N, side)

    def conv(width: int) -> np.ndarray:
        out = []
        for x in range(lo, hi + 1):
            n = ys - x
            taper = np.where(np.abs(n) < width, np.cos(0.5 * np.pi * n / width) ** 4, 0.0)
            out.append(np.sum(gam[np.abs(n)] * taper * f))
        return np.array(out)

    xs = np.arange(lo, hi + 1)
    k2 = st.incident[1]
    base = st.evaluate([0], xs)[0] - np.exp(2j * np.pi * k2 * xs)
    c_full, c_half = conv(N), conv(N // 2)
    # tapered sums converge like width**-2: one Richardson step
    c_rich = (4.0 * c_full - c_half) / 3.0
    res = float(np.max(np.abs(base + c_rich)))
    tail = float(np.max(np.abs(c_rich - c_full)))
    if tail > tail_tol:
        raise ConvergenceFailure(f"convolution tail {tail:.2e} too large")
    return LSResidual(res, tail)
