"""Full Green function of ``H = H0 + V`` from the Cayley-transform series.

For a generic frequency the kernel is

    G(x, y; z) = G0^(d)(x - y; z) + sum_{m >= 0} int dk2 exp(2 pi i k2.(x2 - y2))
                 t_m(k2; z) G0^(d1)(x1; z - E(k2)) G0^(d1)(y1; z - E(k2 + m alpha))
                 exp(-2 pi i m alpha.y2),

and for ``alpha = p/q`` the sum stops at ``m = q`` once the coefficients are
resummed.  Torus integrals use the midpoint rule, which is spectrally
accurate for the smooth periodic integrands met off the real axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import BadInput, ConvergenceFailure, NearBandEdge
from .lattice_green import (
    ComplexEnergy,
    EnergyLike,
    GreenValue,
    Side,
    as_energy,
    green_1d_values,
    green_nd,
    green_time_values,
    sqrt_z2m1,
)
from .surface_symbols import (
    ModelParams,
    k_gamma_measure,
    partial_product_P,
    surface_energy,
    symbols,
)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation and quadrature settings for the Cayley series.

    Parameters
    ----------
    tol : float
        Target absolute error of the series.
    max_terms : int
        Largest ``m`` summed before giving up.
    gamma : float
        Margin defining ``K_gamma(E)`` in the tail estimate.
    n_quad : int
        Midpoint nodes per surface dimension.
    """

    tol: float = 1e-10
    max_terms: int = 10_000
    gamma: float = 0.05
    n_quad: int = 2048

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise BadInput("tol must be positive")
        if self.max_terms < 1:
            raise BadInput("max_terms must be at least 1")
        if not (0 < self.gamma < 1):
            raise BadInput("gamma must lie in (0, 1)")
        if self.n_quad < 8 or self.n_quad % 2:
            raise BadInput("n_quad must be even and at least 8")


@dataclass
class SeriesInfo:
    """Diagnostics of one series evaluation."""

    terms: int = 0
    tail: float = 0.0
    quad_err: float = 0.0
    rate: float = float("nan")
    history: list = field(default_factory=list)


def _split(x, params: ModelParams) -> tuple[tuple[int, ...], tuple[int, ...]]:
    x = tuple(int(v) for v in np.ravel(x))
    if len(x) != params.d:
        raise BadInput(f"lattice point {x} does not have {params.d} components")
    return x[: params.d1], x[params.d1:]


def _torus_grid(n: int, d2: int) -> np.ndarray:
    k = (np.arange(n) + 0.5) / n
    if d2 == 1:
        return k
    grids = np.meshgrid(*([k] * d2), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _transverse_green(x1: tuple[int, ...], w: np.ndarray, side: str) -> np.ndarray:
    if len(x1) == 1:
        return green_1d_values(x1[0], w, side)
    vals, _ = green_time_values(x1, w.ravel())
    return vals.reshape(w.shape)


def _phase(k2: np.ndarray, n2: tuple[int, ...]) -> np.ndarray:
    n = np.asarray(n2, dtype=float)
    if k2.ndim == 1:
        return np.exp(2j * np.pi * k2 * n[0])
    return np.exp(2j * np.pi * (k2 @ n))


def _alpha_phase(m: int, y2: tuple[int, ...], params: ModelParams) -> complex:
    if params.is_rational:
        return complex(np.exp(-2j * np.pi * ((m * params.p * y2[0]) % params.q) / params.q))
    a = np.mod(np.longdouble(m) * params.alpha_vector.astype(np.longdouble), 1.0)
    return complex(np.exp(-2j * np.pi * float(np.dot(a.astype(float), y2))))


def _mean_pair(f: np.ndarray, d2: int, n: int) -> tuple[complex, float]:
    """Midpoint mean on the full grid and the error against the half grid."""
    full = complex(np.mean(f))
    if d2 == 1:
        half = complex(np.mean(f[::2]))
    else:
        g = f.reshape((n,) * d2)
        half = complex(np.mean(g[(slice(None, None, 2),) * d2]))
    return full, abs(full - half)


def _free_part(x, y, ze: ComplexEnergy, params: ModelParams) -> GreenValue:
    diff = tuple(int(a) - int(b) for a, b in zip(np.ravel(x), np.ravel(y)))
    return green_nd(params.d, diff, ze)


def green_full_qp(
    x,
    y,
    z: EnergyLike,
    params: ModelParams,
    ctrl: SeriesControl | None = None,
    info: SeriesInfo | None = None,
    strict: bool = True,
) -> GreenValue:
    """Green function ``G(x, y; z)`` from the infinite Cayley series.

    Parameters
    ----------
    x, y : sequence of int
        Lattice points with ``d1`` transverse then ``d2`` surface components.
    z : ComplexEnergy or complex
        Off-axis energy, or a boundary value with ``|E| <= d - gamma``
        (``d1 = 1``).  Lower half-plane values follow from conjugation.
    ctrl : SeriesControl, optional
    info : SeriesInfo, optional
        Filled with the number of terms, tail and quadrature estimates.
    strict : bool
        When False, a series that has not met the tail criterion after
        ``ctrl.max_terms`` terms returns its partial sum (with the
        pessimistic sup-norm tail in ``err``) instead of raising.  Useful
        at very weak coupling, where the sup-norm tail bound decays like
        ``1 - O(g)`` per term even though the integrated terms are tiny.

    Raises
    ------
    ConvergenceFailure
        If the terms do not contract within ``ctrl.max_terms``, or a
        boundary value is requested outside ``|E| <= d - gamma``.
    """
    ctrl = ctrl or SeriesControl()
    info = info if info is not None else SeriesInfo()
    ze = as_energy(z)
    if ze.side is Side.LOWER or (not ze.on_axis and ze.im < 0):
        res = green_full_qp(x, y, ze.conjugate(), params, ctrl, info, strict)
        return GreenValue(res.value.conjugate(), res.err)
    if ze.on_axis:
        if abs(ze.re) > params.d - ctrl.gamma:
            raise ConvergenceFailure(
                f"boundary value at |E| = {abs(ze.re)} outside |E| <= d - gamma"
            )
        if params.d1 != 1:
            raise BadInput("boundary values of the series need d1 = 1")
    x1, x2 = _split(x, params)
    y1, y2 = _split(y, params)
    side = "upper"
    n = ctrl.n_quad
    k2 = _torus_grid(n, params.d2)
    dx2 = tuple(a - b for a, b in zip(x2, y2))
    ph = _phase(k2, dx2)
    g, sig = params.g, params.sigma

    base = symbols(k2, ze, params)
    w0 = ze.value - surface_energy(k2, params)
    gx = _transverse_green(x1, w0, side)
    left = ph * base.c * gx
    total, qerr = _mean_pair(-g * left * _transverse_green(y1, w0, side), params.d2, n)
    bound_c = 2.0 * g * float(np.max(np.abs(base.c * gx)))
    bound_c *= float(np.max(np.abs(base.c * _transverse_green(y1, w0, side))))

    rho_bou = 1.0
    if ze.on_axis:
        E = ze.re
        meas = k_gamma_measure(E, ctrl.gamma, params, n=min(n, 1024))
        from .surface_symbols import k_gamma_membership

        mask = k_gamma_membership(k2, E, ctrl.gamma, params)
        if meas > 0 and np.any(mask):
            delta = 1.0 - float(np.max(np.abs(base.b[mask])))
            rho_bou = (1.0 - delta) ** (meas / 2.0)

    prod = np.ones_like(base.c)
    maxP = [1.0]
    tail = float("inf")
    for m in range(1, ctrl.max_terms + 1):
        km = params.shift(k2, m)
        cur = symbols(km, ze, params)
        wm = ze.value - surface_energy(km, params)
        gy = _transverse_green(y1, wm, side)
        term_f = 2j * g * sig * left * cur.c * gy * prod
        term, te = _mean_pair(term_f, params.d2, n)
        term *= _alpha_phase(m, y2, params)
        total += term
        qerr += te
        prod = prod * sig * cur.b
        pm = float(np.max(np.abs(prod)))
        maxP.append(pm)
        window = min(50, m)
        if maxP[m - window] > 0 and pm > 0:
            rho_emp = (pm / maxP[m - window]) ** (1.0 / window)
        else:
            rho_emp = 0.0
        rho = max(rho_emp, rho_bou) if ze.on_axis else rho_emp
        info.history.append(abs(term))
        if rho < 1.0:
            tail = bound_c * pm * rho / (1.0 - rho) if pm > 0 else 0.0
        if m >= 2 and abs(term) < ctrl.tol / 10 and tail < ctrl.tol / 2:
            info.terms, info.tail, info.quad_err, info.rate = m, tail, qerr, rho
            free = _free_part(x, y, ze, params)
            return GreenValue(free.value + total, free.err + qerr + tail)
    if not strict:
        info.terms, info.tail, info.quad_err, info.rate = ctrl.max_terms, tail, qerr, rho
        free = _free_part(x, y, ze, params)
        # the sup-norm estimate is pessimistic here but still the only bound on offer
        est = tail if math.isfinite(tail) else bound_c * ctrl.max_terms
        return GreenValue(free.value + total, free.err + qerr + est)
    raise ConvergenceFailure(
        f"series not converged after {ctrl.max_terms} terms (tail estimate {tail:.3g})"
    )


def green_constant_potential(
    x,
    y,
    z: EnergyLike,
    v: complex,
    d1: int = 1,
    d2: int = 1,
    n_quad: int = 2048,
) -> GreenValue:
    """Reference Green function for the constant surface potential ``v delta(x1)``.

    ``v`` may be complex (the phase-averaged model has ``v = -i g``).
    """
    params = ModelParams(g=1.0, alpha=0.0 if d2 == 1 else (0.0,) * d2, omega=0.0, d1=d1, d2=d2)
    ze = as_energy(z)
    if ze.on_axis:
        raise BadInput("the reference form is evaluated off the axis")
    x1, x2 = _split(x, params)
    y1, y2 = _split(y, params)
    k2 = _torus_grid(n_quad, d2)
    w = ze.value - surface_energy(k2, params)
    side = "upper"
    g0 = _transverse_green((0,) * d1, w, side)
    f = _phase(k2, tuple(a - b for a, b in zip(x2, y2)))
    f = f * _transverse_green(x1, w, side) * _transverse_green(y1, w, side) / (1.0 + v * g0)
    val, err = _mean_pair(f, d2, n_quad)
    free = _free_part(x, y, ze, params)
    return GreenValue(free.value - v * val, free.err + abs(v) * err)


def _periodic_sum(x1, x2, y1, y2, zc: complex, params: ModelParams, n: int) -> tuple[complex, float]:
    """Finite resummed sum for one off-axis energy ``zc``."""
    k2 = (np.arange(n) + 0.5) / n
    ze = ComplexEnergy.at(zc)
    side = "upper"
    q, g, sig = params.q, params.g, params.sigma
    syms = [symbols(params.shift(k2, l), ze, params) for l in range(q + 1)]
    Pq = np.ones(n, dtype=complex)
    for l in range(1, q + 1):
        Pq = Pq * sig * syms[l].b
    inv = 1.0 / (1.0 - Pq)
    w0 = zc - surface_energy(k2, params)
    left = _phase(k2, (x2[0] - y2[0],)) * syms[0].c * _transverse_green(x1, w0, side)
    f = -g * left * _transverse_green(y1, w0, side)
    total, err = _mean_pair(f, 1, n)
    prod = np.ones(n, dtype=complex)
    for m in range(1, q + 1):
        km = params.shift(k2, m)
        wm = zc - surface_energy(km, params)
        f = 2j * g * sig * left * syms[m].c * _transverse_green(y1, wm, side) * prod * inv
        val, e = _mean_pair(f, 1, n)
        total += val * _alpha_phase(m, y2, params)
        err += e
        prod = prod * sig * syms[m].b
    return total, err


def green_full_periodic(
    x,
    y,
    z: EnergyLike,
    params: ModelParams,
    n_quad: int = 2048,
    eps0: float = 0.05,
    levels: int = 6,
    edge_tol: float = 1e-6,
) -> GreenValue:
    """Green function for rational ``alpha = p/q`` as a finite sum over ``m <= q``.

    Off the axis the torus integral uses the midpoint rule.  Boundary values
    ``E +- i0`` are extrapolated from ``eps_j = eps0 2**-j`` with a
    Richardson table, the grid being refined as ``1/eps`` so that the
    near-poles of ``1/(1 - P_q)`` stay resolved.

    Raises
    ------
    NearBandEdge
        Boundary value within ``edge_tol`` of a critical energy.
    """
    if not params.is_rational or params.d1 != 1 or params.d2 != 1:
        raise BadInput("periodic form needs d1 = d2 = 1 and rational alpha")
    ze = as_energy(z)
    if ze.side is Side.LOWER or (not ze.on_axis and ze.im < 0):
        res = green_full_periodic(x, y, ze.conjugate(), params, n_quad, eps0, levels, edge_tol)
        return GreenValue(res.value.conjugate(), res.err)
    x1, x2 = _split(x, params)
    y1, y2 = _split(y, params)
    if not ze.on_axis:
        val, err = _periodic_sum(x1, x2, y1, y2, ze.value, params, n_quad)
        free = _free_part(x, y, ze, params)
        return GreenValue(free.value + val, free.err + err)
    from .band_structure import critical_energies

    E = ze.re
    crit = np.array(sorted(critical_energies(params) | {0.0}))
    dist = float(np.min(np.abs(crit - E)))
    if dist < edge_tol:
        raise NearBandEdge(f"E = {E} is within {edge_tol} of a critical energy")
    e0 = min(eps0, 0.5 * dist)
    eps = e0 * 2.0 ** -np.arange(levels)
    vals = []
    errs = []
    for e in eps:
        n = int(max(n_quad, 2 * math.ceil(200.0 / e / 2)))
        val, err = _periodic_sum(x1, x2, y1, y2, complex(E, e), params, n)
        free = _free_part(x, y, ComplexEnergy(E, e), params)
        vals.append(val + free.value)
        errs.append(err + free.err)
    table = [np.array(vals)]
    for k in range(1, levels):
        prev = table[-1]
        fac = 2.0 ** k
        table.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
    best = complex(table[-1][0])
    err = abs(table[-1][0] - table[-2][-1]) + max(errs)
    return GreenValue(best, float(err))


@dataclass(frozen=True)
class LyapunovResult:
    """Two estimators of the exponential decay rate of the products ``P_m``."""

    integral: float
    birkhoff: float

    @property
    def gap(self) -> float:
        return abs(self.integral - self.birkhoff)


def _log_abs_b(k2, E: float, params: ModelParams) -> np.ndarray:
    """``log|b(k2; E + i0)|`` for ``d1 = 1``.

    Closed channels have ``|b| = 1``.  On open ones ``b = (g - r)/(g + r)``
    with ``r = sqrt(1 - w**2)``, rewritten as ``(g**2 - 1 + w**2)/(g + r)**2``
    so the zero of ``b`` is not lost to cancellation.
    """
    w = np.asarray(E - surface_energy(k2, params), dtype=float)
    g = params.g
    r = np.sqrt(np.clip(1.0 - w * w, 0.0, None))
    # floor keeps quadrature nodes that land exactly on a zero finite
    num = np.maximum(np.abs((g * g - 1.0) + w * w), np.finfo(float).tiny)
    val = np.log(num) - 2.0 * np.log(g + r)
    return np.where(np.abs(w) < 1.0, val, 0.0)


def lyapunov_exponent(
    E: float, params: ModelParams, m_max: int = 10_000, k2_start: float = 0.1234
) -> LyapunovResult:
    """Birkhoff average of ``log|b(k2 + l alpha; E + i0)|`` and its torus integral.

    The integrand is piecewise smooth with logarithmic zeros of ``b`` where
    ``sqrt(1 - w**2) = g`` and kinks at the thresholds ``w = +-1``
    (``w = E + cos 2 pi k2``); these are passed to adaptive quadrature as
    breakpoints.
    """
    if params.d1 != 1 or params.d2 != 1:
        raise BadInput("lyapunov_exponent is implemented for d1 = d2 = 1")
    ls = np.arange(1, m_max + 1)
    a = np.mod(ls.astype(np.longdouble) * np.longdouble(params.alpha_vector[0]), 1.0)
    ks = np.mod(k2_start + a.astype(float), 1.0)
    birk = float(np.mean(_log_abs_b(ks, E, params)))

    brk = []
    targets = [-1.0, 1.0]
    if params.g < 1.0:
        r = math.sqrt(1.0 - params.g ** 2)
        targets += [-r, r]
    elif params.g == 1.0:
        targets.append(0.0)
    for w in targets:
        c = w - E
        if -1.0 <= c <= 1.0:
            t = math.acos(c) / (2 * math.pi)
            brk += [t, 1.0 - t]
    brk = sorted(set(b for b in brk if 0.0 < b < 1.0))
    f = lambda k: float(np.ravel(_log_abs_b(k, E, params))[0])  # noqa: E731
    edges = [0.0] + brk + [1.0]
    total = 0.0
    for a0, b0 in zip(edges[:-1], edges[1:]):
        if b0 - a0 < 1e-15:
            continue
        val, _ = integrate.quad(f, a0, b0, limit=200, epsabs=1e-10, epsrel=1e-10)
        total += val
    return LyapunovResult(integral=total, birkhoff=birk)
