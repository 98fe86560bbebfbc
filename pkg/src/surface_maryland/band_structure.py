"""Surface bands of the periodic model, ``d1 = d2 = 1`` and ``alpha = p/q``.

On the real axis above every transverse band the Cayley factors are
unimodular, ``b(k2; E) = exp(2 pi i phi(k2, E))`` with

    phi(k2, E) = (1/pi) arctan( sqrt((E + cos 2 pi k2)**2 - 1) / g ),

so the pole condition ``P_q(k2; E) = 1`` becomes the phase equation

    Phi_q(k2, E) - q omega = integer,   Phi_q = sum_{l=1..q} phi(k2 + l alpha, E).

``Phi_q`` is increasing in ``E`` and bounded by ``q/2``, so each integer
gives at most one root: the band function ``E_j(k2)``.  Negative bands come
from the staggered gauge ``(-1)**(x1 + x2)``, which maps ``H(g, alpha,
omega)`` to ``-H(g, -alpha, -omega)`` and shifts ``k2`` by one half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, optimize

from .errors import BadInput, NonConvergence, NoRoot, NoSolution, OutsideDomain
from .surface_symbols import ModelParams

THRESHOLD_PAD = 1e-12


def phase_phi(k2, E, g: float) -> np.ndarray:
    """Single-channel phase ``phi(k2, E)`` in ``[0, 1/2)``.

    Raises
    ------
    OutsideDomain
        If ``E + cos 2 pi k2 < 1`` (below the transverse band top).
    """
    w = np.asarray(E, dtype=float) + np.cos(2 * np.pi * np.asarray(k2, dtype=float))
    if np.any(w < 1.0 - 1e-12):
        raise OutsideDomain("phase_phi needs E >= 1 - cos(2 pi k2)")
    r = np.sqrt(np.maximum(w * w - 1.0, 0.0))
    return np.arctan(r / g) / np.pi


def _dphi_dE(k2, E, g: float) -> np.ndarray:
    w = np.asarray(E, dtype=float) + np.cos(2 * np.pi * np.asarray(k2, dtype=float))
    r = np.sqrt(np.maximum(w * w - 1.0, 0.0))
    with np.errstate(divide="ignore"):
        return (g / (g * g + r * r)) * (w / r) / np.pi


def _shifts(params: ModelParams) -> np.ndarray:
    q = params.q
    return np.array([((l * params.p) % q) / q for l in range(1, q + 1)])


def threshold_energy(k2, params: ModelParams) -> np.ndarray:
    """``max_l (1 - cos 2 pi (k2 + l alpha))``: the lowest admissible energy."""
    k2 = np.asarray(k2, dtype=float)
    sh = _shifts(params)
    return np.max(1.0 - np.cos(2 * np.pi * (k2[..., None] + sh)), axis=-1)


def phase_Phi_q(k2, E, params: ModelParams) -> np.ndarray:
    """``Phi_q(k2, E) = sum_{l=1..q} phi(k2 + l alpha, E)``, in ``[0, q/2)``."""
    k2 = np.asarray(k2, dtype=float)
    E = np.asarray(E, dtype=float)
    total = np.zeros(np.broadcast(k2, E).shape)
    for s in _shifts(params):
        total = total + phase_phi(k2 + s, E, params.g)
    return total


def dPhi_dE(k2, E, params: ModelParams) -> np.ndarray:
    """Energy derivative of ``Phi_q``, positive wherever it is finite."""
    k2 = np.asarray(k2, dtype=float)
    total = 0.0
    for s in _shifts(params):
        total = total + _dphi_dE(k2 + s, E, params.g)
    return total


def period_window(q: int, n: int) -> np.ndarray:
    """``n`` equispaced momenta in ``[1/2 - 1/(2q), 1/2 + 1/(2q))``."""
    return 0.5 - 0.5 / q + np.arange(n) / (n * q)


def alpha_omega(params: ModelParams, n: int = 2048) -> int:
    """Integer offset: floor of ``min_k2 Phi_q(k2, threshold) - q omega``."""
    q = params.q
    k = period_window(q, n)
    f = lambda kk: float(phase_Phi_q(kk, threshold_energy(kk, params), params))  # noqa: E731
    vals = phase_Phi_q(k, threshold_energy(k, params), params)
    i = int(np.argmin(vals))
    h = 1.0 / (n * q)
    res = optimize.minimize_scalar(f, bounds=(k[i] - h, k[i] + h), method="bounded",
                                   options={"xatol": 1e-13})
    low = min(float(vals[i]), float(res.fun))
    return int(math.floor(low - q * params.omega + 1e-13))


def _negative_params(params: ModelParams) -> ModelParams:
    """Parameters whose positive bands are the negated negative bands."""
    return params.replace(alpha=Fraction(-params.p, params.q), omega=(-params.omega) % 1.0)


def solve_band(j: int, k2: float, params: ModelParams, offset: int | None = None,
               max_iter: int = 200) -> float:
    """Root ``E_j(k2)`` of ``Phi_q(k2, E) - q omega = alpha_omega + j``.

    Negative ``j`` returns ``-E_{|j|}(k2 + 1/2)`` of the gauge-mapped model.

    Parameters
    ----------
    offset : int, optional
        Precomputed :func:`alpha_omega` (saves work in sweeps).

    Raises
    ------
    NoSolution
        ``k2`` outside the band domain.
    NonConvergence
        Safeguarded Newton did not settle in ``max_iter`` steps.
    """
    if j == 0:
        raise BadInput("band index must be nonzero")
    if j < 0:
        neg = _negative_params(params)
        return -solve_band(-j, k2 + 0.5, neg, None, max_iter)
    if offset is None:
        offset = alpha_omega(params)
    target = offset + j + params.q * params.omega
    k2 = float(k2)
    lo = float(threshold_energy(k2, params)) + THRESHOLD_PAD
    f = lambda E: float(phase_Phi_q(k2, E, params)) - target  # noqa: E731
    flo = f(lo)
    if flo >= 0.0 or target >= params.q / 2.0:
        raise NoSolution(f"band {j} has no root at k2 = {k2}")
    hi, step = lo + 1.0, 1.0
    while f(hi) <= 0.0:
        step *= 2.0
        hi = lo + step
        if step > 1e12:
            raise NoSolution(f"band {j} root beyond 1e12 at k2 = {k2}")
    E = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fe = f(E)
        if fe > 0:
            hi = E
        else:
            lo = E
        if abs(fe) < 1e-15 or hi - lo < 4e-16 * max(1.0, abs(E)):
            return E
        d = float(dPhi_dE(k2, E, params))
        E_new = E - fe / d if np.isfinite(d) and d > 0 else 0.5 * (lo + hi)
        if not (lo < E_new < hi):
            E_new = 0.5 * (lo + hi)
        if abs(E_new - E) < 1e-15 * max(1.0, abs(E)):
            return E_new
        E = E_new
    raise NonConvergence(f"band {j} at k2 = {k2} did not converge")


@dataclass(frozen=True)
class BandFunction:
    """Sampled band ``k2 -> E_j(k2)`` over one period.

    ``energies`` is NaN outside the domain.  ``domain`` lists closed
    intervals of solvable momenta and ``excluded`` the points where the band
    meets the threshold ``max_l (1 - cos 2 pi (k2 + l alpha))``.
    """

    j: int
    q: int
    k2: np.ndarray
    energies: np.ndarray
    domain: tuple = ()
    excluded: tuple = ()

    @property
    def in_domain(self) -> np.ndarray:
        return np.isfinite(self.energies)

    @property
    def empty(self) -> bool:
        return not bool(np.any(self.in_domain))

    @property
    def e_min(self) -> float:
        return float(np.nanmin(self.energies))

    @property
    def e_max(self) -> float:
        return float(np.nanmax(self.energies))

    @property
    def width(self) -> float:
        return self.e_max - self.e_min

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.e_max + self.e_min)


def _solvable(j: int, k2: float, params: ModelParams, offset: int) -> bool:
    if j < 0:
        # offset refers to the gauge-mapped parameters here
        return _solvable(-j, k2 + 0.5, _negative_params(params), offset)
    target = offset + j + params.q * params.omega
    lo = float(threshold_energy(k2, params)) + THRESHOLD_PAD
    return target < params.q / 2.0 and float(phase_Phi_q(k2, lo, params)) < target


def band_curve(j: int, params: ModelParams, n_samples: int = 512) -> BandFunction:
    """Sample ``E_j`` over ``[1/2 - 1/(2q), 1/2 + 1/(2q))`` and locate its domain."""
    if n_samples < 16:
        raise BadInput("n_samples must be at least 16")
    q = params.q
    k = period_window(q, n_samples)
    if j > 0:
        offset = alpha_omega(params)
    else:
        offset = alpha_omega(_negative_params(params))
    src = params if j > 0 else _negative_params(params)
    E = np.full(n_samples, np.nan)
    for i, kk in enumerate(k):
        try:
            if j > 0:
                E[i] = solve_band(j, kk, params, offset)
            else:
                E[i] = -solve_band(-j, kk + 0.5, src, offset)
        except NoSolution:
            pass
    ok = np.isfinite(E)
    domain, excluded = [], []
    if np.any(ok):
        h = 1.0 / (n_samples * q)
        # runs of solvable samples, edges refined by bisection on solvability
        idx = np.flatnonzero(ok)
        runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
        for run in runs:
            a, b = k[run[0]], k[run[-1]]
            left = a if run[0] == 0 else _refine_edge(j, k[run[0] - 1], a, params, offset)
            right = b if run[-1] == n_samples - 1 else _refine_edge(j, k[run[-1] + 1], b, params, offset)
            domain.append((float(left), float(right)))
            if run[0] > 0:
                excluded.append(float(left))
            if run[-1] < n_samples - 1:
                excluded.append(float(right))
        del h
    return BandFunction(j, q, k, E, tuple(domain), tuple(excluded))


def _refine_edge(j: int, k_out: float, k_in: float, params: ModelParams, offset: int,
                 tol: float = 1e-9) -> float:
    while abs(k_in - k_out) > tol:
        mid = 0.5 * (k_in + k_out)
        if _solvable(j, mid, params, offset):
            k_in = mid
        else:
            k_out = mid
    return k_in


def positive_bands(params: ModelParams, n_samples: int = 512, max_j: int | None = None) -> list[BandFunction]:
    """All nonempty positive bands ``j = 1, 2, ...``."""
    max_j = max_j or params.q + 2
    out = []
    for j in range(1, max_j + 1):
        bf = band_curve(j, params, n_samples)
        if bf.empty:
            break
        out.append(bf)
    return out


def negative_bands(params: ModelParams, n_samples: int = 512, max_j: int | None = None) -> list[BandFunction]:
    """All nonempty negative bands ``j = -1, -2, ...``."""
    max_j = max_j or params.q + 2
    out = []
    for j in range(1, max_j + 1):
        bf = band_curve(-j, params, n_samples)
        if bf.empty:
            break
        out.append(bf)
    return out


def band_range(bf: BandFunction, params: ModelParams) -> tuple[float, float]:
    """Refined ``(min, max)`` of a band, polishing the sampled extremes."""
    lo, hi = bf.e_min, bf.e_max
    h = 1.0 / (len(bf.k2) * bf.q)
    offset = alpha_omega(params if bf.j > 0 else _negative_params(params))

    def energy(kk: float) -> float:
        try:
            if bf.j > 0:
                return solve_band(bf.j, kk, params, offset)
            return -solve_band(-bf.j, kk + 0.5, _negative_params(params), offset)
        except NoSolution:
            return float("nan")

    for sign, idx in ((1.0, int(np.nanargmin(bf.energies))), (-1.0, int(np.nanargmax(bf.energies)))):
        k0 = bf.k2[idx]
        def f(kk: float, sign: float = sign) -> float:
            e = energy(kk)
            return sign * e if np.isfinite(e) else 1e300

        res = optimize.minimize_scalar(f, bounds=(k0 - h, k0 + h), method="bounded",
                                       options={"xatol": 1e-12})
        if res.fun < 1e299:
            if sign > 0:
                lo = min(lo, float(res.fun))
            else:
                hi = max(hi, -float(res.fun))
    # domain boundaries touch the threshold
    for kk in bf.excluded:
        e = energy(kk)
        if np.isfinite(e):
            lo, hi = min(lo, e), max(hi, e)
    return lo, hi


@dataclass(frozen=True)
class Spectrum:
    """Sorted disjoint closed intervals with the contributing sources of each."""

    intervals: tuple
    sources: tuple

    def contains(self, E: float, tol: float = 0.0) -> bool:
        return any(a - tol <= E <= b + tol for a, b in self.intervals)


def assemble_spectrum(params: ModelParams, max_j_scan: int | None = None,
                      n_samples: int = 512) -> Spectrum:
    """Union of ``[-2, 2]`` and the ranges of all positive and negative bands."""
    pieces = [((-2.0, 2.0), "laplacian")]
    for bf in positive_bands(params, n_samples, max_j_scan) + negative_bands(params, n_samples, max_j_scan):
        pieces.append((band_range(bf, params), f"surface_band({bf.j})"))
    pieces.sort(key=lambda t: t[0][0])
    ints, prov = [], []
    for (a, b), src in pieces:
        if ints and a <= ints[-1][1]:
            ints[-1] = (ints[-1][0], max(ints[-1][1], b))
            prov[-1].append(src)
        else:
            ints.append((a, b))
            prov.append([src])
    return Spectrum(tuple(ints), tuple(tuple(p) for p in prov))


@dataclass
class BandDiagnostics:
    """Scalars characterising the positive band structure."""

    q: int
    widths: dict = field(default_factory=dict)
    ranges: dict = field(default_factory=dict)
    separations: dict = field(default_factory=dict)
    delta_phi: float = float("nan")
    fourier: list = field(default_factory=list)
    n_positive: int = 0


def delta_phi_max(params: ModelParams, n: int = 2048) -> float:
    """``max_k2 [Phi_q(k2, 2) - Phi_q(k2, 1 - cos 2 pi k2)]`` over the period window."""
    q = params.q
    k = period_window(q, n)
    vals = phase_Phi_q(k, 2.0, params) - phase_Phi_q(k, 1.0 - np.cos(2 * np.pi * k), params)
    return float(np.max(vals))


def phi_fourier(E: float, g: float, n_max: int, q: int, n_grid: int | None = None) -> np.ndarray:
    """``|phi_hat_{q n}|`` for ``n = 1..n_max`` at fixed ``E > 2`` by discrete transform."""
    if E <= 2.0:
        raise OutsideDomain("Fourier diagnostics need E > 2")
    n_grid = n_grid or max(4096, 8 * q * n_max)
    k = np.arange(n_grid) / n_grid
    coef = np.fft.fft(phase_phi(k, E, g)) / n_grid
    return np.abs(coef[[q * n for n in range(1, n_max + 1)]])


def band_diagnostics(params: ModelParams, n_samples: int = 512, fourier_E: float = 3.0,
                     fourier_terms: int = 4) -> BandDiagnostics:
    """Widths, adjacent separations, ``delta Phi`` and Fourier decay."""
    bands = positive_bands(params, n_samples)
    diag = BandDiagnostics(q=params.q, n_positive=len(bands))
    for bf in bands:
        lo, hi = band_range(bf, params)
        diag.ranges[bf.j] = (lo, hi)
        diag.widths[bf.j] = hi - lo
    for a, b in zip(bands[:-1], bands[1:]):
        both = a.in_domain & b.in_domain
        if np.any(both):
            diag.separations[(a.j, b.j)] = float(np.min(b.energies[both] - a.energies[both]))
    diag.delta_phi = delta_phi_max(params)
    diag.fourier = list(phi_fourier(fourier_E, params.g, fourier_terms, params.q))
    return diag


def critical_energies(params: ModelParams, n_samples: int = 512) -> set:
    """Energies of stationary points and domain ends of every band, plus ``+-2``."""
    out = {-2.0, 2.0}
    for bf in positive_bands(params, n_samples) + negative_bands(params, n_samples):
        E = bf.energies
        ok = np.isfinite(E)
        dE = np.diff(E)
        for i in range(1, len(E) - 1):
            if ok[i - 1] and ok[i] and ok[i + 1] and dE[i - 1] * dE[i] <= 0:
                lo, hi = band_range(BandFunction(bf.j, bf.q, bf.k2[i - 1:i + 2],
                                                 E[i - 1:i + 2]), params)
                out.add(float(lo if dE[i - 1] < 0 else hi))
        # stationary points at the periodic seam of the window
        if ok[0] and ok[-1]:
            d_left, d_right = E[0] - E[-1], E[1] - E[0]
            if d_left * d_right <= 0:
                out.add(float(E[0]))
        for kk in bf.excluded:
            if bf.j > 0:
                out.add(float(threshold_energy(kk, params)))
            else:
                out.add(-float(threshold_energy(kk + 0.5, _negative_params(params))))
    return out


# ---------------------------------------------------------------------------
# irrational limit


def diophantine_f(E: float, g: float) -> float:
    """``F(E) = (1/pi) int_T arctan(sqrt((E + cos 2 pi k)**2 - 1) / g) dk``, ``E >= 2``.

    Increasing from ``F(2)`` to ``1/2``; it is the ``q -> infinity`` limit of
    ``Phi_q / q``.
    """
    if E < 2.0:
        raise OutsideDomain("F is defined for E >= 2")

    def f(k):
        w = E + np.cos(2 * np.pi * k)
        return np.arctan(np.sqrt(np.maximum(w * w - 1.0, 0.0)) / g)

    # smooth and periodic for E > 2: the midpoint rule converges geometrically
    prev = None
    n = 64
    while E > 2.0 and n <= 1 << 20:
        val = float(np.mean(f((np.arange(n) + 0.5) / n)))
        if prev is not None and abs(val - prev) <= 1e-16:
            return val / math.pi
        prev, n = val, 2 * n
    val, _ = integrate.quad(lambda k: float(f(k)), 0.0, 0.5, epsabs=1e-13, epsrel=1e-13, limit=400)
    return 2.0 * val / math.pi


def diophantine_root(target: float, g: float) -> float:
    """Solve ``F(E) = target`` on ``E > 2`` (Brent's method on a grown bracket).

    Raises
    ------
    NoRoot
        If ``target`` is outside ``(F(2), 1/2)``.
    """
    f2 = diophantine_f(2.0, g)
    if not (f2 < target < 0.5):
        raise NoRoot(f"target {target} outside the range ({f2:.6f}, 0.5)")
    lo, hi = 2.0, 4.0
    while diophantine_f(hi, g) < target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise NoRoot("root beyond 1e12")
    return optimize.brentq(lambda E: diophantine_f(E, g) - target, lo, hi,
                           xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def limit_energy(x2: int, alpha: float, omega: float, g: float) -> float:
    """Limiting surface energy labelled by ``x2`` for irrational ``alpha``.

    Positive side: ``F(E) = frac(alpha x2 + omega)``; negative side (by the
    staggered gauge): ``F(-E) = 1 - frac(alpha x2 + omega)``.
    """
    frac = (alpha * x2 + omega) % 1.0
    if frac < 0.5:
        return diophantine_root(frac, g)
    if frac > 0.5:
        return -diophantine_root(1.0 - frac, g)
    raise NoRoot("frac(alpha x2 + omega) = 1/2 is a tan pole")


def convergents(alpha: float, n: int) -> list[tuple[int, int]]:
    """First ``n`` continued-fraction convergents ``p/q`` of ``alpha``."""
    out = []
    h0, h1, k0, k1 = 0, 1, 1, 0
    x = alpha
    for _ in range(n):
        a = int(math.floor(x))
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append((h1, k1))
        frac = x - a
        if frac < 1e-15:
            break
        x = 1.0 / frac
    return out


@dataclass(frozen=True)
class LimitRow:
    n: int
    p: int
    q: int
    x2: int
    E_diophantine: float
    band_mid: float
    distance: float


def limit_comparison(alpha_target: float, conv: list, x2_range, g: float, omega: float,
                     n_samples: int = 256) -> list[LimitRow]:
    """Pair each limiting energy with the nearest band midpoint of ``H_{p/q}``."""
    rows = []
    targets = {x2: limit_energy(x2, alpha_target, omega, g) for x2 in x2_range}
    for n, (p, q) in enumerate(conv):
        params = ModelParams(g=g, alpha=Fraction(p, q), omega=omega)
        bands = positive_bands(params, n_samples) + negative_bands(params, n_samples)
        mids = np.array([0.5 * sum(band_range(bf, params)) for bf in bands])
        for x2, E in targets.items():
            i = int(np.argmin(np.abs(mids - E)))
            rows.append(LimitRow(n, p, q, x2, E, float(mids[i]), float(abs(mids[i] - E))))
    return rows
