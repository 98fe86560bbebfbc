"""Experiment drivers for the eleven acceptance checks.

Each driver runs one experiment at fixed settings and returns a
:class:`CheckResult`; nothing here decides tolerances adaptively.  The CLI
``verify`` command and the acceptance test module both call these.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .band_structure import (
    band_diagnostics,
    band_range,
    band_curve,
    delta_phi_max,
    diophantine_root,
    limit_comparison,
    negative_bands,
    period_window,
    positive_bands,
    solve_band,
)
from .errors import NoSolution
from .lattice_green import green_1d, green_nd
from .oracle import BoxResolvent, BoxSpec, StripSpec, quadrature_green, strip_eigenvalues
from .resolvent_series import (
    green_constant_potential,
    green_full_periodic,
    green_full_qp,
    lyapunov_exponent,
)
from .scattering_states import (
    psi_periodic_surface,
    psi_periodic_volume,
    psi_qp,
    schrodinger_residual,
    surface_decay_fit,
)
from .surface_symbols import GOLDEN, ModelParams, partial_product_P


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one acceptance experiment."""

    number: int
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] {self.number:2d} {self.name}: measured {self.measured:.3e} "
                f"(limit {self.threshold:.1e}); {self.detail}; {self.seconds:.1f}s")


def _timed(fn: Callable[[], CheckResult]) -> CheckResult:
    t0 = time.perf_counter()
    res = fn()
    return CheckResult(res.number, res.name, res.passed, res.measured, res.threshold,
                       res.detail, time.perf_counter() - t0)


def _rational(p: int, q: int, g: float, omega: float) -> ModelParams:
    return ModelParams(g=g, alpha=Fraction(p % q if q > 1 else 0, q), omega=omega)


# ---------------------------------------------------------------------------


def check_green_1d() -> CheckResult:
    zs = [complex(re, im) for im in (0.1, 0.5, 1.0, 2.0, 5.0) for re in np.linspace(-3.0, 3.0, 10)]
    worst = 0.0
    for z in zs:
        for x in range(-10, 11):
            worst = max(worst, abs(green_1d(x, z).value - quadrature_green(1, [x], z)))
    edge = abs(green_1d(0, 2.0).value + 1.0 / math.sqrt(3.0))
    ok = worst <= 1e-10 and edge <= 1e-12
    return CheckResult(1, "1-D Green closed form vs quadrature", ok, worst, 1e-10,
                       f"|G(0; 2+i0) + 1/sqrt 3| = {edge:.1e}")


def check_green_2d() -> CheckResult:
    xs = [(0, 0), (1, 0), (2, 1), (3, -2)]
    zs = [0.5j + 0.3, 1j - 1.2, 0.7j + 2.5, 2j, 0.5j - 3.1]
    worst = 0.0
    for x in xs:
        for z in zs:
            worst = max(worst, abs(green_nd(2, x, z).value - quadrature_green(2, x, z)))
    return CheckResult(2, "2-D Bessel-time route vs torus quadrature", worst <= 1e-6, worst, 1e-6,
                       "20 points, Im z >= 0.5")


RESOLVENT_PAIRS = [((0, 0), (0, 0)), ((1, 0), (0, 0)), ((0, 1), (0, 0)), ((1, 1), (0, 0)),
                   ((2, -1), (0, 1)), ((0, 0), (0, 3)), ((-1, 2), (1, -1)), ((3, 0), (0, 0)),
                   ((0, -2), (0, 2))]


def check_resolvent_box() -> CheckResult:
    params = ModelParams(g=1.0, alpha=GOLDEN, omega=0.2)
    z = 0.3 + 0.2j
    series = [green_full_qp(x, y, z, params).value for x, y in RESOLVENT_PAIRS]
    errs = []
    for L in (20, 40, 60):
        box = BoxResolvent(params, BoxSpec(L, L), z)
        errs.append(max(abs(box.entry(x, y) - s) for (x, y), s in zip(RESOLVENT_PAIRS, series)))
    ok = errs[-1] <= 2e-2 and errs[0] > errs[1] > errs[2]
    return CheckResult(3, "series resolvent vs box diagonalization", ok, errs[-1], 2e-2,
                       "L = 20, 40, 60 errors " + ", ".join(f"{e:.2e}" for e in errs))


def check_q1_reduction() -> CheckResult:
    omega = 0.25
    params = _rational(0, 1, 1.0, omega)
    v = params.g * math.tan(math.pi * omega)
    zs = [3j, 0.5 + 0.3j, -1.5 + 0.2j, 2.5 + 0.1j, -0.4 + 1j, 1.1 + 0.05j, -2.8 + 0.5j,
          0.0 + 0.1j, 4.0 + 0.3j, -3.5 + 2j]
    pairs = [((0, 0), (0, 0)), ((1, 2), (-1, 0))]
    worst = 0.0
    for z in zs:
        for x, y in pairs:
            a = green_full_periodic(x, y, z, params).value
            b = green_constant_potential(x, y, z, v).value
            worst = max(worst, abs(a - b))
    avg_err = 0.0
    for x, y in pairs:
        vals = [green_full_qp(x, y, 1j, ModelParams(g=1.0, alpha=GOLDEN, omega=j / 64)).value
                for j in range(64)]
        avg_err = max(avg_err, abs(np.mean(vals) - green_constant_potential(x, y, 1j, -1j).value))
    ok = worst <= 1e-10 and avg_err <= 1e-8
    return CheckResult(4, "q = 1 reduction and phase average", ok, worst, 1e-10,
                       f"phase-average error {avg_err:.2e} (limit 1e-8)")


QP_MOMENTA = [(0.1, 0.2), (0.3, 0.15), (0.05, 0.4), (0.22, 0.7), (0.4, 0.9)]


def check_eigenfunction_residuals() -> CheckResult:
    res, ctl = [], []
    qp = ModelParams(g=1.0, alpha=GOLDEN, omega=0.2)
    for k in QP_MOMENTA:
        for sign in ("minus", "plus"):
            st = psi_qp(k, sign, qp)
            res.append(schrodinger_residual(st.evaluate, st.energy, qp))
            ctl.append(schrodinger_residual(lambda a, b, st=st: st.evaluate(a, b, True), st.energy, qp))
    for q, p in ((1, 0), (3, 1), (5, 2)):
        per = _rational(p, q, 1.0, 0.2)
        for sign in ("minus", "plus"):
            st = psi_periodic_volume((0.13, 0.07), sign, per)
            res.append(schrodinger_residual(st.evaluate, st.energy, per))
            ctl.append(schrodinger_residual(lambda a, b, st=st: st.evaluate(a, b, True), st.energy, per))
        for bf in positive_bands(per, 256) + negative_bands(per, 256):
            idx = np.flatnonzero(bf.in_domain)
            st = psi_periodic_surface(float(bf.k2[idx[idx.size // 2]]), bf.j, "minus", per)
            res.append(schrodinger_residual(st.evaluate, st.energy, per))
    worst = max(res)
    ratio = min(ctl) / worst
    ok = worst <= 1e-8 and ratio >= 1e3
    return CheckResult(5, "eigenfunction residuals", ok, worst, 1e-8,
                       f"{len(res)} states; negative control / residual >= {ratio:.1e}")


def check_band_structure() -> CheckResult:
    p1 = ModelParams(g=1.0, alpha=Fraction(0, 1), omega=0.25)
    bf = band_curve(1, p1, 256)
    closed = float(np.max(np.abs(bf.energies - (math.sqrt(2.0) - np.cos(2 * np.pi * bf.k2)))))
    resid = per = 0.0
    notes = []
    ok = closed <= 1e-10
    for q in range(2, 9):
        params = _rational(1, q, 1.0, 0.2)
        bands = positive_bands(params, 128)
        for b in bands:
            idx = np.flatnonzero(b.in_domain)
            for i in idx:
                P = partial_product_P(q, b.k2[i], complex(b.energies[i]), params)
                resid = max(resid, float(abs(complex(np.ravel(P)[0]) - 1.0)))
            for i in idx[:: max(1, idx.size // 8)]:
                k = float(b.k2[i])
                try:
                    shifted = solve_band(b.j, k + 1.0 / q, params)
                except NoSolution:
                    continue
                per = max(per, abs(shifted - b.energies[i]))
        diag = band_diagnostics(params, 128)
        seps = list(diag.separations.values())
        n_ok = len(bands) <= q / 2
        sep_ok = all(s > 0 for s in seps)
        ok = ok and n_ok and sep_ok
        notes.append(f"q={q}:N'={len(bands)}")
    ok = ok and resid <= 1e-8 and per <= 1e-9
    return CheckResult(6, "band structure", ok, resid, 1e-8,
                       f"q=1 closed form {closed:.1e}; periodicity {per:.1e}; " + " ".join(notes))


FAR_WEIGHT_CUT = 1e-6


def check_strip_oracle() -> CheckResult:
    # localized: outside every transverse band and negligible mass on |x1| > L1/2;
    # extended levels carry roughly half their mass there
    params = _rational(1, 3, 1.0, 0.2)
    bands = positive_bands(params, 256) + negative_bands(params, 256)
    ks = period_window(3, 8) + 0.5 / (8 * 3)
    worst, weak, far_loc, far_ext = 0.0, 0, 0.0, 1.0
    for k in ks:
        levels = strip_eigenvalues(params, StripSpec(3, float(k), 200))
        loc = [lv for lv in levels if lv.outside_bands and lv.far_weight < FAR_WEIGHT_CUT]
        far_ext = min([far_ext] + [lv.far_weight for lv in levels if not lv.outside_bands])
        for b in bands:
            try:
                E = solve_band(b.j, float(k), params)
            except NoSolution:
                continue
            if not loc:
                worst = math.inf
                continue
            near = min(loc, key=lambda lv: abs(lv.energy - E))
            worst = max(worst, abs(near.energy - E))
            far_loc = max(far_loc, near.far_weight)
            weak += not near.surface_candidate
    return CheckResult(7, "band functions vs strip eigenvalues", worst <= 1e-3, worst, 1e-3,
                       f"far weight: matched levels <= {far_loc:.1e}, in-band levels >= {far_ext:.2f}; "
                       f"{weak} matched levels below the 0.5 weight on |x1| <= 2")


LIMIT_CONVERGENTS = [(2, 3), (3, 5), (5, 8), (8, 13)]


def check_band_asymptotics(g: float = 2.5, omega: float = 0.2) -> CheckResult:
    E0 = diophantine_root(omega, g)
    widths, small_ok = [], True
    for p, q in LIMIT_CONVERGENTS:
        params = _rational(p, q, g, omega)
        rng = [band_range(b, params) for b in positive_bands(params, 256)]
        mids = np.array([0.5 * (a + b) for a, b in rng])
        lo, hi = rng[int(np.argmin(np.abs(mids - E0)))]
        widths.append((q, lo, hi - lo))
        edge = 1.0 + math.cos(math.pi / q)
        for a, b in rng:
            if a >= edge and b < 2.0 and b - a > math.pi ** 2 / (2 * q * q):
                small_ok = False
    qs = np.array([w[0] for w in widths], dtype=float)
    logw = np.log([w[2] for w in widths])
    slope = float(np.polyfit(qs, logw, 1)[0])
    decreasing = bool(np.all(np.diff(logw) < 0)) and all(w[1] > 2.0 for w in widths)
    ratios = []
    for p, q in [(3, 5), (5, 8), (8, 13), (13, 21), (21, 34)]:
        params = _rational(p, q, g, omega)
        ratios.append(delta_phi_max(params) * q / math.log(q))
    spread = max(ratios) / min(ratios)
    ok = decreasing and slope < 0 and small_ok and spread <= 5.0
    return CheckResult(8, "band width asymptotics", ok, slope, 0.0,
                       "widths " + ", ".join(f"q={q}:{w:.2e}" for q, _, w in widths)
                       + f"; dPhi q/log q spread {spread:.2f}; small-band bound {'ok' if small_ok else 'violated'}")


def check_diophantine_limit(g: float = 2.5, omega: float = 0.2) -> CheckResult:
    conv = [(3, 5), (5, 8), (8, 13), (13, 21)]
    rows = limit_comparison(GOLDEN, conv, (0, 1, -1), g, omega)
    ok, notes, worst = True, [], 0.0
    for x2 in (0, 1, -1):
        d = [r.distance for r in rows if r.x2 == x2]
        ok = ok and all(b < a for a, b in zip(d[:-1], d[1:]))
        worst = max(worst, d[-1])
        notes.append(f"x2={x2}: " + " > ".join(f"{v:.1e}" for v in d))
    return CheckResult(9, "Diophantine limit of band midpoints", ok, worst, math.inf, "; ".join(notes))


def check_surface_decay() -> CheckResult:
    worst, n = 0.0, 0
    for q, p in ((1, 0), (3, 1), (5, 2)):
        params = _rational(p, q, 1.0, 0.2)
        for bf in positive_bands(params, 256) + negative_bands(params, 256):
            idx = np.flatnonzero(bf.in_domain)
            for i in idx[[idx.size // 4, idx.size // 2]]:
                st = psi_periodic_surface(float(bf.k2[i]), bf.j, "minus", params)
                fit, pred = surface_decay_fit(st)
                worst = max(worst, abs(fit / pred - 1.0))
                n += 1
    return CheckResult(10, "surface decay rates", worst <= 0.05, worst, 0.05, f"{n} states")


def check_lyapunov() -> CheckResult:
    params = ModelParams(g=1.0, alpha=GOLDEN, omega=0.2)
    gaps, neg = [], True
    for E in (0.0, 1.0, -1.0):
        r = lyapunov_exponent(E, params, m_max=10_000)
        gaps.append(r.gap)
        neg = neg and r.integral < 0 and r.birkhoff < 0
    worst = max(gaps)
    return CheckResult(11, "Lyapunov relation", worst <= 1e-2 and neg, worst, 1e-2,
                       "both estimates negative" if neg else "sign violated")


ALL_CHECKS: list[Callable[[], CheckResult]] = [
    check_green_1d, check_green_2d, check_resolvent_box, check_q1_reduction,
    check_eigenfunction_residuals, check_band_structure, check_strip_oracle,
    check_band_asymptotics, check_diophantine_limit, check_surface_decay, check_lyapunov,
]


def run_check(number: int) -> CheckResult:
    return _timed(ALL_CHECKS[number - 1])


def run_all() -> list[CheckResult]:
    return [_timed(fn) for fn in ALL_CHECKS]
