"""Command-line front end.

Subcommands ``green``, ``bands``, ``states``, ``scatter``, ``limit`` and
``verify`` write CSV tables and a ``summary.json`` into the output directory
(``--out``, else ``$SURFACE_MARYLAND_OUT``, else ``./out``).  Parameters come
from defaults, then a flat ``key = value`` file (``--config``), then
``--set key=value`` pairs, then explicit flags.

Exit codes: 0 success, 2 bad configuration, 3 numeric failure, 4 invariant
violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import BadInput, MarylandError, NumericFailure

SCHEMA_VERSION = 1
OUT_ENV = "SURFACE_MARYLAND_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4


@dataclass
class RunConfig:
    """Flat parameter record shared by all subcommands."""

    g: float = 1.0
    alpha: str = "golden"
    omega: float = 0.2
    q: int = 0
    p: int = -1
    # green
    nu: int = 1
    x: str = "0"
    y: str = ""
    E: str = "0.5"
    im: float = 0.0
    side: str = "upper"
    # bands
    n_samples: int = 256
    # states / scatter
    k1: float = 0.1
    k2: float = 0.2
    sign: str = "minus"
    j: int = 0
    window: int = 10
    # limit
    n_conv: int = 6
    x2: str = "0,1,-1"
    # numerics
    tol: float = 1e-10
    max_terms: int = 10_000
    # verify
    suite: str = "trivial"
    out: str = ""

    def validate(self) -> None:
        if not (math.isfinite(self.g) and self.g > 0):
            raise BadInput("g must be a positive finite number")
        if self.side not in ("upper", "lower"):
            raise BadInput("side must be 'upper' or 'lower'")
        if self.sign not in ("plus", "minus"):
            raise BadInput("sign must be 'plus' or 'minus'")
        if self.suite not in ("trivial", "full"):
            raise BadInput("suite must be 'trivial' or 'full'")
        if self.q < 0 or self.n_samples < 8 or self.window < 1 or self.n_conv < 1:
            raise BadInput("q >= 0, n_samples >= 8, window >= 1 and n_conv >= 1 required")
        if not 0 < self.tol < 1 or self.max_terms < 1:
            raise BadInput("tol in (0, 1) and max_terms >= 1 required")

    def model(self):
        from .surface_symbols import GOLDEN, ModelParams

        if self.q > 0:
            p = self.p if self.p >= 0 else (1 if self.q > 1 else 0)
            alpha = Fraction(p % self.q if self.q > 1 else 0, self.q)
        elif self.alpha.strip().lower() == "golden":
            alpha = GOLDEN
        elif "/" in self.alpha:
            alpha = Fraction(self.alpha.strip())
        else:
            alpha = float(self.alpha)
        return ModelParams(g=self.g, alpha=alpha, omega=self.omega)

    def out_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV, "") or "out")


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(";", ",").split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def _coerce(name: str, raw: str):
    types = {f.name: f.type for f in fields(RunConfig)}
    if name not in types:
        raise BadInput(f"unknown configuration key {name!r}")
    kind = types[name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return str(raw)
    except ValueError as exc:
        raise BadInput(f"bad value for {name}: {raw!r}") from exc


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadInput(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = _coerce(key, val)
    return out


def build_config(ns: argparse.Namespace) -> RunConfig:
    values = {}
    if ns.config:
        try:
            values.update(read_config_file(ns.config))
        except OSError as exc:
            raise BadInput(f"cannot read config: {exc}") from exc
    for item in ns.set or []:
        if "=" not in item:
            raise BadInput(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        values[key.strip()] = _coerce(key.strip(), val.strip())
    for f in fields(RunConfig):
        v = getattr(ns, f.name, None)
        if v is not None:
            values[f.name] = v
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


@dataclass
class Report:
    command: str
    cfg: RunConfig
    outputs: list = field(default_factory=list)
    invariants: list = field(default_factory=list)
    values: dict = field(default_factory=dict)
    t0: float = field(default_factory=time.perf_counter)

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        d = self.cfg.out_dir()
        d.mkdir(parents=True, exist_ok=True)
        path = d / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        self.outputs.append(str(path))
        return path

    def check(self, name: str, passed: bool, measured: float, limit: float, detail: str = "") -> None:
        self.invariants.append({"name": name, "passed": bool(passed), "measured": float(measured),
                                "limit": float(limit), "detail": detail})

    def finish(self) -> int:
        d = self.cfg.out_dir()
        d.mkdir(parents=True, exist_ok=True)
        summary = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "params": asdict(self.cfg),
            "outputs": self.outputs,
            "invariant_results": self.invariants,
            "values": self.values,
            "timings": {"total_seconds": time.perf_counter() - self.t0},
        }
        (d / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n")
        for key, val in self.values.items():
            print(f"{key} {_fmt(val)}")
        for inv in self.invariants:
            print(f"[{'PASS' if inv['passed'] else 'FAIL'}] {inv['name']}: {inv['measured']:.3e}"
                  f" (limit {inv['limit']:.1e}) {inv['detail']}".rstrip())
        print(f"wrote {len(self.outputs)} file(s) and summary.json to {d}")
        if not all(inv["passed"] for inv in self.invariants):
            return EXIT_INVARIANT
        return EXIT_OK


# ---------------------------------------------------------------------------
# commands


def cmd_green(cfg: RunConfig) -> int:
    """Free Green function ``G0^(nu)(x; E +- i0 or E + i im)``, or the full ``G(x, y)``."""
    from .lattice_green import ComplexEnergy, green_1d, green_nd, green_nd_boundary
    from .resolvent_series import green_full_periodic, green_full_qp

    rep = Report("green", cfg)
    x = _int_list(cfg.x)
    rows = []
    for E in _float_list(cfg.E):
        if cfg.im == 0.0:
            z = ComplexEnergy.upper(E) if cfg.side == "upper" else ComplexEnergy.lower(E)
        else:
            z = ComplexEnergy.at(complex(E, cfg.im))
        if cfg.y:
            params = cfg.model()
            y = _int_list(cfg.y)
            gv = (green_full_periodic(x, y, z, params) if params.is_rational
                  else green_full_qp(x, y, z, params))
        elif cfg.nu == 1:
            if len(x) != 1:
                raise BadInput("nu = 1 needs a single coordinate")
            gv = green_1d(x[0], z)
        elif z.on_axis:
            gv = green_nd_boundary(cfg.nu, x, E, cfg.side)
        else:
            gv = green_nd(cfg.nu, x, z)
        rows.append((z.re, z.im if not z.on_axis else 0.0, gv.value.real, gv.value.imag, gv.err))
        rep.values[f"G(E={_fmt(E)})"] = f"{_fmt(gv.value.real)} {_fmt(gv.value.imag)}"
    rep.write_csv("green.csv", ["E", "im_z", "re", "im", "err"], rows)
    return rep.finish()


def cmd_bands(cfg: RunConfig) -> int:
    """Band functions, spectrum intervals and band diagnostics for rational ``alpha``."""
    from .band_structure import assemble_spectrum, band_diagnostics, negative_bands, positive_bands
    from .surface_symbols import partial_product_P

    params = cfg.model()
    if not params.is_rational:
        raise BadInput("bands needs a rational alpha (use --q/--p or alpha = p/q)")
    rep = Report("bands", cfg)
    bands = negative_bands(params, cfg.n_samples)[::-1] + positive_bands(params, cfg.n_samples)
    rows, resid = [], 0.0
    for b in bands:
        for k, E, ok in zip(b.k2, b.energies, b.in_domain):
            rows.append((b.j, k, E, ok))
            if ok:
                P = complex(np.ravel(partial_product_P(params.q, k, complex(E), params))[0])
                resid = max(resid, abs(P - 1.0))
    rep.write_csv("bands.csv", ["j", "k2", "E", "in_domain"], rows)
    spectrum = assemble_spectrum(params, n_samples=cfg.n_samples)
    rep.write_csv("spectrum.csv", ["lo", "hi", "sources"],
                  [(a, b, "+".join(src)) for (a, b), src in zip(spectrum.intervals, spectrum.sources)])
    diag = band_diagnostics(params, cfg.n_samples)
    rep.write_csv("band_diagnostics.csv", ["j", "lo", "hi", "width"],
                  [(j, lo, hi, hi - lo) for j, (lo, hi) in sorted(diag.ranges.items())])
    rep.values["n_positive_bands"] = diag.n_positive
    rep.values["delta_phi"] = diag.delta_phi
    rep.values["fourier_abs"] = " ".join(_fmt(abs(c)) for c in diag.fourier)
    rep.check("band-equation residual", resid <= 1e-8, resid, 1e-8)
    if params.q >= 2:
        rep.check("positive band count <= q/2", diag.n_positive <= params.q / 2, diag.n_positive, params.q / 2)
    seps = list(diag.separations.values())
    if seps:
        rep.check("adjacent bands separated", min(seps) > 0, min(seps), 0.0)
    return rep.finish()


def _window_x2(cfg: RunConfig, params) -> np.ndarray:
    if params.is_rational:
        return np.arange(0, 3 * params.q)
    return np.arange(-cfg.window, cfg.window + 1)


def cmd_states(cfg: RunConfig) -> int:
    """Eigenfunction values on a window, with residual and volume/surface split."""
    from .resolvent_series import SeriesControl
    from .scattering_states import (
        Window,
        psi_periodic_surface,
        psi_periodic_volume,
        psi_qp,
        schrodinger_residual,
    )

    params = cfg.model()
    rep = Report("states", cfg)
    if cfg.j != 0:
        if not params.is_rational:
            raise BadInput("surface states (j != 0) need a rational alpha")
        st = psi_periodic_surface(cfg.k2, cfg.j, cfg.sign, params)
    elif params.is_rational:
        st = psi_periodic_volume((cfg.k1, cfg.k2), cfg.sign, params)
    else:
        st = psi_qp((cfg.k1, cfg.k2), cfg.sign, params, SeriesControl(tol=cfg.tol, max_terms=cfg.max_terms))
    x1 = np.arange(-cfg.window, cfg.window + 1)
    x2 = _window_x2(cfg, params)
    vol, surf = st.split()
    rows = []
    for cls, part in (("total", st), ("volume", vol), ("surface", surf)):
        vals = part.evaluate(x1, x2)
        for a, xa in enumerate(x1):
            for b, xb in enumerate(x2):
                rows.append((xa, xb, vals[a, b].real, vals[a, b].imag, cls))
    rep.write_csv("states.csv", ["x1", "x2", "re", "im", "class"], rows)
    win = Window(cfg.window, ((int(x2[0]), int(x2[-1])),))
    res = schrodinger_residual(st.evaluate, st.energy, params, win)
    rep.values["energy"] = st.energy
    rep.values["n_terms"] = st.n_terms
    rep.check("Schrodinger residual", res <= 1e-8, res, 1e-8)
    return rep.finish()


def cmd_scatter(cfg: RunConfig) -> int:
    """Channel table of the outgoing state and the incident-channel amplitudes."""
    from .resolvent_series import SeriesControl
    from .scattering_states import amplitudes, psi_qp

    params = cfg.model()
    ctrl = SeriesControl(tol=cfg.tol, max_terms=cfg.max_terms)
    st = psi_qp((cfg.k1, cfg.k2), "minus", params, ctrl)
    amp = amplitudes((cfg.k1, cfg.k2), params, ctrl)
    rep = Report("scatter", cfg)
    rows = []
    for t in st.terms:
        a = amp.channels[t.m][0]
        rows.append((t.m, t.lam, t.eta.real, t.eta.imag, a.real, a.imag, t.cls))
    rep.write_csv("channels.csv", ["m", "lambda", "eta_re", "eta_im", "amp_re", "amp_im", "class"], rows)
    rep.values["energy"] = st.energy
    rep.values["t0"] = f"{_fmt(amp.t0.real)} {_fmt(amp.t0.imag)}"
    rep.values["r0"] = f"{_fmt(amp.r0.real)} {_fmt(amp.r0.imag)}"
    gap = abs(amp.t0 - 1.0 - amp.r0)
    rep.check("t0 = 1 + r0", gap <= 1e-15, gap, 1e-15)
    return rep.finish()


def cmd_limit(cfg: RunConfig) -> int:
    """Band midpoints along convergents of ``alpha`` against the Diophantine limit."""
    from .band_structure import convergents, limit_comparison

    params = cfg.model()
    if params.is_rational:
        raise BadInput("limit needs an irrational alpha")
    conv = [c for c in convergents(params.alpha_vector[0], cfg.n_conv + 2) if c[1] >= 3][: cfg.n_conv]
    rows = limit_comparison(params.alpha_vector[0], conv, _int_list(cfg.x2), cfg.g, cfg.omega, cfg.n_samples)
    rep = Report("limit", cfg)
    rep.write_csv("limit.csv", ["n", "p", "q", "x2", "E_diophantine", "band_mid", "distance"],
                  [(r.n, r.p, r.q, r.x2, r.E_diophantine, r.band_mid, r.distance) for r in rows])
    for x2 in _int_list(cfg.x2):
        d = [r.distance for r in rows if r.x2 == x2]
        rep.check(f"distance decreasing, x2 = {x2}", all(b < a for a, b in zip(d[:-1], d[1:])),
                  d[-1], math.inf)
    return rep.finish()


def _trivial_suite(rep: Report) -> None:
    from .band_structure import band_curve
    from .lattice_green import green_1d
    from .oracle import BoxSpec, box_hamiltonian
    from .scattering_states import point_potential_amplitudes
    from .surface_symbols import ModelParams

    d = abs(green_1d(0, 2.0).value + 1.0 / math.sqrt(3.0))
    rep.check("G0(0; 2 + i0) = -1/sqrt 3", d <= 1e-12, d, 1e-12)

    # free plane wave on a window away from the potential row
    k1, k2 = 0.13, 0.29
    E = -math.cos(2 * math.pi * k1) - math.cos(2 * math.pi * k2)
    x1, x2 = np.arange(2, 15), np.arange(-6, 7)
    psi = np.exp(2j * np.pi * k1 * x1)[:, None] * np.exp(2j * np.pi * k2 * x2)[None, :]
    lap = psi[2:, 1:-1] + psi[:-2, 1:-1] + psi[1:-1, 2:] + psi[1:-1, :-2]
    r = float(np.max(np.abs(-0.5 * lap - E * psi[1:-1, 1:-1])))
    rep.check("free plane wave residual", r <= 1e-14, r, 1e-14)

    p1 = ModelParams(g=1.0, alpha=Fraction(0, 1), omega=0.25)
    bf = band_curve(1, p1, 64)
    c = float(np.max(np.abs(bf.energies - (math.sqrt(2.0) - np.cos(2 * np.pi * bf.k2)))))
    rep.check("q = 1 band closed form", c <= 1e-10, c, 1e-10)

    H = box_hamiltonian(ModelParams(g=1.0, omega=0.2), BoxSpec(4, 4))
    asym = float(abs(H - H.T).max())
    rep.check("box Hamiltonian symmetric", asym == 0.0, asym, 0.0)

    _, rr = point_potential_amplitudes(0.17, 0.8)
    ref = -0.8j / (0.8j + math.sin(2 * math.pi * 0.17))
    rep.check("point-potential reflection", abs(rr - ref) <= 1e-14, abs(rr - ref), 1e-14)


def cmd_verify(cfg: RunConfig) -> int:
    """Run the trivial invariant suite or the full acceptance suite."""
    rep = Report("verify", cfg)
    _trivial_suite(rep)
    if cfg.suite == "full":
        from .acceptance import run_all

        for res in run_all():
            rep.check(f"acceptance {res.number}: {res.name}", res.passed, res.measured, res.threshold, res.detail)
    return rep.finish()


COMMANDS = {
    "green": cmd_green,
    "bands": cmd_bands,
    "states": cmd_states,
    "scatter": cmd_scatter,
    "limit": cmd_limit,
    "verify": cmd_verify,
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="surface-maryland", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=(fn.__doc__ or "").strip().split("\n")[0])
        sp.add_argument("--config", help="flat key = value file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one key")
        for f in fields(RunConfig):
            kind = {"int": int, "float": float}.get(f.type, str)
            sp.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=kind, default=None)
    return ap


def main(argv: list[str] | None = None) -> int:
    try:
        ns = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = build_config(ns)
        return COMMANDS[ns.command](cfg)
    except (BadInput, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, MarylandError, ArithmeticError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
