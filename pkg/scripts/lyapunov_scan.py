"""Birkhoff average vs torus integral of log|b| across the energy axis."""

import argparse
import csv
from pathlib import Path

import numpy as np

from surface_maryland.resolvent_series import lyapunov_exponent
from surface_maryland.surface_symbols import GOLDEN, ModelParams


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--g", type=float, default=1.0)
    ap.add_argument("--omega", type=float, default=0.2)
    ap.add_argument("--n-energy", type=int, default=81)
    ap.add_argument("--m-max", type=int, default=10_000)
    ap.add_argument("--out", default="out/lyapunov")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = ModelParams(g=args.g, alpha=GOLDEN, omega=args.omega)

    with (out / "lyapunov.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["E", "integral", "birkhoff", "gap"])
        for E in np.linspace(-2.2, 2.2, args.n_energy):
            r = lyapunov_exponent(float(E), params, m_max=args.m_max)
            w.writerow([f"{E:.6f}", f"{r.integral:.10f}", f"{r.birkhoff:.10f}", f"{r.gap:.3e}"])
    print(f"wrote {out / 'lyapunov.csv'}")


if __name__ == "__main__":
    main()
