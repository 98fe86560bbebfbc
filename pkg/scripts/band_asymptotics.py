"""Band widths and phase spread along the golden-mean convergents.

Writes ``band_widths.csv`` (every positive band of every ``p/q``) and
``phase_spread.csv`` (``max delta Phi`` and ``delta Phi * q / log q``).
"""

import argparse
import csv
import math
from fractions import Fraction
from pathlib import Path

from surface_maryland.band_structure import band_range, convergents, delta_phi_max, positive_bands
from surface_maryland.surface_symbols import GOLDEN, ModelParams


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--g", type=float, default=2.5)
    ap.add_argument("--omega", type=float, default=0.2)
    ap.add_argument("--n-conv", type=int, default=9)
    ap.add_argument("--n-samples", type=int, default=256)
    ap.add_argument("--out", default="out/band_asymptotics")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    conv = [(p, q) for p, q in convergents(float(GOLDEN), args.n_conv) if q >= 2]
    with (out / "band_widths.csv").open("w", newline="") as fw, \
            (out / "phase_spread.csv").open("w", newline="") as fs:
        widths, spread = csv.writer(fw), csv.writer(fs)
        widths.writerow(["p", "q", "j", "lo", "hi", "width"])
        spread.writerow(["p", "q", "delta_phi", "scaled"])
        for p, q in conv:
            params = ModelParams(g=args.g, alpha=Fraction(p, q), omega=args.omega)
            for bf in positive_bands(params, args.n_samples):
                lo, hi = band_range(bf, params)
                widths.writerow([p, q, bf.j, f"{lo:.17g}", f"{hi:.17g}", f"{hi - lo:.6e}"])
            dphi = delta_phi_max(params)
            scaled = dphi * q / math.log(q)
            spread.writerow([p, q, f"{dphi:.6e}", f"{scaled:.6f}"])
            print(f"{p}/{q}: delta_phi {dphi:.3e}, scaled {scaled:.3f}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
