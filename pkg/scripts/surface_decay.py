"""Fitted decay of surface states against the slowest closed channel.

For each band of ``H_{p/q}`` a few momenta are sampled; the profile of
``|Psi|**2`` summed over one period in ``x2`` is written for plotting.
"""

import argparse
import csv
from fractions import Fraction
from pathlib import Path

import numpy as np

from surface_maryland.band_structure import negative_bands, positive_bands
from surface_maryland.scattering_states import psi_periodic_surface, surface_decay_fit
from surface_maryland.surface_symbols import ModelParams


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--g", type=float, default=1.0)
    ap.add_argument("--omega", type=float, default=0.2)
    ap.add_argument("--alpha", default="2/5")
    ap.add_argument("--per-band", type=int, default=3)
    ap.add_argument("--x1-max", type=int, default=40)
    ap.add_argument("--out", default="out/surface_decay")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = ModelParams(g=args.g, alpha=Fraction(args.alpha), omega=args.omega)
    q = params.q
    x1 = np.arange(0, args.x1_max + 1)

    with (out / "rates.csv").open("w", newline="") as fr, (out / "profiles.csv").open("w", newline="") as fp:
        rates, prof = csv.writer(fr), csv.writer(fp)
        rates.writerow(["j", "k2", "E", "fit", "min_im_eta", "rel_err"])
        prof.writerow(["j", "k2", "x1", "mass"])
        for bf in positive_bands(params) + negative_bands(params):
            idx = np.flatnonzero(bf.in_domain)
            picks = idx[np.linspace(0, idx.size - 1, args.per_band + 2, dtype=int)[1:-1]]
            for i in picks:
                k2 = float(bf.k2[i])
                st = psi_periodic_surface(k2, bf.j, "minus", params)
                fit, pred = surface_decay_fit(st)
                rates.writerow([bf.j, f"{k2:.6f}", f"{st.energy:.17g}", f"{fit:.6e}", f"{pred:.6e}",
                                f"{fit / pred - 1:.2e}"])
                mass = np.sum(np.abs(st.evaluate(x1, np.arange(q))) ** 2, axis=1)
                for x, m in zip(x1, mass):
                    prof.writerow([bf.j, f"{k2:.6f}", int(x), f"{m:.6e}"])
                print(f"j={bf.j:+d} k2={k2:.3f} E={st.energy:+.5f} fit {fit:.5f} predicted {pred:.5f}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
