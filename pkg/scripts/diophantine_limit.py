"""Distance between rational band midpoints and the irrational limit energies."""

import argparse
import csv
from pathlib import Path

from surface_maryland.band_structure import convergents, limit_comparison, limit_energy
from surface_maryland.errors import NoRoot
from surface_maryland.surface_symbols import GOLDEN


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--g", type=float, default=2.5)
    ap.add_argument("--omega", type=float, default=0.2)
    ap.add_argument("--x2", default="-2,-1,0,1,2")
    ap.add_argument("--q-min", type=int, default=5)
    ap.add_argument("--n-conv", type=int, default=9)
    ap.add_argument("--out", default="out/diophantine_limit")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    conv = [pq for pq in convergents(float(GOLDEN), args.n_conv) if pq[1] >= args.q_min]
    x2s = []
    for v in args.x2.split(","):
        try:
            limit_energy(int(v), float(GOLDEN), args.omega, args.g)
        except NoRoot as exc:
            print(f"x2={int(v):+d} skipped: {exc}")
            continue
        x2s.append(int(v))
    rows = limit_comparison(float(GOLDEN), conv, x2s, args.g, args.omega)
    with (out / "limit.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "q", "x2", "E_limit", "band_mid", "distance"])
        for r in rows:
            w.writerow([r.p, r.q, r.x2, f"{r.E_diophantine:.17g}", f"{r.band_mid:.17g}", f"{r.distance:.3e}"])
    for x2 in x2s:
        d = [f"{r.distance:.1e}" for r in rows if r.x2 == x2]
        print(f"x2={x2:+d}: " + "  ".join(d))
    print(f"wrote {out / 'limit.csv'}")


if __name__ == "__main__":
    main()
