"""Run the acceptance experiments and print one line per check.

    python scripts/run_acceptance.py            # all eleven
    python scripts/run_acceptance.py 3 7 11     # a subset
"""

import argparse
import sys

from surface_maryland.acceptance import ALL_CHECKS, run_check


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("numbers", nargs="*", type=int)
    args = ap.parse_args()
    numbers = args.numbers or range(1, len(ALL_CHECKS) + 1)
    failed = 0
    for n in numbers:
        res = run_check(n)
        print(res.line(), flush=True)
        failed += not res.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
