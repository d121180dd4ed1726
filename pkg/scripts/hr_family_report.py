#!/usr/bin/env python3
"""Build the anticommuting family for a grid of dimensions and run the full
invariant suite on each.

    python scripts/hr_family_report.py --dims 1 2 3 4 6 8 12 16 24 32 48 64
"""

import argparse
import sys
import time

import trapfind as tf


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--dims", type=int, nargs="+", default=[1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48]
    )
    parser.add_argument("--trials", type=int, default=1000)
    args = parser.parse_args()

    print(f"{'d':>4} {'rho':>4} {'gamma':>6} {'mats':>5} {'|B| err':>10} {'|C| err':>10} {'time':>7}  verdict")
    all_ok = True
    for d in args.dims:
        t0 = time.perf_counter()
        family = tf.build_family(d)
        report = tf.verify_family(family, trials=args.trials)
        dt = time.perf_counter() - t0
        all_ok &= report.passed
        print(
            f"{d:>4} {family.rho:>4} {family.gamma:>6} {len(family.matrices):>5} "
            f"{report.bilinear_norm_error:>10.2e} {report.trilinear_norm_error:>10.2e} "
            f"{dt:>6.2f}s  {'pass' if report.passed else 'FAIL'}"
        )
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
