#!/usr/bin/env python3
"""Print the k = 4 lower-bound comparison across a range of dimensions.

Shows where the trapezoid obstruction leads, ties, or is overtaken by the
power-of-two and configuration-space bounds.

    python scripts/bounds_table.py --dmax 64
    python scripts/bounds_table.py --dmax 64 --csv > bounds_k4.csv
"""

import argparse

import trapfind as tf


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dmax", type=int, default=64)
    parser.add_argument("--csv", action="store_true")
    args = parser.parse_args()

    rules = ("trapezoid", "boltyansky", "cohen_handel", "chisholm", "bcclz")
    if args.csv:
        print("d," + ",".join(rules) + ",best,leader")
    else:
        header = f"{'d':>4} " + "".join(f"{r:>14}" for r in rules) + f"{'best':>8}  leader"
        print(header)
        print("-" * len(header))
    for d in range(1, args.dmax + 1):
        report = tf.compare_table(d, 4)
        values = {e.rule: e.value for e in report.entries}
        leaders = [r for r in rules if values.get(r) == report.best]
        cells = ["" if values.get(r) is None else str(values[r]) for r in rules]
        if args.csv:
            print(f"{d}," + ",".join(c or "n/a" for c in cells) + f",{report.best},{'+'.join(leaders)}")
        else:
            row = f"{d:>4} " + "".join(f"{c or '-':>14}" for c in cells)
            print(row + f"{report.best:>8}  {'+'.join(leaders)}")


if __name__ == "__main__":
    main()
