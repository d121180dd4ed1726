#!/usr/bin/env python3
"""Run the whole pipeline on a small embedding and print every artifact.

Default target is the parabola t -> (t, t^2) into R^2 = 2d + rho(1) - 1,
where the search provably cannot fail; --veronese switches to the planar
quadratic map (x, y) -> (x, y, x^2, xy, y^2) into R^5.

    python scripts/find_trapezoid_demo.py
    python scripts/find_trapezoid_demo.py --veronese --seed 3
"""

import argparse

import trapfind as tf
from trapfind.search import dumps_certificate


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--veronese", action="store_true")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--starts", type=int, default=64)
    args = parser.parse_args()

    if args.veronese:
        f = tf.PolynomialEmbedding(
            2,
            5,
            [
                [[[1, 0], 1.0]],
                [[[0, 1], 1.0]],
                [[[2, 0], 1.0]],
                [[[1, 1], 1.0]],
                [[[0, 2], 1.0]],
            ],
        )
    else:
        f = tf.PolynomialEmbedding(1, 2, [[[[1], 1.0]], [[[2], 1.0]]])

    family = tf.build_family(f.d)
    print(f"embedding: d={f.d}, n={f.n} (guaranteed up to n = {2*f.d + family.rho - 1})")
    print(f"family: rho={family.rho}, {len(family.matrices)} matrices")

    opts = tf.SearchOptions(starts=args.starts, seed=args.seed)
    result = tf.search(f, family, opts)
    if isinstance(result, tf.Certificate):
        print(dumps_certificate(result))
        report = tf.validate_certificate(f, result)
        for name, ok, measured in report.checks:
            print(f"  {name}: {'pass' if ok else 'FAIL'} ({measured})")
        print(f"validation: {'pass' if report.passed else 'FAIL'}")
    else:
        print(result.message)


if __name__ == "__main__":
    main()
