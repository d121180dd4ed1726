"""Command line interface.

Subcommands: bounds, hr, find, certify, phi-eval.  Exit codes: 0 success,
1 verification or validation failure, 2 usage or input error, 3 search
exhausted without a validated certificate.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from . import chords
from .embeddings import EmbeddingSpecError, load_embedding
from .search import (
    Certificate,
    SearchOptions,
    load_certificate,
    save_certificate,
    search,
    validate_certificate,
)
from .hurwitz_radon import (
    VARIANT_BILINEAR,
    VARIANT_TRILINEAR,
    build_family,
    save_family,
    verify_family,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_EXHAUSTED = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trapfind",
        description=(
            "inscribed-trapezoid search for embeddings, anticommuting matrix "
            "families, and exact k-regularity bounds"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="lower-bound table for n(d, k)")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--csv", action="store_true", help="emit CSV instead of text")
    p.add_argument("--out", type=Path, default=None, help="write to a file instead of stdout")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("hr", help="build (and optionally verify) a matrix family")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out", type=Path, default=None, help="family file (default hr_family_d<d>.txt)")
    p.add_argument("--verify", action="store_true", help="run the invariant suite")
    p.add_argument("--trials", type=int, default=1000, help="norm trials per map (default 1000)")
    p.set_defaults(func=_cmd_hr)

    p = sub.add_parser("find", help="search for an inscribed trapezoid or collinear triple")
    p.add_argument("--embedding", type=Path, required=True)
    p.add_argument(
        "--variant",
        choices=[VARIANT_BILINEAR, VARIANT_TRILINEAR],
        default=VARIANT_BILINEAR,
    )
    p.add_argument("--starts", type=int, default=64, help="multistart count (default 64)")
    p.add_argument("--tol", type=float, default=None, help="residual tolerance (default scale-based)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--out", type=Path, default=Path("certificate.json"))
    p.set_defaults(func=_cmd_find)

    p = sub.add_parser("certify", help="independently validate a certificate file")
    p.add_argument("--certificate", type=Path, required=True)
    p.add_argument("--embedding", type=Path, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("phi-eval", help="evaluate the chord difference at a probe point")
    p.add_argument("--embedding", type=Path, required=True)
    p.add_argument("--point", type=Path, required=True)
    p.add_argument(
        "--variant",
        choices=[VARIANT_BILINEAR, VARIANT_TRILINEAR],
        default=None,
        help="default: inferred from the presence of w in the point file",
    )
    p.set_defaults(func=_cmd_phi_eval)

    return parser


def _cmd_bounds(args) -> int:
    report = bounds_mod.compare_table(args.d, args.k)
    text = bounds_mod.render_csv(report) if args.csv else bounds_mod.render_text(report)
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_hr(args) -> int:
    family = build_family(args.d)
    out = args.out if args.out is not None else Path(f"hr_family_d{args.d}.txt")
    save_family(family, out)
    print(f"wrote {len(family.matrices)} matrices (d={family.d}, rho={family.rho}, gamma={family.gamma}) to {out}")
    if not args.verify:
        return EXIT_OK
    report = verify_family(family, trials=args.trials)
    for name in ("size_ok", "skew_ok", "orthogonal_ok", "anticommute_ok"):
        print(f"{name}: {'pass' if getattr(report, name) else 'FAIL'}")
    print(f"bilinear_norm_error: {report.bilinear_norm_error:.3e} ({report.trials} trials)")
    print(f"trilinear_norm_error: {report.trilinear_norm_error:.3e} ({report.trials} trials)")
    print(f"overall: {'pass' if report.passed else 'FAIL'} (tolerance {report.tolerance:g})")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_find(args) -> int:
    f = load_embedding(args.embedding)
    opts = SearchOptions(
        starts=args.starts,
        residual_tolerance=args.tol,
        seed=args.seed,
        variant=args.variant,
    )
    family = build_family(f.d)
    result = search(f, family, opts)
    if isinstance(result, Certificate):
        save_certificate(result, args.out)
        print(f"classification: {result.classification}")
        print(f"residual: {result.residual!r}")
        print(f"certificate written to {args.out}")
        return EXIT_OK
    args.out.write_text(result.dumps())
    print(result.message, file=sys.stderr)
    print(f"failure report written to {args.out}", file=sys.stderr)
    return EXIT_EXHAUSTED


def _cmd_certify(args) -> int:
    f = load_embedding(args.embedding)
    cert = load_certificate(args.certificate)
    report = validate_certificate(f, cert, tolerance=args.tol)
    for name, ok, measured in report.checks:
        print(f"{name}: {'pass' if ok else 'FAIL'} (measured: {measured})")
    print(f"overall: {'pass' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_phi_eval(args) -> int:
    f = load_embedding(args.embedding)
    point = chords.load_point(args.point)
    variant = args.variant
    if variant is None:
        variant = VARIANT_TRILINEAR if point.w is not None else VARIANT_BILINEAR
    if variant == VARIANT_TRILINEAR and point.w is None:
        raise ValueError("trilinear evaluation needs a point with w")
    if variant == VARIANT_BILINEAR and point.w is not None:
        raise ValueError("bilinear evaluation got a point with w")
    family = build_family(f.d)
    if variant == VARIANT_TRILINEAR:
        value = chords.chord_difference_extended(f, family, point)
    else:
        value = chords.chord_difference(f, family, point)
    print(json.dumps([float(v) for v in value]))
    print(f"norm: {float(np.linalg.norm(value))!r}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (EmbeddingSpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
