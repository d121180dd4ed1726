"""Exact integer lower bounds on the smallest n admitting a k-regular map
R^d -> R^n, with a comparison table.

All arithmetic runs over Python integers; a rule outside its applicability
range reports None (not-applicable) rather than a silent zero.  The rules:

  trapezoid       n(d, 4) >= 2d + 2^gamma(d) + 1, from the forced inscribed
                  trapezoid or collinear triple one dimension down.
  boltyansky      n(d, 2k) >= (d + 1) k, even k only.
  cohen_handel    n(2, k) >= 2k - alpha(k), d = 2 only.
  chisholm        n(2^l, k) >= 2^l (k - alpha(k)) + alpha(k), d a power of 2.
  bcclz           n(d, k) >= (d - e - 1)(k - alpha(k)) + e (alpha(k) - eps(k)) + k
                  for d = 2^t + e, t >= 1, 0 <= e <= 2^t - 1.

alpha(k) counts binary ones, eps(k) = k mod 2.  Two threshold rules record
the largest target dimension at which every embedding of R^d is forced to
inscribe a trapezoid or map three points to a line: 2d + rho - 1 by the
bilinear route and 2d + 2^gamma - 1 by the trilinear one.  They appear as
context, not as n(d, k) bounds (the trapezoid rule above sits exactly two
dimensions higher than the trilinear threshold).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from .hurwitz_radon import binary_ones, decompose

__all__ = [
    "RULE_TRAPEZOID",
    "RULE_DEGENERACY_RHO",
    "RULE_DEGENERACY_POW2",
    "RULE_BOLTYANSKY",
    "RULE_COHEN_HANDEL",
    "RULE_CHISHOLM",
    "RULE_BCCLZ",
    "ALL_RULES",
    "TABLE_RULES",
    "BoundEntry",
    "BoundReport",
    "compute_bound",
    "compare_table",
    "render_text",
    "render_csv",
]

RULE_TRAPEZOID = "trapezoid"
RULE_DEGENERACY_RHO = "degeneracy_rho"
RULE_DEGENERACY_POW2 = "degeneracy_pow2"
RULE_BOLTYANSKY = "boltyansky"
RULE_COHEN_HANDEL = "cohen_handel"
RULE_CHISHOLM = "chisholm"
RULE_BCCLZ = "bcclz"

ALL_RULES = (
    RULE_TRAPEZOID,
    RULE_DEGENERACY_RHO,
    RULE_DEGENERACY_POW2,
    RULE_BOLTYANSKY,
    RULE_COHEN_HANDEL,
    RULE_CHISHOLM,
    RULE_BCCLZ,
)

# rules entering the comparison table as n(d, k) lower bounds
TABLE_RULES = (
    RULE_TRAPEZOID,
    RULE_BOLTYANSKY,
    RULE_COHEN_HANDEL,
    RULE_CHISHOLM,
    RULE_BCCLZ,
)

CITATIONS = {
    RULE_TRAPEZOID: "inscribed trapezoid / collinear triple obstruction",
    RULE_DEGENERACY_RHO: "degeneracy threshold (bilinear route)",
    RULE_DEGENERACY_POW2: "degeneracy threshold (trilinear route)",
    RULE_BOLTYANSKY: "Boltyansky-Ryzhkov-Shashkin 1960",
    RULE_COHEN_HANDEL: "Cohen-Handel 1978",
    RULE_CHISHOLM: "Chisholm 1979",
    RULE_BCCLZ: "Blagojevic-Cohen-Crabb-Lueck-Ziegler 2021",
}


def _validate(d: int, k: int) -> None:
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ValueError(f"d must be an integer >= 1, got {d!r}")
    if not isinstance(k, int) or isinstance(k, bool) or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k!r}")


def compute_bound(rule: str, d: int, k: int) -> int | None:
    """Exact value of one rule, or None where the rule does not apply."""
    _validate(d, k)
    if rule == RULE_TRAPEZOID:
        if k != 4:
            return None
        return 2 * d + 2 ** decompose(d).gamma + 1
    if rule == RULE_DEGENERACY_RHO:
        if k != 4:
            return None
        return 2 * d + decompose(d).rho - 1
    if rule == RULE_DEGENERACY_POW2:
        if k != 4:
            return None
        return 2 * d + 2 ** decompose(d).gamma - 1
    if rule == RULE_BOLTYANSKY:
        if k % 2 != 0:
            return None
        return (d + 1) * (k // 2)
    if rule == RULE_COHEN_HANDEL:
        if d != 2:
            return None
        return 2 * k - binary_ones(k)
    if rule == RULE_CHISHOLM:
        if d & (d - 1) != 0:
            return None
        alpha = binary_ones(k)
        return d * (k - alpha) + alpha
    if rule == RULE_BCCLZ:
        if d < 2:
            return None
        t = d.bit_length() - 1
        e = d - 2**t
        alpha = binary_ones(k)
        eps = k % 2
        return (d - e - 1) * (k - alpha) + e * (alpha - eps) + k
    raise ValueError(f"unknown rule {rule!r}")


@dataclass(frozen=True)
class BoundEntry:
    rule: str
    value: int | None
    citation: str


@dataclass(frozen=True)
class BoundReport:
    """All applicable rule values for one (d, k), plus exact context rows."""

    d: int
    k: int
    entries: tuple[BoundEntry, ...]
    context: tuple[BoundEntry, ...]
    best: int | None


def compare_table(d: int, k: int) -> BoundReport:
    """Evaluate every table rule at (d, k) and record the best applicable
    value.  Known exact values and the degeneracy thresholds ride along as
    context rows that do not enter the maximum."""
    _validate(d, k)
    entries = []
    best = None
    for rule in TABLE_RULES:
        value = compute_bound(rule, d, k)
        if value is not None:
            if value < k:
                raise RuntimeError(
                    f"rule {rule} returned {value} < k = {k}; bounds can never "
                    "undercut the trivial linear-independence floor"
                )
            best = value if best is None else max(best, value)
        entries.append(BoundEntry(rule, value, CITATIONS[rule]))

    context = []
    if d == 1:
        context.append(
            BoundEntry("moment_curve", k, "exact: the moment curve attains n(1, k) = k")
        )
    if k == 2:
        context.append(
            BoundEntry("graph_lift", d + 1, "exact: x -> (x, 1) attains n(d, 2) = d + 1")
        )
    if k == 3:
        context.append(
            BoundEntry(
                "sphere_lift",
                d + 2,
                "exact: x -> (h(x), 1) with h into the d-sphere attains n(d, 3) = d + 2",
            )
        )
    if k == 4:
        for rule in (RULE_DEGENERACY_RHO, RULE_DEGENERACY_POW2):
            context.append(BoundEntry(rule, compute_bound(rule, d, k), CITATIONS[rule]))
    return BoundReport(d=d, k=k, entries=tuple(entries), context=tuple(context), best=best)


def render_text(report: BoundReport) -> str:
    out = io.StringIO()
    out.write(f"lower bounds for n(d={report.d}, k={report.k})\n")
    width = max(len(e.rule) for e in report.entries + report.context) + 2
    for entry in report.entries:
        value = "n/a" if entry.value is None else str(entry.value)
        out.write(f"  {entry.rule:<{width}} {value:>6}   {entry.citation}\n")
    if report.context:
        out.write("context:\n")
        for entry in report.context:
            value = "n/a" if entry.value is None else str(entry.value)
            out.write(f"  {entry.rule:<{width}} {value:>6}   {entry.citation}\n")
    best = "n/a" if report.best is None else str(report.best)
    out.write(f"best bound: {best}\n")
    return out.getvalue()


def render_csv(report: BoundReport) -> str:
    lines = ["d,k,rule,value,citation"]
    for entry in report.entries + report.context:
        value = "n/a" if entry.value is None else str(entry.value)
        citation = entry.citation.replace(",", ";")
        lines.append(f"{report.d},{report.k},{entry.rule},{value},{citation}")
    return "\n".join(lines) + "\n"
