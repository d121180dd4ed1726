"""Exact Hurwitz-Radon arithmetic and explicit nonsingular multilinear maps.

Writing d = odd_part * 2^(4a+b) with 0 <= b <= 3, the Hurwitz-Radon function
is rho(d) = 2^b + 8a.  This module constructs an explicit family of
rho(d) - 1 pairwise anticommuting, skew-symmetric, orthogonal integer
matrices J_1, ..., J_{rho-1} acting on R^d.  The family induces the
norm-multiplicative bilinear map

    B(z, x) = z_1 x + z_2 J_1 x + ... + z_rho J_{rho-1} x,

with |B(z, x)| = |z| |x|, so B(z, x) = 0 only when z = 0 or x = 0.  A
trilinear companion C(w, z, x) = B(pad(w), B(z, x)) is obtained by feeding
the output back through B, with w embedded into R^rho on the leading
coordinates.

The module also houses the binary-digit bookkeeping used to decide when a
product of spheres forces an equivariant map to vanish: popcounts, shared
binary digits, binomial parity computed digit by digit, and the sphere
dimensions attached to a given d.  All of that arithmetic is exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "HurwitzRadonDecomposition",
    "HRFamily",
    "FamilyCheckReport",
    "FamilyConstructionError",
    "VARIANT_BILINEAR",
    "VARIANT_TRILINEAR",
    "decompose",
    "binary_ones",
    "shares_binary_one",
    "binomial_parity",
    "sphere_exponents",
    "build_family",
    "displacement_operator",
    "bilinear_map",
    "trilinear_map",
    "verify_family",
    "dumps_family",
    "loads_family",
    "save_family",
    "load_family",
]

VARIANT_BILINEAR = "bilinear"
VARIANT_TRILINEAR = "trilinear"
VARIANTS = (VARIANT_BILINEAR, VARIANT_TRILINEAR)


class FamilyConstructionError(RuntimeError):
    """The tensor-word search failed to reach rho(d) - 1 matrices."""


def _check_index(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


@dataclass(frozen=True)
class HurwitzRadonDecomposition:
    """d = odd_part * 2^(4a+b), 0 <= b <= 3, rho = 2^b + 8a, and 2^gamma is
    the least power of two with 2^gamma >= rho."""

    d: int
    odd_part: int
    a: int
    b: int
    rho: int
    gamma: int


def decompose(d: int) -> HurwitzRadonDecomposition:
    """Split d into its odd part and dyadic exponent and attach rho, gamma."""
    d = _check_index(d, "d")
    odd, m = d, 0
    while odd % 2 == 0:
        odd //= 2
        m += 1
    a, b = divmod(m, 4)
    rho = 2**b + 8 * a
    gamma = (rho - 1).bit_length()
    return HurwitzRadonDecomposition(d=d, odd_part=odd, a=a, b=b, rho=rho, gamma=gamma)


def binary_ones(k: int) -> int:
    """Number of ones in the binary expansion of k >= 1."""
    k = _check_index(k, "k")
    return bin(k).count("1")


def shares_binary_one(m: int, q: int) -> bool:
    """True iff some binary digit position carries a one in both m and q."""
    m = _check_index(m, "m", minimum=0)
    q = _check_index(q, "q", minimum=0)
    return (m & q) != 0


def binomial_parity(n: int, m: int) -> str:
    """Parity of the binomial coefficient C(n, m), decided digit by digit.

    C(n, m) is odd exactly when every binary digit of m is at most the
    matching digit of n; one failing digit makes the product of digit
    binomials even.  Returns "even" or "odd".
    """
    n = _check_index(n, "n", minimum=0)
    m = _check_index(m, "m", minimum=0)
    if m > n:
        raise ValueError(f"m must satisfy 0 <= m <= n, got m={m}, n={n}")
    while n or m:
        if (m & 1) > (n & 1):
            return "even"
        n >>= 1
        m >>= 1
    return "odd"


def sphere_exponents(d: int, variant: str = VARIANT_BILINEAR) -> tuple[int, ...]:
    """Sphere dimensions feeding the digit-disjointness zero criterion.

    The bilinear route uses (2d, rho - 1); the trilinear route uses
    (2^gamma - rho, rho - 1, 2d).  Zero entries are dropped since a
    zero-dimensional factor contributes nothing.  The returned entries are
    always pairwise digit-disjoint; a violation is an internal bug and
    raises RuntimeError.
    """
    dec = decompose(d)
    if variant == VARIANT_BILINEAR:
        exps = (2 * dec.d, dec.rho - 1)
    elif variant == VARIANT_TRILINEAR:
        exps = (2**dec.gamma - dec.rho, dec.rho - 1, 2 * dec.d)
    else:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    kept = tuple(e for e in exps if e > 0)
    for i, j in itertools.combinations(range(len(kept)), 2):
        if shares_binary_one(kept[i], kept[j]):
            raise RuntimeError(
                f"internal consistency violation: exponents {kept} for d={d} "
                f"({variant}) share a binary digit"
            )
    return kept


# ---------------------------------------------------------------------------
# Tensor-word construction of the matrix family.
#
# Words are tuples over four 2x2 blocks: identity, the 90-degree rotation
# (the only skew block), the swap, and diag(1, -1).  A word is skew iff it
# contains an odd number of rotation blocks; two words anticommute iff the
# number of positions holding distinct non-identity blocks is odd.

_BLOCKS = (
    np.array([[1, 0], [0, 1]], dtype=np.int64),   # 0: identity
    np.array([[0, -1], [1, 0]], dtype=np.int64),  # 1: rotation, skew
    np.array([[0, 1], [1, 0]], dtype=np.int64),   # 2: swap, symmetric
    np.array([[1, 0], [0, -1]], dtype=np.int64),  # 3: diagonal, symmetric
)
_ROTATION = 1


def _word_is_skew(word: tuple[int, ...]) -> bool:
    return sum(1 for c in word if c == _ROTATION) % 2 == 1


def _words_anticommute(w1: tuple[int, ...], w2: tuple[int, ...]) -> bool:
    flips = sum(1 for a, b in zip(w1, w2) if a != b and a != 0 and b != 0)
    return flips % 2 == 1


def _word_matrix(word: tuple[int, ...]) -> np.ndarray:
    mat = np.array([[1]], dtype=np.int64)
    for c in word:
        mat = np.kron(mat, _BLOCKS[c])
    return mat


def _search_words(m: int, target: int) -> list[tuple[int, ...]] | None:
    """Backtracking over the 4^m tensor words for a pairwise-anticommuting
    skew set of the requested size.  Lexicographic order keeps the result
    deterministic."""
    if target == 0:
        return []
    candidates = [w for w in itertools.product(range(4), repeat=m) if _word_is_skew(w)]
    chosen: list[tuple[int, ...]] = []

    def extend(start: int) -> bool:
        if len(chosen) == target:
            return True
        for idx in range(start, len(candidates)):
            cand = candidates[idx]
            if all(_words_anticommute(cand, kept) for kept in chosen):
                chosen.append(cand)
                if extend(idx + 1):
                    return True
                chosen.pop()
        return False

    return chosen if extend(0) else None


@dataclass(frozen=True)
class HRFamily:
    """rho(d) - 1 pairwise anticommuting skew orthogonal matrices on R^d.

    Entries are integers in {-1, 0, 1}, so the defining identities are
    checked exactly.  Instances are immutable and safe to share.
    """

    d: int
    rho: int
    gamma: int
    matrices: tuple[np.ndarray, ...]

    @cached_property
    def operator_stack(self) -> np.ndarray:
        """Float stack of shape (rho, d, d): identity followed by the family."""
        stack = np.empty((self.rho, self.d, self.d))
        stack[0] = np.eye(self.d)
        for i, mat in enumerate(self.matrices):
            stack[i + 1] = mat
        stack.setflags(write=False)
        return stack

    @property
    def w_dim(self) -> int:
        """Length of the leading argument of the trilinear map, 2^gamma - rho + 1."""
        return 2**self.gamma - self.rho + 1


def build_family(d: int) -> HRFamily:
    """Construct the family for dimension d.

    For d = 2^m the matrices are tensor words over the four 2x2 blocks; for
    d = odd * 2^m the 2^m-dimensional family is repeated blockwise on each
    of the odd_part consecutive blocks.  Output is deterministic in d.
    """
    dec = decompose(d)
    m = 4 * dec.a + dec.b
    target = dec.rho - 1
    words = _search_words(m, target)
    if words is None:
        raise FamilyConstructionError(
            f"tensor-word search found no family of size {target} for d={d}"
        )
    matrices = []
    for word in words:
        mat = _word_matrix(word)
        if dec.odd_part > 1:
            mat = np.kron(np.eye(dec.odd_part, dtype=np.int64), mat)
        mat.setflags(write=False)
        matrices.append(mat)
    return HRFamily(d=dec.d, rho=dec.rho, gamma=dec.gamma, matrices=tuple(matrices))


def displacement_operator(family: HRFamily, z, w=None) -> np.ndarray:
    """Matrix of x -> B(z, x), or of x -> C(w, z, x) when w is given."""
    z = np.asarray(z, dtype=float)
    if z.shape != (family.rho,):
        raise ValueError(f"z must have length rho={family.rho}, got shape {z.shape}")
    op = np.tensordot(z, family.operator_stack, axes=1)
    if w is not None:
        w = np.asarray(w, dtype=float)
        if w.shape != (family.w_dim,):
            raise ValueError(
                f"w must have length 2^gamma - rho + 1 = {family.w_dim}, "
                f"got shape {w.shape}"
            )
        padded = np.zeros(family.rho)
        padded[: family.w_dim] = w
        op = np.tensordot(padded, family.operator_stack, axes=1) @ op
    return op


def bilinear_map(family: HRFamily, z, x) -> np.ndarray:
    """B(z, x) = z_1 x + sum_{i >= 2} z_i J_{i-1} x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (family.d,):
        raise ValueError(f"x must have length d={family.d}, got shape {x.shape}")
    return displacement_operator(family, z) @ x


def trilinear_map(family: HRFamily, w, z, x) -> np.ndarray:
    """C(w, z, x) = B(pad(w), B(z, x)), w padded into R^rho with zeros."""
    x = np.asarray(x, dtype=float)
    if x.shape != (family.d,):
        raise ValueError(f"x must have length d={family.d}, got shape {x.shape}")
    return displacement_operator(family, z, w) @ x


@dataclass(frozen=True)
class FamilyCheckReport:
    """Exact identity checks plus sampled norm-multiplicativity errors."""

    d: int
    size_ok: bool
    skew_ok: bool
    orthogonal_ok: bool
    anticommute_ok: bool
    bilinear_norm_error: float
    trilinear_norm_error: float
    trials: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return (
            self.size_ok
            and self.skew_ok
            and self.orthogonal_ok
            and self.anticommute_ok
            and self.bilinear_norm_error <= self.tolerance
            and self.trilinear_norm_error <= self.tolerance
        )


def verify_family(
    family: HRFamily, trials: int = 1000, seed: int = 0, tolerance: float = 1e-10
) -> FamilyCheckReport:
    """Run the full invariant suite against a family.

    Skewness, orthogonality and pairwise anticommutation are integer
    identities and checked exactly.  Norm multiplicativity of B and C is
    sampled on `trials` random inputs and reported as the worst relative
    error.
    """
    d = family.d
    eye = np.eye(d, dtype=np.int64)
    size_ok = len(family.matrices) == family.rho - 1
    skew_ok = all((mat.T == -mat).all() for mat in family.matrices)
    orthogonal_ok = all((mat.T @ mat == eye).all() for mat in family.matrices)
    anticommute_ok = all(
        (a @ b == -(b @ a)).all()
        for a, b in itertools.combinations(family.matrices, 2)
    )

    rng = np.random.default_rng(seed)
    worst_b = 0.0
    worst_c = 0.0
    for _ in range(trials):
        z = rng.standard_normal(family.rho)
        x = rng.standard_normal(d)
        expected = np.linalg.norm(z) * np.linalg.norm(x)
        got = np.linalg.norm(bilinear_map(family, z, x))
        worst_b = max(worst_b, abs(got - expected) / expected)

        w = rng.standard_normal(family.w_dim)
        expected = np.linalg.norm(w) * np.linalg.norm(z) * np.linalg.norm(x)
        got = np.linalg.norm(trilinear_map(family, w, z, x))
        worst_c = max(worst_c, abs(got - expected) / expected)

    return FamilyCheckReport(
        d=d,
        size_ok=size_ok,
        skew_ok=skew_ok,
        orthogonal_ok=orthogonal_ok,
        anticommute_ok=anticommute_ok,
        bilinear_norm_error=worst_b,
        trilinear_norm_error=worst_c,
        trials=trials,
        tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# Serialization: a plain text format with a header and signed integer rows.

_FAMILY_HEADER = "hr-family v1"


def dumps_family(family: HRFamily) -> str:
    lines = [
        _FAMILY_HEADER,
        f"d {family.d}",
        f"rho {family.rho}",
        f"gamma {family.gamma}",
        f"matrices {len(family.matrices)}",
    ]
    for idx, mat in enumerate(family.matrices, start=1):
        lines.append(f"matrix {idx}")
        for row in mat:
            lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def loads_family(text: str) -> HRFamily:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != _FAMILY_HEADER:
        raise ValueError(f"expected header {_FAMILY_HEADER!r}")

    def _field(line: str, key: str) -> int:
        parts = line.split()
        if len(parts) != 2 or parts[0] != key:
            raise ValueError(f"expected '{key} <int>', got {line!r}")
        return int(parts[1])

    d = _field(lines[1], "d")
    rho = _field(lines[2], "rho")
    gamma = _field(lines[3], "gamma")
    count = _field(lines[4], "matrices")
    dec = decompose(d)
    if rho != dec.rho or gamma != dec.gamma:
        raise ValueError(f"header rho/gamma inconsistent with d={d}")
    pos = 5
    matrices = []
    for idx in range(1, count + 1):
        if pos >= len(lines) or lines[pos].split() != ["matrix", str(idx)]:
            raise ValueError(f"expected 'matrix {idx}' at line {pos + 1}")
        pos += 1
        rows = []
        for _ in range(d):
            if pos >= len(lines):
                raise ValueError("truncated matrix block")
            row = [int(v) for v in lines[pos].split()]
            if len(row) != d:
                raise ValueError(f"expected {d} entries per row, got {len(row)}")
            rows.append(row)
            pos += 1
        mat = np.array(rows, dtype=np.int64)
        mat.setflags(write=False)
        matrices.append(mat)
    if pos != len(lines):
        raise ValueError("trailing content after the last matrix")
    return HRFamily(d=d, rho=rho, gamma=gamma, matrices=tuple(matrices))


def save_family(family: HRFamily, path) -> None:
    Path(path).write_text(dumps_family(family))


def load_family(path) -> HRFamily:
    return loads_family(Path(path).read_text())
