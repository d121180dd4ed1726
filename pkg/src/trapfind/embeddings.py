"""Declarative embedding specifications with evaluation, Jacobians, and
sample-based regularity checks.

An embedding f: R^d -> R^n is described by one of seven kinds: polynomial,
moment_curve, graph, affine, lift, central_projection, composed.  Kinds with
closed-form derivatives carry analytic Jacobians; composed and
central_projection fall back to central finite differences.

A map is k-regular when any k pairwise distinct inputs have linearly
independent images, and affinely j-regular when any j+1 distinct inputs
have affinely independent images.  Both notions are checked here on
explicit tuples via singular values; the checks are sampling-based, not
global certificates.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Embedding",
    "PolynomialEmbedding",
    "MomentCurve",
    "GraphEmbedding",
    "AffineEmbedding",
    "LiftEmbedding",
    "CentralProjection",
    "ComposedEmbedding",
    "EmbeddingSpecError",
    "ProjectionDomainError",
    "RegularityReport",
    "parse_embedding",
    "dump_embedding",
    "load_embedding",
    "save_embedding",
    "embedding_digest",
    "lift_to_linear",
    "project_to_affine",
    "vandermonde_det",
    "check_k_regular",
    "check_affine_regular",
    "sample_separated_scalars",
    "sample_separated_points",
    "injectivity_spot_check",
    "inverse_stereographic",
]

FORMAT_VERSION = 1
FD_STEP = 1e-6
HYPERPLANE_THRESHOLD = 1e-9
REGULARITY_REL_TOL = 1e-8


class EmbeddingSpecError(ValueError):
    """Malformed or dimensionally inconsistent embedding specification."""


class ProjectionDomainError(ValueError):
    """Central projection evaluated or probed too close to the dropped
    hyperplane."""


def _as_point(x, d: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.shape != (d,):
        raise ValueError(f"expected a point of R^{d}, got shape {arr.shape}")
    return arr


class Embedding:
    """Base class; subclasses set d, n and implement evaluate."""

    kind = "abstract"
    d: int
    n: int

    def evaluate(self, x) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x) -> np.ndarray:
        # central differences, step scaled per coordinate
        x = _as_point(x, self.d)
        cols = []
        for i in range(self.d):
            h = FD_STEP * (1.0 + abs(x[i]))
            xp = x.copy()
            xp[i] += h
            xm = x.copy()
            xm[i] -= h
            cols.append((self.evaluate(xp) - self.evaluate(xm)) / (2.0 * h))
        return np.stack(cols, axis=1)

    def payload(self) -> dict:
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(d={self.d}, n={self.n})"


def _normalize_terms(terms, d: int, n: int):
    """Canonicalize polynomial terms: per output coordinate, a tuple of
    (exponent multi-index, coefficient) pairs."""
    if not isinstance(terms, (list, tuple)) or len(terms) != n:
        raise EmbeddingSpecError(f"terms must list {n} output coordinates")
    out = []
    for coord_terms in terms:
        if not isinstance(coord_terms, (list, tuple)):
            raise EmbeddingSpecError("each coordinate needs a list of terms")
        normalized = []
        for item in coord_terms:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise EmbeddingSpecError(
                    "each term must be an (exponents, coefficient) pair"
                )
            exps, coeff = item
            if not isinstance(exps, (list, tuple)) or len(exps) != d:
                raise EmbeddingSpecError(f"exponent multi-index must have length {d}")
            clean = []
            for e in exps:
                if isinstance(e, bool) or not isinstance(e, (int, np.integer)) or e < 0:
                    raise EmbeddingSpecError(f"exponents must be integers >= 0, got {e!r}")
                clean.append(int(e))
            coeff = float(coeff)
            if not math.isfinite(coeff):
                raise EmbeddingSpecError("coefficients must be finite")
            normalized.append((tuple(clean), coeff))
        out.append(tuple(normalized))
    return tuple(out)


class PolynomialEmbedding(Embedding):
    kind = "polynomial"

    def __init__(self, d: int, n: int, terms):
        if d < 1 or n < 1:
            raise EmbeddingSpecError(f"need d >= 1 and n >= 1, got d={d}, n={n}")
        self.d = int(d)
        self.n = int(n)
        self.terms = _normalize_terms(terms, self.d, self.n)

    def evaluate(self, x):
        x = _as_point(x, self.d)
        out = np.zeros(self.n)
        for i, coord_terms in enumerate(self.terms):
            acc = 0.0
            for exps, coeff in coord_terms:
                term = coeff
                for j, e in enumerate(exps):
                    if e:
                        term *= x[j] ** e
                acc += term
            out[i] = acc
        return out

    def jacobian(self, x):
        x = _as_point(x, self.d)
        jac = np.zeros((self.n, self.d))
        for i, coord_terms in enumerate(self.terms):
            for exps, coeff in coord_terms:
                for j, e in enumerate(exps):
                    if e == 0:
                        continue
                    grad = coeff * e
                    for l, el in enumerate(exps):
                        p = el - 1 if l == j else el
                        if p:
                            grad *= x[l] ** p
                    jac[i, j] += grad
        return jac

    def payload(self):
        return {
            "kind": self.kind,
            "d": self.d,
            "n": self.n,
            "terms": [
                [[list(exps), coeff] for exps, coeff in coord_terms]
                for coord_terms in self.terms
            ],
        }


class MomentCurve(Embedding):
    """t -> (1, t, t^2, ..., t^(k-1)); image matrices of distinct inputs are
    Vandermonde, hence the curve is k-regular."""

    kind = "moment_curve"

    def __init__(self, k: int):
        if k < 1:
            raise EmbeddingSpecError(f"moment curve needs k >= 1, got {k}")
        self.k = int(k)
        self.d = 1
        self.n = self.k

    def evaluate(self, x):
        t = _as_point(x, 1)[0]
        return np.power(t, np.arange(self.k, dtype=float))

    def jacobian(self, x):
        t = _as_point(x, 1)[0]
        col = np.zeros(self.k)
        if self.k > 1:
            col[1:] = np.arange(1, self.k) * np.power(t, np.arange(self.k - 1, dtype=float))
        return col.reshape(self.k, 1)

    def payload(self):
        return {"kind": self.kind, "k": self.k}


class GraphEmbedding(Embedding):
    """x -> (x, g(x)) for a polynomial map g: R^d -> R^(n-d)."""

    kind = "graph"

    def __init__(self, g: PolynomialEmbedding):
        self.g = g
        self.d = g.d
        self.n = g.d + g.n

    def evaluate(self, x):
        x = _as_point(x, self.d)
        return np.concatenate([x, self.g.evaluate(x)])

    def jacobian(self, x):
        x = _as_point(x, self.d)
        return np.vstack([np.eye(self.d), self.g.jacobian(x)])

    def payload(self):
        return {
            "kind": self.kind,
            "d": self.d,
            "n": self.n,
            "g_terms": self.g.payload()["terms"],
        }


class AffineEmbedding(Embedding):
    kind = "affine"

    def __init__(self, matrix, offset=None):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2:
            raise EmbeddingSpecError("affine matrix must be two-dimensional")
        self.n, self.d = matrix.shape
        if offset is None:
            offset = np.zeros(self.n)
        offset = np.asarray(offset, dtype=float)
        if offset.shape != (self.n,):
            raise EmbeddingSpecError(
                f"offset must have length {self.n}, got shape {offset.shape}"
            )
        matrix.setflags(write=False)
        self.matrix = matrix
        self.offset = offset.copy()
        self.offset.setflags(write=False)

    @classmethod
    def identity(cls, d: int) -> "AffineEmbedding":
        return cls(np.eye(d))

    def evaluate(self, x):
        return self.matrix @ _as_point(x, self.d) + self.offset

    def jacobian(self, x):
        _as_point(x, self.d)
        return np.array(self.matrix)

    def payload(self):
        return {
            "kind": self.kind,
            "matrix": [list(row) for row in self.matrix],
            "offset": list(self.offset),
        }


class LiftEmbedding(Embedding):
    """x -> (f(x), 1): turns affine independence downstairs into linear
    independence upstairs."""

    kind = "lift"

    def __init__(self, inner: Embedding):
        self.inner = inner
        self.d = inner.d
        self.n = inner.n + 1

    def evaluate(self, x):
        return np.append(self.inner.evaluate(x), 1.0)

    def jacobian(self, x):
        return np.vstack([self.inner.jacobian(x), np.zeros((1, self.d))])

    def payload(self):
        return {"kind": self.kind, "inner": self.inner.payload()}


class CentralProjection(Embedding):
    """x -> (f_1/f_n, ..., f_(n-1)/f_n): intersect the line through f(x)
    with the hyperplane where the last coordinate is 1, then drop it.
    Refuses evaluation when |f_n| falls below the threshold."""

    kind = "central_projection"

    def __init__(self, inner: Embedding):
        if inner.n < 2:
            raise EmbeddingSpecError("central projection needs inner n >= 2")
        self.inner = inner
        self.d = inner.d
        self.n = inner.n - 1

    def evaluate(self, x):
        v = self.inner.evaluate(x)
        if abs(v[-1]) < HYPERPLANE_THRESHOLD:
            raise ProjectionDomainError(
                f"|last coordinate| = {abs(v[-1]):.3e} below "
                f"{HYPERPLANE_THRESHOLD:g} at x = {np.asarray(x)}"
            )
        return v[:-1] / v[-1]

    def payload(self):
        return {"kind": self.kind, "inner": self.inner.payload()}


class ComposedEmbedding(Embedding):
    kind = "composed"

    def __init__(self, inner: Embedding, outer: Embedding):
        if outer.d != inner.n:
            raise EmbeddingSpecError(
                f"cannot compose: inner has n={inner.n}, outer expects d={outer.d}"
            )
        self.inner = inner
        self.outer = outer
        self.d = inner.d
        self.n = outer.n

    def evaluate(self, x):
        return self.outer.evaluate(self.inner.evaluate(x))

    def payload(self):
        return {
            "kind": self.kind,
            "inner": self.inner.payload(),
            "outer": self.outer.payload(),
        }


# ---------------------------------------------------------------------------
# Spec files: JSON with a top-level format_version; unknown fields rejected.


def _require_keys(node: dict, keys: set[str]) -> None:
    want = keys | {"kind"}
    got = set(node)
    if got != want:
        unknown = sorted(got - want)
        missing = sorted(want - got)
        parts = []
        if unknown:
            parts.append(f"unknown fields {unknown}")
        if missing:
            parts.append(f"missing fields {missing}")
        raise EmbeddingSpecError(f"{node.get('kind', '?')} spec: " + ", ".join(parts))


def _parse_node(node) -> Embedding:
    if not isinstance(node, dict):
        raise EmbeddingSpecError(f"embedding node must be an object, got {type(node).__name__}")
    kind = node.get("kind")
    if kind == "polynomial":
        _require_keys(node, {"d", "n", "terms"})
        return PolynomialEmbedding(node["d"], node["n"], node["terms"])
    if kind == "moment_curve":
        _require_keys(node, {"k"})
        k = node["k"]
        if isinstance(k, bool) or not isinstance(k, int):
            raise EmbeddingSpecError(f"moment_curve k must be an integer, got {k!r}")
        return MomentCurve(k)
    if kind == "graph":
        _require_keys(node, {"d", "n", "g_terms"})
        d, n = node["d"], node["n"]
        if not isinstance(d, int) or not isinstance(n, int) or n <= d:
            raise EmbeddingSpecError(f"graph spec needs integer n > d, got d={d!r}, n={n!r}")
        return GraphEmbedding(PolynomialEmbedding(d, n - d, node["g_terms"]))
    if kind == "affine":
        _require_keys(node, {"matrix", "offset"})
        return AffineEmbedding(node["matrix"], node["offset"])
    if kind == "lift":
        _require_keys(node, {"inner"})
        return LiftEmbedding(_parse_node(node["inner"]))
    if kind == "central_projection":
        _require_keys(node, {"inner"})
        return CentralProjection(_parse_node(node["inner"]))
    if kind == "composed":
        _require_keys(node, {"inner", "outer"})
        return ComposedEmbedding(_parse_node(node["inner"]), _parse_node(node["outer"]))
    raise EmbeddingSpecError(f"unknown embedding kind {kind!r}")


def parse_embedding(spec) -> Embedding:
    """Parse a JSON text or decoded dict into an Embedding.

    The top level must carry format_version = 1 next to the kind fields.
    """
    if isinstance(spec, (str, bytes)):
        try:
            data = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise EmbeddingSpecError(f"invalid JSON: {exc}") from exc
    elif isinstance(spec, dict):
        data = dict(spec)
    else:
        raise EmbeddingSpecError(f"spec must be JSON text or a dict, got {type(spec).__name__}")
    if not isinstance(data, dict):
        raise EmbeddingSpecError("top-level spec must be an object")
    if data.get("format_version") != FORMAT_VERSION:
        raise EmbeddingSpecError(
            f"missing or unsupported format_version (expected {FORMAT_VERSION})"
        )
    node = {k: v for k, v in data.items() if k != "format_version"}
    return _parse_node(node)


def dump_embedding(f: Embedding) -> str:
    return json.dumps({"format_version": FORMAT_VERSION, **f.payload()}, indent=2) + "\n"


def load_embedding(path) -> Embedding:
    from pathlib import Path

    return parse_embedding(Path(path).read_text())


def save_embedding(f: Embedding, path) -> None:
    from pathlib import Path

    Path(path).write_text(dump_embedding(f))


def embedding_digest(f: Embedding) -> str:
    """SHA-256 of the canonical serialized spec; ties certificates to the
    embedding they were produced for."""
    canonical = json.dumps(
        {"format_version": FORMAT_VERSION, **f.payload()},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Affine <-> linear conversions.


def lift_to_linear(f: Embedding) -> LiftEmbedding:
    """Append a constant 1 coordinate; affinely j-regular maps become
    (j+1)-regular."""
    return LiftEmbedding(f)


def project_to_affine(
    f: Embedding,
    probes=None,
    *,
    num_probes: int = 128,
    low: float = -3.0,
    high: float = 3.0,
    seed: int = 0,
) -> CentralProjection:
    """Divide by the last coordinate and drop it, after probing that f stays
    away from the hyperplane where that coordinate vanishes.

    Raises ProjectionDomainError with the offending probe instead of
    silently restricting the domain.
    """
    if probes is None:
        rng = np.random.default_rng(seed)
        probes = rng.uniform(low, high, size=(num_probes, f.d))
    for p in np.atleast_2d(np.asarray(probes, dtype=float)):
        v = f.evaluate(p)
        if abs(v[-1]) < HYPERPLANE_THRESHOLD:
            raise ProjectionDomainError(
                f"probe x = {p} has |last coordinate| = {abs(v[-1]):.3e} "
                f"below {HYPERPLANE_THRESHOLD:g}; refusing to project"
            )
    return CentralProjection(f)


def vandermonde_det(ts) -> float:
    """prod_{i<j} (t_j - t_i), the determinant of the square moment-curve
    matrix on the nodes ts."""
    t = np.atleast_1d(np.asarray(ts, dtype=float))
    det = 1.0
    for i in range(len(t)):
        for j in range(i + 1, len(t)):
            det *= t[j] - t[i]
    return det


# ---------------------------------------------------------------------------
# Regularity checks on explicit tuples.


@dataclass(frozen=True)
class RegularityReport:
    k: int
    tuples_checked: int
    min_singular_value: float
    failures: tuple

    @property
    def passed(self) -> bool:
        return not self.failures


def _image_matrices(f: Embedding, tuples, points_per_tuple: int) -> np.ndarray:
    mats = []
    for tup in tuples:
        if len(tup) != points_per_tuple:
            raise ValueError(
                f"expected tuples of {points_per_tuple} points, got {len(tup)}"
            )
        mats.append(np.column_stack([f.evaluate(p) for p in tup]))
    return np.stack(mats) if mats else np.zeros((0, f.n, points_per_tuple))


def check_k_regular(
    f: Embedding, k: int, tuples, rel_tol: float = REGULARITY_REL_TOL
) -> RegularityReport:
    """Smallest singular value of the n x k image matrix per tuple; a tuple
    fails when sigma_min <= rel_tol * sigma_max.  k > n fails immediately
    since linear independence is impossible."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    tuples = list(tuples)
    if k > f.n:
        return RegularityReport(
            k=k,
            tuples_checked=len(tuples),
            min_singular_value=0.0,
            failures=tuple(tuples),
        )
    mats = _image_matrices(f, tuples, k)
    if not len(mats):
        return RegularityReport(k=k, tuples_checked=0, min_singular_value=math.inf, failures=())
    sv = np.linalg.svd(mats, compute_uv=False)
    smin, smax = sv[:, -1], sv[:, 0]
    bad = smin <= rel_tol * smax
    failures = tuple(tup for tup, flag in zip(tuples, bad) if flag)
    return RegularityReport(
        k=k,
        tuples_checked=len(tuples),
        min_singular_value=float(smin.min()),
        failures=failures,
    )


def check_affine_regular(
    f: Embedding, j: int, tuples, rel_tol: float = REGULARITY_REL_TOL
) -> RegularityReport:
    """Affine independence of j+1 image points, tested as linear independence
    of the differences from the first point (rank j)."""
    if j < 1:
        raise ValueError(f"j must be >= 1, got {j}")
    tuples = list(tuples)
    if j > f.n:
        return RegularityReport(
            k=j,
            tuples_checked=len(tuples),
            min_singular_value=0.0,
            failures=tuple(tuples),
        )
    mats = []
    for tup in tuples:
        if len(tup) != j + 1:
            raise ValueError(f"expected tuples of {j + 1} points, got {len(tup)}")
        imgs = [f.evaluate(p) for p in tup]
        mats.append(np.column_stack([img - imgs[0] for img in imgs[1:]]))
    if not mats:
        return RegularityReport(k=j, tuples_checked=0, min_singular_value=math.inf, failures=())
    sv = np.linalg.svd(np.stack(mats), compute_uv=False)
    smin, smax = sv[:, -1], sv[:, 0]
    bad = smin <= rel_tol * smax
    failures = tuple(tup for tup, flag in zip(tuples, bad) if flag)
    return RegularityReport(
        k=j,
        tuples_checked=len(tuples),
        min_singular_value=float(smin.min()),
        failures=failures,
    )


# ---------------------------------------------------------------------------
# Samplers and spot checks.


def sample_separated_scalars(
    rng: np.random.Generator,
    count: int,
    k: int,
    low: float = -1.0,
    high: float = 1.0,
    min_gap: float = 0.1,
) -> np.ndarray:
    """(count, k) scalar tuples, uniform over configurations whose pairwise
    gaps all exceed min_gap, returned in shuffled order per tuple.

    The gap keeps distinctness numerically meaningful: without it, nearly
    coincident nodes make the smallest singular value of a Vandermonde
    matrix dip below any fixed relative tolerance.
    """
    span = (high - low) - (k - 1) * min_gap
    if span <= 0:
        raise ValueError("interval too small for the requested separation")
    u = np.sort(rng.uniform(0.0, span, size=(count, k)), axis=1)
    t = low + u + min_gap * np.arange(k)
    perm = rng.permuted(np.tile(np.arange(k), (count, 1)), axis=1)
    return np.take_along_axis(t, perm, axis=1)


def sample_separated_points(
    rng: np.random.Generator,
    count: int,
    k: int,
    d: int,
    low: float = -1.0,
    high: float = 1.0,
    min_distance: float = 0.05,
) -> np.ndarray:
    """(count, k, d) tuples of points with pairwise distance >= min_distance."""
    out = np.empty((count, k, d))
    for idx in range(count):
        while True:
            pts = rng.uniform(low, high, size=(k, d))
            diffs = pts[:, None, :] - pts[None, :, :]
            dists = np.linalg.norm(diffs, axis=-1)
            dists[np.diag_indices(k)] = np.inf
            if dists.min() >= min_distance:
                out[idx] = pts
                break
    return out


def injectivity_spot_check(
    f: Embedding,
    low: float = -1.0,
    high: float = 1.0,
    num_pairs: int = 10000,
    min_input_distance: float = 1e-3,
    image_tolerance: float = 1e-9,
    seed: int = 0,
    pairs=None,
) -> tuple:
    """Randomized injectivity probe: flag input pairs farther apart than
    min_input_distance whose images land within image_tolerance.  Finding
    nothing is not a proof; the caller asserts injectivity."""
    if pairs is None:
        rng = np.random.default_rng(seed)
        a = rng.uniform(low, high, size=(num_pairs, f.d))
        b = rng.uniform(low, high, size=(num_pairs, f.d))
        pairs = zip(a, b)
    flagged = []
    for x, y in pairs:
        x = _as_point(x, f.d)
        y = _as_point(y, f.d)
        if np.linalg.norm(x - y) <= min_input_distance:
            continue
        if np.linalg.norm(f.evaluate(x) - f.evaluate(y)) < image_tolerance:
            flagged.append((x, y))
    return tuple(flagged)


def inverse_stereographic(d: int) -> CentralProjection:
    """Embedding R^d -> S^d inside R^(d+1), realized as the central
    projection of the quadratic map x -> (2x, |x|^2 - 1, |x|^2 + 1).

    The final inner coordinate is |x|^2 + 1 >= 1, so projection never
    approaches the dropped hyperplane.  Lifting this map gives the standard
    3-regular example one dimension up.
    """
    if d < 1:
        raise EmbeddingSpecError(f"need d >= 1, got {d}")
    zero = tuple(0 for _ in range(d))
    terms = []
    for i in range(d):
        unit = tuple(1 if l == i else 0 for l in range(d))
        terms.append(((unit, 2.0),))
    squares = tuple(
        (tuple(2 if l == i else 0 for l in range(d)), 1.0) for i in range(d)
    )
    terms.append(squares + ((zero, -1.0),))
    terms.append(squares + ((zero, 1.0),))
    inner = PolynomialEmbedding(d, d + 2, terms)
    return CentralProjection(inner)
