"""Chord-based degeneracy test maps for an embedding f: R^d -> R^n.

Given a weight t in (0, 1), a pair of distinct points x, y, and a unit
vector z, the weighted chord of f steered through the bilinear map B of an
anticommuting family is

    t * [f(x + y + B(z, x - y)) - f(x + y - B(z, x - y))].

The chord difference subtracts two such weighted chords.  At a zero, the
four involved image points satisfy t1 (u1 - v1) = t2 (u2 - v2): they span a
trapezoid, or collapse onto a common line.  The extended variant steers
with the trilinear map C(w, z, .) instead, adding a second sphere parameter
w of dimension 2^gamma - rho + 1.

Weighted pairs keep quantitative margins away from x = y and from
coinciding pair arguments, since both make the chord difference vanish for
trivial reasons.  Sphere parameters are stored in ambient coordinates and
normalized on construction; Jacobians are taken in the ambient space and
any projection onto the sphere is the caller's responsibility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import Embedding
from .hurwitz_radon import HRFamily, displacement_operator

__all__ = [
    "DELTA_SEP",
    "DELTA_PAIR",
    "ConfigTriple",
    "ProbePoint",
    "pair_distance",
    "weighted_chord",
    "chord_difference",
    "chord_difference_extended",
    "chord_difference_jacobian",
    "chord_difference_raw",
    "chord_difference_jacobian_raw",
    "sample_probe_point",
    "point_payload",
    "point_from_payload",
    "dump_point",
    "parse_point",
    "load_point",
    "save_point",
]

# Scale-relative margins excluding the degenerate regions x = y and p1 = p2.
DELTA_SEP = 1e-4
DELTA_PAIR = 1e-4

FORMAT_VERSION = 1


def _clean_vector(v, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.array(v, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must be finite")
    return arr


def _unitize(v, name: str) -> np.ndarray:
    """Normalize onto the unit sphere; vectors already within 1e-9 of unit
    length pass through bitwise unchanged, so reconstruction is idempotent."""
    arr = _clean_vector(v, name)
    norm = np.linalg.norm(arr)
    if norm == 0.0:
        raise ValueError(f"{name} must be nonzero")
    if abs(norm - 1.0) > 1e-9:
        arr = arr / norm
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ConfigTriple:
    """Weight t in (0, 1) plus an ordered pair of distinct points of R^d."""

    t: float
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        t = float(self.t)
        x = _clean_vector(self.x, "x")
        y = _clean_vector(self.y, "y")
        if not np.isfinite(t) or not (0.0 < t < 1.0):
            raise ValueError(f"weight t must lie in (0, 1), got {t}")
        if x.shape != y.shape:
            raise ValueError(f"x and y must match, got {x.shape} vs {y.shape}")
        scale = 1.0 + max(np.linalg.norm(x), np.linalg.norm(y))
        if np.linalg.norm(x - y) < DELTA_SEP * scale:
            raise ValueError(
                f"|x - y| below the separation margin {DELTA_SEP:g} * scale"
            )
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def d(self) -> int:
        return self.x.shape[0]


def pair_distance(p1: ConfigTriple, p2: ConfigTriple) -> float:
    """Product-metric distance between two weighted pairs."""
    return float(
        np.sqrt(
            (p1.t - p2.t) ** 2
            + np.sum((p1.x - p2.x) ** 2)
            + np.sum((p1.y - p2.y) ** 2)
        )
    )


@dataclass(frozen=True)
class ProbePoint:
    """Arguments of the chord difference: two weighted pairs plus the sphere
    parameters (z always; w only for the trilinear variant)."""

    p1: ConfigTriple
    p2: ConfigTriple
    z: np.ndarray
    w: np.ndarray | None = None

    def __post_init__(self):
        if self.p1.d != self.p2.d:
            raise ValueError("the two weighted pairs live in different dimensions")
        object.__setattr__(self, "z", _unitize(self.z, "z"))
        if self.w is not None:
            object.__setattr__(self, "w", _unitize(self.w, "w"))
        scale = 1.0 + max(
            np.linalg.norm(self.p1.x),
            np.linalg.norm(self.p1.y),
            np.linalg.norm(self.p2.x),
            np.linalg.norm(self.p2.y),
        )
        if pair_distance(self.p1, self.p2) < DELTA_PAIR * scale:
            raise ValueError(
                f"the two weighted pairs are closer than {DELTA_PAIR:g} * scale"
            )

    @property
    def d(self) -> int:
        return self.p1.d


def _check_compat(f: Embedding, family: HRFamily, d: int) -> None:
    if f.d != d or family.d != d:
        raise ValueError(
            f"dimension mismatch: point has d={d}, embedding d={f.d}, family d={family.d}"
        )


def _check_unit(v: np.ndarray, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-6:
        raise ValueError(f"{name} must be a unit vector")
    return v


def _chord(f: Embedding, op: np.ndarray, t: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    center = x + y
    shift = op @ (x - y)
    return t * (f.evaluate(center + shift) - f.evaluate(center - shift))


def weighted_chord(f: Embedding, family: HRFamily, z, triple: ConfigTriple) -> np.ndarray:
    """One weighted chord, t [f(x+y+B(z,x-y)) - f(x+y-B(z,x-y))]."""
    _check_compat(f, family, triple.d)
    z = _check_unit(z, "z")
    op = displacement_operator(family, z)
    return _chord(f, op, triple.t, triple.x, triple.y)


def chord_difference(f: Embedding, family: HRFamily, point: ProbePoint) -> np.ndarray:
    """Difference of the two weighted chords of the probe point."""
    if point.w is not None:
        raise ValueError("point carries w; use chord_difference_extended")
    _check_compat(f, family, point.d)
    op = displacement_operator(family, point.z)
    return _chord(f, op, point.p1.t, point.p1.x, point.p1.y) - _chord(
        f, op, point.p2.t, point.p2.x, point.p2.y
    )


def chord_difference_extended(f: Embedding, family: HRFamily, point: ProbePoint) -> np.ndarray:
    """Chord difference steered by the trilinear map C(w, z, .)."""
    if point.w is None:
        raise ValueError("extended variant needs a point with w")
    _check_compat(f, family, point.d)
    op = displacement_operator(family, point.z, point.w)
    return _chord(f, op, point.p1.t, point.p1.x, point.p1.y) - _chord(
        f, op, point.p2.t, point.p2.x, point.p2.y
    )


def chord_difference_raw(f, family, t1, x1, y1, t2, x2, y2, z, w=None) -> np.ndarray:
    """Invariant-free evaluation used by the solver on raw iterates."""
    op = displacement_operator(family, z, w)
    return _chord(f, op, t1, x1, y1) - _chord(f, op, t2, x2, y2)


def chord_difference_jacobian_raw(
    f, family, t1, x1, y1, t2, x2, y2, z, w=None
) -> np.ndarray:
    """Jacobian with columns ordered (t1, x1, y1, t2, x2, y2, z[, w]).

    Sphere coordinates are differentiated in the ambient space.  All blocks
    are assembled by the chain rule through the embedding Jacobian.
    """
    d = f.d
    stack = family.operator_stack
    z = np.asarray(z, dtype=float)
    op_z = np.tensordot(z, stack, axes=1)
    if w is None:
        op = op_z
        op_w = None
    else:
        w = np.asarray(w, dtype=float)
        padded = np.zeros(family.rho)
        padded[: family.w_dim] = w
        op_w = np.tensordot(padded, stack, axes=1)
        op = op_w @ op_z

    eye = np.eye(d)
    sides = []
    for t, x, y in ((t1, x1, y1), (t2, x2, y2)):
        center = x + y
        diff = x - y
        shift = op @ diff
        a = center + shift
        b = center - shift
        sides.append(
            {
                "t": t,
                "diff": diff,
                "bracket": f.evaluate(a) - f.evaluate(b),
                "ja": f.jacobian(a),
                "jb": f.jacobian(b),
            }
        )
    s1, s2 = sides

    cols = []
    for sgn, s in ((1.0, s1), (-1.0, s2)):
        cols.append(sgn * s["bracket"].reshape(-1, 1))
        cols.append(sgn * s["t"] * (s["ja"] @ (eye + op) - s["jb"] @ (eye - op)))
        cols.append(sgn * s["t"] * (s["ja"] @ (eye - op) - s["jb"] @ (eye + op)))

    sum1 = s1["ja"] + s1["jb"]
    sum2 = s2["ja"] + s2["jb"]

    z_cols = np.empty((f.n, family.rho))
    for j in range(family.rho):
        dop = stack[j] if op_w is None else op_w @ stack[j]
        z_cols[:, j] = t1 * (sum1 @ (dop @ s1["diff"])) - t2 * (sum2 @ (dop @ s2["diff"]))
    cols.append(z_cols)

    if w is not None:
        w_cols = np.empty((f.n, family.w_dim))
        for j in range(family.w_dim):
            dop = stack[j] @ op_z
            w_cols[:, j] = t1 * (sum1 @ (dop @ s1["diff"])) - t2 * (
                sum2 @ (dop @ s2["diff"])
            )
        cols.append(w_cols)

    return np.hstack(cols)


def chord_difference_jacobian(f: Embedding, family: HRFamily, point: ProbePoint) -> np.ndarray:
    """Ambient Jacobian of the chord difference at a valid probe point."""
    _check_compat(f, family, point.d)
    return chord_difference_jacobian_raw(
        f,
        family,
        point.p1.t,
        point.p1.x,
        point.p1.y,
        point.p2.t,
        point.p2.x,
        point.p2.y,
        point.z,
        point.w,
    )


def sample_probe_point(
    rng: np.random.Generator,
    family: HRFamily,
    *,
    box: float = 1.0,
    with_w: bool = False,
) -> ProbePoint:
    """Random valid probe point with coordinates in [-box, box]."""
    d = family.d

    def _triple() -> ConfigTriple:
        while True:
            t = rng.uniform(0.1, 0.9)
            x = rng.uniform(-box, box, d)
            y = rng.uniform(-box, box, d)
            try:
                return ConfigTriple(t, x, y)
            except ValueError:
                continue
    while True:
        z = rng.standard_normal(family.rho)
        if np.linalg.norm(z) > 1e-6:
            break
    w = None
    if with_w:
        while True:
            w = rng.standard_normal(family.w_dim)
            if np.linalg.norm(w) > 1e-6:
                break
    while True:
        try:
            return ProbePoint(_triple(), _triple(), z, w)
        except ValueError:
            continue


# ---------------------------------------------------------------------------
# Probe point files: JSON records with full float round-trip.


def point_payload(point: ProbePoint) -> dict:
    data = {
        "format_version": FORMAT_VERSION,
        "t1": point.p1.t,
        "x1": list(point.p1.x),
        "y1": list(point.p1.y),
        "t2": point.p2.t,
        "x2": list(point.p2.x),
        "y2": list(point.p2.y),
        "z": list(point.z),
    }
    if point.w is not None:
        data["w"] = list(point.w)
    return data


def point_from_payload(data: dict) -> ProbePoint:
    if not isinstance(data, dict):
        raise ValueError("point payload must be an object")
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"missing or unsupported format_version (expected {FORMAT_VERSION})")
    keys = set(data) - {"format_version", "w"}
    want = {"t1", "x1", "y1", "t2", "x2", "y2", "z"}
    if keys != want:
        raise ValueError(f"point payload fields {sorted(keys)} != {sorted(want)}")
    return ProbePoint(
        ConfigTriple(data["t1"], data["x1"], data["y1"]),
        ConfigTriple(data["t2"], data["x2"], data["y2"]),
        data["z"],
        data.get("w"),
    )


def dump_point(point: ProbePoint) -> str:
    return json.dumps(point_payload(point), indent=2) + "\n"


def parse_point(text: str) -> ProbePoint:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from exc
    return point_from_payload(data)


def load_point(path) -> ProbePoint:
    return parse_point(Path(path).read_text())


def save_point(point: ProbePoint, path) -> None:
    Path(path).write_text(dump_point(point))
