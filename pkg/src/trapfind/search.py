"""Multistart zero search for the chord difference, with certificate
extraction, classification, and independent validation.

The solver is a damped least-squares iteration (Levenberg-Marquardt style)
on an unconstrained parameter vector: weights enter through a logistic
reparameterization, sphere parameters stay ambient and are renormalized
after every step.  Soft barrier residuals keep iterates away from the
degenerate regions where the chord difference vanishes trivially; final
acceptance re-checks the hard margins, so a barrier can never leak a false
zero into a certificate.

Starts draw from independent seeded streams, so the reduction (first
success by start index) does not depend on execution order.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import chords
from .chords import DELTA_PAIR, DELTA_SEP, ConfigTriple, ProbePoint
from .embeddings import Embedding, embedding_digest
from .hurwitz_radon import (
    HRFamily,
    VARIANT_BILINEAR,
    VARIANT_TRILINEAR,
    VARIANTS,
    displacement_operator,
)

__all__ = [
    "TRAPEZOID",
    "COLLINEAR_TRIPLE",
    "InvalidCertificateError",
    "SearchOptions",
    "Certificate",
    "ValidationReport",
    "FailureReport",
    "StartRecord",
    "RefineResult",
    "search",
    "refine",
    "extract_certificate",
    "classify_quad",
    "validate_certificate",
    "certificate_payload",
    "certificate_from_payload",
    "dumps_certificate",
    "loads_certificate",
    "save_certificate",
    "load_certificate",
]

TRAPEZOID = "trapezoid"
COLLINEAR_TRIPLE = "collinear_triple"

FORMAT_VERSION = 1


class InvalidCertificateError(ValueError):
    """The candidate zero does not produce at least three distinct image
    points consistent with the parallel-sides relation (a false zero)."""


@dataclass(frozen=True)
class SearchOptions:
    """Configuration for the multistart search.

    residual_tolerance of None selects 1e-9 * (1 + image scale over the
    sampling box); separation/pair weights of None select 1e3 times the
    typical squared chord difference at the sampled starts.
    """

    starts: int = 64
    max_iterations: int = 150
    residual_tolerance: float | None = None
    seed: int = 0
    variant: str = VARIANT_BILINEAR
    separation_weight: float | None = None
    pair_weight: float | None = None
    box_low: float = -1.5
    box_high: float = 1.5
    validation_tolerance: float = 1e-6
    distinctness_tolerance: float = 1e-5

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError(f"starts must be >= 1, got {self.starts}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.residual_tolerance is not None and not self.residual_tolerance > 0:
            raise ValueError("residual_tolerance must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        for name in ("separation_weight", "pair_weight"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive")
        if not self.box_low < self.box_high:
            raise ValueError("box_low must be below box_high")
        if not self.validation_tolerance > 0 or not self.distinctness_tolerance > 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Certificate:
    """Machine-checkable witness of a chord-difference zero."""

    variant: str
    t1: float
    t2: float
    preimage_u1: np.ndarray
    preimage_v1: np.ndarray
    preimage_u2: np.ndarray
    preimage_v2: np.ndarray
    image_u1: np.ndarray
    image_v1: np.ndarray
    image_u2: np.ndarray
    image_v2: np.ndarray
    residual: float
    classification: str
    embedding_digest: str | None = None
    start_index: int | None = None
    iterations: int | None = None

    def preimages(self):
        return (self.preimage_u1, self.preimage_v1, self.preimage_u2, self.preimage_v2)

    def images(self):
        return (self.image_u1, self.image_v1, self.image_u2, self.image_v2)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the independent certificate checks, in a fixed order."""

    tolerance: float
    distinctness_tolerance: float
    checks: tuple[tuple[str, bool, float | str | None], ...]

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def payload(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "tolerance": self.tolerance,
            "distinctness_tolerance": self.distinctness_tolerance,
            "passed": self.passed,
            "checks": {
                name: {"passed": ok, "measured": measured}
                for name, ok, measured in self.checks
            },
        }

    def dumps(self) -> str:
        return json.dumps(self.payload(), indent=2) + "\n"


@dataclass(frozen=True)
class StartRecord:
    index: int
    status: str
    residual: float
    iterations: int


@dataclass(frozen=True)
class FailureReport:
    """Best residual and per-start outcomes when no start validated."""

    starts: int
    best_residual: float
    best_start: int
    records: tuple[StartRecord, ...]
    message: str

    def payload(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "outcome": "failure",
            "message": self.message,
            "starts": self.starts,
            "best_residual": self.best_residual,
            "best_start": self.best_start,
            "records": [
                {
                    "index": r.index,
                    "status": r.status,
                    "residual": r.residual,
                    "iterations": r.iterations,
                }
                for r in self.records
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.payload(), indent=2) + "\n"


@dataclass(frozen=True)
class RefineResult:
    """Local polish outcome; objective_history lists the accepted full
    objective norms and is non-increasing by construction."""

    point: ProbePoint
    residual: float
    iterations: int
    diverged: bool
    objective_history: tuple[float, ...]


# ---------------------------------------------------------------------------
# Classification and validation.


def classify_quad(u1, v1, u2, v2, t1: float, t2: float, tol: float = 1e-5) -> str:
    """Classify the four image points of a certificate.

    Points closer than tol * scale are identified.  At least three distinct
    points must remain.  The result is collinear_triple when the affine
    span of the distinct points is at most a line, trapezoid otherwise; a
    genuine zero with exactly three distinct points is necessarily
    collinear, so three distinct non-collinear points raise
    InvalidCertificateError.
    """
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in (u1, v1, u2, v2)]
    scale = 1.0 + max(np.linalg.norm(p) for p in pts)
    thresh = tol * scale
    distinct: list[np.ndarray] = []
    for p in pts:
        if all(np.linalg.norm(p - q) > thresh for q in distinct):
            distinct.append(p)
    if len(distinct) < 3:
        raise InvalidCertificateError(
            f"only {len(distinct)} distinct image points at tolerance {tol:g}"
        )
    diffs = np.column_stack([p - distinct[0] for p in distinct[1:]])
    sv = np.linalg.svd(diffs, compute_uv=False)
    collinear = len(sv) < 2 or sv[1] <= tol * sv[0]
    if collinear:
        return COLLINEAR_TRIPLE
    if len(distinct) == 3:
        raise InvalidCertificateError(
            "three distinct image points but not collinear; the parallel-sides "
            "relation cannot balance, so the zero is spurious"
        )
    return TRAPEZOID


def extract_certificate(
    f: Embedding,
    family: HRFamily,
    point: ProbePoint,
    residual_tolerance: float,
    *,
    distinctness_tolerance: float = 1e-5,
    digest: str | None = None,
    start_index: int | None = None,
    iterations: int | None = None,
) -> Certificate:
    """Read the four preimages and images out of a near-zero probe point.

    Preimages are x + y +/- Op(x - y) per side, with Op the displacement
    by z (or by w, z for the extended variant).  Rejects points whose
    residual exceeds residual_tolerance.
    """
    if point.w is None:
        value = chords.chord_difference(f, family, point)
        variant = VARIANT_BILINEAR
    else:
        value = chords.chord_difference_extended(f, family, point)
        variant = VARIANT_TRILINEAR
    residual = float(np.linalg.norm(value))
    if residual > residual_tolerance:
        raise ValueError(
            f"residual {residual:.3e} above tolerance {residual_tolerance:.3e}"
        )
    op = displacement_operator(family, point.z, point.w)
    pre = []
    for triple in (point.p1, point.p2):
        center = triple.x + triple.y
        shift = op @ (triple.x - triple.y)
        pre.append((center + shift, center - shift))
    (qu1, qv1), (qu2, qv2) = pre
    images = [f.evaluate(q) for q in (qu1, qv1, qu2, qv2)]
    classification = classify_quad(
        *images, point.p1.t, point.p2.t, tol=distinctness_tolerance
    )
    return Certificate(
        variant=variant,
        t1=point.p1.t,
        t2=point.p2.t,
        preimage_u1=qu1,
        preimage_v1=qv1,
        preimage_u2=qu2,
        preimage_v2=qv2,
        image_u1=images[0],
        image_v1=images[1],
        image_u2=images[2],
        image_v2=images[3],
        residual=residual,
        classification=classification,
        embedding_digest=digest,
        start_index=start_index,
        iterations=iterations,
    )


def validate_certificate(
    f: Embedding,
    cert: Certificate,
    tolerance: float = 1e-6,
    distinctness_tolerance: float = 1e-5,
) -> ValidationReport:
    """Re-derive every certificate claim from the embedding alone.

    Checks, none reusing solver state: weights in (0, 1); preimages map to
    the stored images; parallel sides t1 (u1 - v1) = t2 (u2 - v2); the
    normalized affine combination placing the diagonal intersection; the
    distinctness structure (u_i distinct from v_i, and not both pairs
    identified either straight or crossed); classification re-derived.
    """
    u1, v1, u2, v2 = (np.asarray(p, dtype=float) for p in cert.images())
    t1, t2 = cert.t1, cert.t2
    scale = 1.0 + max(np.linalg.norm(p) for p in (u1, v1, u2, v2))
    checks: list[tuple[str, bool, float | str | None]] = []

    weights_ok = 0.0 < t1 < 1.0 and 0.0 < t2 < 1.0
    checks.append(("weights_in_range", weights_ok, f"t1={t1!r}, t2={t2!r}"))

    pre_err = max(
        float(np.linalg.norm(f.evaluate(q) - img))
        for q, img in zip(cert.preimages(), cert.images())
    )
    checks.append(("preimage_consistency", pre_err <= tolerance * scale, pre_err))

    side_err = float(np.linalg.norm(t1 * (u1 - v1) - t2 * (u2 - v2)))
    checks.append(("parallel_sides", side_err <= tolerance * scale, side_err))

    affine_err = float(
        np.linalg.norm(t1 * u1 + t2 * v2 - t1 * v1 - t2 * u2) / (t1 + t2)
    )
    checks.append(("affine_combination", affine_err <= tolerance * scale, affine_err))

    thresh = distinctness_tolerance * scale
    margin = min(
        float(np.linalg.norm(u1 - v1)),
        float(np.linalg.norm(u2 - v2)),
        max(float(np.linalg.norm(u1 - u2)), float(np.linalg.norm(v1 - v2))),
        max(float(np.linalg.norm(u1 - v2)), float(np.linalg.norm(u2 - v1))),
    )
    checks.append(("distinctness", margin > thresh, margin))

    try:
        derived = classify_quad(u1, v1, u2, v2, t1, t2, tol=distinctness_tolerance)
    except InvalidCertificateError:
        checks.append(("classification", False, "invalid"))
    else:
        checks.append(("classification", derived == cert.classification, derived))

    return ValidationReport(
        tolerance=tolerance,
        distinctness_tolerance=distinctness_tolerance,
        checks=tuple(checks),
    )


# ---------------------------------------------------------------------------
# The damped least-squares core.


def _softplus(u: float) -> float:
    return float(np.logaddexp(0.0, u))


def _sigmoid(u: float) -> float:
    # exp(u - softplus(u)) is stable at both ends
    return float(np.exp(u - np.logaddexp(0.0, u)))


def _logit(t: float) -> float:
    return float(np.log(t) - np.log1p(-t))


class _Problem:
    """Shared state for one search invocation: dimensions, parameter
    packing, tolerances, and penalty weights."""

    def __init__(self, f: Embedding, family: HRFamily, opts: SearchOptions):
        if f.d != family.d:
            raise ValueError(
                f"embedding has d={f.d} but the family acts on d={family.d}"
            )
        self.f = f
        self.family = family
        self.opts = opts
        self.d = f.d
        self.n = f.n
        self.rho = family.rho
        self.trilinear = opts.variant == VARIANT_TRILINEAR
        self.q = family.w_dim if self.trilinear else 0
        self.z_free = self.rho > 1
        self.w_free = self.trilinear and self.q > 1

        box_radius = max(abs(opts.box_low), abs(opts.box_high))
        self.sep_delta = DELTA_SEP * (1.0 + box_radius)
        self.pair_delta = DELTA_PAIR * (1.0 + box_radius)

        # offsets into theta
        d = self.d
        self.o_s1 = 0
        self.o_x1 = 1
        self.o_y1 = 1 + d
        self.o_s2 = 1 + 2 * d
        self.o_x2 = 2 + 2 * d
        self.o_y2 = 2 + 3 * d
        self.o_z = 2 + 4 * d
        self.o_w = self.o_z + (self.rho if self.z_free else 0)
        self.size = self.o_w + (self.q if self.w_free else 0)

        rng = np.random.default_rng([opts.seed, 0x5CA1E])
        probes = rng.uniform(opts.box_low, opts.box_high, size=(64, self.d))
        fscale = max(float(np.linalg.norm(f.evaluate(p))) for p in probes)
        self.tol = (
            opts.residual_tolerance
            if opts.residual_tolerance is not None
            else 1e-9 * (1.0 + fscale)
        )
        self.polish_target = max(1e-6 * self.tol, 1e-16)

        samples = [self.sample_start(rng, index) for index in range(8)]
        typical = float(
            np.median(
                [np.sum(self._phi_at(theta, zf, wf) ** 2) for theta, zf, wf in samples]
            )
        )
        weight = 1e3 * max(typical, 1e-12)
        self.lam_sep = (
            opts.separation_weight if opts.separation_weight is not None else weight
        )
        self.lam_pair = opts.pair_weight if opts.pair_weight is not None else weight

    # -- parameter packing ---------------------------------------------------

    def sample_start(self, rng: np.random.Generator, index: int):
        """Random start in the box; discrete sphere factors (S^0) are
        enumerated through the start index."""
        opts = self.opts
        d = self.d

        def _pair():
            x = rng.uniform(opts.box_low, opts.box_high, d)
            while True:
                y = rng.uniform(opts.box_low, opts.box_high, d)
                if np.linalg.norm(x - y) >= 2.0 * self.sep_delta:
                    return x, y

        t1, t2 = rng.uniform(0.1, 0.9, size=2)
        x1, y1 = _pair()
        while True:
            x2, y2 = _pair()
            gap = np.sqrt(
                (t1 - t2) ** 2 + np.sum((x1 - x2) ** 2) + np.sum((y1 - y2) ** 2)
            )
            if gap >= 2.0 * self.pair_delta:
                break

        theta = np.empty(self.size)
        theta[self.o_s1] = _logit(t1)
        theta[self.o_x1 : self.o_x1 + d] = x1
        theta[self.o_y1 : self.o_y1 + d] = y1
        theta[self.o_s2] = _logit(t2)
        theta[self.o_x2 : self.o_x2 + d] = x2
        theta[self.o_y2 : self.o_y2 + d] = y2

        z_fixed = None
        if self.z_free:
            while True:
                z = rng.standard_normal(self.rho)
                nz = np.linalg.norm(z)
                if nz > 1e-6:
                    break
            theta[self.o_z : self.o_z + self.rho] = z / nz
        else:
            z_fixed = np.array([1.0 if index % 2 == 0 else -1.0])

        w_fixed = None
        if self.w_free:
            while True:
                w = rng.standard_normal(self.q)
                nw = np.linalg.norm(w)
                if nw > 1e-6:
                    break
            theta[self.o_w : self.o_w + self.q] = w / nw
        elif self.trilinear:
            w_fixed = np.array([1.0 if (index // 2) % 2 == 0 else -1.0])

        return theta, z_fixed, w_fixed

    def theta_from_point(self, point: ProbePoint):
        d = self.d
        theta = np.empty(self.size)
        theta[self.o_s1] = _logit(point.p1.t)
        theta[self.o_x1 : self.o_x1 + d] = point.p1.x
        theta[self.o_y1 : self.o_y1 + d] = point.p1.y
        theta[self.o_s2] = _logit(point.p2.t)
        theta[self.o_x2 : self.o_x2 + d] = point.p2.x
        theta[self.o_y2 : self.o_y2 + d] = point.p2.y
        z_fixed = None
        if self.z_free:
            theta[self.o_z : self.o_z + self.rho] = point.z
        else:
            z_fixed = np.array(point.z)
        w_fixed = None
        if self.trilinear:
            if point.w is None:
                raise ValueError("trilinear search needs a point with w")
            if self.w_free:
                theta[self.o_w : self.o_w + self.q] = point.w
            else:
                w_fixed = np.array(point.w)
        elif point.w is not None:
            raise ValueError("bilinear search got a point with w")
        return theta, z_fixed, w_fixed

    def unpack(self, theta, z_fixed, w_fixed):
        d = self.d
        t1 = _sigmoid(theta[self.o_s1])
        t2 = _sigmoid(theta[self.o_s2])
        x1 = theta[self.o_x1 : self.o_x1 + d]
        y1 = theta[self.o_y1 : self.o_y1 + d]
        x2 = theta[self.o_x2 : self.o_x2 + d]
        y2 = theta[self.o_y2 : self.o_y2 + d]
        z = theta[self.o_z : self.o_z + self.rho] if self.z_free else z_fixed
        if self.trilinear:
            w = theta[self.o_w : self.o_w + self.q] if self.w_free else w_fixed
        else:
            w = None
        return t1, x1, y1, t2, x2, y2, z, w

    def renormalize(self, theta) -> bool:
        """Project the sphere blocks back onto the unit sphere; False when a
        block collapsed too close to zero."""
        if self.z_free:
            block = theta[self.o_z : self.o_z + self.rho]
            norm = np.linalg.norm(block)
            if norm < 1e-8:
                return False
            theta[self.o_z : self.o_z + self.rho] = block / norm
        if self.w_free:
            block = theta[self.o_w : self.o_w + self.q]
            norm = np.linalg.norm(block)
            if norm < 1e-8:
                return False
            theta[self.o_w : self.o_w + self.q] = block / norm
        return True

    def point_from_theta(self, theta, z_fixed, w_fixed) -> ProbePoint:
        t1, x1, y1, t2, x2, y2, z, w = self.unpack(theta, z_fixed, w_fixed)
        return ProbePoint(ConfigTriple(t1, x1, y1), ConfigTriple(t2, x2, y2), z, w)

    # -- residuals and jacobians ---------------------------------------------

    def _phi_at(self, theta, z_fixed, w_fixed) -> np.ndarray:
        t1, x1, y1, t2, x2, y2, z, w = self.unpack(theta, z_fixed, w_fixed)
        return chords.chord_difference_raw(
            self.f, self.family, t1, x1, y1, t2, x2, y2, z, w
        )

    def residual(self, theta, z_fixed, w_fixed) -> np.ndarray:
        t1, x1, y1, t2, x2, y2, z, w = self.unpack(theta, z_fixed, w_fixed)
        phi = chords.chord_difference_raw(
            self.f, self.family, t1, x1, y1, t2, x2, y2, z, w
        )
        pens = self._penalties(t1, x1, y1, t2, x2, y2)[0]
        return np.concatenate([phi, pens])

    def jacobian(self, theta, z_fixed, w_fixed) -> np.ndarray:
        t1, x1, y1, t2, x2, y2, z, w = self.unpack(theta, z_fixed, w_fixed)
        amb = chords.chord_difference_jacobian_raw(
            self.f, self.family, t1, x1, y1, t2, x2, y2, z, w
        )
        d = self.d
        jac = np.zeros((self.n, self.size))
        # ambient column offsets: t1, x1, y1, t2, x2, y2, z, w
        a_x1, a_y1 = 1, 1 + d
        a_t2, a_x2, a_y2 = 1 + 2 * d, 2 + 2 * d, 2 + 3 * d
        a_z = 2 + 4 * d
        jac[:, self.o_s1] = amb[:, 0] * t1 * (1.0 - t1)
        jac[:, self.o_x1 : self.o_x1 + d] = amb[:, a_x1 : a_x1 + d]
        jac[:, self.o_y1 : self.o_y1 + d] = amb[:, a_y1 : a_y1 + d]
        jac[:, self.o_s2] = amb[:, a_t2] * t2 * (1.0 - t2)
        jac[:, self.o_x2 : self.o_x2 + d] = amb[:, a_x2 : a_x2 + d]
        jac[:, self.o_y2 : self.o_y2 + d] = amb[:, a_y2 : a_y2 + d]
        if self.z_free:
            jac[:, self.o_z : self.o_z + self.rho] = amb[:, a_z : a_z + self.rho]
        if self.w_free:
            a_w = a_z + self.rho
            jac[:, self.o_w : self.o_w + self.q] = amb[:, a_w : a_w + self.q]

        _, rows = self._penalties(t1, x1, y1, t2, x2, y2)
        return np.vstack([jac, rows])

    def _penalties(self, t1, x1, y1, t2, x2, y2):
        """Three soft-barrier residuals and their theta-gradient rows.

        Each barrier is sqrt(lam * softplus((delta^2 - v) / delta^2)) for a
        squared distance v; the normalized argument localizes the barrier at
        the delta scale and leaves it numerically zero elsewhere.
        """
        d = self.d
        values = np.empty(3)
        rows = np.zeros((3, self.size))

        def _barrier(row_idx, v, dv_dtheta, lam, delta):
            u = (delta**2 - v) / delta**2
            sp = _softplus(u)
            r = np.sqrt(lam * sp)
            values[row_idx] = r
            if r > 1e-150:
                # dr/dv = lam * sigmoid(u) * (-1/delta^2) / (2 r)
                coeff = -lam * _sigmoid(u) / (delta**2 * 2.0 * r)
                rows[row_idx] = coeff * dv_dtheta

        grad = np.zeros(self.size)
        diff1 = x1 - y1
        grad[self.o_x1 : self.o_x1 + d] = 2.0 * diff1
        grad[self.o_y1 : self.o_y1 + d] = -2.0 * diff1
        _barrier(0, float(diff1 @ diff1), grad, self.lam_sep, self.sep_delta)

        grad = np.zeros(self.size)
        diff2 = x2 - y2
        grad[self.o_x2 : self.o_x2 + d] = 2.0 * diff2
        grad[self.o_y2 : self.o_y2 + d] = -2.0 * diff2
        _barrier(1, float(diff2 @ diff2), grad, self.lam_sep, self.sep_delta)

        grad = np.zeros(self.size)
        dt = t1 - t2
        dx = x1 - x2
        dy = y1 - y2
        grad[self.o_s1] = 2.0 * dt * t1 * (1.0 - t1)
        grad[self.o_s2] = -2.0 * dt * t2 * (1.0 - t2)
        grad[self.o_x1 : self.o_x1 + d] = 2.0 * dx
        grad[self.o_x2 : self.o_x2 + d] = -2.0 * dx
        grad[self.o_y1 : self.o_y1 + d] = 2.0 * dy
        grad[self.o_y2 : self.o_y2 + d] = -2.0 * dy
        v = float(dt * dt + dx @ dx + dy @ dy)
        _barrier(2, v, grad, self.lam_pair, self.pair_delta)

        return values, rows


def _levenberg_marquardt(problem: _Problem, theta, z_fixed, w_fixed, max_iterations):
    """Damped least squares with doubling/halving damping.

    Returns (theta, phi_norm, iterations, history, status); history holds
    the accepted full-objective norms, which decrease monotonically.
    """
    theta = np.array(theta, dtype=float)
    r = problem.residual(theta, z_fixed, w_fixed)
    if not np.isfinite(r).all():
        return theta, np.inf, 0, (), "nonfinite"
    n = problem.n
    obj = float(np.linalg.norm(r))
    phi_norm = float(np.linalg.norm(r[:n]))
    history = [obj]
    mu = 1e-3
    iterations = 0
    status = "iteration_limit"

    while iterations < max_iterations:
        if phi_norm <= problem.polish_target:
            status = "converged"
            break
        jac = problem.jacobian(theta, z_fixed, w_fixed)
        if not np.isfinite(jac).all():
            status = "nonfinite"
            break
        grad = jac.T @ r
        hess = jac.T @ jac
        eye = np.eye(problem.size)
        accepted = False
        while mu <= 1e12:
            try:
                step = np.linalg.solve(hess + mu * eye, -grad)
            except np.linalg.LinAlgError:
                mu *= 4.0
                continue
            cand = theta + step
            if not problem.renormalize(cand):
                mu *= 2.0
                continue
            r_cand = problem.residual(cand, z_fixed, w_fixed)
            if np.isfinite(r_cand).all() and np.linalg.norm(r_cand) < obj:
                theta = cand
                r = r_cand
                obj = float(np.linalg.norm(r))
                phi_norm = float(np.linalg.norm(r[:n]))
                history.append(obj)
                mu = max(mu * 0.5, 1e-14)
                accepted = True
                break
            mu *= 2.0
        if not accepted:
            status = "stalled"
            break
        iterations += 1
        if np.linalg.norm(step) <= 1e-15 * (1.0 + np.linalg.norm(theta)):
            status = "tiny_step"
            break
    else:
        status = "iteration_limit"
    if phi_norm <= problem.polish_target:
        status = "converged"
    return theta, phi_norm, iterations, tuple(history), status


def _guarantee_bound(family: HRFamily, variant: str) -> int:
    if variant == VARIANT_BILINEAR:
        return 2 * family.d + family.rho - 1
    return 2 * family.d + 2**family.gamma - 1


def search(f: Embedding, family: HRFamily, opts: SearchOptions | None = None):
    """Multistart search for a validated certificate.

    Returns the first Certificate (by start index) whose residual is within
    tolerance and which passes validate_certificate; otherwise a
    FailureReport.  Deterministic for a fixed seed.
    """
    opts = opts if opts is not None else SearchOptions()
    bound = _guarantee_bound(family, opts.variant)
    if f.n > bound:
        warnings.warn(
            f"target dimension n={f.n} exceeds {bound}, the largest dimension "
            f"with a guaranteed zero for d={f.d} ({opts.variant}); the search "
            "is best effort",
            stacklevel=2,
        )
    problem = _Problem(f, family, opts)
    digest = embedding_digest(f)
    records = []
    best_residual = np.inf
    best_start = -1

    for index in range(opts.starts):
        rng = np.random.default_rng([opts.seed, index])
        theta0, z_fixed, w_fixed = problem.sample_start(rng, index)
        theta, phi_norm, iterations, _, status = _levenberg_marquardt(
            problem, theta0, z_fixed, w_fixed, opts.max_iterations
        )
        if phi_norm < best_residual:
            best_residual = phi_norm
            best_start = index
        if status == "nonfinite":
            records.append(StartRecord(index, "nonfinite", phi_norm, iterations))
            continue
        if phi_norm > problem.tol:
            records.append(StartRecord(index, "above_tolerance", phi_norm, iterations))
            continue
        try:
            point = problem.point_from_theta(theta, z_fixed, w_fixed)
        except ValueError:
            records.append(StartRecord(index, "collapsed", phi_norm, iterations))
            continue
        try:
            cert = extract_certificate(
                f,
                family,
                point,
                residual_tolerance=problem.tol,
                distinctness_tolerance=opts.distinctness_tolerance,
                digest=digest,
                start_index=index,
                iterations=iterations,
            )
        except InvalidCertificateError:
            records.append(StartRecord(index, "invalid_certificate", phi_norm, iterations))
            continue
        report = validate_certificate(
            f,
            cert,
            tolerance=opts.validation_tolerance,
            distinctness_tolerance=opts.distinctness_tolerance,
        )
        if report.passed:
            return cert
        records.append(StartRecord(index, "validation_failed", phi_norm, iterations))

    return FailureReport(
        starts=opts.starts,
        best_residual=float(best_residual),
        best_start=best_start,
        records=tuple(records),
        message=(
            f"no validated zero in {opts.starts} starts; best residual "
            f"{best_residual:.3e} at start {best_start} (tolerance {problem.tol:.3e})"
        ),
    )


def refine(
    f: Embedding,
    family: HRFamily,
    point: ProbePoint,
    opts: SearchOptions | None = None,
) -> RefineResult:
    """Polish a probe point by local minimization of the squared chord
    difference.  The returned point never has a larger residual than the
    input; a diverged run hands the input back flagged."""
    opts = opts if opts is not None else SearchOptions(
        variant=VARIANT_TRILINEAR if point.w is not None else VARIANT_BILINEAR
    )
    problem = _Problem(f, family, opts)
    theta0, z_fixed, w_fixed = problem.theta_from_point(point)
    phi0 = float(np.linalg.norm(problem._phi_at(theta0, z_fixed, w_fixed)))
    theta, phi_norm, iterations, history, status = _levenberg_marquardt(
        problem, theta0, z_fixed, w_fixed, opts.max_iterations
    )
    if status == "nonfinite" or phi_norm > phi0:
        return RefineResult(
            point=point,
            residual=phi0,
            iterations=iterations,
            diverged=status == "nonfinite",
            objective_history=history,
        )
    try:
        refined = problem.point_from_theta(theta, z_fixed, w_fixed)
    except ValueError:
        # the polished iterate slid under the hard margins; keep the input
        return RefineResult(
            point=point,
            residual=phi0,
            iterations=iterations,
            diverged=False,
            objective_history=history,
        )
    return RefineResult(
        point=refined,
        residual=phi_norm,
        iterations=iterations,
        diverged=False,
        objective_history=history,
    )


# ---------------------------------------------------------------------------
# Certificate files.


def certificate_payload(cert: Certificate) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "variant": cert.variant,
        "t1": cert.t1,
        "t2": cert.t2,
        "preimages": {
            "u1": list(map(float, cert.preimage_u1)),
            "v1": list(map(float, cert.preimage_v1)),
            "u2": list(map(float, cert.preimage_u2)),
            "v2": list(map(float, cert.preimage_v2)),
        },
        "images": {
            "u1": list(map(float, cert.image_u1)),
            "v1": list(map(float, cert.image_v1)),
            "u2": list(map(float, cert.image_u2)),
            "v2": list(map(float, cert.image_v2)),
        },
        "residual": cert.residual,
        "classification": cert.classification,
        "embedding_digest": cert.embedding_digest,
        "solver": {"start_index": cert.start_index, "iterations": cert.iterations},
    }


def certificate_from_payload(data: dict) -> Certificate:
    if not isinstance(data, dict):
        raise ValueError("certificate payload must be an object")
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"missing or unsupported format_version (expected {FORMAT_VERSION})")
    want = {
        "format_version",
        "variant",
        "t1",
        "t2",
        "preimages",
        "images",
        "residual",
        "classification",
        "embedding_digest",
        "solver",
    }
    if set(data) != want:
        raise ValueError(f"certificate fields {sorted(set(data))} != {sorted(want)}")
    pre = data["preimages"]
    img = data["images"]
    solver = data.get("solver") or {}
    return Certificate(
        variant=data["variant"],
        t1=float(data["t1"]),
        t2=float(data["t2"]),
        preimage_u1=np.asarray(pre["u1"], dtype=float),
        preimage_v1=np.asarray(pre["v1"], dtype=float),
        preimage_u2=np.asarray(pre["u2"], dtype=float),
        preimage_v2=np.asarray(pre["v2"], dtype=float),
        image_u1=np.asarray(img["u1"], dtype=float),
        image_v1=np.asarray(img["v1"], dtype=float),
        image_u2=np.asarray(img["u2"], dtype=float),
        image_v2=np.asarray(img["v2"], dtype=float),
        residual=float(data["residual"]),
        classification=data["classification"],
        embedding_digest=data["embedding_digest"],
        start_index=solver.get("start_index"),
        iterations=solver.get("iterations"),
    )


def dumps_certificate(cert: Certificate) -> str:
    return json.dumps(certificate_payload(cert), indent=2) + "\n"


def loads_certificate(text: str) -> Certificate:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from exc
    return certificate_from_payload(data)


def save_certificate(cert: Certificate, path) -> None:
    Path(path).write_text(dumps_certificate(cert))


def load_certificate(path) -> Certificate:
    return loads_certificate(Path(path).read_text())
