import numpy as np
import pytest

import trapfind as tf
from trapfind.chords import (
    ConfigTriple,
    ProbePoint,
    chord_difference_jacobian_raw,
    chord_difference_raw,
    dump_point,
    pair_distance,
    parse_point,
    point_from_payload,
    point_payload,
    sample_probe_point,
)
from trapfind.hurwitz_radon import displacement_operator


def parabola_zero_point():
    # chords of slope zero on (t, t^2): weights 0.5 and 0.25 balance them
    return ProbePoint(
        ConfigTriple(0.5, [-0.5], [0.5]),
        ConfigTriple(0.25, [-1.0], [1.0]),
        [1.0],
    )


# -- invariants ----------------------------------------------------------------


@pytest.mark.parametrize("t", [0.0, 1.0, -0.2, 1.7, float("nan")])
def test_config_triple_rejects_bad_weight(t):
    with pytest.raises(ValueError):
        ConfigTriple(t, [0.0], [1.0])


def test_config_triple_rejects_coincident_points():
    with pytest.raises(ValueError):
        ConfigTriple(0.5, [1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        ConfigTriple(0.5, [1.0], [1.0 + 1e-9])


def test_config_triple_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        ConfigTriple(0.5, [1.0, 2.0], [1.0])


def test_probe_point_normalizes_sphere_parameters():
    p = ProbePoint(
        ConfigTriple(0.5, [0.0, 0.0], [1.0, 0.0]),
        ConfigTriple(0.5, [0.0, 1.0], [1.0, 1.0]),
        [3.0, 4.0],
    )
    assert np.allclose(p.z, [0.6, 0.8])
    with pytest.raises(ValueError):
        ProbePoint(p.p1, p.p2, [0.0, 0.0])


def test_probe_point_rejects_coincident_pairs():
    triple = ConfigTriple(0.5, [0.0], [1.0])
    with pytest.raises(ValueError):
        ProbePoint(triple, ConfigTriple(0.5, [0.0], [1.0]), [1.0])


def test_pair_distance_is_product_metric():
    a = ConfigTriple(0.5, [0.0], [1.0])
    b = ConfigTriple(0.25, [0.5], [1.5])
    assert pair_distance(a, b) == pytest.approx(np.sqrt(0.0625 + 0.25 + 0.25))


# -- evaluation ---------------------------------------------------------------


def test_linear_map_translation_invariance(family):
    # dyadic data and an integer matrix keep the arithmetic exact
    fam = family(2)
    mat = tf.AffineEmbedding([[1.0, 0.0], [2.0, -1.0], [0.0, 3.0]], [0.5, 0.25, 0.0])
    shift = np.array([0.75, -0.5])
    p1 = ConfigTriple(0.5, [0.25, 0.5], [-0.75, 0.25])
    p2 = ConfigTriple(0.5, p1.x + shift, p1.y + shift)
    point = ProbePoint(p1, p2, [1.0, 0.0])
    value = tf.chord_difference(mat, fam, point)
    assert np.array_equal(value, np.zeros(3))


def test_parabola_zero(parabola, family):
    value = tf.chord_difference(parabola, family(1), parabola_zero_point())
    assert np.array_equal(value, np.zeros(2))


def test_swap_antisymmetry_exact(veronese, family):
    fam = family(2)
    rng = np.random.default_rng(21)
    for _ in range(50):
        point = sample_probe_point(rng, fam)
        swapped = ProbePoint(point.p2, point.p1, point.z)
        a = tf.chord_difference(veronese, fam, point)
        b = tf.chord_difference(veronese, fam, swapped)
        assert np.array_equal(b, -a)


def test_z_antisymmetry_exact(veronese, family):
    fam = family(2)
    rng = np.random.default_rng(22)
    for _ in range(50):
        point = sample_probe_point(rng, fam)
        flipped = ProbePoint(point.p1, point.p2, -point.z)
        a = tf.chord_difference(veronese, fam, point)
        b = tf.chord_difference(veronese, fam, flipped)
        assert np.array_equal(b, -a)


def test_weighted_chord_of_identity(family):
    fam = family(4)
    rng = np.random.default_rng(23)
    ident = tf.AffineEmbedding.identity(4)
    for _ in range(20):
        point = sample_probe_point(rng, fam)
        psi = tf.weighted_chord(ident, fam, point.z, point.p1)
        expected = 2.0 * point.p1.t * tf.bilinear_map(fam, point.z, point.p1.x - point.p1.y)
        assert np.allclose(psi, expected, atol=1e-12)


def test_weighted_chord_flips_with_z(veronese, family):
    fam = family(2)
    rng = np.random.default_rng(35)
    for _ in range(50):
        point = sample_probe_point(rng, fam)
        a = tf.weighted_chord(veronese, fam, point.z, point.p1)
        b = tf.weighted_chord(veronese, fam, -point.z, point.p1)
        assert np.array_equal(b, -a)


def test_difference_decomposes_into_chords(veronese, family):
    fam = family(2)
    rng = np.random.default_rng(24)
    for _ in range(50):
        point = sample_probe_point(rng, fam)
        whole = tf.chord_difference(veronese, fam, point)
        parts = tf.weighted_chord(veronese, fam, point.z, point.p1) - tf.weighted_chord(
            veronese, fam, point.z, point.p2
        )
        assert np.array_equal(whole, parts)


def test_extended_reduces_to_plain_at_first_basis_vector(family, random_polynomial):
    fam = family(16)
    f = random_polynomial(31, 16, 6)
    rng = np.random.default_rng(25)
    e1 = np.zeros(fam.w_dim)
    e1[0] = 1.0
    for _ in range(20):
        plain = sample_probe_point(rng, fam)
        extended = ProbePoint(plain.p1, plain.p2, plain.z, e1)
        a = tf.chord_difference(f, fam, plain)
        b = tf.chord_difference_extended(f, fam, extended)
        assert np.array_equal(a, b)


def test_extended_negates_under_w_flip(family, random_polynomial):
    fam = family(16)
    f = random_polynomial(32, 16, 6)
    rng = np.random.default_rng(26)
    for _ in range(20):
        point = sample_probe_point(rng, fam, with_w=True)
        flipped = ProbePoint(point.p1, point.p2, point.z, -point.w)
        a = tf.chord_difference_extended(f, fam, point)
        b = tf.chord_difference_extended(f, fam, flipped)
        assert np.array_equal(b, -a)


def test_extended_matches_direct_transcription(family, random_polynomial):
    # independent oracle: spell the displayed formula out through the
    # trilinear map rather than the displacement matrix
    fam = family(16)
    f = random_polynomial(33, 16, 6)
    rng = np.random.default_rng(27)
    for _ in range(20):
        p = sample_probe_point(rng, fam, with_w=True)
        t1, x1, y1 = p.p1.t, p.p1.x, p.p1.y
        t2, x2, y2 = p.p2.t, p.p2.x, p.p2.y
        c1 = tf.trilinear_map(fam, p.w, p.z, x1 - y1)
        c2 = tf.trilinear_map(fam, p.w, p.z, x2 - y2)
        oracle = t1 * (f.evaluate(x1 + y1 + c1) - f.evaluate(x1 + y1 - c1)) - t2 * (
            f.evaluate(x2 + y2 + c2) - f.evaluate(x2 + y2 - c2)
        )
        value = tf.chord_difference_extended(f, fam, p)
        scale = 1.0 + np.max(np.abs(oracle))
        assert np.max(np.abs(value - oracle)) <= 1e-12 * scale


def test_variant_mix_ups_raise(veronese, family):
    fam = family(2)
    rng = np.random.default_rng(28)
    plain = sample_probe_point(rng, fam)
    extended = sample_probe_point(rng, fam, with_w=True)
    with pytest.raises(ValueError):
        tf.chord_difference(veronese, fam, extended)
    with pytest.raises(ValueError):
        tf.chord_difference_extended(veronese, fam, plain)


def test_dimension_mismatch_raises(parabola, family):
    fam = family(2)
    rng = np.random.default_rng(29)
    point = sample_probe_point(rng, fam)
    with pytest.raises(ValueError):
        tf.chord_difference(parabola, fam, point)


def test_chord_shrinks_with_separation(veronese, family):
    # the degenerate region x = y is excluded by the margin; approaching it
    # drives the weighted chord to zero linearly
    fam = family(2)
    rng = np.random.default_rng(30)
    x = rng.uniform(-1, 1, 2)
    direction = rng.standard_normal(2)
    direction /= np.linalg.norm(direction)
    z = np.array([1.0, 0.0])
    norms = [
        np.linalg.norm(
            tf.weighted_chord(veronese, fam, z, ConfigTriple(0.5, x, x + sep * direction))
        )
        for sep in (1e-1, 1e-2, 1e-3)
    ]
    assert norms[0] > norms[1] > norms[2]
    assert norms[2] <= 1e-2


# -- jacobians ------------------------------------------------------------------


def theta_of(point):
    parts = [[point.p1.t], point.p1.x, point.p1.y, [point.p2.t], point.p2.x, point.p2.y, point.z]
    if point.w is not None:
        parts.append(point.w)
    return np.concatenate(parts)


def raw_eval(f, fam, theta, d, rho, q):
    t1 = theta[0]
    x1 = theta[1 : 1 + d]
    y1 = theta[1 + d : 1 + 2 * d]
    t2 = theta[1 + 2 * d]
    x2 = theta[2 + 2 * d : 2 + 3 * d]
    y2 = theta[2 + 3 * d : 2 + 4 * d]
    z = theta[2 + 4 * d : 2 + 4 * d + rho]
    w = theta[2 + 4 * d + rho :] if q else None
    return chord_difference_raw(f, fam, t1, x1, y1, t2, x2, y2, z, w)


@pytest.mark.parametrize("with_w", [False, True])
def test_jacobian_matches_finite_differences(family, veronese, random_polynomial, with_w):
    if with_w:
        fam = family(16)
        f = random_polynomial(41, 16, 6)
        cases = 10
    else:
        fam = family(2)
        f = veronese
        cases = 100
    q = fam.w_dim if with_w else 0
    rng = np.random.default_rng(42)
    for _ in range(cases):
        point = sample_probe_point(rng, fam, with_w=with_w)
        analytic = tf.chord_difference_jacobian(f, fam, point)
        theta = theta_of(point)
        approx = np.zeros_like(analytic)
        for i in range(len(theta)):
            h = 1e-6 * (1.0 + abs(theta[i]))
            tp = theta.copy()
            tp[i] += h
            tm = theta.copy()
            tm[i] -= h
            approx[:, i] = (
                raw_eval(f, fam, tp, fam.d, fam.rho, q)
                - raw_eval(f, fam, tm, fam.d, fam.rho, q)
            ) / (2 * h)
        scale = 1e-8 + np.max(np.abs(analytic))
        assert np.max(np.abs(analytic - approx)) / scale <= 1e-5


def test_jacobian_weight_column_is_first_bracket(veronese, family):
    fam = family(2)
    rng = np.random.default_rng(43)
    point = sample_probe_point(rng, fam)
    jac = tf.chord_difference_jacobian(veronese, fam, point)
    op = displacement_operator(fam, point.z)
    center = point.p1.x + point.p1.y
    shift = op @ (point.p1.x - point.p1.y)
    bracket = veronese.evaluate(center + shift) - veronese.evaluate(center - shift)
    assert np.allclose(jac[:, 0], bracket, atol=1e-12)


def test_jacobian_x_block_for_affine_map(family):
    fam = family(2)
    mat = np.array([[1.0, 2.0], [0.0, -1.0], [3.0, 1.0]])
    f = tf.AffineEmbedding(mat, [0.5, 0.0, 1.0])
    rng = np.random.default_rng(44)
    point = sample_probe_point(rng, fam)
    jac = tf.chord_difference_jacobian(f, fam, point)
    op = displacement_operator(fam, point.z)
    expected = 2.0 * point.p1.t * (mat @ op)
    assert np.allclose(jac[:, 1:3], expected, atol=1e-12)


# -- files ----------------------------------------------------------------------


def test_point_roundtrip(family, tmp_path):
    fam = family(2)
    rng = np.random.default_rng(45)
    for with_w in (False, True):
        src = family(16) if with_w else fam
        point = sample_probe_point(rng, src, with_w=with_w)
        text = dump_point(point)
        back = parse_point(text)
        assert point_payload(back) == point_payload(point)
        assert dump_point(back) == text


def test_point_payload_rejects_unknown_fields():
    with pytest.raises(ValueError):
        point_from_payload({"format_version": 1, "t1": 0.5})
    payload = point_payload(parabola_zero_point())
    payload["bogus"] = 1
    with pytest.raises(ValueError):
        point_from_payload(payload)
    del payload["bogus"]
    payload["format_version"] = 9
    with pytest.raises(ValueError):
        point_from_payload(payload)
