import numpy as np
import pytest

import trapfind as tf


@pytest.fixture(scope="session")
def family():
    """Memoized family builder; construction is deterministic, so sharing
    across tests is safe."""
    cache = {}

    def get(d: int) -> tf.HRFamily:
        if d not in cache:
            cache[d] = tf.build_family(d)
        return cache[d]

    return get


@pytest.fixture(scope="session")
def parabola():
    # f(t) = (t, t^2), the smallest interesting search target
    return tf.PolynomialEmbedding(1, 2, [[[[1], 1.0]], [[[2], 1.0]]])


@pytest.fixture(scope="session")
def cubic():
    # f(t) = (t, t^3)
    return tf.PolynomialEmbedding(1, 2, [[[[1], 1.0]], [[[3], 1.0]]])


@pytest.fixture(scope="session")
def veronese():
    # f(x, y) = (x, y, x^2, xy, y^2) into R^5 = 2*2 + rho(2) - 1
    return tf.PolynomialEmbedding(
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


@pytest.fixture(scope="session")
def random_polynomial():
    """Factory for sparse random polynomial embeddings (degree <= 2)."""

    def make(seed: int, d: int, n: int, terms_per_coord: int = 3) -> tf.PolynomialEmbedding:
        rng = np.random.default_rng(seed)
        table = []
        for _ in range(n):
            coord = []
            for _ in range(terms_per_coord):
                exps = [0] * d
                exps[rng.integers(d)] += 1
                exps[rng.integers(d)] += 1
                coord.append([exps, float(rng.normal())])
            table.append(coord)
        return tf.PolynomialEmbedding(d, n, table)

    return make
