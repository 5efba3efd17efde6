import numpy as np
from hypothesis import HealthCheck, settings

from narrownet.affine import MaxAffineFn, max_affine_cube_min
from narrownet.dc import DCFn
from narrownet.deepen import ShallowNet

PROPERTY = settings(
    max_examples=1000,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)


def random_max_affine(rng, d, n, nonneg=True):
    """Coefficients uniform in [-1, 1]; optionally shifted so the cube minimum is >= 0."""
    f = MaxAffineFn(rng.uniform(-1, 1, (n, d)), rng.uniform(-1, 1, n))
    if nonneg:
        f = f.shifted(-max_affine_cube_min(f))
    return f


def random_dc(rng, d, n, m):
    return DCFn(random_max_affine(rng, d, n, False), random_max_affine(rng, d, m, False))


def random_shallow(rng, d, n):
    hidden = MaxAffineFn(rng.normal(size=(n, d)), rng.normal(size=n))
    return ShallowNet(hidden, rng.normal(size=n), rng.normal())


def cube_points(rng, d, count=10_000):
    return rng.random((count, d))
