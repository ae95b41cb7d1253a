import numpy as np
import pytest

from synthanom.rng import RngStream


def make_phantom(shape, seed, background=-1.0):
    """Smooth positive blob on a negative background, z-score flavoured."""
    gen = RngStream(seed, 999).generator()
    coords = np.stack(np.meshgrid(*[np.arange(n, dtype=float) for n in shape], indexing="ij"))
    center = np.array([n / 2 for n in shape]).reshape(-1, *([1] * len(shape)))
    radius = min(shape) * 0.38
    dist = np.sqrt(((coords - center) ** 2).sum(axis=0))
    body = np.clip(1.0 - dist / radius, 0.0, 1.0)
    texture = gen.normal(scale=0.15, size=shape)
    return np.where(body > 0, 0.4 + body + texture, background)


@pytest.fixture
def rng():
    return RngStream(20240817)
