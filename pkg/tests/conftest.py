import numpy as np
import pytest

from hsrecon.tensors import TuckerFactors, tucker_reconstruct


def make_tucker_scene(
    shape=(64, 64, 8), ranks=(6, 6, 3), seed=42
) -> np.ndarray:
    """Random nonnegative-factor Tucker cube rescaled to [0, 1]."""
    rng = np.random.default_rng(seed)
    core = np.abs(rng.standard_normal(ranks))
    factors = tuple(
        np.abs(rng.standard_normal((d, r))) for d, r in zip(shape, ranks)
    )
    f = tucker_reconstruct(TuckerFactors(core, factors))
    return (f - f.min()) / (f.max() - f.min())


def make_smooth_cube(rows=48, cols=48, bands=8, seed=5) -> np.ndarray:
    """Blobby two-endmember cube with smooth spatial structure."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:rows, 0:cols]
    img = np.zeros((rows, cols))
    for _ in range(6):
        cy, cx = rng.uniform(0, rows), rng.uniform(0, cols)
        sig = rng.uniform(4, 10)
        img += rng.uniform(0.2, 1.0) * np.exp(
            -((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sig**2)
        )
    img = (img - img.min()) / (img.max() - img.min())
    spec1 = np.linspace(0.2, 1.0, bands)
    spec2 = np.linspace(1.0, 0.3, bands) * 0.5
    cube = img[:, :, None] * spec1 + (1 - img)[:, :, None] * spec2
    return (cube - cube.min()) / (cube.max() - cube.min())


@pytest.fixture
def rng():
    return np.random.default_rng(0)
