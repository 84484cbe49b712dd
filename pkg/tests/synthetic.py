"""Synthetic low-contrast infrared-like frames used as test fixtures."""

import numpy as np

from irenhance.imgcore import Domain, Image


def _ellipse(yy, xx, cy, cx, ry, rx):
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def ir_scene(seed: int, height: int = 128, width: int = 160) -> Image:
    """A 16-bit-style RAW frame: warm pedestrians and car, a cold bicycle, noise.

    Values occupy a narrow band of the 16-bit range, as uncalibrated
    thermal cores typically do.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(float)
    v = 0.35 + 0.12 * yy / height
    for _ in range(3):
        fy, fx, ph = rng.uniform(0.01, 0.06), rng.uniform(0.01, 0.06), rng.uniform(0, 2 * np.pi)
        v += 0.015 * np.sin(fy * yy + fx * xx + ph)

    for _ in range(rng.integers(2, 4)):
        cy, cx = rng.uniform(0.3, 0.8) * height, rng.uniform(0.1, 0.9) * width
        v[_ellipse(yy, xx, cy, cx, height * 0.08, width * 0.025)] += rng.uniform(0.12, 0.2)

    cy, cx = rng.uniform(0.6, 0.8) * height, rng.uniform(0.2, 0.8) * width
    car = (abs(yy - cy) < height * 0.06) & (abs(xx - cx) < width * 0.1)
    v[car] += 0.08

    # bicycle: two thin cold rings, barely darker than the road
    by, bx = rng.uniform(0.55, 0.85) * height, rng.uniform(0.2, 0.8) * width
    r = height * 0.05
    for ox in (-1.2 * r, 1.2 * r):
        d = np.hypot(yy - by, xx - (bx + ox))
        v[np.abs(d - r) < 1.0] -= 0.05

    v += rng.normal(0.0, 0.004, v.shape)
    samples = np.rint(7000 + np.clip(v, 0, 1) * 3000)
    return Image(samples, Domain.RAW)


def fixture_set(n: int = 4, height: int = 128, width: int = 160) -> list[Image]:
    return [ir_scene(seed, height, width) for seed in range(n)]


def block_fixture(bright: bool = True, size: int = 15, block: int = 3) -> Image:
    """Flat UNIT frame with one centred square block (value 1 on 0, or 0 on 1)."""
    bg, fg = (0.0, 1.0) if bright else (1.0, 0.0)
    a = np.full((size, size), bg)
    lo = (size - block) // 2
    a[lo : lo + block, lo : lo + block] = fg
    return Image(a, Domain.UNIT)
