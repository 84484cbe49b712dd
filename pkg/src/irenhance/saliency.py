"""Differential GMR saliency and its fusion with the small-scale GMR base."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .imgcore import Domain, Image, require_same_shape
from .morphology import Connectivity, StructuringElement, gmr, large_se_side, make_square_se


class SaliencyPair(NamedTuple):
    bright: Image
    dark: Image


@dataclass(frozen=True)
class SaliencyFusionParams:
    alpha1: float = 0.0
    alpha2: float = 0.0
    auto: bool = True

    def coefficients(self, base: Image) -> tuple[float, float]:
        if not self.auto:
            return self.alpha1, self.alpha2
        return float(base.data.min()), 1.0 - float(base.data.max())


class DiffGMR(NamedTuple):
    diff: Image
    base: Image


def diff_gmr(
    inp: Image,
    se_small: StructuringElement,
    se_large: StructuringElement,
    conn: Connectivity = Connectivity.EIGHT,
) -> DiffGMR:
    """Small-SE GMR minus large-SE GMR; bright fine structure comes out positive."""
    if inp.domain is not Domain.UNIT:
        raise ValueError("diff_gmr expects a UNIT image")
    base = gmr(inp, se_small, conn)
    coarse = gmr(inp, se_large, conn)
    return DiffGMR(Image(base.data - coarse.data, Domain.RAW), base)


def split_saliency(diff: Image) -> SaliencyPair:
    d = diff.data
    # + 0.0 folds -0.0 into 0.0
    return SaliencyPair(
        Image(np.maximum(d, 0.0) + 0.0, Domain.RAW),
        Image(np.minimum(d, 0.0) + 0.0, Domain.RAW),
    )


class FusedSaliency(NamedTuple):
    image: Image
    clamped_pixels: int


def fuse_saliency_checked(
    base: Image, pair: SaliencyPair, fp: SaliencyFusionParams = SaliencyFusionParams()
) -> FusedSaliency:
    """Like :func:`fuse_saliency`, also reporting how many pixels the clamp moved."""
    require_same_shape(base, pair.bright, pair.dark)
    if base.domain is not Domain.UNIT:
        raise ValueError("fuse_saliency expects a UNIT base image")
    a1, a2 = fp.coefficients(base)
    out = base.data.copy()
    dark, bright = pair.dark.data, pair.bright.data
    dmax = np.abs(dark).max()
    if dmax > 0:
        out += a1 * (dark / dmax)
    bmax = bright.max()
    if bmax > 0:
        out += a2 * (bright / bmax)
    clamped = np.clip(out, 0.0, 1.0)
    moved = int(np.count_nonzero(clamped != out))
    return FusedSaliency(Image(clamped, Domain.UNIT), moved)


def fuse_saliency(base: Image, pair: SaliencyPair, fp: SaliencyFusionParams = SaliencyFusionParams()) -> Image:
    """Add normalised dark and bright saliency to ``base``, then clamp to [0, 1].

    In auto mode the dark weight is ``min(base)`` and the bright weight
    ``1 - max(base)``, which keeps the sum inside [0, 1] without clamping.
    """
    return fuse_saliency_checked(base, pair, fp).image


class SaliencyResult(NamedTuple):
    enhanced: Image
    base: Image
    diff: Image
    pair: SaliencyPair
    clamped_pixels: int


def extract_saliency(
    inp: Image,
    se_small_side: int = 2,
    se_large_ratio: float = 5.0,
    conn: Connectivity = Connectivity.EIGHT,
    fusion: SaliencyFusionParams = SaliencyFusionParams(),
) -> SaliencyResult:
    small = make_square_se(se_small_side)
    n = max(large_se_side(inp.height, inp.width, se_large_ratio), se_small_side + 1)
    large = make_square_se(n)
    diff, base = diff_gmr(inp, small, large, conn)
    pair = split_saliency(diff)
    fused = fuse_saliency_checked(base, pair, fusion)
    return SaliencyResult(fused.image, base, diff, pair, fused.clamped_pixels)


def extract_and_enhance(inp: Image, cfg) -> Image:
    """Saliency stage of the pipeline driven by an ``EnhanceConfig``."""
    return extract_saliency(
        inp, cfg.se_small_side, cfg.se_large_ratio, cfg.conn, cfg.saliency_fusion
    ).enhanced
