"""Image quality metrics: EN, SF, AG, SD and pixel-domain VIF.

All metrics are evaluated on the 0..255 scale, whatever the domain of the
input, so UNIT and BYTE255 views of one image score the same.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import fftconvolve

from .imgcore import Domain, Image, require_same_shape


def _byte_scale(img: Image) -> np.ndarray:
    if img.domain is Domain.BYTE255:
        return img.data
    if img.domain is Domain.UNIT:
        return img.data * 255.0
    raise ValueError("metrics need a UNIT or BYTE255 image")


def entropy(img: Image) -> float:
    """Shannon entropy (bits) of the 256-bin intensity histogram."""
    levels = np.clip(np.rint(_byte_scale(img)), 0, 255).astype(np.int64)
    counts = np.bincount(levels.ravel(), minlength=256)
    p = counts[counts > 0] / levels.size
    return float(-(p * np.log2(p)).sum()) + 0.0


def row_col_frequency(img: Image) -> tuple[float, float]:
    """RMS of horizontal (row) and vertical (column) first differences."""
    a = _byte_scale(img)
    dx = np.diff(a, axis=1)
    dy = np.diff(a, axis=0)
    rf = math.sqrt(float(np.mean(dx * dx))) if dx.size else 0.0
    cf = math.sqrt(float(np.mean(dy * dy))) if dy.size else 0.0
    return rf, cf


def spatial_frequency(img: Image) -> float:
    rf, cf = row_col_frequency(img)
    return math.hypot(rf, cf)


def average_gradient(img: Image) -> float:
    a = _byte_scale(img)
    if a.shape[0] < 2 or a.shape[1] < 2:
        return 0.0
    dx = a[:-1, 1:] - a[:-1, :-1]
    dy = a[1:, :-1] - a[:-1, :-1]
    return float(np.mean(np.sqrt((dx * dx + dy * dy) / 2.0)))


def std_dev(img: Image) -> float:
    return float(np.std(_byte_scale(img)))


def _gaussian_window(n: int, sigma: float) -> np.ndarray:
    r = np.arange(n) - (n - 1) / 2.0
    g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * sigma * sigma))
    return g / g.sum()


def vif(reference: Image, distorted: Image, sigma_nsq: float = 2.0) -> float:
    """Pixel-domain visual information fidelity over four Gaussian scales.

    Returns NaN when the reference carries no information at any scale
    (e.g. a constant frame), since the ratio is undefined there.
    """
    require_same_shape(reference, distorted)
    ref = _byte_scale(reference)
    dist = _byte_scale(distorted)
    eps = 1e-10
    num = den = 0.0
    for scale in range(1, 5):
        n = 2 ** (4 - scale + 1) + 1
        win = _gaussian_window(n, n / 5.0)
        if scale > 1:
            if min(ref.shape) < n:
                break
            ref = fftconvolve(ref, win, mode="valid")[::2, ::2]
            dist = fftconvolve(dist, win, mode="valid")[::2, ::2]
        if min(ref.shape) < n:
            break
        mu1 = fftconvolve(ref, win, mode="valid")
        mu2 = fftconvolve(dist, win, mode="valid")
        s1 = np.maximum(fftconvolve(ref * ref, win, mode="valid") - mu1 * mu1, 0.0)
        s2 = np.maximum(fftconvolve(dist * dist, win, mode="valid") - mu2 * mu2, 0.0)
        s12 = fftconvolve(ref * dist, win, mode="valid") - mu1 * mu2

        g = s12 / (s1 + eps)
        sv = s2 - g * s12
        flat1 = s1 < eps
        g[flat1] = 0.0
        sv[flat1] = s2[flat1]
        s1 = np.where(flat1, 0.0, s1)
        flat2 = s2 < eps
        g[flat2] = 0.0
        sv[flat2] = 0.0
        neg = g < 0
        sv[neg] = s2[neg]
        g[neg] = 0.0
        sv = np.maximum(sv, eps)

        num += float(np.sum(np.log10(1.0 + g * g * s1 / (sv + sigma_nsq))))
        den += float(np.sum(np.log10(1.0 + s1 / sigma_nsq)))
    if den <= 0.0:
        return float("nan")
    return num / den


@dataclass(frozen=True)
class MetricsReport:
    en: float
    sf: float
    ag: float
    sd: float
    vif: float | None = None

    FIELDS = ("en", "sf", "ag", "sd", "vif")

    def as_dict(self) -> dict:
        d = asdict(self)
        if d["vif"] is not None and math.isnan(d["vif"]):
            d["vif"] = None
        return d

    def to_text(self) -> str:
        lines = []
        for key in self.FIELDS:
            value = getattr(self, key)
            if value is None:
                continue
            lines.append(f"{key} = {value:.6f}")
        return "\n".join(lines) + "\n"


def evaluate(img: Image, reference: Image | None = None) -> MetricsReport:
    return MetricsReport(
        en=entropy(img),
        sf=spatial_frequency(img),
        ag=average_gradient(img),
        sd=std_dev(img),
        vif=None if reference is None else vif(reference, img),
    )
