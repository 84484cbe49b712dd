"""Flat grayscale morphology and morphological reconstruction.

Conventions
-----------
A structuring element is a set of ``(row, col)`` offsets.  Dilation takes
``max f(x - s)`` and erosion ``min f(x + s)`` over the offsets ``s``, so the
pair is an adjunction and ``dilate(erode(f))`` is a proper opening even for
even-sized (corner-anchored) elements.  Samples that fall outside the image
do not contribute (``-inf`` / ``+inf`` padding).

Reconstruction iterates elementary geodesic steps over a 4- or 8-connected
neighbourhood to stability.  The fast path is the two-raster-scan plus FIFO
hybrid (Vincent 1993) compiled with numba.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numba
import numpy as np
from scipy import ndimage

from .errors import MarkerBelowMask, MarkerExceedsMask
from .imgcore import Image, require_same_shape


class Connectivity(enum.IntEnum):
    FOUR = 4
    EIGHT = 8

    @property
    def offsets(self) -> tuple[tuple[int, int], ...]:
        if self is Connectivity.FOUR:
            return ((-1, 0), (0, -1), (0, 0), (0, 1), (1, 0))
        return tuple((i, j) for i in (-1, 0, 1) for j in (-1, 0, 1))


@dataclass(frozen=True)
class StructuringElement:
    """Flat structuring element given as a set of pixel offsets."""

    offsets: frozenset[tuple[int, int]]
    label: str = "custom"

    def __post_init__(self):
        offs = frozenset((int(r), int(c)) for r, c in self.offsets)
        if not offs:
            raise ValueError("structuring element needs at least one offset")
        object.__setattr__(self, "offsets", offs)

    @classmethod
    def from_offsets(cls, offsets, label: str = "custom") -> StructuringElement:
        offsets = list(offsets)
        if len(set(offsets)) != len(offsets):
            raise ValueError("duplicate offsets in structuring element")
        return cls(frozenset(offsets), label)

    def reflect(self) -> StructuringElement:
        return StructuringElement(frozenset((-r, -c) for r, c in self.offsets), f"reflect({self.label})")

    @property
    def extent(self) -> tuple[int, int]:
        rows = [r for r, _ in self.offsets]
        cols = [c for _, c in self.offsets]
        return max(rows) - min(rows) + 1, max(cols) - min(cols) + 1

    def _rectangle(self) -> tuple[int, int, int, int] | None:
        rows = [r for r, _ in self.offsets]
        cols = [c for _, c in self.offsets]
        r0, r1, c0, c1 = min(rows), max(rows), min(cols), max(cols)
        if len(self.offsets) == (r1 - r0 + 1) * (c1 - c0 + 1):
            return r0, r1, c0, c1
        return None


def make_square_se(n: int) -> StructuringElement:
    """``n x n`` square anchored at its top-left corner."""
    if n < 1:
        raise ValueError(f"square side must be >= 1, got {n}")
    return StructuringElement(frozenset((i, j) for i in range(n) for j in range(n)), f"square{n}")


def make_centered_square_se(n: int) -> StructuringElement:
    """Odd ``n x n`` square with the origin at its centre."""
    if n < 1 or n % 2 == 0:
        raise ValueError(f"centred square needs odd side, got {n}")
    h = n // 2
    return StructuringElement(
        frozenset((i, j) for i in range(-h, h + 1) for j in range(-h, h + 1)), f"csquare{n}"
    )


def large_se_side(height: int, width: int, ratio: float = 5.0, minimum: int = 3) -> int:
    return max(minimum, int(min(height, width) // ratio))


# ---------------------------------------------------------------------------
# dilation / erosion on arrays


def _window_1d(a: np.ndarray, axis: int, lo: int, hi: int, op: str) -> np.ndarray:
    """out[i] = op(a[i - hi .. i - lo]) along ``axis``; out-of-range samples ignored."""
    n = hi - lo + 1
    fill = -np.inf if op == "max" else np.inf
    pad = abs(lo) + abs(hi) + n
    widths = [(0, 0), (0, 0)]
    widths[axis] = (pad, pad)
    padded = np.pad(a, widths, constant_values=fill)
    filt = ndimage.maximum_filter1d if op == "max" else ndimage.minimum_filter1d
    res = filt(padded, size=n, axis=axis, mode="constant", cval=fill)
    # centred window at k covers [k - n//2, k - n//2 + n - 1]; want [i - hi, i - lo]
    start = pad - hi + n // 2
    sl = [slice(None), slice(None)]
    sl[axis] = slice(start, start + a.shape[axis])
    return res[tuple(sl)]


def _shift_reduce(a: np.ndarray, offsets, op: str) -> np.ndarray:
    """out[x] = op over s in offsets of a[x + s]; out-of-range samples ignored."""
    h, w = a.shape
    fill = -np.inf if op == "max" else np.inf
    reduce = np.maximum if op == "max" else np.minimum
    out = np.full_like(a, fill)
    for dr, dc in offsets:
        if abs(dr) >= h or abs(dc) >= w:
            continue
        dst_r = slice(max(0, -dr), h - max(0, dr))
        dst_c = slice(max(0, -dc), w - max(0, dc))
        src_r = slice(max(0, dr), h - max(0, -dr))
        src_c = slice(max(0, dc), w - max(0, -dc))
        reduce(out[dst_r, dst_c], a[src_r, src_c], out=out[dst_r, dst_c])
    return out


def _finish(out: np.ndarray, a: np.ndarray) -> np.ndarray:
    # pixels whose whole footprint lies outside the image keep their value
    bad = ~np.isfinite(out)
    if bad.any():
        out[bad] = a[bad]
    return out


def dilate_array(a: np.ndarray, se: StructuringElement) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    rect = se._rectangle()
    if rect is not None:
        r0, r1, c0, c1 = rect
        out = _window_1d(_window_1d(a, 0, r0, r1, "max"), 1, c0, c1, "max")
    else:
        out = _shift_reduce(a, [(-r, -c) for r, c in se.offsets], "max")
    return _finish(out, a)


def erode_array(a: np.ndarray, se: StructuringElement) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    rect = se._rectangle()
    if rect is not None:
        r0, r1, c0, c1 = rect
        # min a[i + s], s in [r0, r1]  ==  window [i + r0, i + r1]
        out = _window_1d(_window_1d(a, 0, -r1, -r0, "min"), 1, -c1, -c0, "min")
    else:
        out = _shift_reduce(a, se.offsets, "min")
    return _finish(out, a)


def dilate(f: Image, b: StructuringElement) -> Image:
    return f.with_data(dilate_array(f.data, b))


def erode(f: Image, b: StructuringElement) -> Image:
    return f.with_data(erode_array(f.data, b))


# ---------------------------------------------------------------------------
# geodesic steps


def _check_pair(marker: Image, mask: Image, below: bool) -> None:
    require_same_shape(marker, mask)
    if below and np.any(marker.data > mask.data):
        raise MarkerExceedsMask("marker must lie below the mask everywhere")
    if not below and np.any(marker.data < mask.data):
        raise MarkerBelowMask("marker must lie above the mask everywhere")


def geodesic_dilate_unit(f: Image, g: Image, conn: Connectivity = Connectivity.EIGHT) -> Image:
    """One elementary geodesic dilation: ``min(dilate(f), g)``."""
    _check_pair(f, g, below=True)
    return f.with_data(np.minimum(_shift_reduce(f.data, conn.offsets, "max"), g.data))


def geodesic_erode_unit(f: Image, g: Image, conn: Connectivity = Connectivity.EIGHT) -> Image:
    """One elementary geodesic erosion: ``max(erode(f), g)``."""
    _check_pair(f, g, below=False)
    return f.with_data(np.maximum(_shift_reduce(f.data, conn.offsets, "min"), g.data))


# ---------------------------------------------------------------------------
# hybrid reconstruction


def _neighbour_table(conn: Connectivity) -> np.ndarray:
    return np.array([o for o in conn.offsets if o != (0, 0)], dtype=np.int64)


@numba.njit(cache=True, nogil=True)
def _hybrid_dilate(marker, mask, nbrs):
    h, w = marker.shape
    out = np.minimum(marker, mask)
    k = nbrs.shape[0]

    # forward raster scan over already-visited neighbours
    for r in range(h):
        for c in range(w):
            v = out[r, c]
            for t in range(k):
                rr = r + nbrs[t, 0]
                cc = c + nbrs[t, 1]
                if rr < r or (rr == r and cc < c):
                    if 0 <= rr < h and 0 <= cc < w and out[rr, cc] > v:
                        v = out[rr, cc]
            m = mask[r, c]
            out[r, c] = v if v < m else m

    cap = max(16, h * w)
    queue = np.empty(cap, dtype=np.int64)
    head = 0
    size = 0

    # backward scan; seed queue with pixels that can still raise a neighbour
    for r in range(h - 1, -1, -1):
        for c in range(w - 1, -1, -1):
            v = out[r, c]
            for t in range(k):
                rr = r + nbrs[t, 0]
                cc = c + nbrs[t, 1]
                if rr > r or (rr == r and cc > c):
                    if 0 <= rr < h and 0 <= cc < w and out[rr, cc] > v:
                        v = out[rr, cc]
            m = mask[r, c]
            v = v if v < m else m
            out[r, c] = v
            for t in range(k):
                rr = r + nbrs[t, 0]
                cc = c + nbrs[t, 1]
                if rr > r or (rr == r and cc > c):
                    if 0 <= rr < h and 0 <= cc < w:
                        if out[rr, cc] < v and out[rr, cc] < mask[rr, cc]:
                            if size == cap:
                                queue = _grow(queue, head, size)
                                cap = queue.shape[0]
                                head = 0
                            queue[(head + size) % cap] = r * w + c
                            size += 1
                            break

    while size > 0:
        p = queue[head]
        head = (head + 1) % cap
        size -= 1
        r = p // w
        c = p - r * w
        v = out[r, c]
        for t in range(k):
            rr = r + nbrs[t, 0]
            cc = c + nbrs[t, 1]
            if 0 <= rr < h and 0 <= cc < w:
                q = out[rr, cc]
                m = mask[rr, cc]
                if q < v and q != m:
                    out[rr, cc] = v if v < m else m
                    if size == cap:
                        queue = _grow(queue, head, size)
                        cap = queue.shape[0]
                        head = 0
                    queue[(head + size) % cap] = rr * w + cc
                    size += 1
    return out


@numba.njit(cache=True, nogil=True)
def _grow(queue, head, size):
    cap = queue.shape[0]
    bigger = np.empty(cap * 2, dtype=np.int64)
    for i in range(size):
        bigger[i] = queue[(head + i) % cap]
    return bigger


def reconstruct_by_dilation(marker: Image, mask: Image, conn: Connectivity = Connectivity.EIGHT) -> Image:
    """Reconstruction by dilation of ``marker`` under ``mask``."""
    _check_pair(marker, mask, below=True)
    out = _hybrid_dilate(
        np.ascontiguousarray(marker.data), np.ascontiguousarray(mask.data), _neighbour_table(conn)
    )
    return mask.with_data(out)


def reconstruct_by_erosion(marker: Image, mask: Image, conn: Connectivity = Connectivity.EIGHT) -> Image:
    """Reconstruction by erosion of ``marker`` above ``mask`` (dual of dilation)."""
    _check_pair(marker, mask, below=False)
    out = _hybrid_dilate(
        np.ascontiguousarray(-marker.data), np.ascontiguousarray(-mask.data), _neighbour_table(conn)
    )
    return mask.with_data(-out + 0.0)


def gmr(t: Image, b: StructuringElement, conn: Connectivity = Connectivity.EIGHT) -> Image:
    """Opening by reconstruction followed by closing by reconstruction.

    Removes bright, then dark, connected structures that the element ``b``
    does not fit into, while keeping the contours of everything else.
    """
    # min/max keep the marker on the right side of the mask for SEs without the origin
    s = reconstruct_by_dilation(t.with_data(np.minimum(erode_array(t.data, b), t.data)), t, conn)
    return reconstruct_by_erosion(s.with_data(np.maximum(dilate_array(s.data, b), s.data)), s, conn)
