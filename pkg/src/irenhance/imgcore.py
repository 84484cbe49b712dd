"""Image container, value domains, statistics and file I/O.

Every processing stage exchanges :class:`Image` objects: an immutable 2-D
float64 grid tagged with the value domain it lives in.  Processing happens
in the ``UNIT`` domain; ``BYTE255`` is used by the metrics, and ``RAW`` holds
either freshly loaded sample values or signed intermediate layers.
"""

from __future__ import annotations

import enum
import io
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import cv2
import numpy as np

from .errors import (
    CorruptFile,
    InvalidImage,
    IoFailure,
    MultiChannelInput,
    ShapeMismatch,
    UnsupportedFormat,
)


class Domain(enum.Enum):
    UNIT = "unit"
    BYTE255 = "byte255"
    RAW = "raw"

    @property
    def top(self) -> float | None:
        return {Domain.UNIT: 1.0, Domain.BYTE255: 255.0}.get(self)


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable single-channel image.

    ``data`` is copied to a read-only float64 array on construction, so an
    ``Image`` can be shared between threads freely.
    """

    data: np.ndarray
    domain: Domain = Domain.RAW

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.size == 0:
            raise InvalidImage(f"expected a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidImage("image contains NaN or infinite values")
        top = self.domain.top
        if top is not None and (arr.min() < 0.0 or arr.max() > top):
            raise InvalidImage(
                f"values [{arr.min()}, {arr.max()}] outside the {self.domain.value} range [0, {top}]"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def with_data(self, data: np.ndarray, domain: Domain | None = None) -> Image:
        return Image(data, self.domain if domain is None else domain)

    def __repr__(self) -> str:
        return f"Image({self.height}x{self.width}, domain={self.domain.value})"


class ImageStats(NamedTuple):
    min: float
    max: float
    mean: float
    std_dev: float


def require_same_shape(*images: Image) -> None:
    shapes = {img.shape for img in images}
    if len(shapes) > 1:
        raise ShapeMismatch(f"image shapes differ: {sorted(shapes)}")


def stats(img: Image) -> ImageStats:
    d = img.data
    lo, hi = float(d.min()), float(d.max())
    # clamp guards the min <= mean <= max invariant against summation round-off
    mean = min(max(float(d.mean()), lo), hi)
    return ImageStats(lo, hi, mean, float(d.std()))


def normalize(img: Image, target: Domain = Domain.UNIT) -> Image:
    """Affinely map ``[min, max]`` of ``img`` onto the range of ``target``.

    Constant images map to the midpoint of the target range.
    """
    top = target.top
    if top is None:
        raise ValueError("normalize target must be UNIT or BYTE255")
    d = img.data
    lo, hi = d.min(), d.max()
    if hi == lo:
        return Image(np.full(d.shape, top / 2.0), target)
    out = (d - lo) / (hi - lo) * top
    np.clip(out, 0.0, top, out=out)
    return Image(out, target)


def to_unit(img: Image) -> Image:
    """Rescale a UNIT or BYTE255 image to UNIT without re-spanning its range."""
    if img.domain is Domain.UNIT:
        return img
    if img.domain is Domain.BYTE255:
        return Image(img.data / 255.0, Domain.UNIT)
    raise ValueError("to_unit needs a UNIT or BYTE255 image; use normalize() for RAW data")


def to_byte255(img: Image) -> Image:
    if img.domain is Domain.BYTE255:
        return img
    if img.domain is Domain.UNIT:
        return Image(np.clip(img.data * 255.0, 0.0, 255.0), Domain.BYTE255)
    raise ValueError("to_byte255 needs a UNIT or BYTE255 image")


def samples_to_unit(img: Image, depth: int) -> Image:
    """Interpret RAW integer samples of the given bit depth as UNIT values."""
    return Image(img.data / float((1 << depth) - 1), Domain.UNIT)


# ---------------------------------------------------------------------------
# File I/O

_PGM_EXT = {".pgm"}
_CV_EXT = {".png", ".tif", ".tiff"}
_PNM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_pgm(raw: bytes, path: Path) -> tuple[np.ndarray, int]:
    magic = raw[:2]
    if magic in (b"P3", b"P6"):
        raise MultiChannelInput(f"{path}: colour PPM data is not supported")
    if magic not in (b"P2", b"P5"):
        raise CorruptFile(f"{path}: not a PGM file (magic {magic!r})")
    pos = 2
    header = []
    for _ in range(3):
        m = _PNM_TOKEN.match(raw, pos)
        if m is None:
            raise CorruptFile(f"{path}: truncated PGM header")
        header.append(m.group(1))
        pos = m.end()
    try:
        width, height, maxval = (int(t) for t in header)
    except ValueError:
        raise CorruptFile(f"{path}: malformed PGM header") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise CorruptFile(f"{path}: invalid PGM dimensions or maxval")
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        body = raw[pos : pos + count * dtype.itemsize]
        if len(body) < count * dtype.itemsize:
            raise CorruptFile(f"{path}: truncated PGM raster")
        samples = np.frombuffer(body, dtype=dtype)
    else:
        tokens = raw[pos:].split()
        if len(tokens) < count:
            raise CorruptFile(f"{path}: truncated PGM raster")
        try:
            samples = np.array([int(t) for t in tokens[:count]], dtype=np.int64)
        except ValueError:
            raise CorruptFile(f"{path}: non-numeric PGM sample") from None
    if samples.max(initial=0) > maxval:
        raise CorruptFile(f"{path}: sample exceeds maxval {maxval}")
    depth = 16 if maxval > 255 else 8
    return samples.reshape(height, width), depth


def _write_pgm(samples: np.ndarray, depth: int, fh) -> None:
    h, w = samples.shape
    maxval = (1 << depth) - 1
    fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
    dtype = ">u2" if depth == 16 else "u1"
    fh.write(samples.astype(dtype).tobytes())


class LoadedImage(NamedTuple):
    image: Image
    depth: int


def load_image_with_depth(path: str | os.PathLike) -> LoadedImage:
    """Load a single-channel image and report its sample bit depth."""
    path = Path(path)
    ext = path.suffix.lower()
    if ext not in _PGM_EXT | _CV_EXT:
        raise UnsupportedFormat(f"{path}: unsupported extension {ext!r}")
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc

    if ext in _PGM_EXT:
        samples, depth = _read_pgm(raw, path)
    else:
        buf = np.frombuffer(raw, dtype=np.uint8)
        samples = cv2.imdecode(buf, cv2.IMREAD_UNCHANGED) if buf.size else None
        if samples is None:
            raise CorruptFile(f"{path}: could not decode image data")
        if samples.ndim != 2:
            raise MultiChannelInput(f"{path}: expected one channel, found {samples.shape[2]}")
        if samples.dtype == np.uint8:
            depth = 8
        elif samples.dtype == np.uint16:
            depth = 16
        else:
            raise UnsupportedFormat(f"{path}: unsupported sample type {samples.dtype}")
    return LoadedImage(Image(samples.astype(np.float64), Domain.RAW), depth)


def load_image(path: str | os.PathLike) -> Image:
    return load_image_with_depth(path).image


def quantize(img: Image, depth: int) -> np.ndarray:
    """Scale a UNIT/BYTE255 image to integer samples, rounding half-to-even."""
    if depth not in (8, 16):
        raise ValueError(f"depth must be 8 or 16, got {depth}")
    top = img.domain.top
    if top is None:
        raise ValueError("only UNIT or BYTE255 images can be quantized")
    maxcode = (1 << depth) - 1
    scaled = img.data if top == maxcode else img.data * (maxcode / top)
    return np.clip(np.rint(scaled), 0, maxcode).astype(np.uint16 if depth == 16 else np.uint8)


def save_image(img: Image, path: str | os.PathLike, depth: int = 8) -> None:
    """Write ``img`` atomically (temp file in the target directory, then rename)."""
    path = Path(path)
    ext = path.suffix.lower()
    if ext not in _PGM_EXT | _CV_EXT:
        raise UnsupportedFormat(f"{path}: unsupported extension {ext!r}")
    samples = quantize(img, depth)

    if ext in _PGM_EXT:
        bio = io.BytesIO()
        _write_pgm(samples, depth, bio)
        payload = bio.getvalue()
    else:
        ok, enc = cv2.imencode(ext, samples)
        if not ok:
            raise IoFailure(f"{path}: encoder failed")
        payload = enc.tobytes()

    directory = path.parent if str(path.parent) else Path(".")
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.stem}.", suffix=".part")
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise IoFailure(f"{path}: {exc}") from exc
