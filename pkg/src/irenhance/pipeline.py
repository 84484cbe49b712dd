"""End-to-end enhancement and its configuration.

Dataflow: normalise to [0, 1] -> dual-scale decomposition -> layer fusion
-> differential-GMR saliency on the fused image -> metrics against the
normalised input.

Config files are flat ``key = value`` documents; ``#`` starts a comment.
Recognised keys::

    lambda1, lambda2, lambda1_second, rho, max_iters, tol,
    alpha, beta, se_small, se_large_ratio, connectivity,
    alpha1, alpha2, auto_coeffs, dump_intermediates

Unset keys keep their defaults; ``lambda2`` follows ``lambda1 * 0.01``
unless given, and giving ``alpha1``/``alpha2`` turns ``auto_coeffs`` off
unless it is set explicitly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .decomposition import (
    DecompParams,
    FusionParams,
    LayerStack,
    dual_scale_decompose,
    fuse_layers,
)
from .errors import InvalidValue, ParseError, UnknownKey
from .imgcore import Domain, Image, normalize
from .metrics import MetricsReport
from .morphology import Connectivity, large_se_side
from .saliency import SaliencyFusionParams, SaliencyPair, extract_saliency


@dataclass(frozen=True)
class EnhanceConfig:
    decomp: DecompParams = field(default_factory=DecompParams)
    fusion: FusionParams = field(default_factory=FusionParams)
    se_small_side: int = 2
    se_large_ratio: float = 5.0
    conn: Connectivity = Connectivity.EIGHT
    saliency_fusion: SaliencyFusionParams = field(default_factory=SaliencyFusionParams)
    dump_intermediates: bool = False

    def __post_init__(self):
        if self.se_small_side < 1:
            raise InvalidValue("se_small must be a positive integer")
        if not self.se_large_ratio > 0:
            raise InvalidValue("se_large_ratio must be positive")

    def large_se_side(self, height: int, width: int) -> int:
        """Side of the large square element; never below 3 or below se_small + 1."""
        return max(large_se_side(height, width, self.se_large_ratio), self.se_small_side + 1)

    def as_dict(self) -> dict:
        d, f, s = self.decomp, self.fusion, self.saliency_fusion
        return {
            "lambda1": d.lambda1,
            "lambda2": d.l0_weight,
            "lambda1_second": d.second_scale_lambda,
            "rho": d.penalty,
            "max_iters": d.max_iters,
            "tol": d.tol,
            "alpha": f.alpha,
            "beta": f.beta,
            "se_small": self.se_small_side,
            "se_large_ratio": self.se_large_ratio,
            "connectivity": int(self.conn),
            "alpha1": s.alpha1,
            "alpha2": s.alpha2,
            "auto_coeffs": s.auto,
            "dump_intermediates": self.dump_intermediates,
        }

    def to_text(self) -> str:
        lines = []
        for key, value in self.as_dict().items():
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def _as_float(key, raw):
    try:
        v = float(raw)
    except ValueError:
        raise InvalidValue(f"{key}: expected a number, got {raw!r}") from None
    if not np.isfinite(v):
        raise InvalidValue(f"{key}: value must be finite")
    return v


def _as_int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise InvalidValue(f"{key}: expected an integer, got {raw!r}") from None


def _as_bool(key, raw):
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise InvalidValue(f"{key}: expected a boolean, got {raw!r}")


def _as_conn(key, raw):
    v = _as_int(key, raw)
    if v not in (4, 8):
        raise InvalidValue(f"{key}: must be 4 or 8, got {v}")
    return Connectivity(v)


_SCHEMA = {
    "lambda1": _as_float,
    "lambda2": _as_float,
    "lambda1_second": _as_float,
    "rho": _as_float,
    "max_iters": _as_int,
    "tol": _as_float,
    "alpha": _as_float,
    "beta": _as_float,
    "se_small": _as_int,
    "se_large_ratio": _as_float,
    "connectivity": _as_conn,
    "alpha1": _as_float,
    "alpha2": _as_float,
    "auto_coeffs": _as_bool,
    "dump_intermediates": _as_bool,
}


def parse_config(text: str) -> EnhanceConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA:
            raise UnknownKey(key, lineno)
        if not raw:
            raise ParseError(f"line {lineno}: missing value for {key!r}")
        values[key] = _SCHEMA[key](key, raw)
    return config_from_values(values)


def config_from_values(values: dict) -> EnhanceConfig:
    unknown = set(values) - set(_SCHEMA)
    if unknown:
        raise UnknownKey(sorted(unknown)[0])
    try:
        decomp = DecompParams(
            lambda1=values.get("lambda1", 0.3),
            lambda2=values.get("lambda2"),
            rho=values.get("rho"),
            max_iters=values.get("max_iters", 50),
            tol=values.get("tol", 1e-4),
            lambda1_second=values.get("lambda1_second"),
        )
    except ValueError as exc:
        raise InvalidValue(str(exc)) from None
    manual = "alpha1" in values or "alpha2" in values
    sal = SaliencyFusionParams(
        alpha1=values.get("alpha1", 0.0),
        alpha2=values.get("alpha2", 0.0),
        auto=values.get("auto_coeffs", not manual),
    )
    return EnhanceConfig(
        decomp=decomp,
        fusion=FusionParams(values.get("alpha", 1.2), values.get("beta", 0.8)),
        se_small_side=values.get("se_small", 2),
        se_large_ratio=values.get("se_large_ratio", 5.0),
        conn=values.get("connectivity", Connectivity.EIGHT),
        saliency_fusion=sal,
        dump_intermediates=values.get("dump_intermediates", False),
    )


def load_config(path: str | os.PathLike) -> EnhanceConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return parse_config(text)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnhanceResult:
    enhanced: Image
    normalized: Image
    layers: LayerStack | None
    fused: Image | None
    saliency: SaliencyPair | None
    saliency_diff: Image | None
    report: MetricsReport
    warnings: list[str] = field(default_factory=list)


MODES = ("full", "decomposition", "saliency")


def enhance(inp: Image, cfg: EnhanceConfig = EnhanceConfig(), mode: str = "full") -> EnhanceResult:
    """Run the enhancement chain on one frame.

    ``mode`` selects the ablation variant: ``"decomposition"`` stops after
    layer fusion, ``"saliency"`` skips the decomposition and runs the
    saliency stage on the normalised input.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    notes: list[str] = []
    if np.ptp(inp.data) == 0:
        notes.append("constant frame")
    norm = normalize(inp, Domain.UNIT)

    stack = fused = None
    current = norm
    if mode in ("full", "decomposition"):
        stack = dual_scale_decompose(norm, cfg.decomp)
        if not stack.converged:
            notes.append("decomposition: ADMM hit max_iters before reaching tol")
        fused = fuse_layers(stack, cfg.fusion)
        current = fused

    pair = diff = None
    if mode in ("full", "saliency"):
        sal = extract_saliency(
            current, cfg.se_small_side, cfg.se_large_ratio, cfg.conn, cfg.saliency_fusion
        )
        pair, diff = sal.pair, sal.diff
        if not pair.bright.data.any() and not pair.dark.data.any():
            notes.append("zero saliency")
        if sal.clamped_pixels:
            notes.append(f"saliency fusion clamped {sal.clamped_pixels} pixels")
        current = sal.enhanced

    report = metrics.evaluate(current, reference=norm)
    return EnhanceResult(current, norm, stack, fused, pair, diff, report, notes)

