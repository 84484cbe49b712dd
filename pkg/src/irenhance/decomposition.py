"""Base/detail layer decomposition.

The first scale minimises, over the base layer ``B``::

    sum (I - B)^2 + lambda1 * |grad B|_1 + lambda2 * |grad (I - B)|_0

with ADMM, splitting ``u = grad B`` (soft-thresholded) and
``v = grad (I - B)`` (hard-thresholded).  The second scale drops the l0
term and re-decomposes the first base layer.  Gradients are anisotropic
forward differences with no wrap-around; the last column (row) carries no
horizontal (vertical) difference.  With that boundary, ``grad^T grad`` is
the Neumann Laplacian, which a type-II DCT diagonalises, so the B-update is
an exact frequency-domain solve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import fft as sfft

from .imgcore import Domain, Image, require_same_shape

log = logging.getLogger(__name__)

# nonzero test for the l0 count; below this a difference is float round-off
L0_EPS = 1e-12


@dataclass(frozen=True)
class DecompParams:
    lambda1: float = 0.3
    lambda2: float | None = None  # None -> lambda1 * 0.01
    rho: float | None = None  # None -> 2 * lambda1
    max_iters: int = 50
    tol: float = 1e-4
    lambda1_second: float | None = None  # None -> reuse lambda1 at the second scale

    def __post_init__(self):
        if self.lambda1 < 0 or (self.lambda2 is not None and self.lambda2 < 0):
            raise ValueError("lambda1 and lambda2 must be non-negative")
        if self.rho is not None and self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    @property
    def l0_weight(self) -> float:
        return self.lambda1 * 0.01 if self.lambda2 is None else self.lambda2

    @property
    def penalty(self) -> float:
        if self.rho is not None:
            return self.rho
        return 2.0 * self.lambda1 if self.lambda1 > 0 else 1.0

    @property
    def second_scale_lambda(self) -> float:
        return self.lambda1 if self.lambda1_second is None else self.lambda1_second


@dataclass(frozen=True)
class FusionParams:
    alpha: float = 1.2
    beta: float = 0.8


@dataclass(frozen=True)
class LayerSplit:
    """Result of one decomposition call; ``detail`` is ``input - base``."""

    base: Image
    detail: Image
    converged: bool
    iterations: int
    objective: list[float] = field(default_factory=list, repr=False)

    def __iter__(self):
        yield self.base
        yield self.detail


@dataclass(frozen=True)
class LayerStack:
    base: Image
    detail_fine: Image
    detail_coarse: Image
    converged: bool = True

    def reconstruct(self) -> np.ndarray:
        return self.base.data + self.detail_fine.data + self.detail_coarse.data


# ---------------------------------------------------------------------------
# difference operators


def grad(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gx = np.zeros_like(a)
    gy = np.zeros_like(a)
    gx[:, :-1] = a[:, 1:] - a[:, :-1]
    gy[:-1, :] = a[1:, :] - a[:-1, :]
    return gx, gy


def grad_adjoint(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`grad`; entries in the unused last column/row are ignored."""
    out = np.zeros_like(gx)
    px = gx[:, :-1]
    py = gy[:-1, :]
    out[:, :-1] -= px
    out[:, 1:] += px
    out[:-1, :] -= py
    out[1:, :] += py
    return out


def _laplacian_eigs(h: int, w: int) -> np.ndarray:
    ey = 2.0 - 2.0 * np.cos(np.pi * np.arange(h) / h)
    ex = 2.0 - 2.0 * np.cos(np.pi * np.arange(w) / w)
    return ey[:, None] + ex[None, :]


def _screened_poisson(rhs: np.ndarray, diag: float, weight: float, eigs: np.ndarray) -> np.ndarray:
    """Solve ``(diag + weight * grad^T grad) x = rhs``."""
    spec = sfft.dctn(rhs, type=2, norm="ortho")
    spec /= diag + weight * eigs
    return sfft.idctn(spec, type=2, norm="ortho")


def l0_l1_objective(inp: np.ndarray, base: np.ndarray, lambda1: float, lambda2: float) -> float:
    """Value of the l0-l1 cost at ``base``."""
    bx, by = grad(base)
    dx, dy = grad(inp - base)
    data = float(np.sum((inp - base) ** 2))
    l1 = float(np.abs(bx).sum() + np.abs(by).sum())
    l0 = int(np.count_nonzero(np.abs(dx) > L0_EPS) + np.count_nonzero(np.abs(dy) > L0_EPS))
    return data + lambda1 * l1 + lambda2 * l0


def l1_objective(inp: np.ndarray, base: np.ndarray, lambda1: float) -> float:
    return l0_l1_objective(inp, base, lambda1, 0.0)


def _require_unit(img: Image) -> None:
    if img.domain is not Domain.UNIT:
        raise ValueError(f"decomposition expects a UNIT image, got {img.domain.value}")


@numba.njit(cache=True, nogil=True)
def _split_step(bx, by, px, py, qx, qy, ix, iy, ux, uy, vx, vy, ax, ay, t1, t2, use_l0):
    """Shrink the split variables and assemble the B-update target gradient."""
    h, w = bx.shape
    for r in range(h):
        for c in range(w):
            for k in range(2):
                if k == 0:
                    b, p, q, i = bx[r, c], px[r, c], qx[r, c], ix[r, c]
                else:
                    b, p, q, i = by[r, c], py[r, c], qy[r, c], iy[r, c]
                z = b + p
                u = z - t1 if z > t1 else (z + t1 if z < -t1 else 0.0)
                a = u - p
                v = 0.0
                if use_l0:
                    y = i - b + q
                    v = 0.0 if y * y < t2 else y
                    a += i - v + q
                if k == 0:
                    ux[r, c], vx[r, c], ax[r, c] = u, v, a
                else:
                    uy[r, c], vy[r, c], ay[r, c] = u, v, a


@numba.njit(cache=True, nogil=True)
def _rhs(inp, ax, ay, rho):
    h, w = inp.shape
    out = 2.0 * inp
    for r in range(h):
        for c in range(w - 1):
            g = rho * ax[r, c]
            out[r, c] -= g
            out[r, c + 1] += g
    for r in range(h - 1):
        for c in range(w):
            g = rho * ay[r, c]
            out[r, c] -= g
            out[r + 1, c] += g
    return out


@numba.njit(cache=True, nogil=True)
def _dual_step(new, old, bx, by, px, py, qx, qy, ix, iy, ux, uy, vx, vy, use_l0):
    """Refresh grad(new), take the scaled dual step, return ||new - old||^2."""
    h, w = new.shape
    change = 0.0
    for r in range(h):
        for c in range(w):
            d = new[r, c] - old[r, c]
            change += d * d
            gx = new[r, c + 1] - new[r, c] if c + 1 < w else 0.0
            gy = new[r + 1, c] - new[r, c] if r + 1 < h else 0.0
            bx[r, c] = gx
            by[r, c] = gy
            px[r, c] += gx - ux[r, c]
            py[r, c] += gy - uy[r, c]
            if use_l0:
                qx[r, c] += ix[r, c] - gx - vx[r, c]
                qy[r, c] += iy[r, c] - gy - vy[r, c]
    return change


@numba.njit(cache=True, nogil=True)
def _objective_kernel(inp, base, lambda1, lambda2, eps):
    h, w = inp.shape
    data = 0.0
    l1 = 0.0
    l0 = 0
    for r in range(h):
        for c in range(w):
            d = inp[r, c] - base[r, c]
            data += d * d
            if c + 1 < w:
                l1 += abs(base[r, c + 1] - base[r, c])
                if abs((inp[r, c + 1] - base[r, c + 1]) - d) > eps:
                    l0 += 1
            if r + 1 < h:
                l1 += abs(base[r + 1, c] - base[r, c])
                if abs((inp[r + 1, c] - base[r + 1, c]) - d) > eps:
                    l0 += 1
    return data + lambda1 * l1 + lambda2 * l0


def _admm(inp: np.ndarray, lambda1: float, lambda2: float | None, rho: float, max_iters: int, tol: float):
    """Shared ADMM loop.  ``lambda2=None`` drops the l0 split entirely.

    Returns (best base, converged, iterations, objective history).  The
    history starts with the objective at ``base = input``.
    """
    h, w = inp.shape
    eigs = _laplacian_eigs(h, w)
    use_l0 = lambda2 is not None
    lam2 = lambda2 if use_l0 else 0.0
    n_splits = 2 if use_l0 else 1
    t1 = lambda1 / rho
    t2 = 2.0 * lam2 / rho

    base = inp.copy()
    ix, iy = grad(inp)
    bx, by = ix.copy(), iy.copy()
    px, py, qx, qy, ux, uy, vx, vy, ax, ay = (np.zeros_like(inp) for _ in range(10))

    history = [_objective_kernel(inp, base, lambda1, lam2, L0_EPS)]
    best, best_obj = base, history[0]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        _split_step(bx, by, px, py, qx, qy, ix, iy, ux, uy, vx, vy, ax, ay, t1, t2, use_l0)
        new = _screened_poisson(_rhs(inp, ax, ay, rho), 2.0, n_splits * rho, eigs)
        change2 = _dual_step(new, base, bx, by, px, py, qx, qy, ix, iy, ux, uy, vx, vy, use_l0)
        change = np.sqrt(change2) / max(np.linalg.norm(base), 1e-12)
        base = new
        obj = _objective_kernel(inp, base, lambda1, lam2, L0_EPS)
        history.append(obj)
        if obj < best_obj:
            best, best_obj = base, obj
        if change < tol:
            converged = True
            break
    return best, converged, it, history


def _split(inp: Image, best: np.ndarray, converged: bool, iters: int, history) -> LayerSplit:
    detail = inp.data - best
    return LayerSplit(Image(best, Domain.RAW), Image(detail, Domain.RAW), converged, iters, history)


def decompose_l0_l1(inp: Image, params: DecompParams = DecompParams()) -> LayerSplit:
    """Split ``inp`` into base and detail with the hybrid l0-l1 model.

    The returned base is the lowest-cost iterate seen (the input itself
    counts as iterate zero), so the cost never exceeds its starting value.
    ``converged`` is False when ``max_iters`` ran out first.
    """
    _require_unit(inp)
    d = inp.data
    lam1, lam2 = params.lambda1, params.l0_weight
    if (lam1 == 0 and lam2 == 0) or np.ptp(d) == 0:
        return _split(inp, d.copy(), True, 0, [l0_l1_objective(d, d, lam1, lam2)])
    best, ok, it, hist = _admm(d, lam1, lam2, params.penalty, params.max_iters, params.tol)
    if not ok:
        log.debug("l0-l1 ADMM stopped after %d iterations without reaching tol", it)
    return _split(inp, best, ok, it, hist)


def decompose_l1(
    inp: Image,
    lambda1: float = 0.3,
    rho: float | None = None,
    max_iters: int = 50,
    tol: float = 1e-4,
) -> LayerSplit:
    """Anisotropic TV (l1-gradient) decomposition of ``inp``."""
    _require_unit(inp)
    if lambda1 < 0:
        raise ValueError("lambda1 must be non-negative")
    d = inp.data
    if lambda1 == 0 or np.ptp(d) == 0:
        return _split(inp, d.copy(), True, 0, [l1_objective(d, d, lambda1)])
    rho = 2.0 * lambda1 if rho is None else rho
    best, ok, it, hist = _admm(d, lambda1, None, rho, max_iters, tol)
    if not ok:
        log.debug("l1 ADMM stopped after %d iterations without reaching tol", it)
    return _split(inp, best, ok, it, hist)


def compress_stretch(layer: Image, mode: str) -> Image:
    """``compress`` scales a zero-centred layer by 0.8; ``stretch`` re-spans it to [0, 1]."""
    d = layer.data
    if mode == "compress":
        return Image(d * 0.8, layer.domain if layer.domain is Domain.RAW else Domain.RAW)
    if mode == "stretch":
        lo, hi = d.min(), d.max()
        if hi == lo:
            return Image(np.full(d.shape, 0.5), Domain.UNIT)
        return Image(np.clip((d - lo) / (hi - lo), 0.0, 1.0), Domain.UNIT)
    raise ValueError(f"mode must be 'compress' or 'stretch', got {mode!r}")


def dual_scale_decompose(inp: Image, params: DecompParams = DecompParams()) -> LayerStack:
    first = decompose_l0_l1(inp, params)
    # the first base can leave [0, 1] by round-off; the second scale needs a UNIT image
    b = first.base.data
    if b.min() < 0.0 or b.max() > 1.0:
        shift = Image(np.clip(b, 0.0, 1.0), Domain.UNIT)
        second = decompose_l1(shift, params.second_scale_lambda, params.rho, params.max_iters, params.tol)
        coarse = b - second.base.data
    else:
        second = decompose_l1(Image(b, Domain.UNIT), params.second_scale_lambda, params.rho,
                              params.max_iters, params.tol)
        coarse = second.detail.data
    return LayerStack(
        base=second.base,
        detail_fine=first.detail,
        detail_coarse=Image(coarse, Domain.RAW),
        converged=first.converged and second.converged,
    )


def fuse_layers(stack: LayerStack, fp: FusionParams = FusionParams()) -> Image:
    require_same_shape(stack.base, stack.detail_fine, stack.detail_coarse)
    out = (
        fp.alpha * compress_stretch(stack.detail_fine, "compress").data
        + stack.detail_coarse.data
        + fp.beta * compress_stretch(stack.base, "stretch").data
    )
    return Image(np.clip(out, 0.0, 1.0), Domain.UNIT)
