"""Pixel-shift scanning and total-variation super-resolution.

A sensor whose pixels are ``k x k`` target pixels, shifted through every
one of the ``k * k`` sub-pixel offsets, records window sums of the target.
Interleaving the frames gives the valid 2D box convolution
(:func:`interleave_frames`).  :func:`tv_reconstruct` inverts it by
minimizing ``||A x - y||_2^2 + lam * ||grad x||_1`` with anisotropic TV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .boxconv import adjoint_apply2d, apply2d, as_image
from .exceptions import DimensionError, NumericalError

__all__ = [
    "ScanConfig",
    "TvConfig",
    "TvResult",
    "GradientField",
    "simulate_scan",
    "scan_frames",
    "interleave_frames",
    "gradient",
    "divergence",
    "tv_objective",
    "tv_reconstruct",
    "psnr",
    "piecewise_constant_target",
]


@dataclass(frozen=True)
class ScanConfig:
    k: int
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise DimensionError("k must be >= 1")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be non-negative")


@dataclass(frozen=True)
class TvConfig:
    """Settings for :func:`tv_reconstruct`.

    ``tol`` bounds the relative change of the iterate between consecutive
    iterations, tested every ``check_every`` iterations.

    Step sizes: the data dual uses ``sigma_data`` (default ``1 / k**2``),
    the TV dual ``sigma_tv`` (default ``0.5 * max(1, sqrt(lam))``) and the
    primal step is ``0.99 / (sigma_data * k**4 + 8 * sigma_tv)``, which is
    admissible because ``||A|| <= k**2`` and ``||grad||**2 <= 8``.
    """

    lam: float = 1e-2
    max_iters: int = 5000
    tol: float = 1e-7
    check_every: int = 10
    theta: float = 1.0
    sigma_data: Optional[float] = None
    sigma_tv: Optional[float] = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1 or self.check_every < 1:
            raise ValueError("max_iters and check_every must be positive")


@dataclass
class GradientField:
    """Forward differences: ``dx`` along rows ((h-1) x w), ``dy`` along columns (h x (w-1))."""

    dx: np.ndarray
    dy: np.ndarray

    def __add__(self, other):
        return GradientField(self.dx + other.dx, self.dy + other.dy)

    def __mul__(self, scalar):
        return GradientField(self.dx * scalar, self.dy * scalar)

    __rmul__ = __mul__

    def dot(self, other) -> float:
        return float(np.vdot(self.dx, other.dx) + np.vdot(self.dy, other.dy))

    def l1(self) -> float:
        return float(np.abs(self.dx).sum() + np.abs(self.dy).sum())


@dataclass
class TvResult:
    """Reconstruction plus its convergence log.

    ``log`` has one row per checkpoint: ``iteration``, ``objective`` (of the
    best iterate so far, the one returned, hence non-increasing),
    ``raw_objective`` (of the current iterate) and ``change`` (relative
    iterate change over the last iteration).
    """

    image: np.ndarray
    log: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    @property
    def objective(self) -> float:
        return self.log[-1]["objective"] if self.log else math.nan


def simulate_scan(target, cfg: ScanConfig, seed: Optional[int] = 0):
    """Measurement of ``target`` by an ideal ``k x k`` box sensor, plus optional noise.

    With ``noise_sigma == 0`` the result equals ``apply2d(target, k)``.
    """
    y = apply2d(np.asarray(target, dtype=np.float64), cfg.k)
    if cfg.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        y = y + rng.normal(0.0, cfg.noise_sigma, size=y.shape)
    return y


def scan_frames(target, k):
    """Frames taken by a coarse ``k x k``-pixel sensor at every sub-pixel offset.

    Returns a dict mapping offset ``(a, b)`` to the frame whose pixel
    ``(I, J)`` integrates ``target[a + I*k : a + (I+1)*k, b + J*k : b + (J+1)*k]``.
    Only sensor pixels lying fully on the target are kept.
    """
    target = as_image(target)
    h, w = target.shape
    if not 1 <= k <= min(h, w):
        raise DimensionError(f"k={k} must be between 1 and min(h, w)={min(h, w)}")
    frames = {}
    for a in range(k):
        for b in range(k):
            rows, cols = (h - a) // k, (w - b) // k
            block = target[a:a + rows * k, b:b + cols * k]
            frames[a, b] = block.reshape(rows, k, cols, k).sum(axis=(1, 3))
    return frames


def interleave_frames(frames, k, shape):
    """Re-arrange shifted frames into one image of the given target ``shape``.

    Pixel ``(a + I*k, b + J*k)`` of the output comes from frame ``(a, b)``;
    the output is ``(h-k+1) x (w-k+1)``, the valid box convolution.
    """
    h, w = shape
    out = np.empty((h - k + 1, w - k + 1), dtype=np.result_type(*frames.values()))
    for (a, b), frame in frames.items():
        part = out[a::k, b::k]
        part[...] = frame[: part.shape[0], : part.shape[1]]
    return out


def gradient(x) -> GradientField:
    x = np.asarray(x, dtype=np.float64)
    return GradientField(np.diff(x, axis=0), np.diff(x, axis=1))


def divergence(g: GradientField):
    """Negative adjoint of :func:`gradient`: ``<gradient(x), g> == -<x, divergence(g)>``."""
    zr = np.zeros((1, g.dx.shape[1]))
    zc = np.zeros((g.dy.shape[0], 1))
    return np.diff(np.vstack([zr, g.dx, zr]), axis=0) + np.diff(np.hstack([zc, g.dy, zc]), axis=1)


def tv_objective(x, y, k, lam) -> float:
    """``||apply2d(x, k) - y||_2^2 + lam * ||gradient(x)||_1`` (anisotropic)."""
    r = apply2d(x, k) - y
    return float(np.vdot(r, r) + lam * gradient(x).l1())


def tv_reconstruct(y, k, target_h, target_w, cfg: TvConfig | None = None) -> TvResult:
    """Approximately minimize ``||A x - y||^2 + lam ||grad x||_1`` over ``target_h x target_w`` images.

    First-order primal-dual iteration (Chambolle-Pock) on the saddle-point
    form with ``K = [A; grad]``, started from the back-projection
    ``A.T y / k**2``.  The returned image is the best iterate seen at a
    checkpoint.

    Raises
    ------
    DimensionError
        ``y`` is not ``(target_h-k+1) x (target_w-k+1)``.
    NumericalError
        The objective became non-finite; the log so far is attached.
    """
    cfg = cfg or TvConfig()
    y = as_image(y).astype(np.float64)
    if k < 1 or y.shape != (target_h - k + 1, target_w - k + 1):
        raise DimensionError(
            f"measurement shape {y.shape} does not match target ({target_h}, {target_w}) with k={k}"
        )
    shape = (target_h, target_w)
    lam = cfg.lam

    sigma_q = cfg.sigma_data if cfg.sigma_data is not None else 1.0 / (k * k)
    sigma_p = cfg.sigma_tv if cfg.sigma_tv is not None else 0.5 * max(1.0, math.sqrt(lam))
    tau = 0.99 / (sigma_q * k ** 4 + 8.0 * sigma_p)

    x = adjoint_apply2d(y, k, *shape) / (k * k)
    x_bar = x.copy()
    q = np.zeros_like(y)
    p = GradientField(np.zeros((target_h - 1, target_w)), np.zeros((target_h, target_w - 1)))

    best = x.copy()
    best_obj = tv_objective(x, y, k, lam)
    log = [{"iteration": 0, "objective": best_obj, "raw_objective": best_obj, "change": math.nan}]
    if not math.isfinite(best_obj):
        raise NumericalError("objective of the starting point is non-finite", log=log)
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        # dual ascent; prox of the conjugate of ||u - y||^2 and of lam*||.||_1
        q = (q + sigma_q * (apply2d(x_bar, k) - y)) / (1.0 + sigma_q / 2.0)
        g = gradient(x_bar)
        p = GradientField(
            np.clip(p.dx + sigma_p * g.dx, -lam, lam),
            np.clip(p.dy + sigma_p * g.dy, -lam, lam),
        )
        x_new = x - tau * (adjoint_apply2d(q, k, *shape) - divergence(p))
        x_bar = x_new + cfg.theta * (x_new - x)
        change = float(np.linalg.norm(x_new - x) / max(np.linalg.norm(x_new), 1e-30))
        x = x_new

        if it % cfg.check_every == 0 or it == cfg.max_iters:
            obj = tv_objective(x, y, k, lam)
            if not math.isfinite(obj):
                raise NumericalError(f"objective became non-finite at iteration {it}", log=log)
            if obj <= best_obj:
                best_obj = obj
                best = x.copy()
            log.append({"iteration": it, "objective": best_obj, "raw_objective": obj, "change": change})
            if change < cfg.tol:
                converged = True
                break
    return TvResult(image=best, log=log, iterations=it, converged=converged)


def psnr(a, b, peak=1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` when the images are identical."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    if not peak > 0:
        raise ValueError("peak must be positive")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def piecewise_constant_target(size=64, n_rects=4, seed=0):
    """Synthetic ``size x size`` test image: axis-aligned rectangles on a dark background.

    Intensities lie in ``[0, 1]``; later rectangles paint over earlier ones.
    """
    rng = np.random.default_rng(seed)
    img = np.full((size, size), 0.1)
    lo, hi = max(size // 8, 2), max(size // 2, 3)
    for _ in range(n_rects):
        rh, rw = rng.integers(lo, hi, size=2)
        r0 = rng.integers(0, size - rh + 1)
        c0 = rng.integers(0, size - rw + 1)
        img[r0:r0 + rh, c0:c0 + rw] = rng.uniform(0.2, 1.0)
    return img
