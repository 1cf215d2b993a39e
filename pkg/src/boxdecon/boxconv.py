"""Box-convolution operators and the kernel of the valid operator.

Indexing is 0-based throughout.  A signal ``x`` has entries ``x[0..n-1]``;
the 1-based index ``j`` of the usual mathematical notation is ``x[j-1]``.
Residue classes modulo ``k`` are ``{0, ..., k-1}``, so the 1-based residue
"1 (mod k)" is residue 0 here and the 1-based residue "k" (written ``0`` by
``j mod k``) is residue ``k-1``.

Two operators are provided for a box of width ``k`` acting on length-``n``
signals:

* ``valid``: ``(n-k+1) x n``, row ``i`` sums ``x[i:i+k]`` (no padding).
* ``circular``: ``n x n``, row ``i`` sums ``x[(i + t) % n]`` for ``t < k``.

Both are applied with the running-sum recurrence
``y[i+1] = y[i] + x[i+k] - x[i]`` and never form a matrix unless
:meth:`BoxOperator.materialize` is called.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import CapacityError, DimensionError, PreconditionError

__all__ = [
    "Mode",
    "BoxOperator",
    "KernelBasis",
    "as_signal",
    "as_image",
    "window_sums",
    "kernel_basis",
    "in_kernel",
    "apply2d",
    "adjoint_apply2d",
    "DEFAULT_MAX_DENSE_N",
]

DEFAULT_MAX_DENSE_N = 4096

# The running sum is re-seeded from a fresh window sum this often, which
# bounds floating-point drift on very long signals.
_RESEED_EVERY = 1 << 16


class Mode(str, enum.Enum):
    VALID = "valid"
    CIRCULAR = "circular"


def _as_array(values, ndim, what):
    arr = np.asarray(values)
    if arr.dtype == bool:
        arr = arr.astype(np.int64)
    elif not (np.issubdtype(arr.dtype, np.integer) or np.issubdtype(arr.dtype, np.floating)):
        arr = arr.astype(np.float64)
    if arr.ndim != ndim:
        raise DimensionError(f"{what} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{what} must be non-empty")
    if np.issubdtype(arr.dtype, np.floating) and not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")
    return arr


def as_signal(values) -> np.ndarray:
    """Validate a 1D signal. Integer dtypes are kept so integer arithmetic stays exact."""
    return _as_array(values, 1, "signal")


def as_image(values) -> np.ndarray:
    """Validate a 2D image (height x width)."""
    return _as_array(values, 2, "image")


def window_sums(x, k, axis=-1):
    """Sums of ``k`` consecutive entries of ``x`` along ``axis`` (valid part only).

    Computed with the running-sum recurrence, seeded with the first window
    and re-seeded every 65536 outputs.
    """
    x = np.moveaxis(np.asarray(x), axis, -1)
    n = x.shape[-1]
    if not 1 <= k <= n:
        raise DimensionError(f"box width k={k} must satisfy 1 <= k <= {n}")
    m = n - k + 1
    dtype = np.result_type(x.dtype, np.int64) if np.issubdtype(x.dtype, np.integer) else np.float64
    out = np.empty(x.shape[:-1] + (m,), dtype=dtype)
    for start in range(0, m, _RESEED_EVERY):
        stop = min(start + _RESEED_EVERY, m)
        seed = x[..., start:start + k].sum(axis=-1, dtype=dtype)
        steps = x[..., start + k:stop + k - 1].astype(dtype) - x[..., start:stop - 1]
        out[..., start:stop] = np.cumsum(
            np.concatenate([seed[..., None], steps], axis=-1), axis=-1
        )
    return np.moveaxis(out, -1, axis)


@dataclass(frozen=True)
class BoxOperator:
    """Box convolution of width ``k`` on length-``n`` signals.

    Parameters
    ----------
    k : int
        Box width, ``1 <= k <= n``.
    n : int
        Input signal length.
    mode : {"valid", "circular"}
        ``valid`` keeps the ``n-k+1`` windows lying inside the signal;
        ``circular`` wraps indices modulo ``n`` and keeps all ``n`` windows.
    """

    k: int
    n: int
    mode: Mode = Mode.VALID

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if int(self.k) != self.k or int(self.n) != self.n:
            raise DimensionError("k and n must be integers")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "n", int(self.n))
        if self.n < 1 or not 1 <= self.k <= self.n:
            raise DimensionError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def output_length(self) -> int:
        return self.n - self.k + 1 if self.mode is Mode.VALID else self.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.output_length, self.n)

    def _check(self, v, length, what):
        v = as_signal(v)
        if v.shape[0] != length:
            raise DimensionError(f"{what} has length {v.shape[0]}, expected {length}")
        return v

    def apply(self, x):
        """Return ``A @ x`` (valid) or ``B @ x`` (circular)."""
        x = self._check(x, self.n, "input")
        if self.mode is Mode.CIRCULAR:
            x = np.concatenate([x, x[: self.k - 1]])
        return window_sums(x, self.k)

    def adjoint(self, y):
        """Return ``A.T @ y`` (valid) or ``B.T @ y`` (circular)."""
        y = self._check(y, self.output_length, "measurement")
        if self.mode is Mode.VALID:
            pad = np.zeros(self.k - 1, dtype=y.dtype)
            ext = np.concatenate([pad, y, pad])
        else:
            ext = np.concatenate([y[self.n - self.k + 1:], y])
        return window_sums(ext, self.k)

    __call__ = apply

    def materialize(self, max_n=DEFAULT_MAX_DENSE_N) -> np.ndarray:
        """Dense 0/1 matrix of the operator (integer dtype).

        Raises
        ------
        CapacityError
            If ``n`` exceeds ``max_n``.
        """
        if self.n > max_n:
            raise CapacityError(f"n={self.n} exceeds the dense guard max_n={max_n}")
        rows = np.arange(self.output_length)[:, None]
        cols = (rows + np.arange(self.k)[None, :]) % self.n
        mat = np.zeros(self.shape, dtype=np.int64)
        np.put_along_axis(mat, cols, 1, axis=1)
        return mat


@dataclass(frozen=True)
class KernelBasis:
    """Basis of the kernel of a box operator, one vector per row of ``vectors``."""

    k: int
    n: int
    vectors: np.ndarray

    def __len__(self):
        return self.vectors.shape[0]

    def __iter__(self):
        return iter(self.vectors)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]


def kernel_basis(k, n, mode=Mode.VALID) -> KernelBasis:
    """Integer basis of ``ker(A)`` (or ``ker(B)`` for ``mode="circular"``).

    For the valid operator the kernel is exactly the set of ``k``-periodic
    vectors whose period sums to zero, so it has dimension ``k - 1``.  Vector
    ``m`` (``m = 1..k-1``) is ``+1`` on indices ``= 0 (mod k)``, ``-1`` on
    indices ``= m (mod k)`` and zero elsewhere.

    For the circular operator a kernel vector must in addition be periodic
    across the wrap-around, i.e. periodic with period ``g = gcd(n, k)``; the
    same construction with ``g`` in place of ``k`` is returned.  When ``k``
    divides ``n`` both kernels coincide.

    Returns an empty ``(0, n)`` basis when the kernel is trivial (``k = 1``).
    """
    mode = Mode(mode)
    if int(k) != k or int(n) != n:
        raise DimensionError("k and n must be integers")
    k, n = int(k), int(n)
    if k < 1 or n < 1:
        raise DimensionError(f"k and n must be positive, got k={k}, n={n}")
    if k > n:
        raise DimensionError(f"box width k={k} exceeds signal length n={n}")
    period = k if mode is Mode.VALID else math.gcd(n, k)
    residue = np.arange(n) % period
    vectors = np.zeros((period - 1, n), dtype=np.int64)
    for m in range(1, period):
        vectors[m - 1, residue == 0] = 1
        vectors[m - 1, residue == m] = -1
    vectors.setflags(write=False)
    return KernelBasis(k=k, n=n, vectors=vectors)


def kernel_tolerance(z) -> float:
    """Scale-aware membership tolerance ``1e-9 * (1 + ||z||_inf)``."""
    return 1e-9 * (1.0 + float(np.max(np.abs(z))))


def in_kernel(z, k, mode=Mode.VALID, tol=None) -> bool:
    """Test whether ``z`` lies in the kernel of the width-``k`` box operator.

    Valid mode checks ``k``-periodicity and a zero period sum.  Circular mode
    also requires the circular operator to annihilate ``z``; when ``k``
    divides ``len(z)`` that extra condition is implied.
    """
    z = as_signal(z).astype(np.float64)
    n = z.shape[0]
    if not 1 <= k <= n:
        raise DimensionError(f"need 1 <= k <= len(z), got k={k}, len(z)={n}")
    eps = kernel_tolerance(z) if tol is None else tol
    periodic = n == k or np.max(np.abs(z[k:] - z[:-k])) <= eps
    if not (periodic and abs(z[:k].sum()) <= eps):
        return False
    if Mode(mode) is Mode.CIRCULAR:
        return bool(np.max(np.abs(BoxOperator(k, n, Mode.CIRCULAR).apply(z))) <= eps)
    return True


def apply2d(x, k):
    """Valid 2D convolution with the ``k x k`` all-ones box.

    Output shape is ``(h-k+1, w-k+1)``; entry ``(i, j)`` is the sum of
    ``x[i:i+k, j:j+k]``.  Computed separably, rows then columns.
    """
    x = as_image(x)
    h, w = x.shape
    if not 1 <= k <= min(h, w):
        raise DimensionError(f"box width k={k} must be between 1 and min(h, w)={min(h, w)}")
    return window_sums(window_sums(x, k, axis=1), k, axis=0)


def adjoint_apply2d(y, k, target_h, target_w):
    """Transpose of :func:`apply2d` mapping a measurement back to ``target_h x target_w``."""
    y = as_image(y)
    if k < 1 or y.shape != (target_h - k + 1, target_w - k + 1):
        raise DimensionError(
            f"measurement shape {y.shape} does not match target "
            f"({target_h}, {target_w}) with k={k}"
        )
    y = np.pad(y, k - 1)
    return window_sums(window_sums(y, k, axis=1), k, axis=0)
