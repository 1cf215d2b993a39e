"""Readers and writers for signals and images.

Signals
    UTF-8 text, one decimal value per line.  Blank lines and lines starting
    with ``#`` are ignored, except that a ``# n=<int>`` header, if present,
    must match the number of values.

Images
    * Portable graymap, ASCII (``P2``) or binary (``P5``), maxval up to
      65535 (16-bit samples big-endian, as netpbm specifies).  Samples map
      to floats as ``value / maxval``.
    * ``BDF1`` raw float grids, little-endian: magic ``b"BDF1"``, ``u32``
      height, ``u32`` width, then ``height * width`` ``f64`` values in
      row-major order.
"""

from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np

from .exceptions import DimensionError

__all__ = [
    "FormatError",
    "read_signal",
    "write_signal",
    "read_pgm",
    "write_pgm",
    "read_bdf",
    "write_bdf",
    "read_image",
    "write_image",
    "is_image_path",
]

BDF_MAGIC = b"BDF1"
_BDF_HEADER = struct.Struct("<4sII")
_HEADER_N = re.compile(r"^#\s*n\s*=\s*(\d+)\s*$")


class FormatError(DimensionError):
    """A file could not be parsed."""

    reason = "parse"


def read_signal(path) -> np.ndarray:
    declared = None
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _HEADER_N.match(line)
                if m:
                    declared = int(m.group(1))
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: not a number: {line!r}") from None
    if not values:
        raise FormatError(f"{path}: no values")
    if declared is not None and declared != len(values):
        raise FormatError(f"{path}: header declares n={declared} but has {len(values)} values")
    arr = np.array(values)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{path}: non-finite values")
    return arr


def write_signal(path, x, header=True):
    x = np.asarray(x, dtype=np.float64).ravel()
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# n={x.size}\n")
        for v in x:
            fh.write(format(v + 0.0, ".17g") + "\n")


def _pgm_tokens(data, count, pos=0):
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos


def read_pgm(path):
    """Return ``(samples, maxval)`` with integer samples of shape (height, width)."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"{path}: not a P2/P5 graymap")
    try:
        (w, h, maxval), pos = _pgm_tokens(data, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise FormatError(f"{path}: bad PGM header") from None
    if w < 1 or h < 1 or not 1 <= maxval <= 65535:
        raise FormatError(f"{path}: bad PGM dimensions or maxval")
    if magic == b"P5":
        pos += 1  # single whitespace byte before the raster
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        nbytes = w * h * dtype.itemsize
        raster = data[pos:pos + nbytes]
        if len(raster) < nbytes:
            raise FormatError(f"{path}: truncated raster")
        samples = np.frombuffer(raster, dtype=dtype).astype(np.int64)
    else:
        try:
            samples = np.array(data[pos:].split(), dtype=np.int64)
        except ValueError:
            raise FormatError(f"{path}: bad ASCII raster") from None
        if samples.size < w * h:
            raise FormatError(f"{path}: truncated raster")
        samples = samples[: w * h]
    if np.any(samples > maxval) or np.any(samples < 0):
        raise FormatError(f"{path}: sample outside [0, maxval]")
    return samples.reshape(h, w), maxval


def write_pgm(path, samples, maxval=255, binary=True):
    samples = np.asarray(samples)
    if samples.ndim != 2:
        raise DimensionError("PGM needs a 2D array")
    if not 1 <= maxval <= 65535:
        raise ValueError("maxval must be in 1..65535")
    if np.any(samples < 0) or np.any(samples > maxval):
        raise ValueError("samples outside [0, maxval]")
    h, w = samples.shape
    samples = samples.astype(np.int64)
    with open(path, "wb") as fh:
        if binary:
            fh.write(b"P5\n%d %d\n%d\n" % (w, h, maxval))
            dtype = ">u2" if maxval > 255 else "u1"
            fh.write(samples.astype(dtype).tobytes())
        else:
            fh.write(b"P2\n%d %d\n%d\n" % (w, h, maxval))
            for row in samples:
                fh.write((" ".join(str(int(v)) for v in row) + "\n").encode())


def read_bdf(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _BDF_HEADER.size:
        raise FormatError(f"{path}: truncated BDF1 header")
    magic, h, w = _BDF_HEADER.unpack_from(data)
    if magic != BDF_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    body = data[_BDF_HEADER.size:]
    if len(body) != 8 * h * w:
        raise FormatError(f"{path}: expected {8 * h * w} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f8").reshape(h, w).astype(np.float64)


def write_bdf(path, img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise DimensionError("BDF1 needs a 2D array")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(_BDF_HEADER.pack(BDF_MAGIC, h, w))
        fh.write(np.ascontiguousarray(img, dtype="<f8").tobytes())


def is_image_path(path) -> bool:
    return Path(path).suffix.lower() in (".pgm", ".bdf")


def read_image(path) -> np.ndarray:
    """Float image from a ``.pgm`` (scaled to [0, 1]) or ``.bdf`` file, sniffing the magic."""
    head = Path(path).read_bytes()[:4]
    if head == BDF_MAGIC:
        return read_bdf(path)
    if head[:2] in (b"P2", b"P5"):
        samples, maxval = read_pgm(path)
        return samples / maxval
    raise FormatError(f"{path}: unrecognized image format")


def write_image(path, img, maxval=255, binary=True):
    """Write ``.bdf`` exactly, or ``.pgm`` after clipping to [0, 1] and quantizing."""
    if Path(path).suffix.lower() == ".pgm":
        img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
        write_pgm(path, np.rint(img * maxval).astype(np.int64), maxval=maxval, binary=binary)
    else:
        write_bdf(path, img)
