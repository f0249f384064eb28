"""Spatial preprocessing and re-compression operations.

The crop/resize conventions here define this artifact's preprocessing;
golden fixtures in the test suite pin them so splits stay reproducible
across implementations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from detbias.errors import DomainError, MalformedStream
from detbias.formats import png as pngfmt

from .jpegcodec import decode_jpeg, encode_qf
from .pngcodec import decode_png
from .raster import Raster, quantize_u8


def decode(data: bytes) -> Raster:
    """Decode a JPEG or PNG byte stream to an RGB raster."""
    if data[:2] == b"\xff\xd8":
        return decode_jpeg(data)
    if data[:8] == pngfmt.SIGNATURE:
        return decode_png(data)
    raise MalformedStream("unrecognized image format")


def center_crop(img: Raster, side: int) -> Raster:
    """Crop the centered side-by-side square; offsets round down."""
    if side < 1:
        raise DomainError("crop side must be positive")
    if img.width < side or img.height < side:
        raise DomainError(
            f"image {img.width}x{img.height} smaller than crop side {side}")
    x0 = (img.width - side) // 2
    y0 = (img.height - side) // 2
    return Raster.from_array(
        np.ascontiguousarray(img.samples[y0:y0 + side, x0:x0 + side]))


def _axis_coords(n_in: int, n_out: int):
    # source coordinate of output pixel i is (i + 0.5) * in/out - 0.5,
    # clamped to the valid range
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(img: Raster, out_w: int, out_h: int) -> Raster:
    """Pixel-center-aligned bilinear resize, channels independent,
    rounded half up."""
    if out_w < 1 or out_h < 1:
        raise DomainError("output size must be positive")
    x0, x1, tx = _axis_coords(img.width, out_w)
    y0, y1, ty = _axis_coords(img.height, out_h)
    s = img.samples.astype(np.float64)
    rows = (s[y0] * (1.0 - ty)[:, None, None] + s[y1] * ty[:, None, None])
    out = (rows[:, x0] * (1.0 - tx)[None, :, None]
           + rows[:, x1] * tx[None, :, None])
    return Raster.from_array(quantize_u8(out))


def train_preprocess(img: Raster) -> Raster:
    """Training-path normalization: center crop to 450, resize to 224."""
    if img.width < 450 or img.height < 450:
        raise DomainError(
            f"image {img.width}x{img.height} below the 450 crop bound")
    return resize_bilinear(center_crop(img, 450), 224, 224)


def infer_preprocess(img: Raster) -> Raster:
    """Inference-path normalization: resize to 512, center crop to 450,
    resize to 224. Accepts any input size."""
    return resize_bilinear(center_crop(resize_bilinear(img, 512, 512), 450),
                           224, 224)


@dataclass(frozen=True)
class CompressionSeries:
    """Strictly decreasing quality factors, each in [1, 100]."""

    qualities: tuple[int, ...]

    def __post_init__(self):
        qs = self.qualities
        if any(not 1 <= q <= 100 for q in qs):
            raise DomainError("quality factor outside [1, 100]")
        if any(qs[i] <= qs[i + 1] for i in range(len(qs) - 1)):
            raise DomainError("quality factors must strictly decrease")


def compress_series(data: bytes, series: CompressionSeries):
    """Re-encode one decoded image at each quality of the series.

    Every output encodes the original decode, so a JPEG input undergoes
    exactly one further compression round per quality level.
    """
    if not series.qualities:
        return []
    img = decode(data)
    return [(qf, encode_qf(img, qf)) for qf in series.qualities]
