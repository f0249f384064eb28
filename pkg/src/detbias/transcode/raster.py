"""In-memory image type shared by the codecs and the spatial ops."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from detbias.errors import DomainError, ShapeMismatch


def quantize_u8(values: np.ndarray) -> np.ndarray:
    """Quantize float samples to 8-bit, rounding half up.

    The one rounding convention of this package: floor(x + 0.5), then
    clip to [0, 255].
    """
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5),
                   0, 255).astype(np.uint8)


@dataclass(frozen=True)
class Raster:
    """8-bit image, row-major samples, 1 (gray) or 3 (RGB) channels.

    ``samples`` has shape (height, width, channels), dtype uint8. Treat
    instances as immutable; every operation returns a new raster.
    """

    width: int
    height: int
    channels: int
    samples: np.ndarray

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise DomainError(f"channels must be 1 or 3, got {self.channels}")
        if self.width < 1 or self.height < 1:
            raise DomainError("raster dimensions must be positive")
        s = self.samples
        if not isinstance(s, np.ndarray) or s.dtype != np.uint8:
            raise ShapeMismatch("samples must be a uint8 ndarray")
        if s.shape != (self.height, self.width, self.channels):
            raise ShapeMismatch(
                f"samples shape {s.shape} does not match "
                f"{(self.height, self.width, self.channels)}")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Raster":
        """Build from an (H, W) or (H, W, C) uint8 array."""
        a = np.asarray(arr)
        if a.dtype != np.uint8:
            raise ShapeMismatch("expected a uint8 array")
        if a.ndim == 2:
            a = a[:, :, np.newaxis]
        if a.ndim != 3:
            raise ShapeMismatch(f"expected 2 or 3 dimensions, got {a.ndim}")
        h, w, c = a.shape
        return cls(width=w, height=h, channels=c,
                   samples=np.ascontiguousarray(a))

    def plane(self, idx: int) -> np.ndarray:
        return self.samples[:, :, idx]
