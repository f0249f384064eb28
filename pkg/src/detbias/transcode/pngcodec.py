"""PNG decode (8-bit depth, the five standard color types) and a small
deterministic writer used for lossless materialization and fixtures.

Out of scope: interlacing and 16-bit depth (rejected as unsupported),
ancillary chunks (skipped; palette transparency is ignored, alpha is
flattened on white).
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from detbias.errors import MalformedStream, UnsupportedStream
from detbias.formats import png as pngfmt

from ._kernels import unfilter_scanlines
from .raster import Raster, quantize_u8

# bytes per pixel for filtering, by color type
_BPP = {0: 1, 2: 3, 3: 1, 4: 2, 6: 4}


def _chunks(data: bytes):
    pos = 8
    while pos + 8 <= len(data):
        length, ctype = struct.unpack_from(">I4s", data, pos)
        if pos + 12 + length > len(data):
            raise MalformedStream("truncated chunk")
        yield ctype, data[pos + 8:pos + 8 + length]
        pos += 12 + length
        if ctype == b"IEND":
            return
    raise MalformedStream("missing IEND chunk")


def decode_png(data: bytes) -> Raster:
    """Decode a PNG byte stream to an RGB raster.

    Grayscale is replicated to three channels; alpha is composited over
    white; palette images are expanded through their palette.
    """
    info = pngfmt.parse_png_meta(data)
    if info.bit_depth != 8:
        raise UnsupportedStream(f"{info.bit_depth}-bit depth")
    if info.interlace != 0:
        raise UnsupportedStream("interlaced stream")
    if info.color_type not in _BPP:
        raise MalformedStream(f"bad color type {info.color_type}")

    palette = None
    idat = bytearray()
    for ctype, payload in _chunks(data):
        if ctype == b"PLTE":
            if len(payload) % 3 or not payload:
                raise MalformedStream("bad palette length")
            palette = np.frombuffer(payload, dtype=np.uint8).reshape(-1, 3)
        elif ctype == b"IDAT":
            idat += payload
    if not idat:
        raise MalformedStream("no image data chunks")

    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise MalformedStream(f"bad image data: {exc}") from None

    bpp = _BPP[info.color_type]
    stride = info.width * bpp
    if len(raw) != info.height * (stride + 1):
        raise MalformedStream("image data length mismatch")

    out = np.empty((info.height, stride), dtype=np.uint8)
    if unfilter_scanlines(np.frombuffer(raw, dtype=np.uint8), out, bpp) < 0:
        raise MalformedStream("bad scanline filter type")
    pixels = out.reshape(info.height, info.width, bpp)

    ct = info.color_type
    if ct == 0:
        rgb = np.repeat(pixels, 3, axis=2)
    elif ct == 2:
        rgb = pixels
    elif ct == 3:
        if palette is None:
            raise MalformedStream("palette image without palette chunk")
        idx = pixels[:, :, 0]
        if int(idx.max()) >= len(palette):
            raise MalformedStream("palette index out of range")
        rgb = palette[idx]
    else:
        # 4 (gray+alpha) or 6 (RGBA): composite over white
        color = pixels[:, :, :-1].astype(np.float64)
        if ct == 4:
            color = np.repeat(color, 3, axis=2)
        alpha = pixels[:, :, -1:].astype(np.float64) / 255.0
        rgb = quantize_u8(color * alpha + 255.0 * (1.0 - alpha))
    return Raster.from_array(np.ascontiguousarray(rgb))


def _chunk(ctype: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(ctype + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + ctype + payload + struct.pack(">I", crc)


def write_png(img: Raster) -> bytes:
    """Serialize a raster as PNG (filter 0 rows, fixed compression level),
    deterministically."""
    color_type = 2 if img.channels == 3 else 0
    rows = img.samples.reshape(img.height, -1)
    raw = bytearray()
    for y in range(img.height):
        raw.append(0)
        raw += rows[y].tobytes()
    ihdr = struct.pack(">IIBBBBB", img.width, img.height, 8, color_type, 0, 0, 0)
    return (pngfmt.SIGNATURE
            + _chunk(b"IHDR", ihdr)
            + _chunk(b"IDAT", zlib.compress(bytes(raw), 6))
            + _chunk(b"IEND", b""))
