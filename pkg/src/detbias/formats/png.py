"""PNG header parser: dimensions from the IHDR chunk, nothing decoded."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from detbias.errors import MalformedStream

SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class PngInfo:
    width: int
    height: int
    bit_depth: int
    color_type: int
    interlace: int


def parse_png_meta(data: bytes) -> PngInfo:
    """Read the IHDR chunk. The header chunk must be first and 13 bytes."""
    if len(data) < 8 or data[:8] != SIGNATURE:
        raise MalformedStream("bad PNG signature")
    if len(data) < 8 + 8 + 13:
        raise MalformedStream("truncated PNG header")
    length, ctype = struct.unpack_from(">I4s", data, 8)
    if ctype != b"IHDR":
        raise MalformedStream("first chunk is not IHDR")
    if length != 13:
        raise MalformedStream(f"IHDR length {length} != 13")
    width, height, bit_depth, color_type, _comp, _filt, interlace = (
        struct.unpack_from(">IIBBBBB", data, 16)
    )
    if width < 1 or height < 1:
        raise MalformedStream("zero PNG dimension")
    return PngInfo(width, height, bit_depth, color_type, interlace)
