"""JPEG marker-level parser: dimensions and quantization tables without
entropy decoding.

Walks the segment stream from SOI up to the first SOS, collecting every
DQT definition on the way (later definitions of the same table id win)
and the first frame header. No pixel data is touched.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from detbias.errors import MalformedStream, UnsupportedStream
from detbias.formats.quant import QuantTables, natural_from_zigzag

SOI = 0xD8
EOI = 0xD9
SOS = 0xDA
DQT = 0xDB
TEM = 0x01

# SOFn markers by coding process. 0xC4 (DHT), 0xC8 (JPG) and 0xCC (DAC)
# sit inside the SOF numbering range but are not frame headers.
_SOF_MARKERS = {0xC0, 0xC1, 0xC2, 0xC3, 0xC5, 0xC6, 0xC7,
                0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF}
_SOF_ARITHMETIC = {0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF}
_SOF_PROGRESSIVE = {0xC2, 0xC6, 0xCA, 0xCE}
_STANDALONE = {SOI, EOI, TEM} | set(range(0xD0, 0xD8))


@dataclass(frozen=True)
class FrameComponent:
    comp_id: int
    h: int
    v: int
    tq: int  # quantization table selector


@dataclass(frozen=True)
class JpegInfo:
    """Metadata carried by the headers of a JPEG stream."""

    width: int
    height: int
    tables: QuantTables | None
    progressive: bool
    components: tuple[FrameComponent, ...]
    # raw tables by destination id, natural order; kept for the decoder
    raw_tables: dict[int, tuple[int, ...]]

    @property
    def n_components(self) -> int:
        return len(self.components)


def _u16(data: bytes, pos: int) -> int:
    if pos + 2 > len(data):
        raise MalformedStream("truncated segment length")
    return struct.unpack_from(">H", data, pos)[0]


def _next_marker(data: bytes, pos: int) -> tuple[int, int]:
    """Return (marker, position after marker). Skips fill bytes (0xFF)."""
    if pos >= len(data):
        raise MalformedStream("unexpected end of stream between segments")
    if data[pos] != 0xFF:
        raise MalformedStream(f"expected marker at offset {pos}")
    while pos < len(data) and data[pos] == 0xFF:
        pos += 1
    if pos >= len(data):
        raise MalformedStream("stream ends in fill bytes")
    return data[pos], pos + 1


def _parse_dqt(payload: bytes, dest: dict[int, tuple[int, ...]]) -> None:
    pos = 0
    while pos < len(payload):
        pq_tq = payload[pos]
        pq, tq = pq_tq >> 4, pq_tq & 0x0F
        pos += 1
        if pq == 1:
            raise UnsupportedStream("16-bit quantization tables")
        if pq != 0:
            raise MalformedStream(f"bad quantization table precision {pq}")
        if tq > 3:
            raise MalformedStream(f"bad quantization table id {tq}")
        if pos + 64 > len(payload):
            raise MalformedStream("truncated quantization table")
        entries = payload[pos:pos + 64]
        if any(v == 0 for v in entries):
            raise MalformedStream("zero quantization table entry")
        dest[tq] = natural_from_zigzag(entries)
        pos += 64


def _parse_sof(marker: int, payload: bytes) -> tuple[int, int, tuple[FrameComponent, ...]]:
    if marker in _SOF_ARITHMETIC:
        raise UnsupportedStream("arithmetic-coded stream")
    if len(payload) < 6:
        raise MalformedStream("truncated frame header")
    precision, height, width, ncomp = struct.unpack_from(">BHHB", payload, 0)
    if precision != 8:
        raise UnsupportedStream(f"{precision}-bit sample precision")
    if width < 1 or height < 1:
        raise MalformedStream("frame header with zero dimension")
    if len(payload) < 6 + 3 * ncomp:
        raise MalformedStream("truncated frame component list")
    comps = []
    for i in range(ncomp):
        cid, hv, tq = struct.unpack_from("BBB", payload, 6 + 3 * i)
        comps.append(FrameComponent(cid, hv >> 4, hv & 0x0F, tq))
    return width, height, tuple(comps)


def parse_jpeg_meta(data: bytes) -> JpegInfo:
    """Parse dimensions and quantization tables from a JPEG byte stream.

    Raises MalformedStream on structural damage and UnsupportedStream on
    arithmetic-coded or non-8-bit streams.
    """
    if len(data) < 2 or data[0] != 0xFF or data[1] != SOI:
        raise MalformedStream("missing start-of-image marker")

    pos = 2
    raw_tables: dict[int, tuple[int, ...]] = {}
    frame = None
    progressive = False

    while True:
        marker, pos = _next_marker(data, pos)
        if marker in _STANDALONE:
            if marker == EOI:
                break
            continue
        length = _u16(data, pos)
        if length < 2 or pos + length > len(data):
            raise MalformedStream("truncated segment")
        payload = data[pos + 2:pos + length]
        pos += length

        if marker == DQT:
            _parse_dqt(payload, raw_tables)
        elif marker in _SOF_MARKERS:
            if frame is None:
                frame = _parse_sof(marker, payload)
                progressive = marker in _SOF_PROGRESSIVE
        elif marker == SOS:
            # Tables relevant to quality estimation all precede the first
            # scan; stop here, entropy data is out of scope.
            break

    if frame is None:
        raise MalformedStream("no frame header before scan or end of image")

    width, height, comps = frame
    tables = None
    if comps and comps[0].tq in raw_tables:
        luma = raw_tables[comps[0].tq]
        chroma = None
        if len(comps) > 1 and comps[1].tq in raw_tables and comps[1].tq != comps[0].tq:
            chroma = raw_tables[comps[1].tq]
        tables = QuantTables(luma=luma, chroma=chroma)

    return JpegInfo(
        width=width,
        height=height,
        tables=tables,
        progressive=progressive,
        components=comps,
        raw_tables=raw_tables,
    )
