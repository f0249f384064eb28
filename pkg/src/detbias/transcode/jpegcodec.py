"""Baseline JPEG: decode any sequential Huffman stream, encode at a
target quality factor with 4:2:0 subsampling and fixed Huffman tables.

The embedded quantization tables of an encode are exactly the scaled
standard tables for the requested quality factor, so quality estimation
over an emitted stream always round-trips.
"""

from __future__ import annotations

import struct

import numpy as np
from scipy.fft import dctn, idctn

from detbias.errors import MalformedStream, UnsupportedStream
from detbias.formats import jpeg as jpegfmt
from detbias.formats.quant import ZIGZAG, scale_tables

from . import huffman
from ._kernels import decode_scan, encode_scan
from .raster import Raster, quantize_u8

_KR, _KB = 0.299, 0.114  # BT.601 luma weights, full range
_KG = 1.0 - _KR - _KB


def rgb_to_ycc(samples: np.ndarray):
    """RGB uint8 (H, W, 3) to float Y, Cb, Cr planes."""
    r = samples[:, :, 0].astype(np.float64)
    g = samples[:, :, 1].astype(np.float64)
    b = samples[:, :, 2].astype(np.float64)
    y = _KR * r + _KG * g + _KB * b
    cb = 128.0 + (b - y) * (0.5 / (1.0 - _KB))
    cr = 128.0 + (r - y) * (0.5 / (1.0 - _KR))
    return y, cb, cr


def ycc_to_rgb(y: np.ndarray, cb: np.ndarray, cr: np.ndarray) -> np.ndarray:
    """Float Y, Cb, Cr planes to RGB uint8 (H, W, 3), rounded half up."""
    cb = cb - 128.0
    cr = cr - 128.0
    r = y + (2.0 - 2.0 * _KR) * cr
    b = y + (2.0 - 2.0 * _KB) * cb
    g = (y - _KR * r - _KB * b) / _KG
    return np.stack([quantize_u8(r), quantize_u8(g), quantize_u8(b)], axis=2)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _scan_order(samps: list[tuple[int, int]], mcux: int, mcuy: int):
    """Block order of one interleaved scan.

    Returns (comp_ids, plane_index) where plane_index[i] is the
    row-major block index inside that component's padded plane.
    """
    comp_ids = []
    plane_index = []
    for my in range(mcuy):
        for mx in range(mcux):
            for ci, (h, v) in enumerate(samps):
                bw = mcux * h
                for by in range(v):
                    for bx in range(h):
                        comp_ids.append(ci)
                        plane_index.append((my * v + by) * bw + (mx * h + bx))
    return (np.asarray(comp_ids, dtype=np.uint8),
            np.asarray(plane_index, dtype=np.int64))


def _blocks_to_plane(blocks: np.ndarray, bw: int, bh: int) -> np.ndarray:
    return blocks.reshape(bh, bw, 8, 8).transpose(0, 2, 1, 3).reshape(bh * 8, bw * 8)


def _plane_to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return plane.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8)


# ---------------------------------------------------------------- decode

def _parse_dht(payload: bytes, dest: dict):
    pos = 0
    while pos < len(payload):
        if pos + 17 > len(payload):
            raise MalformedStream("truncated huffman table")
        tc_th = payload[pos]
        tc, th = tc_th >> 4, tc_th & 0x0F
        if tc > 1 or th > 3:
            raise MalformedStream(f"bad huffman table class/id {tc_th:#x}")
        bits = tuple(payload[pos + 1:pos + 17])
        n = sum(bits)
        pos += 17
        if n > 256 or pos + n > len(payload):
            raise MalformedStream("truncated huffman table values")
        vals = tuple(payload[pos:pos + n])
        pos += n
        dest[(tc, th)] = huffman.decode_table(bits, vals)


def _stack_decode_tables(tabs: dict, cls: int, ids):
    mincode = np.zeros((4, 17), dtype=np.int64)
    maxcode = np.full((4, 17), -1, dtype=np.int64)
    valptr = np.zeros((4, 17), dtype=np.int64)
    vals = np.zeros((4, 256), dtype=np.uint8)
    for th in ids:
        if (cls, th) not in tabs:
            raise MalformedStream(f"scan references undefined huffman table {cls}/{th}")
        mn, mx, vp, vv = tabs[(cls, th)]
        mincode[th], maxcode[th], valptr[th], vals[th] = mn, mx, vp, vv
    return mincode, maxcode, valptr, vals


def decode_jpeg(data: bytes) -> Raster:
    """Decode a sequential Huffman JPEG stream to an RGB raster.

    Grayscale streams are replicated to three channels; chroma is
    upsampled to full resolution by sample replication.
    """
    if len(data) < 2 or data[0] != 0xFF or data[1] != jpegfmt.SOI:
        raise MalformedStream("missing start-of-image marker")

    pos = 2
    qtables: dict[int, tuple[int, ...]] = {}
    htables: dict = {}
    frame = None
    restart_interval = 0

    while True:
        marker, pos = jpegfmt._next_marker(data, pos)
        if marker in jpegfmt._STANDALONE:
            if marker == jpegfmt.EOI:
                raise MalformedStream("end of image before any scan")
            continue
        length = jpegfmt._u16(data, pos)
        if length < 2 or pos + length > len(data):
            raise MalformedStream("truncated segment")
        payload = data[pos + 2:pos + length]
        pos += length

        if marker == jpegfmt.DQT:
            jpegfmt._parse_dqt(payload, qtables)
        elif marker == 0xC4:
            _parse_dht(payload, htables)
        elif marker == 0xDD:
            if len(payload) != 2:
                raise MalformedStream("bad restart interval segment")
            restart_interval = struct.unpack(">H", payload)[0]
        elif marker in jpegfmt._SOF_MARKERS:
            if marker in jpegfmt._SOF_PROGRESSIVE:
                raise UnsupportedStream("progressive stream")
            if frame is not None:
                raise MalformedStream("multiple frame headers")
            frame = jpegfmt._parse_sof(marker, payload)
        elif marker == jpegfmt.SOS:
            break

    if frame is None:
        raise MalformedStream("no frame header before scan")
    width, height, comps = frame
    if len(comps) not in (1, 3):
        raise UnsupportedStream(f"{len(comps)}-component stream")

    # scan header
    if len(payload) < 1 or payload[0] != len(comps):
        raise UnsupportedStream("scan does not cover all frame components")
    ns = payload[0]
    if len(payload) != 1 + 2 * ns + 3:
        raise MalformedStream("bad scan header length")
    selectors = {}
    for i in range(ns):
        cs, tda = payload[1 + 2 * i], payload[2 + 2 * i]
        selectors[cs] = (tda >> 4, tda & 0x0F)
    if payload[-3] != 0 or payload[-2] != 63 or payload[-1] != 0:
        raise MalformedStream("non-baseline spectral selection in scan header")

    samps = [(c.h, c.v) for c in comps]
    if len(comps) == 1:
        samps = [(1, 1)]  # single-component scans are never interleaved
    for h, v in samps:
        if not (1 <= h <= 4 and 1 <= v <= 4):
            raise MalformedStream("bad sampling factors")
    hmax = max(h for h, _ in samps)
    vmax = max(v for _, v in samps)
    mcux = _ceil_div(width, 8 * hmax)
    mcuy = _ceil_div(height, 8 * vmax)

    comp_ids, plane_index = _scan_order(samps, mcux, mcuy)
    blocks_per_mcu = sum(h * v for h, v in samps)

    comp_dc = np.zeros(len(comps), dtype=np.uint8)
    comp_ac = np.zeros(len(comps), dtype=np.uint8)
    for ci, c in enumerate(comps):
        if c.comp_id not in selectors:
            raise MalformedStream(f"component {c.comp_id} missing from scan")
        comp_dc[ci], comp_ac[ci] = selectors[c.comp_id]

    dc_tabs = _stack_decode_tables(htables, 0, set(comp_dc.tolist()))
    ac_tabs = _stack_decode_tables(htables, 1, set(comp_ac.tolist()))

    blocks = np.zeros((len(comp_ids), 64), dtype=np.int32)
    consumed = decode_scan(
        np.frombuffer(data, dtype=np.uint8)[pos:], blocks, comp_ids,
        *dc_tabs, *ac_tabs, comp_dc, comp_ac,
        restart_interval, blocks_per_mcu)
    if consumed < 0:
        raise MalformedStream("corrupt entropy-coded data")

    planes = []
    for ci, c in enumerate(comps):
        if c.tq not in qtables:
            raise MalformedStream(f"component references undefined table {c.tq}")
        q = np.asarray(qtables[c.tq], dtype=np.float64)
        h, v = samps[ci]
        bw, bh = mcux * h, mcuy * v
        mask = comp_ids == ci
        natural = np.zeros((bw * bh, 64), dtype=np.float64)
        scan_blocks = np.zeros((bw * bh, 64), dtype=np.int32)
        scan_blocks[plane_index[mask]] = blocks[mask]
        natural[:, ZIGZAG] = scan_blocks
        coef = (natural * q).reshape(-1, 8, 8)
        pix = idctn(coef, axes=(1, 2), norm="ortho", type=2) + 128.0
        plane = _blocks_to_plane(pix.reshape(-1, 64), bw, bh)
        cw = _ceil_div(width * h, hmax)
        ch = _ceil_div(height * v, vmax)
        plane = plane[:ch, :cw]
        if h != hmax or v != vmax:
            if hmax % h or vmax % v:
                raise UnsupportedStream("non-integer chroma sampling ratio")
            plane = np.repeat(np.repeat(plane, vmax // v, axis=0),
                              hmax // h, axis=1)
        planes.append(plane[:height, :width])

    if len(planes) == 1:
        gray = quantize_u8(planes[0])
        rgb = np.repeat(gray[:, :, np.newaxis], 3, axis=2)
    else:
        rgb = ycc_to_rgb(planes[0], planes[1], planes[2])
    return Raster.from_array(rgb)


# ---------------------------------------------------------------- encode

_APP0_JFIF = b"\xff\xe0\x00\x10JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00"


def _pad_edge(plane: np.ndarray, mult: int) -> np.ndarray:
    h, w = plane.shape
    ph = _ceil_div(h, mult) * mult - h
    pw = _ceil_div(w, mult) * mult - w
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    return plane


def _quantize_blocks(plane: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    """Pad, split, transform and quantize one padded float plane; returns
    int32 (nblocks, 64) in zig-zag order."""
    blocks = _plane_to_blocks(plane - 128.0)
    coef = dctn(blocks, axes=(1, 2), norm="ortho", type=2)
    q = np.floor(coef.reshape(-1, 64) / qtable.reshape(64) + 0.5)
    return q.astype(np.int32)[:, ZIGZAG]


def _dqt_segment(tables) -> bytes:
    body = b""
    for tq, tbl in tables:
        zz = bytes(tbl[ZIGZAG[k]] for k in range(64))
        body += bytes([tq]) + zz
    return b"\xff\xdb" + struct.pack(">H", 2 + len(body)) + body


def _dht_segment(tables) -> bytes:
    body = b""
    for tc_th, bits, vals in tables:
        body += bytes([tc_th]) + bytes(bits) + bytes(vals)
    return b"\xff\xc4" + struct.pack(">H", 2 + len(body)) + body


def encode_qf(img: Raster, qf: int) -> bytes:
    """Encode a raster as baseline JPEG at quality factor ``qf``.

    Color input is subsampled 4:2:0; grayscale input stays single
    component. Output bytes are a deterministic function of the input.
    """
    tables = scale_tables(qf)  # DomainError on out-of-range qf
    luma_q = np.asarray(tables.luma, dtype=np.float64)
    chroma_q = np.asarray(tables.chroma, dtype=np.float64)
    color = img.channels == 3

    if color:
        y, cb, cr = rgb_to_ycc(img.samples)
        y = _pad_edge(y, 16)
        cb = _pad_edge(cb, 16)
        cr = _pad_edge(cr, 16)
        # 4:2:0: chroma is the 2x2 box mean
        cb = cb.reshape(cb.shape[0] // 2, 2, cb.shape[1] // 2, 2).mean(axis=(1, 3))
        cr = cr.reshape(cr.shape[0] // 2, 2, cr.shape[1] // 2, 2).mean(axis=(1, 3))
        comp_blocks = [_quantize_blocks(y, luma_q),
                       _quantize_blocks(cb, chroma_q),
                       _quantize_blocks(cr, chroma_q)]
        samps = [(2, 2), (1, 1), (1, 1)]
        mcux = _ceil_div(img.width, 16)
        mcuy = _ceil_div(img.height, 16)
    else:
        y = _pad_edge(img.samples[:, :, 0].astype(np.float64), 8)
        comp_blocks = [_quantize_blocks(y, luma_q)]
        samps = [(1, 1)]
        mcux = _ceil_div(img.width, 8)
        mcuy = _ceil_div(img.height, 8)

    comp_ids, plane_index = _scan_order(samps, mcux, mcuy)
    blocks = np.empty((len(comp_ids), 64), dtype=np.int32)
    for ci in range(len(samps)):
        mask = comp_ids == ci
        blocks[mask] = comp_blocks[ci][plane_index[mask]]

    ntab = 2 if color else 1
    dc_codes = np.zeros((ntab, 12), dtype=np.int64)
    dc_sizes = np.zeros((ntab, 12), dtype=np.int64)
    ac_codes = np.zeros((ntab, 256), dtype=np.int64)
    ac_sizes = np.zeros((ntab, 256), dtype=np.int64)
    dc_codes[0], dc_sizes[0] = huffman.encode_table(
        huffman.DC_LUMA_BITS, huffman.DC_LUMA_VALS, 12)
    ac_codes[0], ac_sizes[0] = huffman.encode_table(
        huffman.AC_LUMA_BITS, huffman.AC_LUMA_VALS, 256)
    if color:
        dc_codes[1], dc_sizes[1] = huffman.encode_table(
            huffman.DC_CHROMA_BITS, huffman.DC_CHROMA_VALS, 12)
        ac_codes[1], ac_sizes[1] = huffman.encode_table(
            huffman.AC_CHROMA_BITS, huffman.AC_CHROMA_VALS, 256)
    comp_dc = np.array([0, 1, 1][:len(samps)], dtype=np.uint8)
    comp_ac = comp_dc.copy()

    scan = encode_scan(blocks, comp_ids, dc_codes, dc_sizes,
                       ac_codes, ac_sizes, comp_dc, comp_ac)

    out = bytearray(b"\xff\xd8")
    out += _APP0_JFIF
    if color:
        out += _dqt_segment([(0, tables.luma), (1, tables.chroma)])
    else:
        out += _dqt_segment([(0, tables.luma)])

    ncomp = 3 if color else 1
    sof = struct.pack(">BHHB", 8, img.height, img.width, ncomp)
    for i in range(ncomp):
        h, v = samps[i]
        sof += bytes([i + 1, (h << 4) | v, 0 if i == 0 else 1])
    out += b"\xff\xc0" + struct.pack(">H", 2 + len(sof)) + sof

    dht = [(0x00, huffman.DC_LUMA_BITS, huffman.DC_LUMA_VALS),
           (0x10, huffman.AC_LUMA_BITS, huffman.AC_LUMA_VALS)]
    if color:
        dht += [(0x01, huffman.DC_CHROMA_BITS, huffman.DC_CHROMA_VALS),
                (0x11, huffman.AC_CHROMA_BITS, huffman.AC_CHROMA_VALS)]
    out += _dht_segment(dht)

    sos = bytes([ncomp])
    for i in range(ncomp):
        sos += bytes([i + 1, 0x00 if i == 0 else 0x11])
    sos += b"\x00\x3f\x00"
    out += b"\xff\xda" + struct.pack(">H", 2 + len(sos)) + sos
    out += scan.tobytes()
    out += b"\xff\xd9"
    return bytes(out)
