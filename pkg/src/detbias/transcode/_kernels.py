"""Compiled hot loops: JPEG entropy coding and PNG scanline unfiltering.

Everything here is plain integer work on preallocated arrays; geometry,
tables and error reporting live in the calling modules. Kernels signal
failure through negative return codes instead of exceptions.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _put_bits(out, pos, acc, nbits, code, size):
    acc = (acc << size) | code
    nbits += size
    while nbits >= 8:
        nbits -= 8
        byte = (acc >> nbits) & 0xFF
        out[pos] = byte
        pos += 1
        if byte == 0xFF:
            out[pos] = 0
            pos += 1
    return pos, acc, nbits


@njit(cache=True)
def encode_scan(blocks, comp_ids, dc_codes, dc_sizes, ac_codes, ac_sizes,
                comp_dc, comp_ac):
    """Entropy-encode quantized blocks (zig-zag order, scan order).

    blocks: int32 (nblocks, 64); comp_ids: uint8 (nblocks,) component
    index per block; table arrays indexed [table, symbol]. Returns the
    stuffed, padded entropy-coded bytes.
    """
    nblocks = blocks.shape[0]
    out = np.empty(nblocks * 512 + 64, dtype=np.uint8)
    pos = 0
    acc = 0
    nbits = 0
    pred = np.zeros(4, dtype=np.int64)

    for b in range(nblocks):
        c = comp_ids[b]
        dt = comp_dc[c]
        at = comp_ac[c]

        dc = np.int64(blocks[b, 0])
        diff = dc - pred[c]
        pred[c] = dc
        mag = diff if diff >= 0 else -diff
        ssss = 0
        while mag:
            mag >>= 1
            ssss += 1
        pos, acc, nbits = _put_bits(out, pos, acc, nbits,
                                    dc_codes[dt, ssss], dc_sizes[dt, ssss])
        if ssss:
            v = diff if diff >= 0 else diff + (1 << ssss) - 1
            pos, acc, nbits = _put_bits(out, pos, acc, nbits,
                                        v & ((1 << ssss) - 1), ssss)

        run = 0
        for k in range(1, 64):
            coef = np.int64(blocks[b, k])
            if coef == 0:
                run += 1
                continue
            while run > 15:
                pos, acc, nbits = _put_bits(out, pos, acc, nbits,
                                            ac_codes[at, 0xF0],
                                            ac_sizes[at, 0xF0])
                run -= 16
            mag = coef if coef >= 0 else -coef
            ssss = 0
            while mag:
                mag >>= 1
                ssss += 1
            sym = (run << 4) | ssss
            pos, acc, nbits = _put_bits(out, pos, acc, nbits,
                                        ac_codes[at, sym], ac_sizes[at, sym])
            v = coef if coef >= 0 else coef + (1 << ssss) - 1
            pos, acc, nbits = _put_bits(out, pos, acc, nbits,
                                        v & ((1 << ssss) - 1), ssss)
            run = 0
        if run:
            pos, acc, nbits = _put_bits(out, pos, acc, nbits,
                                        ac_codes[at, 0x00], ac_sizes[at, 0x00])

    if nbits:
        fill = 8 - nbits
        pos, acc, nbits = _put_bits(out, pos, acc, nbits,
                                    (1 << fill) - 1, fill)
    return out[:pos]


@njit(cache=True, inline="always")
def _fill_bits(data, pos, acc, cnt, need):
    # Pull whole bytes until cnt >= need; refuses to cross a marker.
    ok = True
    while cnt < need:
        if pos >= data.size:
            ok = False
            break
        byte = data[pos]
        if byte == 0xFF:
            if pos + 1 >= data.size or data[pos + 1] != 0x00:
                ok = False  # marker, not entropy data
                break
            pos += 2
        else:
            pos += 1
        acc = (acc << 8) | byte
        cnt += 8
    return pos, acc, cnt, ok


@njit(cache=True)
def decode_scan(data, blocks, comp_ids, dc_mincode, dc_maxcode, dc_valptr,
                dc_vals, ac_mincode, ac_maxcode, ac_valptr, ac_vals,
                comp_dc, comp_ac, restart_interval, blocks_per_mcu):
    """Decode the entropy-coded segment into ``blocks`` (zig-zag order).

    ``data`` starts right after the scan header. Handles byte stuffing
    and restart markers. Returns bytes consumed, or -1 on malformed
    input.
    """
    nblocks = blocks.shape[0]
    pos = 0
    acc = 0
    cnt = 0
    pred = np.zeros(4, dtype=np.int64)
    mcu = 0

    for b in range(nblocks):
        if restart_interval > 0 and b % blocks_per_mcu == 0:
            if mcu > 0 and mcu % restart_interval == 0:
                cnt -= cnt % 8  # discard pad bits
                # whole buffered bytes are impossible here: fills always
                # top up to the exact symbol need, leaving cnt < 8
                if pos + 1 >= data.size or data[pos] != 0xFF:
                    return -1
                if data[pos + 1] < 0xD0 or data[pos + 1] > 0xD7:
                    return -1
                pos += 2
                pred[:] = 0
            mcu += 1
        elif restart_interval == 0 and b % blocks_per_mcu == 0:
            mcu += 1

        c = comp_ids[b]
        dt = comp_dc[c]
        at = comp_ac[c]

        # DC: walk the canonical code one bit at a time
        pos, acc, cnt, ok = _fill_bits(data, pos, acc, cnt, 1)
        if not ok:
            return -1
        cnt -= 1
        code = (acc >> cnt) & 1
        size = 1
        while code > dc_maxcode[dt, size]:
            size += 1
            if size > 16:
                return -1
            pos, acc, cnt, ok = _fill_bits(data, pos, acc, cnt, 1)
            if not ok:
                return -1
            cnt -= 1
            code = (code << 1) | ((acc >> cnt) & 1)
        ssss = np.int64(dc_vals[dt, dc_valptr[dt, size] + code - dc_mincode[dt, size]])
        diff = 0
        if ssss:
            pos, acc, cnt, ok = _fill_bits(data, pos, acc, cnt, ssss)
            if not ok:
                return -1
            cnt -= ssss
            diff = (acc >> cnt) & ((1 << ssss) - 1)
            if diff < (1 << (ssss - 1)):
                diff -= (1 << ssss) - 1
        pred[c] += diff
        blocks[b, 0] = pred[c]

        k = 1
        while k < 64:
            pos, acc, cnt, ok = _fill_bits(data, pos, acc, cnt, 1)
            if not ok:
                return -1
            cnt -= 1
            code = (acc >> cnt) & 1
            size = 1
            while code > ac_maxcode[at, size]:
                size += 1
                if size > 16:
                    return -1
                pos, acc, cnt, ok = _fill_bits(data, pos, acc, cnt, 1)
                if not ok:
                    return -1
                cnt -= 1
                code = (code << 1) | ((acc >> cnt) & 1)
            sym = ac_vals[at, ac_valptr[at, size] + code - ac_mincode[at, size]]
            run = sym >> 4
            ssss = np.int64(sym & 0x0F)
            if ssss == 0:
                if run == 15:
                    k += 16
                    continue
                break  # end of block
            k += run
            if k > 63:
                return -1
            pos, acc, cnt, ok = _fill_bits(data, pos, acc, cnt, ssss)
            if not ok:
                return -1
            cnt -= ssss
            v = (acc >> cnt) & ((1 << ssss) - 1)
            if v < (1 << (ssss - 1)):
                v -= (1 << ssss) - 1
            blocks[b, k] = v
            k += 1

    return pos


@njit(cache=True)
def unfilter_scanlines(raw, out, bpp):
    """Undo PNG per-scanline filtering.

    raw: (1 + stride) bytes per row, filter byte first; out: (height,
    stride) uint8, written in place. Returns 0, or -1 on a bad filter
    type.
    """
    height, stride = out.shape
    p = 0
    for y in range(height):
        ft = raw[p]
        p += 1
        if ft == 0:
            for x in range(stride):
                out[y, x] = raw[p + x]
        elif ft == 1:
            for x in range(stride):
                a = np.int64(out[y, x - bpp]) if x >= bpp else 0
                out[y, x] = (raw[p + x] + a) & 0xFF
        elif ft == 2:
            for x in range(stride):
                b = np.int64(out[y - 1, x]) if y > 0 else 0
                out[y, x] = (raw[p + x] + b) & 0xFF
        elif ft == 3:
            for x in range(stride):
                a = np.int64(out[y, x - bpp]) if x >= bpp else 0
                b = np.int64(out[y - 1, x]) if y > 0 else 0
                out[y, x] = (raw[p + x] + ((a + b) >> 1)) & 0xFF
        elif ft == 4:
            for x in range(stride):
                a = np.int64(out[y, x - bpp]) if x >= bpp else 0
                b = np.int64(out[y - 1, x]) if y > 0 else 0
                cc = np.int64(out[y - 1, x - bpp]) if (x >= bpp and y > 0) else 0
                pa = abs(b - cc)
                pb = abs(a - cc)
                pc = abs(a + b - 2 * cc)
                if pa <= pb and pa <= pc:
                    pr = a
                elif pb <= pc:
                    pr = b
                else:
                    pr = cc
                out[y, x] = (raw[p + x] + pr) & 0xFF
        else:
            return -1
        p += stride
    return 0
