"""Row <-> lane conversion.

A row is a ``uint8`` array. Lane ``j`` of width ``w`` covers row bits
``[j*w, (j+1)*w)``, where row bit ``k`` is bit ``k % 8`` of byte ``k // 8``.
For byte-multiple widths this is plain little-endian element order.
"""

from __future__ import annotations

import numpy as np

from .errors import WidthMismatch

_VIEW = {8: "<u1", 16: "<u2", 32: "<u4", 64: "<u8"}


def check_width(width: int, row_bytes: int) -> int:
    """Return the lane count, raising WidthMismatch if ``width`` does not tile the row."""
    bits = row_bytes * 8
    if width <= 0 or width > 64 or bits % width:
        raise WidthMismatch(f"lane width {width} does not divide a {bits}-bit row")
    return bits // width


def lane_mask(width: int) -> int:
    return (1 << width) - 1


def unpack(row: np.ndarray, width: int) -> np.ndarray:
    """Lane values of ``row`` as a uint64 array."""
    row = np.asarray(row, dtype=np.uint8)
    check_width(width, row.size)
    if width in _VIEW:
        return row.view(_VIEW[width]).astype(np.uint64)
    bits = np.unpackbits(row, bitorder="little").reshape(-1, width).astype(np.uint64)
    weights = np.left_shift(np.uint64(1), np.arange(width, dtype=np.uint64))
    return (bits * weights).sum(axis=1, dtype=np.uint64)


def pack(values, width: int, row_bytes: int) -> np.ndarray:
    """Inverse of :func:`unpack`; values are truncated to ``width`` bits."""
    lanes = check_width(width, row_bytes)
    values = np.asarray(values, dtype=np.uint64)
    if values.size != lanes:
        raise WidthMismatch(f"expected {lanes} lanes of width {width}, got {values.size}")
    if width < 64:
        values = values & np.uint64(lane_mask(width))
    if width in _VIEW:
        return values.astype(_VIEW[width]).view(np.uint8).copy()
    shifts = np.arange(width, dtype=np.uint64)
    bits = ((values[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits.reshape(-1), bitorder="little")


def replicate(value: int, width: int, row_bytes: int) -> np.ndarray:
    """A row holding ``value`` in every lane (vertical LUT layout)."""
    lanes = check_width(width, row_bytes)
    return pack(np.full(lanes, value, dtype=np.uint64), width, row_bytes)


def shift_lanes(row: np.ndarray, width: int, amount: int, left: bool) -> np.ndarray:
    """Logical intra-lane shift; bits shifted past the lane edge are dropped."""
    values = unpack(row, width)
    amt = np.uint64(amount)
    values = (values << amt) if left else (values >> amt)
    return pack(values, width, row.size)


def maj(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return (a & b) | (b & c) | (c & a)
