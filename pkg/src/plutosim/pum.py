"""Bulk bitwise primitives that pLUTo composes with.

Ambit triple-row activation gives majority, hence AND/OR against constant
rows; dual-contact cells give NOT; DRISA shifts lanes by 1 or 8 bits. The
top rows of every compute subarray are reserved: three TRA operand rows,
the all-zero and all-one constants, even/odd bit masks and scratch rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import lanes as L
from .config import DeviceConfig
from .dram import Device
from .errors import UnsupportedAmount, WidthMismatch
from .sched import Schedule, schedule_parallel  # noqa: F401  (re-export)
from .trace import aap, act, pre, rbm, shift, tra

N_RESERVED = 16


@dataclass(frozen=True)
class Reserved:
    T: tuple       # TRA operands
    C0: int        # all zeros
    C1: int        # all ones
    EVEN: int      # 0x55.. pattern
    ODD: int       # 0xAA.. pattern
    X: tuple       # scratch

    @property
    def first(self) -> int:
        return self.T[0]


@lru_cache(maxsize=None)
def _reserved(rows: int) -> Reserved:
    b = rows - N_RESERVED
    return Reserved((b, b + 1, b + 2), b + 3, b + 4, b + 5, b + 6, tuple(range(b + 7, rows)))


def reserved(cfg: DeviceConfig) -> Reserved:
    return _reserved(cfg.rows_per_subarray)


def ensure_constants(dev: Device, s: int) -> None:
    """Host-write the constant rows of compute subarray ``s`` once."""
    done = getattr(dev, "_const_ready", None)
    if done is None:
        done = dev._const_ready = set()
    if s in done:
        return
    r = reserved(dev.cfg)
    nb = dev.cfg.row_size_bytes
    dev.write_row(s, r.C0, np.zeros(nb, np.uint8))
    dev.write_row(s, r.C1, np.full(nb, 0xFF, np.uint8))
    dev.write_row(s, r.EVEN, np.full(nb, 0x55, np.uint8))
    dev.write_row(s, r.ODD, np.full(nb, 0xAA, np.uint8))
    done.add(s)


# -- Ambit -------------------------------------------------------------------

def ambit_tra(dev: Device, s: int, a: int, b: int, c: int) -> None:
    dev.execute(tra(s, a, b, c))


def ambit_not(dev: Device, s: int, src: int, dst: int) -> None:
    if src == dst:
        # dual-contact NOT needs a distinct target; bounce through T0
        t0 = reserved(dev.cfg).T[0]
        dev.execute(aap(s, src, t0, negate=True))
        dev.execute(aap(s, t0, dst))
        return
    dev.execute(aap(s, src, dst, negate=True))


def row_copy(dev: Device, s: int, src: int, dst: int) -> None:
    """In-subarray copy (RowClone-style AAP)."""
    if src != dst:
        dev.execute(aap(s, src, dst))


def _and_or(dev: Device, s: int, a: int, b: int, dst: int, const: int) -> None:
    ensure_constants(dev, s)
    t0, t1, t2 = reserved(dev.cfg).T
    dev.execute(aap(s, a, t0))
    dev.execute(aap(s, b, t1))
    dev.execute(aap(s, const, t2))
    dev.execute(tra(s, t0, t1, t2))
    dev.execute(aap(s, t0, dst))


def ambit_and(dev: Device, s: int, a: int, b: int, dst: int) -> None:
    _and_or(dev, s, a, b, dst, reserved(dev.cfg).C0)


def ambit_or(dev: Device, s: int, a: int, b: int, dst: int) -> None:
    _and_or(dev, s, a, b, dst, reserved(dev.cfg).C1)


def ambit_xor(dev: Device, s: int, a: int, b: int, dst: int) -> None:
    """(a OR b) AND NOT (a AND b)."""
    x = reserved(dev.cfg).X
    ambit_and(dev, s, a, b, x[0])
    ambit_or(dev, s, a, b, x[1])
    ambit_not(dev, s, x[0], x[0])
    ambit_and(dev, s, x[1], x[0], dst)


def ambit_xnor(dev: Device, s: int, a: int, b: int, dst: int) -> None:
    ambit_xor(dev, s, a, b, dst)
    ambit_not(dev, s, dst, dst)


# -- DRISA shifts --------------------------------------------------------------

def drisa_shift(dev: Device, s: int, src: int, dst: int, amount: int, left: bool,
                width: int) -> None:
    if amount not in (1, 8):
        raise UnsupportedAmount(f"in-memory shifts move 1 or 8 bits, not {amount}")
    dev.execute(shift(s, src, dst, amount, left, width))


def shift_steps(k: int) -> list[int]:
    """Decomposition of a k-bit shift into 8-bit and 1-bit steps."""
    return [8] * (k // 8) + [1] * (k % 8)


def shift_by(dev: Device, s: int, src: int, dst: int, k: int, left: bool, width: int) -> None:
    if k == 0:
        row_copy(dev, s, src, dst)
        return
    cur = src
    for amount in shift_steps(k):
        dev.execute(shift(s, cur, dst, amount, left, width))
        cur = dst


# -- LISA --------------------------------------------------------------------

def lisa_rbm(dev: Device, src: tuple[int, int], dst: tuple[int, int]) -> None:
    """Copy one row between subarrays of a bank over the row-buffer link."""
    s_sub, s_row = src
    d_sub, d_row = dst
    dev.execute(act(s_sub, s_row))
    dev.execute(rbm(s_sub, d_sub, d_row))
    dev.execute(pre(s_sub))
    dev.execute(pre(d_sub))


# -- XOR through a 4-entry table ----------------------------------------------------

def lut_xor(dev: Device, s: int, a: int, b: int, dst: int, lut_sub: int) -> None:
    """XOR of two plain rows via a 4-entry table over 2-bit lanes.

    Even bits: a's bit is moved up one place inside each 2-bit lane and OR-ed
    with b's bit, forming the lane index (a_i, b_i); odd bits are handled the
    same way with b moved down. Two queries and a final shift/OR rebuild the row.
    """
    from . import subarray as P
    from .lut import xor_pair_lut

    prog = xor_pair_lut()
    r = reserved(dev.cfg)
    x = r.X
    ensure_constants(dev, s)
    P.ensure_loaded(dev, lut_sub, prog)
    # even bit positions
    ambit_and(dev, s, a, r.EVEN, x[2])
    drisa_shift(dev, s, x[2], x[2], 1, True, 2)
    ambit_and(dev, s, b, r.EVEN, x[3])
    ambit_or(dev, s, x[2], x[3], x[2])
    P.pluto_query(dev, lut_sub, (s, x[2]), (s, x[4]))
    # odd bit positions
    P.ensure_loaded(dev, lut_sub, prog)
    ambit_and(dev, s, a, r.ODD, x[2])
    ambit_and(dev, s, b, r.ODD, x[3])
    drisa_shift(dev, s, x[3], x[3], 1, False, 2)
    ambit_or(dev, s, x[2], x[3], x[2])
    P.pluto_query(dev, lut_sub, (s, x[2]), (s, x[5]))
    drisa_shift(dev, s, x[5], x[5], 1, True, 2)
    ambit_or(dev, s, x[4], x[5], dst)


# -- Kogge-Stone ---------------------------------------------------------------

def ksa_add(dev: Device, s: int, a: int, b: int, dst: int, width: int,
            xor: str = "ambit", lut_sub: int | None = None) -> None:
    """Lane-wise a + b mod 2**width with a parallel-prefix carry network.

    ``xor`` picks the XOR primitive: ``"ambit"`` (AND/OR/NOT composite) or
    ``"lut"`` (4-entry table query, needs ``lut_sub`` in the same bank).
    """
    if width & (width - 1):
        raise WidthMismatch(f"adder lane width must be a power of two, got {width}")
    L.check_width(width, dev.cfg.row_size_bytes)
    if xor == "lut":
        if lut_sub is None:
            raise ValueError("the table XOR path needs a LUT subarray")
        do_xor = lambda x_, y_, d_: lut_xor(dev, s, x_, y_, d_, lut_sub)  # noqa: E731
    else:
        do_xor = lambda x_, y_, d_: ambit_xor(dev, s, x_, y_, d_)  # noqa: E731
    x = reserved(dev.cfg).X
    P0, G, Pr = x[6], x[7], x[8]
    # prefix-step scratch: dst when it aliases neither input, else X1 (only
    # the XOR steps use X1, and they run before and after the prefix loop)
    tmp = dst if dst not in (a, b) else x[1]
    ambit_and(dev, s, a, b, G)
    do_xor(a, b, P0)
    row_copy(dev, s, P0, Pr)
    d = 1
    while d < width:
        shift_by(dev, s, G, tmp, d, True, width)
        ambit_and(dev, s, Pr, tmp, tmp)
        ambit_or(dev, s, G, tmp, G)
        if 2 * d < width:
            shift_by(dev, s, Pr, tmp, d, True, width)
            ambit_and(dev, s, Pr, tmp, Pr)
        d *= 2
    shift_by(dev, s, G, G, 1, True, width)
    do_xor(P0, G, dst)


def ksa_sub(dev: Device, s: int, a: int, b: int, dst: int, width: int,
            one_row: int, **kw) -> None:
    """a - b as a + NOT b + 1; ``one_row`` holds the value 1 in every lane."""
    nb = dst if dst != a else reserved(dev.cfg).X[5]
    ambit_not(dev, s, b, nb)
    ksa_add(dev, s, a, nb, dst, width, **kw)
    ksa_add(dev, s, dst, one_row, dst, width, **kw)
