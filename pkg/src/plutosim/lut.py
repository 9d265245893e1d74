"""LUT compiler: tabulation, masked compression, large-LUT partitioning and
the on-disk container.

A program's lanes are ``lane_width`` bits wide at query time; the source
index sits in the low ``in_width`` bits of a lane (high bits zero-padded)
and every stored entry fits in ``out_width`` bits.
"""

from __future__ import annotations

import math
import struct
from functools import lru_cache
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

from .errors import (DomainTooLarge, InputError, NotClassConstant, RangeOverflow)

MAX_IN_WIDTH = 16
MAGIC = b"PLUT"
VERSION = 1


def _pow2_at_least(n: int) -> int:
    w = 1
    while w < n:
        w *= 2
    return w


@dataclass(frozen=True)
class LutProgram:
    entries: tuple
    in_width: int
    out_width: int
    lane_width: int
    match_mask: int
    keys: Optional[tuple] = None      # one comparand per stored row for masked tables
    S: int = 0
    R: int = 0
    provenance: str = ""

    def __post_init__(self):
        if self.in_width > self.lane_width or self.out_width > self.lane_width:
            raise InputError(f"lane width {self.lane_width} cannot hold {self.in_width}-bit "
                             f"indices and {self.out_width}-bit entries")
        if self.keys is not None and len(self.keys) != len(self.entries):
            raise InputError("masked table needs one key per entry")

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def masked(self) -> bool:
        return self.keys is not None

    @property
    def effective_mask(self) -> int:
        """Bits compared per lane: the match mask plus every pad bit above the index."""
        lane = (1 << self.lane_width) - 1
        return (self.match_mask & ((1 << self.in_width) - 1)) | (lane & ~((1 << self.in_width) - 1))

    def lookup(self, x: int) -> int:
        """Scalar reference semantics, including the no-match case (0)."""
        m = self.effective_mask
        if self.keys is None:
            return self.entries[x] if 0 <= x < self.size else 0
        for k, v in zip(self.keys, self.entries):
            if (x & m) == (k & m):
                return v
        return 0

    def partition(self, k: int, rows: int) -> "LutProgram":
        """Entries of partition ``k`` re-indexed from zero."""
        base = k * rows
        part = self.entries[base:base + rows]
        return replace(self, entries=part, in_width=self.R, S=0,
                       provenance=f"{self.provenance} [part {k}]")


def _check_range(values, out_width: int, signed: bool, what: str) -> tuple:
    lo, hi = (-(1 << (out_width - 1)), 1 << (out_width - 1)) if signed else (0, 1 << out_width)
    out = []
    for i, v in enumerate(values):
        v = int(v)
        if not lo <= v < hi:
            raise RangeOverflow(f"{what}: f({i}) = {v} does not fit in {out_width} bits")
        out.append(v & ((1 << out_width) - 1))
    return tuple(out)


def build_lut(f: Callable[[int], int], in_width: int, out_width: int,
              lane_width: Optional[int] = None, provenance: str = "",
              signed: bool = False) -> LutProgram:
    """Tabulate ``f`` over ``[0, 2**in_width)``; signed outputs are stored in two's complement."""
    if in_width < 0 or in_width > MAX_IN_WIDTH:
        raise DomainTooLarge(f"in_width {in_width} exceeds the {MAX_IN_WIDTH}-bit domain cap")
    if out_width < 1 or out_width > 64:
        raise InputError(f"out_width must be in 1..64, got {out_width}")
    lane = lane_width or _pow2_at_least(max(in_width, out_width))
    name = provenance or getattr(f, "__name__", "f")
    entries = _check_range((f(i) for i in range(1 << in_width)), out_width, signed, name)
    return LutProgram(entries, in_width, out_width, lane, (1 << in_width) - 1,
                      provenance=name)


def build_binary_op_lut(g: Callable[[int, int], int], operand_width: int, out_width: int,
                        lane_width: Optional[int] = None, provenance: str = "",
                        signed: bool = False) -> LutProgram:
    """Index is ``a << operand_width | b``."""
    if 2 * operand_width > MAX_IN_WIDTH:
        raise DomainTooLarge(f"two {operand_width}-bit operands exceed the {MAX_IN_WIDTH}-bit cap")
    w = operand_width
    m = (1 << w) - 1
    name = provenance or getattr(g, "__name__", "g")
    return build_lut(lambda i: g(i >> w, i & m), 2 * w, out_width, lane_width, name, signed)


def compress_with_mask(lut: LutProgram, mask: int) -> LutProgram:
    """One stored row per class of indices that agree on the ``mask`` bits."""
    if lut.masked:
        raise InputError("table is already compressed")
    mask &= (1 << lut.in_width) - 1
    classes: dict[int, int] = {}
    for i, v in enumerate(lut.entries):
        key = i & mask
        if key in classes and classes[key] != v:
            raise NotClassConstant(
                f"{lut.provenance}: entries {key} and {i} share a class but differ ({classes[key]} vs {v})")
        classes.setdefault(key, v)
    keys = tuple(sorted(classes))
    return replace(lut, entries=tuple(classes[k] for k in keys), keys=keys, match_mask=mask,
                   provenance=f"{lut.provenance} masked 0x{mask:x}")


@dataclass(frozen=True)
class PartitionRecipe:
    """Source preparation for a split table: XOR with ``k << R`` per partition."""
    S: int
    R: int
    xor_constants: tuple = field(default=())


def partition_large(lut: LutProgram, rows_per_subarray: int) -> tuple[LutProgram, PartitionRecipe]:
    if rows_per_subarray & (rows_per_subarray - 1):
        raise InputError("rows_per_subarray must be a power of two to split indices")
    if lut.masked:
        raise InputError("masked tables are stored whole")
    if lut.size <= rows_per_subarray:
        return replace(lut, S=0, R=lut.in_width), PartitionRecipe(0, lut.in_width, (0,))
    S = math.ceil(math.log2(lut.size / rows_per_subarray))
    R = int(math.log2(rows_per_subarray))
    prog = replace(lut, S=S, R=R)
    return prog, PartitionRecipe(S, R, tuple(k << R for k in range(1 << S)))


# -- container ---------------------------------------------------------------

_HEAD = struct.Struct("<4sHBBBBBBQI")   # magic ver in out lane S R flags mask n


def to_bytes(lut: LutProgram) -> bytes:
    prov = lut.provenance.encode("utf-8")
    flags = 1 if lut.masked else 0
    out = [_HEAD.pack(MAGIC, VERSION, lut.in_width, lut.out_width, lut.lane_width,
                      lut.S, lut.R, flags, lut.match_mask, lut.size)]
    if lut.masked:
        out.append(struct.pack(f"<{lut.size}I", *lut.keys))
    out.append(struct.pack(f"<{lut.size}Q", *lut.entries))
    out.append(struct.pack("<I", len(prov)) + prov)
    return b"".join(out)


def from_bytes(blob: bytes) -> LutProgram:
    try:
        magic, ver, inw, outw, lane, S, R, flags, mask, n = _HEAD.unpack_from(blob, 0)
        if magic != MAGIC:
            raise InputError("not a LUT container (bad magic)")
        if ver != VERSION:
            raise InputError(f"unsupported LUT container version {ver}")
        off = _HEAD.size
        keys = None
        if flags & 1:
            keys = struct.unpack_from(f"<{n}I", blob, off)
            off += 4 * n
        entries = struct.unpack_from(f"<{n}Q", blob, off)
        off += 8 * n
        (plen,) = struct.unpack_from("<I", blob, off)
        prov = blob[off + 4:off + 4 + plen].decode("utf-8")
        if off + 4 + plen != len(blob):
            raise InputError("trailing bytes in LUT container")
    except struct.error as exc:
        raise InputError(f"truncated LUT container: {exc}") from None
    return LutProgram(tuple(entries), inw, outw, lane, mask, keys, S, R, prov)


def to_text(lut: LutProgram) -> str:
    lines = [f"# {lut.provenance}",
             f"in_width = {lut.in_width}", f"out_width = {lut.out_width}",
             f"lane_width = {lut.lane_width}", f"match_mask = 0x{lut.match_mask:x}",
             f"S = {lut.S}", f"R = {lut.R}", f"entries = {lut.size}"]
    for i, v in enumerate(lut.entries):
        key = lut.keys[i] if lut.masked else i
        lines.append(f"{key:#x} -> {v:#x}")
    return "\n".join(lines) + "\n"


def save(lut: LutProgram, path) -> None:
    Path(path).write_bytes(to_bytes(lut))


def load(path) -> LutProgram:
    return from_bytes(Path(path).read_bytes())


# -- common tables -----------------------------------------------------------

def popcount(x: int) -> int:
    return bin(x).count("1")


@lru_cache(maxsize=None)
def primes_lut() -> LutProgram:
    primes = (2, 3, 5, 7)
    return build_lut(lambda i: primes[i], 2, 8, lane_width=8, provenance="first four primes")


@lru_cache(maxsize=None)
def xor_pair_lut() -> LutProgram:
    """4-entry table over a 2-bit lane holding (a bit, b bit)."""
    return build_binary_op_lut(lambda a, b: a ^ b, 1, 1, lane_width=2, provenance="xor")
