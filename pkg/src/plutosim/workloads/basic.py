"""Single-table workloads and the other short LUT chains.

Every ``prepare_*`` function returns a :class:`Prepared`: the kernel, the
per-group preload rows and a decoder turning result rows back into the
output byte string.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from ..lut import (LutProgram, build_binary_op_lut, build_lut, compress_with_mask, popcount)
from . import oracles as O
from .runner import Kernel, LaneCtx, split_rows


@dataclass
class Prepared:
    kernel: Kernel
    groups: list
    decode: Callable[[list], bytes]
    info: dict = field(default_factory=dict)


def _rows_of(outputs, n_bytes: int) -> bytes:
    """Concatenate the first result row of every group and trim padding."""
    return b"".join(bytes(o[0]) for o in outputs)[:n_bytes]


def _one_table(name: str, prog: LutProgram, data: np.ndarray, row_bytes: int) -> Prepared:
    def compute(c: LaneCtx):
        c.query(0, 0, 1)
    k = Kernel(name, 2, [prog], compute, [1])
    groups = [{0: r} for r in split_rows(data, row_bytes)]
    n = int(np.asarray(data).size)
    return Prepared(k, groups, lambda out: _rows_of(out, n))


# -- tables ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def add_lut(bits: int = 4) -> LutProgram:
    return build_binary_op_lut(lambda a, b: a + b, bits, bits + 1, lane_width=8,
                               provenance=f"add{bits}")


@lru_cache(maxsize=None)
def popcount_lut() -> LutProgram:
    return build_lut(popcount, 8, 4, lane_width=8, provenance="popcount8")


@lru_cache(maxsize=None)
def short_popcount_luts() -> tuple[LutProgram, LutProgram]:
    lo = compress_with_mask(build_lut(lambda x: popcount(x & 0x0F), 8, 4, 8, "popcount lo"), 0x0F)
    hi = compress_with_mask(build_lut(lambda x: popcount(x >> 4), 8, 4, 8, "popcount hi"), 0xF0)
    return lo, hi


@lru_cache(maxsize=None)
def binarize_lut(threshold: int = 128, masked: bool = True) -> LutProgram:
    full = build_lut(lambda p: O.binarize(p, threshold), 8, 8, 8, f"binarize>={threshold}")
    if not masked:
        return full
    if threshold & (threshold - 1) or not threshold:
        raise ValueError("the masked form needs a power-of-two threshold")
    # every pixel class that agrees on the bits at or above the threshold bit
    mask = 0xFF & ~(threshold - 1)
    return compress_with_mask(full, mask)


@lru_cache(maxsize=None)
def gamma_lut(gamma: float = 2.2) -> LutProgram:
    return build_lut(O.gamma_curve(gamma), 8, 8, 8)


@lru_cache(maxsize=None)
def bitwise_lut(op: str) -> LutProgram:
    g = O.BITWISE[op]
    if op == "NOT":
        return build_lut(lambda a: g(a, 0), 1, 1, lane_width=1, provenance="not")
    return build_binary_op_lut(g, 1, 1, lane_width=2, provenance=op.lower())


@lru_cache(maxsize=None)
def vmpc_luts(key_seed: int) -> tuple[LutProgram, LutProgram]:
    perm = O.vmpc_permutation(key_seed)
    return (build_lut(lambda x: perm[x], 8, 8, 8, f"vmpc P seed {key_seed}"),
            build_lut(lambda x: (perm[x] + 1) & 0xFF, 8, 8, 8, f"vmpc P+1 seed {key_seed}"))


# -- interleaving helpers ------------------------------------------------------------

def interleave_bits(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Bytes whose 2-bit lanes hold (a bit << 1 | b bit), bit order preserved."""
    ab = np.unpackbits(np.asarray(a, np.uint8), bitorder="little")
    bb = np.unpackbits(np.asarray(b, np.uint8), bitorder="little")
    return np.packbits(np.stack([bb, ab], axis=1).reshape(-1), bitorder="little")


def low_bits_of_pairs(data: np.ndarray) -> np.ndarray:
    """Inverse direction: keep bit 0 of every 2-bit lane."""
    bits = np.unpackbits(np.asarray(data, np.uint8), bitorder="little")[0::2]
    return np.packbits(bits, bitorder="little")


# -- workloads -------------------------------------------------------------------------

def prepare_vec_add(spec, inputs, row_bytes) -> Prepared:
    bits = spec["element_bits"]
    idx = (inputs["a"].astype(np.uint16) << bits | inputs["b"]).astype(np.uint8)
    return _one_table("vec_add_lut", add_lut(bits), idx, row_bytes)


def prepare_bitcount(spec, inputs, row_bytes) -> Prepared:
    return _one_table("bitcount", popcount_lut(), inputs["x"], row_bytes)


def prepare_binarize(spec, inputs, row_bytes) -> Prepared:
    return _one_table("binarize", binarize_lut(spec["threshold"]), inputs["x"], row_bytes)


def prepare_color_grade(spec, inputs, row_bytes) -> Prepared:
    return _one_table("color_grade", gamma_lut(spec["gamma"]), inputs["x"], row_bytes)


def prepare_bitwise(spec, inputs, row_bytes) -> Prepared:
    op = spec["op"]
    if op == "NOT":
        return _one_table("bitwise_NOT", bitwise_lut(op), inputs["a"], row_bytes)
    p = _one_table(f"bitwise_{op}", bitwise_lut(op), interleave_bits(inputs["a"], inputs["b"]),
                   row_bytes)
    n = inputs["a"].size
    inner = p.decode
    p.decode = lambda out: low_bits_of_pairs(np.frombuffer(inner(out), np.uint8)).tobytes()[:n]
    return p


def prepare_bitcount_short(spec, inputs, row_bytes) -> Prepared:
    lo, hi = short_popcount_luts()

    def compute(c: LaneCtx):
        c.query(0, 0, 1)
        c.query(1, 0, 2)
        c.ADD(1, 2, 3, 8)
    k = Kernel("bitcount_short", 4, [lo, hi], compute, [3])
    x = inputs["x"]
    groups = [{0: r} for r in split_rows(x, row_bytes)]
    return Prepared(k, groups, lambda out: _rows_of(out, x.size))


def prepare_vmpc(spec, inputs, row_bytes) -> Prepared:
    """Three dependent lookups: y = P[x], z = P[y] + 1, out = P[z]."""
    P, P1 = vmpc_luts(spec["key_seed"])

    def compute(c: LaneCtx):
        c.query(0, 0, 1)
        c.query(1, 1, 2)
        c.query(0, 2, 3)
    k = Kernel("vmpc", 4, [P, P1], compute, [3])
    x = inputs["x"]
    groups = [{0: r} for r in split_rows(x, row_bytes)]
    return Prepared(k, groups, lambda out: _rows_of(out, x.size))


# -- oracles ----------------------------------------------------------------------------

def oracle_basic(spec, inputs) -> bytes:
    n = spec.name
    if n == "vec_add_lut":
        return bytes(O.add4(int(a), int(b)) if spec["element_bits"] == 4 else int(a) + int(b)
                     for a, b in zip(inputs["a"], inputs["b"]))
    if n == "bitcount" or n == "bitcount_short":
        return bytes(O.popcount8(int(v)) for v in inputs["x"])
    if n == "binarize":
        return bytes(O.binarize(int(v), spec["threshold"]) for v in inputs["x"])
    if n == "color_grade":
        g = O.gamma_curve(spec["gamma"])
        return bytes(g(int(v)) for v in inputs["x"])
    if n == "bitwise":
        return O.bitwise(spec["op"], inputs["a"], inputs["b"]).tobytes()
    if n == "vmpc":
        perm = O.vmpc_permutation(spec["key_seed"])
        return bytes(O.vmpc(perm, int(v)) for v in inputs["x"])
    raise KeyError(n)

