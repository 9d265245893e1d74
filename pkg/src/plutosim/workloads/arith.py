"""Multi-step workloads: fixed-point multiply, CRC, Salsa20 and a BNN layer.

These combine table queries with the Ambit/DRISA row primitives. Rows named
in the kernels are group-relative; the adders and XOR helpers use the
reserved scratch rows at the top of each compute subarray.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .. import lanes as L
from ..lut import LutProgram, build_binary_op_lut, build_lut, compress_with_mask, popcount
from . import oracles as O
from .basic import Prepared
from .runner import Kernel, LaneCtx


def _lane_groups(values: np.ndarray, width: int, row_bytes: int) -> list[np.ndarray]:
    """Split a 1-D array of lane values into per-row chunks (zero padded)."""
    n = L.check_width(width, row_bytes)
    values = np.asarray(values, np.uint64)
    g = -(-values.size // n) if values.size else 0
    buf = np.zeros(g * n, np.uint64)
    buf[:values.size] = values
    return [buf[i * n:(i + 1) * n] for i in range(g)]


def _row(values, width, row_bytes):
    return L.pack(values, width, row_bytes)


# -- Q-format multiply -------------------------------------------------------------

@lru_cache(maxsize=None)
def nibble_product_lut(a_signed: bool, b_signed: bool, lane: int) -> LutProgram:
    sa = (lambda v: O.to_signed(v, 4)) if a_signed else (lambda v: v)
    sb = (lambda v: O.to_signed(v, 4)) if b_signed else (lambda v: v)
    name = f"nibble product {'s' if a_signed else 'u'}{'s' if b_signed else 'u'}"
    return build_binary_op_lut(lambda x, y: sa(x) * sb(y), 4, lane, lane_width=lane,
                               provenance=name, signed=True)


def prepare_vec_mul_q(spec, inputs, row_bytes) -> Prepared:
    """Signed Q1.f product from nibble partial products.

    Operand a = sum a_i 16**i with the top nibble signed. Partials are looked
    up per nibble pair, summed per weight i + j, and folded Horner-style in a
    lane twice the operand width. The Q1.f result is bits [f, 2f] of the sum:
    a 1-bit left shift drops bit 2f+1, then a right shift by f+1 lands it.
    """
    f = spec["q_frac"]
    W = f + 1
    K = W // 4
    LW = 2 * W
    pairs = [(i, j) for i in range(K) for j in range(K)]
    tables = [nibble_product_lut(a, b, LW) for a in (False, True) for b in (False, True)]

    def table(i, j):
        return 2 * (i == K - 1) + (j == K - 1)

    P, S, ACC, OUT = K * K, K * K + 1, K * K + 2, K * K + 3

    def compute(c: LaneCtx):
        for k in range(2 * K - 2, -1, -1):
            target = ACC if k == 2 * K - 2 else S
            first = True
            for n, (i, j) in enumerate(pairs):
                if i + j != k:
                    continue
                if first:
                    c.query(table(i, j), n, target)
                    first = False
                else:
                    c.query(table(i, j), n, P)
                    c.ADD(target, P, target, LW)
            if k != 2 * K - 2:
                c.SHIFT(ACC, ACC, 4, True, LW)
                c.ADD(ACC, S, ACC, LW)
        c.SHIFT(ACC, ACC, 1, True, LW)
        c.SHIFT(ACC, OUT, W, False, LW)

    a = inputs["a"].astype(np.uint64)
    b = inputs["b"].astype(np.uint64)
    ga, gb = _lane_groups(a, LW, row_bytes), _lane_groups(b, LW, row_bytes)
    groups = []
    for xa, xb in zip(ga, gb):
        rows = {}
        for n, (i, j) in enumerate(pairs):
            idx = ((xa >> np.uint64(4 * i)) & np.uint64(15)) << np.uint64(4) \
                | ((xb >> np.uint64(4 * j)) & np.uint64(15))
            rows[n] = _row(idx, LW, row_bytes)
        groups.append(rows)
    kernel = Kernel(spec.label, K * K + 4, tables, compute, [OUT])
    n_el = a.size
    dt = np.uint8 if W == 8 else np.dtype("<u2")

    def decode(outputs):
        vals = np.concatenate([L.unpack(o[0], LW) for o in outputs])[:n_el] if outputs else []
        return np.asarray(vals, np.uint64).astype(dt).tobytes()
    return Prepared(kernel, groups, decode, {"host_index_rows": len(pairs)})


def oracle_vec_mul_q(spec, inputs) -> bytes:
    f = spec["q_frac"]
    dt = np.uint8 if f == 7 else np.dtype("<u2")
    out = [O.mul_q(int(x), int(y), f) for x, y in zip(inputs["a"], inputs["b"])]
    return np.asarray(out, np.uint64).astype(dt).tobytes()


# -- CRC ----------------------------------------------------------------------------

@lru_cache(maxsize=None)
def crc_table(name: str) -> LutProgram:
    """Byte-at-a-time update table in the register orientation of ``name``."""
    p = O.CRCS[name]
    w = p.width
    mask = (1 << w) - 1
    if p.refin:
        rpoly = int(f"{p.poly:0{w}b}"[::-1], 2)

        def entry(i):
            r = i
            for _ in range(8):
                r = (r >> 1) ^ rpoly if r & 1 else r >> 1
            return r
    else:
        def entry(i):
            r = i << (w - 8)
            for _ in range(8):
                r = ((r << 1) ^ p.poly) & mask if r >> (w - 1) else (r << 1) & mask
            return r
    return build_lut(entry, 8, w, lane_width=w, provenance=f"{name} byte table")


def _crc_step(name: str, reg: int, byte: int) -> int:
    p = O.CRCS[name]
    t = crc_table(name).entries
    w = p.width
    if p.refin:
        return t[(reg ^ byte) & 0xFF] ^ (reg >> 8)
    if w == 8:
        return t[reg ^ byte]
    return ((reg << 8) & ((1 << w) - 1)) ^ t[((reg >> (w - 8)) ^ byte) & 0xFF]


def crc_fold(name: str, raw_chunks, chunk_bytes: int) -> int:
    """Host-side reduction of zero-init chunk registers into a packet CRC.

    The update is linear, so the register after chunk c is the previous
    register pushed through ``chunk_bytes`` zero bytes XOR the chunk's own
    zero-init register.
    """
    p = O.CRCS[name]
    reg = p.init
    for raw in raw_chunks:
        for _ in range(chunk_bytes):
            reg = _crc_step(name, reg, 0)
        reg ^= int(raw)
    return reg ^ p.xorout


def prepare_crc(spec, inputs, row_bytes) -> Prepared:
    name = spec.name
    p = O.CRCS[name]
    w = p.width
    C = spec["chunk_bytes"]
    pk = inputs["packets"]
    if pk.shape[1] % C:
        raise ValueError(f"packet size {pk.shape[1]} is not a multiple of chunk size {C}")
    chunks = pk.reshape(-1, C)            # packet-major, chunk order preserved
    CRC, IDX, T, FF = C, C + 1, C + 2, C + 3
    prog = crc_table(name)

    def compute(c: LaneCtx):
        c.query(0, 0, CRC)
        for k in range(1, C):
            if p.refin:
                c.XOR(CRC, k, T)
                c.AND(T, FF, IDX)
                c.query(0, IDX, T)
                c.SHIFT(CRC, CRC, 8, False, w)
                c.XOR(CRC, T, CRC)
            elif w == 8:
                c.XOR(CRC, k, IDX)
                c.query(0, IDX, CRC)
            else:
                c.SHIFT(CRC, T, w - 8, False, w)
                c.XOR(T, k, IDX)
                c.query(0, IDX, T)
                c.SHIFT(CRC, CRC, 8, True, w)
                c.XOR(CRC, T, CRC)

    groups = []
    for k in range(C):
        for g, vals in enumerate(_lane_groups(chunks[:, k], w, row_bytes)):
            if k == 0:
                groups.append({})
            groups[g][k] = _row(vals, w, row_bytes)
    const = {FF: L.replicate(0xFF, w, row_bytes)} if p.refin else {}
    kernel = Kernel(name, C + 4, [prog], compute, [CRC], const)
    n_chunks, per_packet = chunks.shape[0], pk.shape[1] // C
    nb = w // 8

    def decode(outputs):
        raw = np.concatenate([L.unpack(o[0], w) for o in outputs])[:n_chunks]
        out = bytearray()
        for i in range(pk.shape[0]):
            v = crc_fold(name, raw[i * per_packet:(i + 1) * per_packet], C)
            out += int(v).to_bytes(nb, "little")
        return bytes(out)
    return Prepared(kernel, groups, decode, {"host_fold_chunks": n_chunks})


def oracle_crc(spec, inputs) -> bytes:
    p = O.CRCS[spec.name]
    return b"".join(O.crc_bitserial(bytes(row), p).to_bytes(p.width // 8, "little")
                    for row in inputs["packets"])


# -- Salsa20 ---------------------------------------------------------------------------

_ROUNDS = ((0, 4, 8, 12), (5, 9, 13, 1), (10, 14, 2, 6), (15, 3, 7, 11),
           (0, 1, 2, 3), (5, 6, 7, 4), (10, 11, 8, 9), (15, 12, 13, 14))


def prepare_salsa20(spec, inputs, row_bytes) -> Prepared:
    """One 32-bit lane per keystream block; row k holds state word k."""
    n_blocks = -(-spec["packets"] * spec["packet_bytes"] // 64)
    key, nonce = inputs["key"], inputs["nonce"]
    states = np.array([O.salsa20_input(key, nonce, i) for i in range(n_blocks)], np.uint64)
    X, T, U = 16, 32, 33

    def rotl_into(c: LaneCtx, r: int):
        c.SHIFT(T, U, r, True, 32)
        c.SHIFT(T, T, 32 - r, False, 32)
        c.OR(U, T, T)

    def compute(c: LaneCtx):
        for k in range(16):
            c.COPY(k, X + k)
        for _ in range(10):
            for a, b, cc, d in _ROUNDS:
                for dst, s1, s2, r in ((b, a, d, 7), (cc, b, a, 9), (d, cc, b, 13), (a, d, cc, 18)):
                    c.ADD(X + s1, X + s2, T, 32)
                    rotl_into(c, r)
                    c.XOR(X + dst, T, X + dst)
        for k in range(16):
            c.ADD(X + k, k, X + k, 32)

    groups = []
    for k in range(16):
        for g, vals in enumerate(_lane_groups(states[:, k], 32, row_bytes)):
            if k == 0:
                groups.append({})
            groups[g][k] = _row(vals, 32, row_bytes)
    kernel = Kernel("salsa20", 34, [], compute, [X + k for k in range(16)])
    n_out = spec["packets"] * spec["packet_bytes"]

    def decode(outputs):
        words = [np.concatenate([L.unpack(o[k], 32) for o in outputs])[:n_blocks]
                 for k in range(16)]
        blocks = np.stack(words, axis=1).astype("<u4")
        return blocks.tobytes()[:n_out]
    return Prepared(kernel, groups, decode)


def oracle_salsa20(spec, inputs) -> bytes:
    n = spec["packets"] * spec["packet_bytes"]
    return O.salsa20_keystream(inputs["key"], inputs["nonce"], -(-n // 64))[:n]


# -- binary neural network layer ---------------------------------------------------------

@lru_cache(maxsize=None)
def bnn_luts() -> tuple[LutProgram, LutProgram, LutProgram]:
    def xnor4(v):
        # four (image bit, filter bit) pairs -> 4-bit match mask
        return sum(((~((v >> (2 * i + 1)) ^ (v >> (2 * i)))) & 1) << i for i in range(4))
    xn = build_lut(xnor4, 8, 4, 8, "xnor of 4 bit pairs")
    pc = build_lut(popcount, 4, 4, 8, "popcount4")
    # count in 0..64; >= 32 exactly when bit 5 or bit 6 is set
    th = compress_with_mask(build_lut(lambda v: int((v & 0x7F) >= 32), 8, 1, 8, "sign"), 0x60)
    return xn, pc, th


def bnn_pair_bytes(images: np.ndarray, filt: np.ndarray) -> np.ndarray:
    """(N, 16) bytes: byte k holds pixels 4k..4k+3 as (image bit, filter bit) pairs."""
    img = np.asarray(images, np.uint8).reshape(-1, 16, 4)
    fl = np.broadcast_to(np.asarray(filt, np.uint8).reshape(16, 4), img.shape)
    sh = np.arange(4, dtype=np.uint8) * 2
    return ((img << (sh + 1)) | (fl << sh)).sum(axis=2, dtype=np.uint16).astype(np.uint8)


def prepare_bnn(spec, inputs, row_bytes) -> Prepared:
    images, filters = inputs["images"], inputs["filters"]
    if images.shape[1] != 64 or filters.shape[1] != 64:
        raise ValueError("the BNN layer expects 64-bit (8x8) inputs and filters")
    F = filters.shape[0]
    M, CNT, ACC = 16 * F, 16 * F + 1, 16 * F + 2
    OUT = [16 * F + 3 + f for f in range(F)]

    def compute(c: LaneCtx):
        for f in range(F):
            for k in range(16):
                c.query(0, 16 * f + k, M)
                c.query(1, M, ACC if k == 0 else CNT)
                if k:
                    c.ADD(ACC, CNT, ACC, 8)
            c.query(2, ACC, OUT[f])

    pairs = [bnn_pair_bytes(images, filters[f]) for f in range(F)]
    groups = []
    for f in range(F):
        for k in range(16):
            for g, vals in enumerate(_lane_groups(pairs[f][:, k], 8, row_bytes)):
                if f == 0 and k == 0:
                    groups.append({})
                groups[g][16 * f + k] = _row(vals, 8, row_bytes)
    kernel = Kernel("bnn_layer", 16 * F + 3 + F, list(bnn_luts()), compute, OUT)
    n = images.shape[0]

    def decode(outputs):
        cols = [np.concatenate([np.asarray(o[f]) for o in outputs])[:n] for f in range(F)]
        return np.stack(cols, axis=1).astype(np.uint8).tobytes()
    return Prepared(kernel, groups, decode)


def oracle_bnn(spec, inputs) -> bytes:
    return O.bnn_layer(inputs["images"], inputs["filters"]).tobytes()
