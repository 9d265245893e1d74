"""Scalar reference implementations. Each is written from the algorithm's
definition and shares no code with the in-memory kernels.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np


# -- arithmetic ------------------------------------------------------------------

def add4(a: int, b: int) -> int:
    return (a & 0xF) + (b & 0xF)


def to_signed(x: int, bits: int) -> int:
    x &= (1 << bits) - 1
    return x - (1 << bits) if x >> (bits - 1) else x


def mul_q(a: int, b: int, frac_bits: int) -> int:
    """Q1.f product, truncated toward minus infinity and wrapped to 1+f bits."""
    bits = frac_bits + 1
    p = to_signed(a, bits) * to_signed(b, bits)
    return (p >> frac_bits) & ((1 << bits) - 1)


BITWISE = {
    "AND": lambda a, b: a & b,
    "OR": lambda a, b: a | b,
    "XOR": lambda a, b: a ^ b,
    "XNOR": lambda a, b: 1 - (a ^ b),
    "NOT": lambda a, b: 1 - a,
}


def bitwise(op: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Bit-level op over uint8 byte arrays."""
    a = np.asarray(a, np.uint8)
    b = np.asarray(b, np.uint8)
    if op == "AND":
        return a & b
    if op == "OR":
        return a | b
    if op == "XOR":
        return a ^ b
    if op == "XNOR":
        return ~(a ^ b)
    if op == "NOT":
        return ~a
    raise KeyError(op)


def popcount8(x: int) -> int:
    n = 0
    while x:
        n += x & 1
        x >>= 1
    return n


# -- CRC --------------------------------------------------------------------------

@dataclass(frozen=True)
class CrcParams:
    name: str
    width: int
    poly: int
    init: int
    refin: bool
    refout: bool
    xorout: int


CRC8 = CrcParams("crc8", 8, 0x07, 0x00, False, False, 0x00)
CRC16 = CrcParams("crc16", 16, 0x1021, 0xFFFF, False, False, 0x0000)     # CCITT-FALSE
CRC32 = CrcParams("crc32", 32, 0x04C11DB7, 0xFFFFFFFF, True, True, 0xFFFFFFFF)
CRCS = {p.name: p for p in (CRC8, CRC16, CRC32)}


def _reflect(x: int, bits: int) -> int:
    out = 0
    for _ in range(bits):
        out = (out << 1) | (x & 1)
        x >>= 1
    return out


def crc_bitserial(data: bytes, p: CrcParams) -> int:
    """Polynomial division one message bit at a time."""
    top = 1 << (p.width - 1)
    mask = (1 << p.width) - 1
    reg = p.init
    for byte in data:
        if p.refin:
            byte = _reflect(byte, 8)
        for i in range(7, -1, -1):
            bit = (byte >> i) & 1
            fb = ((reg & top) != 0) ^ bit
            reg = (reg << 1) & mask
            if fb:
                reg ^= p.poly
    if p.refout:
        reg = _reflect(reg, p.width)
    return reg ^ p.xorout


# -- Salsa20 ------------------------------------------------------------------------

def _rotl(v: int, c: int) -> int:
    v &= 0xFFFFFFFF
    return ((v << c) | (v >> (32 - c))) & 0xFFFFFFFF


def salsa20_core(words: list[int], rounds: int = 20) -> list[int]:
    x = list(words)

    def qr(a, b, c, d):
        x[b] ^= _rotl(x[a] + x[d], 7)
        x[c] ^= _rotl(x[b] + x[a], 9)
        x[d] ^= _rotl(x[c] + x[b], 13)
        x[a] ^= _rotl(x[d] + x[c], 18)

    for _ in range(rounds // 2):
        qr(0, 4, 8, 12); qr(5, 9, 13, 1); qr(10, 14, 2, 6); qr(15, 3, 7, 11)
        qr(0, 1, 2, 3); qr(5, 6, 7, 4); qr(10, 11, 8, 9); qr(15, 12, 13, 14)
    return [(x[i] + words[i]) & 0xFFFFFFFF for i in range(16)]


SIGMA = b"expand 32-byte k"


def salsa20_input(key: bytes, nonce: bytes, counter: int) -> list[int]:
    """Initial 16-word state for a 256-bit key."""
    if len(key) != 32 or len(nonce) != 8:
        raise ValueError("Salsa20 needs a 32-byte key and an 8-byte nonce")
    c = struct.unpack("<4I", SIGMA)
    k = struct.unpack("<8I", key)
    n = struct.unpack("<2I", nonce)
    b = struct.unpack("<2I", struct.pack("<Q", counter))
    return [c[0], k[0], k[1], k[2], k[3], c[1], n[0], n[1],
            b[0], b[1], c[2], k[4], k[5], k[6], k[7], c[3]]


def salsa20_block(key: bytes, nonce: bytes, counter: int) -> bytes:
    return struct.pack("<16I", *salsa20_core(salsa20_input(key, nonce, counter)))


def salsa20_keystream(key: bytes, nonce: bytes, n_blocks: int, counter0: int = 0) -> bytes:
    return b"".join(salsa20_block(key, nonce, counter0 + i) for i in range(n_blocks))


# -- VMPC -----------------------------------------------------------------------------

def vmpc_permutation(seed: int) -> list[int]:
    rng = np.random.default_rng(seed)
    return [int(v) for v in rng.permutation(256)]


def vmpc(perm: list[int], x: int) -> int:
    """One-way function Q[x] = P[(P[P[x]] + 1) mod 256]."""
    return perm[(perm[perm[x]] + 1) & 0xFF]


# -- imaging ---------------------------------------------------------------------------

def binarize(pixel: int, threshold: int = 128) -> int:
    return 255 if pixel >= threshold else 0


def gamma_curve(gamma: float = 2.2):
    def grade(v: int) -> int:
        return int(round(255.0 * (v / 255.0) ** (1.0 / gamma)))
    grade.__name__ = f"gamma{gamma:g}"
    return grade


# -- binary neural network layer --------------------------------------------------------

def bnn_layer(images: np.ndarray, filters: np.ndarray) -> np.ndarray:
    """images: (N, 64) bits, filters: (F, 64) bits -> (N, F) in {0, 1}.

    Output is 1 when the XNOR match count reaches half the receptive field,
    the 0/1 encoding of sign(2 * popcount - 64) with ties going positive.
    """
    images = np.asarray(images, np.int64)
    filters = np.asarray(filters, np.int64)
    out = np.zeros((images.shape[0], filters.shape[0]), np.uint8)
    for n in range(images.shape[0]):
        for f in range(filters.shape[0]):
            matches = sum(1 for i in range(images.shape[1]) if images[n, i] == filters[f, i])
            out[n, f] = 1 if 2 * matches - images.shape[1] >= 0 else 0
    return out
