"""The scalar references checked against independent implementations."""

import zlib
from fractions import Fraction
import math

import numpy as np
import pytest
from Crypto.Cipher import Salsa20
from hypothesis import given, strategies as st

from plutosim.workloads import oracles as O

CHECK = b"123456789"


def test_crc_catalogue_check_values():
    assert O.crc_bitserial(CHECK, O.CRC8) == 0xF4           # CRC-8/SMBUS
    assert O.crc_bitserial(CHECK, O.CRC16) == 0x29B1        # CRC-16/CCITT-FALSE
    assert O.crc_bitserial(CHECK, O.CRC32) == 0xCBF43926    # CRC-32/ISO-HDLC


@given(st.binary(max_size=300))
def test_crc32_matches_zlib(data):
    assert O.crc_bitserial(data, O.CRC32) == zlib.crc32(data)


@given(st.binary(min_size=32, max_size=32), st.binary(min_size=8, max_size=8),
       st.integers(1, 4))
def test_salsa20_matches_pycryptodome(key, nonce, blocks):
    ref = Salsa20.new(key=key, nonce=nonce).encrypt(bytes(64 * blocks))
    assert O.salsa20_keystream(key, nonce, blocks) == ref


def test_salsa20_core_zero_state():
    assert O.salsa20_core([0] * 16) == [0] * 16


@pytest.mark.parametrize("f", [7, 15])
@given(data=st.data())
def test_mul_q_is_floor_of_exact_product(f, data):
    a = data.draw(st.integers(0, (1 << (f + 1)) - 1))
    b = data.draw(st.integers(0, (1 << (f + 1)) - 1))
    exact = Fraction(O.to_signed(a, f + 1), 1 << f) * Fraction(O.to_signed(b, f + 1), 1 << f)
    want = math.floor(exact * (1 << f)) & ((1 << (f + 1)) - 1)
    assert O.mul_q(a, b, f) == want


def test_mul_q_minus_one_squared_wraps():
    assert O.mul_q(0x80, 0x80, 7) == 0x80


def test_popcount_and_binarize_points():
    assert O.popcount8(0xFF) == 8 and O.popcount8(0) == 0 and O.popcount8(0xA5) == 4
    assert O.binarize(127) == 0 and O.binarize(128) == 255


def test_gamma_endpoints_and_monotone():
    g = O.gamma_curve(2.2)
    vals = [g(v) for v in range(256)]
    assert vals[0] == 0 and vals[255] == 255
    assert all(x <= y for x, y in zip(vals, vals[1:]))


def test_vmpc_is_a_permutation_composition():
    p = O.vmpc_permutation(1)
    assert sorted(p) == list(range(256))
    out = [O.vmpc(p, x) for x in range(256)]
    assert sorted(out) == list(range(256))


def test_bnn_small_example():
    img = np.zeros((2, 64), np.uint8)
    img[1, :31] = 1          # 33 matches against the all-zero filter
    flt = np.zeros((2, 64), np.uint8)
    flt[1, :] = 1            # all-ones filter
    out = O.bnn_layer(img, flt)
    assert out.tolist() == [[1, 0], [1, 0]]
    img2 = np.zeros((1, 64), np.uint8)
    img2[0, :32] = 1         # exactly half: tie goes positive
    assert O.bnn_layer(img2, flt).tolist() == [[1, 1]]


def test_bitwise_reference():
    a = np.array([0b1100], np.uint8)
    b = np.array([0b1010], np.uint8)
    assert int(O.bitwise("XNOR", a, b)[0]) == 0b11111001
