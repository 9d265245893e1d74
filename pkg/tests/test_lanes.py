import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plutosim import lanes as L
from plutosim.errors import WidthMismatch

WIDTHS = [1, 2, 4, 8, 16, 32, 64]


@given(width=st.sampled_from(WIDTHS), data=st.data())
def test_pack_unpack_round_trip(width, data):
    row_bytes = 16
    n = row_bytes * 8 // width
    hi = (1 << width) - 1
    vals = data.draw(st.lists(st.integers(0, hi), min_size=n, max_size=n))
    row = L.pack(vals, width, row_bytes)
    assert row.dtype == np.uint8 and row.size == row_bytes
    assert [int(v) for v in L.unpack(row, width)] == vals


def test_lane_order_is_little_endian():
    row = L.pack([1, 2, 3, 4], 4, 2)
    assert list(row) == [0x21, 0x43]
    assert list(L.unpack(np.array([0x34, 0x12], np.uint8), 16)) == [0x1234]


@pytest.mark.parametrize("width", [0, 3, 65, 128])
def test_bad_width(width):
    with pytest.raises(WidthMismatch):
        L.check_width(width, 8)


def test_replicate():
    assert list(L.unpack(L.replicate(5, 8, 4), 8)) == [5, 5, 5, 5]


@given(width=st.sampled_from([2, 4, 8, 16, 32]), amount=st.integers(0, 8), left=st.booleans(),
       seed=st.integers(0, 2**32 - 1))
@settings(max_examples=60)
def test_shift_lanes_matches_scalar(width, amount, left, seed):
    rng = np.random.default_rng(seed)
    row = rng.integers(0, 256, 16, dtype=np.uint8)
    got = L.unpack(L.shift_lanes(row, width, amount, left), width)
    mask = (1 << width) - 1
    want = [((int(v) << amount) & mask) if left else (int(v) >> amount) for v in L.unpack(row, width)]
    assert [int(v) for v in got] == want


def test_majority():
    a, b, c = (np.array([x], np.uint8) for x in (0b1100, 0b1010, 0b0110))
    assert int(L.maj(a, b, c)[0]) == 0b1110
