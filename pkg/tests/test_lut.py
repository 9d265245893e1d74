import pytest
from hypothesis import given, settings, strategies as st

from plutosim import lut as LT
from plutosim.errors import DomainTooLarge, InputError, NotClassConstant, RangeOverflow


def test_build_tabulates_function():
    t = LT.build_lut(lambda x: x * x, 4, 8)
    assert t.entries == tuple(x * x for x in range(16))
    assert t.lane_width == 8 and t.size == 16


def test_range_overflow_is_reported():
    with pytest.raises(RangeOverflow, match="f\\(16\\) = 256"):
        LT.build_lut(lambda x: x * x, 8, 8)


def test_domain_cap():
    with pytest.raises(DomainTooLarge):
        LT.build_lut(lambda x: 0, 17, 8)
    with pytest.raises(DomainTooLarge):
        LT.build_binary_op_lut(lambda a, b: 0, 9, 8)


def test_signed_entries_two_complement():
    t = LT.build_lut(lambda x: x - 8, 4, 4, signed=True)
    assert t.entries[0] == 8 and t.entries[15] == 7


def test_binary_op_index_layout():
    t = LT.build_binary_op_lut(lambda a, b: a - b + 15, 4, 5)
    assert t.lookup(3 << 4 | 9) == 3 - 9 + 15


def test_primes_table():
    assert LT.primes_lut().entries == (2, 3, 5, 7)


@given(st.integers(0, 255), st.sampled_from([0x80, 0xC0, 0xF0, 0xE0]))
def test_masked_lookup_matches_full(x, mask):
    full = LT.build_lut(lambda v: v & mask, 8, 8)
    small = LT.compress_with_mask(full, mask)
    assert small.size == 1 << bin(mask).count("1")
    assert small.lookup(x) == full.lookup(x)


def test_mask_requires_class_constant():
    with pytest.raises(NotClassConstant):
        LT.compress_with_mask(LT.build_lut(lambda v: v, 8, 8), 0xF0)


def test_partition_large_split():
    t = LT.build_lut(lambda x: x & 0xFF, 12, 8, 16)
    split, recipe = LT.partition_large(t, 512)
    assert (split.S, split.R) == (3, 9)
    assert recipe.xor_constants == tuple(k << 9 for k in range(8))
    part = split.partition(5, 512)
    assert part.entries[0] == t.entries[5 * 512]


def test_partition_small_is_whole():
    t = LT.build_lut(lambda x: x, 8, 8)
    split, recipe = LT.partition_large(t, 512)
    assert split.S == 0 and recipe.xor_constants == (0,)


@given(in_w=st.integers(1, 10), seed=st.integers(0, 1000), masked=st.booleans())
@settings(max_examples=40)
def test_container_round_trip(in_w, seed, masked):
    f = (lambda v: (v * seed) & 0xFF) if not masked else (lambda v: (v >> (in_w - 1)) * 3)
    t = LT.build_lut(f, in_w, 8, 16, f"t{seed}")
    if masked:
        t = LT.compress_with_mask(t, 1 << (in_w - 1))
    assert LT.from_bytes(LT.to_bytes(t)) == t


def test_container_rejects_garbage(tmp_path):
    with pytest.raises(InputError, match="magic"):
        LT.from_bytes(b"NOPE" + bytes(40))
    blob = LT.to_bytes(LT.primes_lut())
    with pytest.raises(InputError, match="truncated"):
        LT.from_bytes(blob[:15])
    with pytest.raises(InputError, match="trailing"):
        LT.from_bytes(blob + b"x")
    LT.save(LT.primes_lut(), tmp_path / "p.lut")
    assert LT.load(tmp_path / "p.lut") == LT.primes_lut()


def test_text_form_lists_entries():
    text = LT.to_text(LT.primes_lut())
    assert "0x3 -> 0x7" in text and "entries = 4" in text
