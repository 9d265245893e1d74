import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plutosim.config import get_profile
from plutosim.dram import Device
from plutosim.errors import GSAInvalidLUT, LUTNotLoaded, NotLinked, PartitionTooSmall, WidthMismatch
from plutosim.lut import build_lut, compress_with_mask, primes_lut
from plutosim.subarray import (load_lut, load_lut_large, pluto_query, pluto_query_large,
                               pluto_query_masked, reload, stage_lut_image)

VARIANTS = ["BSA", "GSA", "GMC"]


def _dev(variant, row_bytes=64):
    return Device(get_profile("paper-DDR4").replace(row_size_bytes=row_bytes, variant=variant))


@pytest.mark.parametrize("variant", VARIANTS)
def test_primes_example(variant):
    d = _dev(variant)
    load_lut(d, primes_lut(), 1)
    d.write_lanes(0, 0, [1, 0, 1, 3] + [0] * 60, 8)
    pluto_query(d, 1, (0, 0), (0, 1))
    assert list(d.read_lanes(0, 1, 8)[:4]) == [3, 2, 3, 7]


@given(seed=st.integers(0, 2**32 - 1), variant=st.sampled_from(VARIANTS),
       bits=st.sampled_from([2, 4, 8]))
@settings(max_examples=30, deadline=None)
def test_query_applies_table_per_lane(seed, variant, bits):
    rng = np.random.default_rng(seed)
    table = [int(v) for v in rng.integers(0, 256, 1 << bits)]
    t = build_lut(lambda x: table[x], bits, 8, 8)
    d = _dev(variant)
    load_lut(d, t, 1)
    x = rng.integers(0, 1 << bits, 64)
    d.write_lanes(0, 0, x, 8)
    pluto_query(d, 1, (0, 0), (0, 1))
    assert [int(v) for v in d.read_lanes(0, 1, 8)] == [table[int(v)] for v in x]


def test_out_of_range_source_gives_zero():
    d = _dev("BSA")
    load_lut(d, primes_lut(), 1)
    d.write_lanes(0, 0, [4, 200] + [1] * 62, 8)
    pluto_query(d, 1, (0, 0), (0, 1))
    assert list(d.read_lanes(0, 1, 8)[:3]) == [0, 0, 3]


@pytest.mark.parametrize("variant", ["BSA", "GMC"])
def test_lut_rows_survive_queries(variant):
    d = _dev(variant)
    load_lut(d, primes_lut(), 1)
    before = [d.peek(1, r).copy() for r in range(4)]
    for _ in range(3):
        pluto_query(d, 1, (0, 0), (0, 1))
    assert all(np.array_equal(d.peek(1, r), b) for r, b in enumerate(before))


def test_gsa_requery_without_reload_fails():
    d = _dev("GSA")
    load_lut(d, primes_lut(), 1)
    pluto_query(d, 1, (0, 0), (0, 1))
    with pytest.raises(LUTNotLoaded):
        pluto_query(d, 1, (0, 0), (0, 1))


def test_gsa_raw_sweep_on_destroyed_rows_fails():
    from plutosim.trace import act, row_sweep
    d = _dev("GSA")
    load_lut(d, primes_lut(), 1)
    pluto_query(d, 1, (0, 0), (0, 1))
    d.execute(act(0, 0))
    with pytest.raises(GSAInvalidLUT):
        d.execute(row_sweep(1, 0, 4, 0, 8, 0xFF))


def test_gsa_reload_from_staging():
    d = _dev("GSA")
    load_lut(d, primes_lut(), 1)
    stage_lut_image(d, primes_lut(), 2, lut_sub=1)
    d.write_lanes(0, 0, [3] * 64, 8)
    pluto_query(d, 1, (0, 0), (0, 1))
    reload(d, 1)
    pluto_query(d, 1, (0, 0), (0, 2))
    assert (d.read_lanes(0, 2, 8) == 7).all()
    assert d.histogram["RBM"] >= 4


def test_width_mismatch():
    d = _dev("BSA")
    load_lut(d, primes_lut(), 1)
    with pytest.raises(WidthMismatch):
        pluto_query(d, 1, (0, 0), (0, 1), width=16)


def test_lut_must_share_bank_with_destination():
    d = _dev("BSA")
    load_lut(d, primes_lut(), 1)
    with pytest.raises(NotLinked):
        pluto_query(d, 1, (0, 0), (d.cfg.subarrays_per_bank, 1))


def test_masked_query_two_rows():
    full = build_lut(lambda p: 255 if p >= 128 else 0, 8, 8, 8)
    t = compress_with_mask(full, 0x80)
    d = _dev("BSA")
    load_lut(d, t, 1)
    d.write_lanes(0, 0, list(range(0, 256, 4)), 8)
    pluto_query_masked(d, 1, (0, 0), (0, 1))
    assert [int(v) for v in d.read_lanes(0, 1, 8)] == [full.lookup(x) for x in range(0, 256, 4)]
    assert d.sweep_activations == 2


@pytest.mark.parametrize("variant", VARIANTS)
def test_large_table_split_query(variant):
    cfg = get_profile("paper-DDR4").replace(row_size_bytes=128, rows_per_subarray=128,
                                            variant=variant)
    d = Device(cfg)
    t = build_lut(lambda x: (x * 7 + 3) & 0xFF, 9, 8, 16)
    lay = load_lut_large(d, t, [10, 11, 12, 13], [20, 21, 22, 23])
    assert len(lay.parts) == 4
    from plutosim import pum
    pum.ensure_constants(d, 0)
    x = np.random.default_rng(5).integers(0, 512, 64)
    d.write_lanes(0, 0, x, 16)
    pluto_query_large(d, lay, (0, 0), (0, 1))
    assert [int(v) for v in d.read_lanes(0, 1, 16)] == [t.lookup(int(v)) for v in x]


def test_large_table_needs_enough_partitions():
    cfg = get_profile("paper-DDR4").replace(row_size_bytes=64, rows_per_subarray=128)
    t = build_lut(lambda x: x & 0xFF, 9, 8, 16)
    with pytest.raises(PartitionTooSmall):
        load_lut_large(Device(cfg), t, [10, 11], [20, 21])
