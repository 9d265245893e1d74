import pytest
from hypothesis import given, settings, strategies as st

from _support import random_parallel_run
from plutosim.config import get_profile
from plutosim.dram import Device
from plutosim.sched import _floor
from plutosim.trace import act, pre


def test_floor_basics():
    assert _floor([], 5.0, 10.0) == 5.0
    assert _floor([1.0, 2.0, 3.0], 0.0, 10.0) == 3.0
    assert _floor([1.0, 2.0, 3.0, 4.0], 0.0, 10.0) == 11.0


def test_four_activation_window_enforced():
    cfg = get_profile("paper-DDR4").replace(row_size_bytes=64, tFAW=40.0)
    d = Device(cfg)
    with d.deferred() as plan:
        for i in range(8):
            with plan.lane(i):
                s = i * cfg.subarrays_per_bank
                d.execute(act(s, 0))
                d.execute(pre(s))
    t = sorted(c.issue_time for c in d.trace if c.kind == "ACT")
    assert all(t[i + 4] - t[i] >= cfg.tFAW - 1e-9 for i in range(len(t) - 4))


def test_single_lane_matches_serial():
    cfg = get_profile("paper-DDR4").replace(row_size_bytes=64)
    serial = Device(cfg)
    serial.execute(act(0, 0))
    serial.execute(pre(0))
    lane = Device(cfg)
    with lane.deferred() as plan, plan.lane(0):
        lane.execute(act(0, 0))
        lane.execute(pre(0))
    assert [c.issue_time for c in serial.trace] == [c.issue_time for c in lane.trace]


def test_lanes_overlap():
    cfg = get_profile("paper-DDR4").replace(row_size_bytes=64, tFAW=0.0)
    d = Device(cfg)
    with d.measure() as m, d.deferred() as plan:
        for i in range(4):
            with plan.lane(i):
                d.execute(act(i * cfg.subarrays_per_bank, 0))
    assert m.metrics.elapsed_ns == pytest.approx(cfg.tRCD)


@given(seed=st.integers(0, 2**31 - 1), lo=st.floats(0, 60), step=st.floats(0, 60))
@settings(max_examples=25, deadline=None)
def test_elapsed_non_decreasing_in_tfaw(seed, lo, step):
    a, _ = random_parallel_run(seed, lo)
    b, _ = random_parallel_run(seed, lo + step)
    assert b >= a - 1e-6
