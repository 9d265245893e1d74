from hypothesis import given, settings, strategies as st

from plutosim.config import get_profile
from plutosim.dram import Device
from plutosim.subarray import row_sweep_op
from plutosim.timing import duration, sweep_latency, sweep_period
from plutosim.trace import aap, act, pre, rbm, row_sweep


def _cfg(**kw):
    return get_profile("paper-DDR4").replace(row_size_bytes=64, **kw)


def test_fixed_durations():
    cfg = _cfg()
    assert duration(act(0, 0), cfg) == cfg.tRCD
    assert duration(pre(0), cfg) == cfg.tRP
    assert duration(rbm(0, 1, 0), cfg) == cfg.tRBM
    assert duration(aap(0, 1, 2), cfg) == 2 * cfg.tRAS + cfg.tRP


def test_sweep_period_by_variant():
    assert sweep_period(_cfg(variant="BSA")) == _cfg().tRAS + _cfg().tRP
    assert sweep_period(_cfg(variant="GMC")) == _cfg().tRC


@given(tras=st.floats(5, 80), trp=st.floats(5, 40), slack=st.floats(0, 1),
       variant=st.sampled_from(["BSA", "GSA", "GMC"]), n=st.integers(1, 512))
@settings(max_examples=80, deadline=None)
def test_sweep_command_duration(tras, trp, slack, variant, n):
    trc = tras + slack * trp
    cfg = _cfg(tRAS=tras, tRP=trp, tRCD=trp, tRC=trc, variant=variant, tFAW=0.0)
    want = (tras + trp) * n if variant == "BSA" else trc * n + trp
    assert sweep_latency(cfg, n) == want
    assert duration(row_sweep(1, 0, n, 0, 16, 0xFFFF), cfg) == want


def test_serial_commands_respect_trc_on_one_subarray():
    cfg = _cfg()
    d = Device(cfg)
    d.execute(act(0, 0))
    d.execute(pre(0))
    d.execute(act(0, 1))
    assert d.trace[2].issue_time >= d.trace[0].issue_time + cfg.tRC


def test_measured_sweep_matches_formula():
    for v in ("BSA", "GSA", "GMC"):
        cfg = _cfg(variant=v)
        d = Device(cfg)
        d.execute(act(0, 0))
        r = row_sweep_op(d, 1, 0, 0, 512, 16, 0xFFFF)
        assert r.elapsed_ns == sweep_latency(cfg, 512)


def test_rbm_costs_one_link_per_hop():
    cfg = _cfg()
    assert duration(rbm(4, 1, 0), cfg) == 3 * cfg.tRBM
    d = Device(cfg)
    d.execute(act(0, 0))
    d.execute(rbm(0, 5, 0))
    assert d.metrics().energy_breakdown["RBM"] == 5 * cfg.eRBM
