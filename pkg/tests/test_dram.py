import numpy as np
import pytest

from plutosim.config import get_profile
from plutosim.dram import Device, replay
from plutosim.errors import (ActivateWhileOpen, AddressError, BufferClosed, NotLinked,
                             RowsNotDistinct, SimulationError, WidthMismatch)
from plutosim.trace import act, pre, rbm, rd, tra, wr


def test_rows_start_zero(dev):
    assert not dev.peek(3, 10).any()


def test_write_read_round_trip(dev, rng):
    data = rng.integers(0, 256, 64, dtype=np.uint8)
    dev.write_row(2, 5, data)
    assert np.array_equal(dev.read_row(2, 5), data)
    assert dev.sub(2).precharged


def test_activate_while_open(dev):
    dev.execute(act(0, 1))
    with pytest.raises(ActivateWhileOpen):
        dev.execute(act(0, 2))


def test_read_needs_open_row(dev):
    with pytest.raises(BufferClosed):
        dev.execute(rd(0, 0))


def test_write_width_checked(dev):
    dev.execute(act(0, 0))
    with pytest.raises(WidthMismatch):
        dev.execute(wr(0, 0, b"\x00" * 3))


def test_address_range(dev):
    with pytest.raises(AddressError):
        dev.execute(act(dev.cfg.total_subarrays, 0))
    with pytest.raises(AddressError):
        dev.execute(act(0, dev.cfg.rows_per_subarray))


def test_rbm_copies_open_row(dev, rng):
    data = rng.integers(0, 256, 64, dtype=np.uint8)
    dev.write_row(0, 3, data)
    dev.execute(act(0, 3))
    dev.execute(rbm(0, 1, 7))
    dev.execute(pre(0))
    dev.execute(pre(1))
    assert np.array_equal(dev.peek(1, 7), data)


def test_rbm_across_banks_is_rejected(dev):
    other = dev.cfg.subarrays_per_bank
    dev.execute(act(0, 0))
    with pytest.raises(NotLinked):
        dev.execute(rbm(0, other, 0))


def test_tra_is_majority_and_overwrites_operands(dev):
    a, b, c = (np.full(64, v, np.uint8) for v in (0b1100, 0b1010, 0b0110))
    for r, x in zip((0, 1, 2), (a, b, c)):
        dev.write_row(0, r, x)
    dev.execute(tra(0, 0, 1, 2))
    for r in (0, 1, 2):
        assert (dev.peek(0, r) == 0b1110).all()


def test_tra_needs_distinct_rows(dev):
    with pytest.raises(RowsNotDistinct):
        dev.execute(tra(0, 1, 1, 2))


def test_errors_share_a_base():
    assert issubclass(ActivateWhileOpen, SimulationError)


def test_replay_reproduces_metrics_and_digest(dev, rng):
    for r in range(4):
        dev.write_row(1, r, rng.integers(0, 256, 64, dtype=np.uint8))
    dev.execute(act(1, 2))
    dev.execute(rbm(1, 0, 9))
    dev.execute(pre(1))
    dev.execute(pre(0))
    m, digest, _ = replay(dev.trace, dev.cfg)
    assert digest == dev.digest()
    assert m == dev.metrics()


def test_digest_depends_on_contents():
    cfg = get_profile("paper-DDR4").replace(row_size_bytes=64)
    a, b = Device(cfg), Device(cfg)
    assert a.digest() == b.digest()
    b.write_row(0, 0, np.ones(64, np.uint8))
    assert a.digest() != b.digest()


def test_energy_accounting_for_act_pre(dev):
    dev.execute(act(0, 0))
    dev.execute(pre(0))
    m = dev.metrics()
    assert m.activations == 1
    assert m.energy_pJ == pytest.approx(dev.cfg.eACT + dev.cfg.ePRE)
