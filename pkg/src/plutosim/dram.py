"""Functional DRAM device: subarray state, command execution, accounting.

Contents start all-zero. Every command goes through :meth:`Device.execute`,
which applies its state change, charges energy, places it in time and
appends it to the device trace. Timing has three modes:

* serial: the command is issued at the earliest legal time after the
  previous one (the default);
* explicit: commands that already carry an ``issue_time`` (trace replay)
  are committed at that time without re-validation;
* deferred: inside ``with device.deferred() as plan`` commands run
  functionally at once and are grouped into lanes; timing is assigned when
  the block exits by the multi-subarray scheduler.
"""

from __future__ import annotations

import dataclasses
import hashlib
import struct
from collections import Counter
from contextlib import contextmanager
from typing import Callable, Iterable, Optional

import numpy as np

from . import lanes as L
from .config import DeviceConfig
from .errors import (ActivateWhileOpen, AddressError, BufferClosed, GSAInvalidLUT,
                     InvalidRow, NotLinked, OverlappingClasses, RowsNotDistinct,
                     SimulationError, SweepOutOfRange, UnsupportedAmount, WidthMismatch)
from .metrics import MetricsHandle, RunMetrics
from .sched import Schedule, schedule_parallel
from .timing import Timing, rbm_hops
from .trace import Command


class SubarrayState:
    """Rows are stored sparsely; an absent row reads as zeros."""

    def __init__(self, cfg: DeviceConfig):
        self.cfg = cfg
        self.rows: dict[int, np.ndarray] = {}
        self.invalid: set[int] = set()
        self.row_buffer: Optional[np.ndarray] = None
        self.activated_row: Optional[int] = None
        # sweep output latch; the FF buffer for BSA, the gated output otherwise
        self.latch: Optional[np.ndarray] = None

    @property
    def precharged(self) -> bool:
        return self.activated_row is None

    @property
    def ff_buffer(self) -> Optional[np.ndarray]:
        return self.latch if self.cfg.variant == "BSA" else None

    def row_valid(self, row: int) -> bool:
        return row not in self.invalid

    def get(self, row: int) -> np.ndarray:
        data = self.rows.get(row)
        if data is None:
            return np.zeros(self.cfg.row_size_bytes, dtype=np.uint8)
        return data.copy()

    def put(self, row: int, data: np.ndarray) -> None:
        self.rows[row] = np.array(data, dtype=np.uint8, copy=True)
        self.invalid.discard(row)


class Plan:
    """Lane bookkeeping for a deferred block."""

    def __init__(self):
        self.lanes: dict = {}
        self._current = None

    @contextmanager
    def lane(self, key):
        prev, self._current = self._current, key
        self.lanes.setdefault(key, [])
        try:
            yield
        finally:
            self._current = prev

    def record(self, cmd: Command) -> None:
        key = self._current
        self.lanes.setdefault(key, []).append(cmd)


Scheduler = Callable[[list, DeviceConfig, Timing], Schedule]


class Device:
    def __init__(self, cfg: DeviceConfig):
        self.cfg = cfg
        self.subs: dict[int, SubarrayState] = {}
        self.timing = Timing(cfg)
        self.trace: list[Command] = []
        self.energy = 0.0
        self.activations = 0
        self.histogram: Counter = Counter()
        self.energy_breakdown: Counter = Counter()
        self.bytes_processed = 0
        self.sweep_activations = 0
        self.luts: dict = {}            # lut subarray -> loaded program record
        self.lut_staging: dict = {}     # lut subarray -> subarray holding its image
        self.last_read: Optional[np.ndarray] = None
        self._plan: Optional[Plan] = None

    # -- state access --------------------------------------------------------
    def sub(self, s: int) -> SubarrayState:
        st = self.subs.get(s)
        if st is None:
            if not 0 <= s < self.cfg.total_subarrays:
                raise AddressError(f"subarray {s} out of range")
            st = self.subs[s] = SubarrayState(self.cfg)
        return st

    def _row_check(self, row: int) -> None:
        if not 0 <= row < self.cfg.rows_per_subarray:
            raise AddressError(f"row {row} out of range")

    def _valid_check(self, s: int, st: SubarrayState, row: int) -> None:
        self._row_check(row)
        if row in st.invalid:
            raise InvalidRow(f"row {row} of subarray {s} was destroyed by a destructive read")

    def peek(self, s: int, row: int) -> np.ndarray:
        """Row contents without any timing or validity check (inspection only)."""
        self._row_check(row)
        return self.sub(s).get(row)

    # -- metrics -------------------------------------------------------------
    @property
    def elapsed(self) -> float:
        return self.timing.cursor

    def metrics(self) -> RunMetrics:
        """Totals since power-on; elapsed is the last non-posted completion."""
        return RunMetrics(self.timing.end, self.energy, self.activations,
                          Counter(self.histogram), Counter(self.energy_breakdown),
                          self.bytes_processed, self.sweep_activations)

    def settle(self) -> None:
        """Idle until every subarray could accept a new activation."""
        t = self.timing
        ready = [t.horizon] + [v + self.cfg.tRC for v in t.last_act.values()]
        ready += [v + self.cfg.tRP for v in t.pre_ready.values()]
        t.advance_to(max(ready))

    @contextmanager
    def measure(self, drain: bool = False):
        """Metrics of the enclosed commands.

        With ``drain`` the window closes when the last posted precharge
        completes, i.e. when the device is idle again.
        """
        handle = MetricsHandle()
        before = self.metrics()
        start = self.timing.cursor
        yield handle
        delta = self.metrics() - before
        stop = self.timing.horizon if drain else self.timing.end
        delta.elapsed_ns = max(stop - start, 0.0)
        handle.metrics = delta

    def _charge(self, key: str, pj: float) -> None:
        self.energy += pj
        self.energy_breakdown[key] += pj

    # -- execution -----------------------------------------------------------
    def execute(self, cmd: Command):
        """Apply one command. Returns row bytes for RD, else None."""
        cmd = dataclasses.replace(cmd)
        out = self._apply(cmd)
        self.histogram[cmd.kind] += 1
        self.trace.append(cmd)
        if self._plan is not None:
            # timing is decided when the deferred block closes
            self._plan.record(cmd)
        elif cmd.issue_time is not None:
            self.timing.commit(cmd, cmd.issue_time, cmd.stall)
        else:
            issue, stall, bts = self.timing.earliest(cmd)
            cmd.issue_time, cmd.stall = issue, stall
            self.timing.commit(cmd, issue, stall, bts)
        return out

    def run(self, commands: Iterable[Command]) -> None:
        for cmd in commands:
            self.execute(cmd)

    @contextmanager
    def deferred(self, scheduler: Optional[Scheduler] = None):
        if self._plan is not None:
            raise SimulationError("deferred blocks do not nest")
        plan = self._plan = Plan()
        try:
            yield plan
        finally:
            self._plan = None
        lanes = [cmds for cmds in plan.lanes.values() if cmds]
        sched = (scheduler or schedule_parallel)(lanes, self.cfg, self.timing)
        for cmds, slots in zip(lanes, sched.slots):
            for cmd, slot in zip(cmds, slots):
                cmd.issue_time, cmd.stall = slot.issue, slot.stall
                self.timing.commit(cmd, slot.issue, slot.stall, slot.beat_times)
        self.timing.advance_to(sched.end)

    # -- per-kind semantics --------------------------------------------------
    def _apply(self, cmd: Command):
        return getattr(self, "_do_" + cmd.kind)(cmd, *cmd.args)

    def _do_ACT(self, cmd, s, row):
        st = self.sub(s)
        if not st.precharged:
            raise ActivateWhileOpen(f"subarray {s} already has row {st.activated_row} open")
        self._valid_check(s, st, row)
        st.row_buffer = st.get(row)
        st.activated_row = row
        self.activations += 1
        self._charge("ACT", self.cfg.eACT)

    def _do_PRE(self, cmd, s):
        st = self.sub(s)
        st.activated_row = None
        st.row_buffer = None
        self._charge("PRE", self.cfg.ePRE)

    def _open_check(self, s, st, row):
        if st.activated_row != row:
            raise BufferClosed(f"row {row} of subarray {s} is not open")

    def _do_RD(self, cmd, s, row):
        st = self.sub(s)
        self._open_check(s, st, row)
        self.last_read = st.row_buffer.copy()
        return self.last_read

    def _do_WR(self, cmd, s, row):
        st = self.sub(s)
        self._open_check(s, st, row)
        data = np.frombuffer(cmd.data, dtype=np.uint8)
        if data.size != self.cfg.row_size_bytes:
            raise WidthMismatch(f"write of {data.size} bytes to a {self.cfg.row_size_bytes}-byte row")
        st.row_buffer = data.copy()
        st.put(row, data)

    def _do_RBM(self, cmd, src, dst, dst_row, buf):
        if src == dst:
            raise NotLinked("row-buffer movement needs two distinct subarrays")
        if self.cfg.bank_of(src) != self.cfg.bank_of(dst):
            raise NotLinked(f"subarrays {src} and {dst} are in different banks")
        s_st, d_st = self.sub(src), self.sub(dst)
        data = s_st.row_buffer if buf == "RB" else s_st.latch
        if data is None:
            what = "row buffer" if buf == "RB" else "sweep output"
            raise BufferClosed(f"{what} of subarray {src} holds no data")
        self._row_check(dst_row)
        if not d_st.precharged and d_st.activated_row != dst_row:
            raise ActivateWhileOpen(f"subarray {dst} has row {d_st.activated_row} open")
        d_st.put(dst_row, data)
        d_st.row_buffer = data.copy()
        d_st.activated_row = dst_row
        self._charge("RBM", self.cfg.eRBM * rbm_hops(cmd))

    def _do_ROW_SWEEP(self, cmd, lut, first, n, src, width, mask, tags):
        cfg = self.cfg
        if lut == src:
            raise NotLinked("the source row must sit in a different subarray than the LUT")
        lt, st = self.sub(lut), self.sub(src)
        if not lt.precharged:
            raise ActivateWhileOpen(f"LUT subarray {lut} has row {lt.activated_row} open")
        if st.row_buffer is None:
            raise BufferClosed(f"source subarray {src} has no open row")
        if n < 1 or first < 0 or first + n > cfg.rows_per_subarray:
            raise SweepOutOfRange(f"sweep of rows [{first}, {first + n}) in a "
                                  f"{cfg.rows_per_subarray}-row subarray")
        n_lanes = L.check_width(width, cfg.row_size_bytes)
        swept = range(first, first + n)
        bad = lt.invalid.intersection(swept)
        if bad:
            if cfg.variant == "GSA":
                raise GSAInvalidLUT(f"LUT rows in subarray {lut} were destroyed; reload before reuse")
            raise InvalidRow(f"rows {sorted(bad)[:4]} of subarray {lut} are invalid")

        lane_bits = np.uint64(L.lane_mask(width))
        m = np.uint64(mask) & lane_bits
        comp = np.asarray(tags if tags is not None else range(n), dtype=np.uint64)[:n] & m
        if comp.size != n:
            raise SweepOutOfRange(f"sweep of {n} rows with {comp.size} tags")
        order = np.argsort(comp, kind="stable")
        sorted_comp = comp[order]
        if n > 1 and np.any(sorted_comp[1:] == sorted_comp[:-1]):
            raise OverlappingClasses("two swept rows match the same source value")
        key = L.unpack(st.row_buffer, width) & m
        pos = np.minimum(np.searchsorted(sorted_comp, key), n - 1)
        hit = sorted_comp[pos] == key
        which = order[pos]
        out = np.zeros(n_lanes, dtype=np.uint64)
        rows_hit = np.unique(which[hit])
        for i in rows_hit:
            sel = hit & (which == i)
            out[sel] = L.unpack(lt.get(first + int(i)), width)[sel]
        lt.latch = L.pack(out, width, cfg.row_size_bytes)

        self.activations += n
        self.sweep_activations += n
        self._charge("sweep_act", n * cfg.eACT)
        self._charge("sweep_cmp", n * cfg.eCMP)
        self._charge("sweep_pre", (n if cfg.variant == "BSA" else 1) * cfg.ePRE)
        if cfg.variant == "BSA" and rows_hit.size:
            self._charge("ff", int(rows_hit.size) * cfg.eFF)
        if cfg.variant == "GSA":
            lt.invalid.update(swept)
        self.last_sweep_hits = hit

    def _compute_check(self, s, st, rows):
        if not st.precharged:
            raise ActivateWhileOpen(f"subarray {s} has row {st.activated_row} open")
        if len(set(rows)) != len(rows):
            raise RowsNotDistinct(f"rows {rows} are not distinct")
        for r in rows:
            self._valid_check(s, st, r)

    def _do_TRA(self, cmd, s, a, b, c):
        st = self.sub(s)
        self._compute_check(s, st, (a, b, c))
        res = L.maj(st.get(a), st.get(b), st.get(c))
        for r in (a, b, c):
            st.put(r, res)
        self.activations += 1
        self._charge("TRA", self.cfg.eACT + self.cfg.ePRE)

    def _do_AAP(self, cmd, s, src, dst, mode):
        st = self.sub(s)
        self._compute_check(s, st, (src, dst))
        data = st.get(src)
        st.put(dst, ~data if mode == "NOT" else data)
        self.activations += 2
        self._charge("AAP", 2 * self.cfg.eACT + self.cfg.ePRE)

    def _do_SHIFT(self, cmd, s, src, dst, amount, direction, width):
        if amount not in (1, 8):
            raise UnsupportedAmount(f"in-memory shifts move 1 or 8 bits, not {amount}")
        st = self.sub(s)
        if not st.precharged:
            raise ActivateWhileOpen(f"subarray {s} has row {st.activated_row} open")
        self._valid_check(s, st, src)
        self._row_check(dst)
        st.put(dst, L.shift_lanes(st.get(src), width, amount, direction == "L"))
        self.activations += 2
        self._charge("SHIFT", 2 * self.cfg.eACT + self.cfg.ePRE)

    # -- host-level helpers --------------------------------------------------
    def write_row(self, s: int, row: int, data) -> None:
        """Host write through ACT/WR/PRE (or just WR when the row is open)."""
        from .trace import act, pre, wr
        data = np.asarray(data, dtype=np.uint8)
        st = self.sub(s)
        if st.activated_row == row:
            self.execute(wr(s, row, data.tobytes()))
            return
        if not st.precharged:
            self.execute(pre(s))
        self.execute(act(s, row))
        self.execute(wr(s, row, data.tobytes()))
        self.execute(pre(s))

    def read_row(self, s: int, row: int) -> np.ndarray:
        from .trace import act, pre, rd
        st = self.sub(s)
        if st.activated_row == row:
            return self.execute(rd(s, row))
        if not st.precharged:
            self.execute(pre(s))
        self.execute(act(s, row))
        data = self.execute(rd(s, row))
        self.execute(pre(s))
        return data

    def write_lanes(self, s: int, row: int, values, width: int) -> None:
        self.write_row(s, row, L.pack(values, width, self.cfg.row_size_bytes))

    def read_lanes(self, s: int, row: int, width: int) -> np.ndarray:
        return L.unpack(self.read_row(s, row), width)

    # -- digest --------------------------------------------------------------
    def digest(self) -> str:
        """SHA-256 over every non-zero row and every invalidated row."""
        h = hashlib.sha256(b"plutosim-state-v1")
        for s in sorted(self.subs):
            st = self.subs[s]
            for row in sorted(st.rows):
                data = st.rows[row]
                if data.any():
                    h.update(struct.pack("<cQI", b"R", s, row))
                    h.update(data.tobytes())
            for row in sorted(st.invalid):
                h.update(struct.pack("<cQI", b"X", s, row))
        return h.hexdigest()


def replay(commands: Iterable[Command], cfg: DeviceConfig) -> tuple[RunMetrics, str, Device]:
    dev = Device(cfg)
    dev.run(commands)
    return dev.metrics(), dev.digest(), dev
