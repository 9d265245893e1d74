"""Shared driver: place row groups on parallel subarrays and run a kernel.

Input data is cut into *groups*: the set of rows one kernel invocation
works on. Groups are dealt round-robin to ``parallel_subarrays`` lanes.
Each lane owns a few compute subarrays (data plus the reserved Ambit rows)
and its own copy of every LUT, all inside one bank so LISA links apply.
Host setup and the first LUT load are excluded from the measured phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .. import pum
from ..config import DeviceConfig
from ..dram import Device
from ..errors import CapacityExceeded
from ..lut import LutProgram, xor_pair_lut
from ..metrics import RunMetrics
from ..subarray import ensure_loaded, load_lut, pluto_query, stage_lut_image


@dataclass
class LaneCtx:
    """What a kernel sees while processing one group."""
    dev: Device
    lane: int
    sub: int                   # compute subarray holding this group
    base: int                  # first row of the group in ``sub``
    luts: list                 # LUT subarray per kernel table
    programs: Sequence[LutProgram]
    xor: str = "ambit"
    xor_sub: Optional[int] = None   # table subarray for the "lut" XOR path

    def row(self, k: int) -> int:
        return self.base + k

    def query(self, t: int, src: int, dst: int, src_sub: Optional[int] = None) -> None:
        """Table ``t`` applied to group row ``src`` into group row ``dst``."""
        ensure_loaded(self.dev, self.luts[t], self.programs[t])
        s = self.sub if src_sub is None else src_sub
        pluto_query(self.dev, self.luts[t], (s, self.row(src)), (self.sub, self.row(dst)))

    # thin wrappers so kernels read as row algebra on group-relative rows
    def AND(self, a, b, d):
        pum.ambit_and(self.dev, self.sub, self._r(a), self._r(b), self._r(d))

    def OR(self, a, b, d):
        pum.ambit_or(self.dev, self.sub, self._r(a), self._r(b), self._r(d))

    def XOR(self, a, b, d):
        if self.xor == "lut":
            pum.lut_xor(self.dev, self.sub, self._r(a), self._r(b), self._r(d), self.xor_sub)
        else:
            pum.ambit_xor(self.dev, self.sub, self._r(a), self._r(b), self._r(d))

    def NOT(self, a, d):
        pum.ambit_not(self.dev, self.sub, self._r(a), self._r(d))

    def COPY(self, a, d):
        pum.row_copy(self.dev, self.sub, self._r(a), self._r(d))

    def SHIFT(self, a, d, k, left, width):
        pum.shift_by(self.dev, self.sub, self._r(a), self._r(d), k, left, width)

    def ADD(self, a, b, d, width):
        pum.ksa_add(self.dev, self.sub, self._r(a), self._r(b), self._r(d), width,
                    xor=self.xor, lut_sub=self.xor_sub)

    def _r(self, k):
        # negative handles address the reserved region directly
        return self.base + k if k >= 0 else -k - 1


def reserved_row(r: int) -> int:
    """Handle for an absolute reserved row, usable with the LaneCtx helpers."""
    return -r - 1


@dataclass
class Kernel:
    name: str
    rows_per_group: int
    programs: Sequence[LutProgram]
    compute: Callable[[LaneCtx], None]
    out_rows: Sequence[int]            # group-relative rows holding results
    const_rows: dict = field(default_factory=dict)   # group row -> row bytes (setup)


@dataclass
class GroupRun:
    outputs: list                        # per group: list of row arrays (out_rows order)
    metrics: RunMetrics
    device: Device
    lanes_used: int


def _placement(cfg: DeviceConfig, n_groups: int, kernel: Kernel, n_tables: int):
    p = min(cfg.parallel_subarrays, n_groups) or 1
    usable = cfg.rows_per_subarray - pum.N_RESERVED
    gps = usable // kernel.rows_per_group
    if gps < 1:
        raise CapacityExceeded(f"{kernel.name}: a group of {kernel.rows_per_group} rows does not "
                               f"fit in {usable} usable rows")
    per_lane = -(-n_groups // p)
    n_comp = -(-per_lane // gps)
    # GSA tables are consumed by every query and reloaded from a staging copy
    n_stage = n_tables if cfg.variant == "GSA" else 0
    stride = n_comp + n_tables + n_stage
    n_banks = cfg.channels * cfg.ranks * cfg.banks_per_rank
    slots = cfg.subarrays_per_bank // stride
    if p > n_banks * slots:
        raise CapacityExceeded(f"{kernel.name}: {p} lanes of {stride} subarrays exceed the device")
    lanes = []
    for i in range(p):
        bank, slot = i % n_banks, i // n_banks
        first = bank * cfg.subarrays_per_bank + slot * stride
        lanes.append((list(range(first, first + n_comp)),
                      list(range(first + n_comp, first + n_comp + n_tables)),
                      list(range(first + n_comp + n_tables, first + stride))))
    return p, gps, lanes


def run_groups(cfg: DeviceConfig, kernel: Kernel, groups: Sequence[dict],
               input_bytes: int, device: Optional[Device] = None, xor: str = "ambit") -> GroupRun:
    """``groups[g]`` maps group-relative row -> row bytes to preload."""
    dev = device or Device(cfg)
    programs = list(kernel.programs)
    if xor == "lut":
        programs.append(xor_pair_lut())
    p, gps, lanes = _placement(cfg, len(groups), kernel, len(programs))
    where = {}
    # setup (host writes, first LUT load)
    for i, (comp, luts, stage) in enumerate(lanes):
        for t, prog in enumerate(programs):
            load_lut(dev, prog, luts[t])
            if stage:
                stage_lut_image(dev, prog, stage[t], lut_sub=luts[t])
        for s in comp:
            pum.ensure_constants(dev, s)
        mine = range(i, len(groups), p)
        for local, g in enumerate(mine):
            sub, base = comp[local // gps], (local % gps) * kernel.rows_per_group
            where[g] = (i, sub, base)
            for k, data in {**kernel.const_rows, **groups[g]}.items():
                dev.write_row(sub, base + k, data)
    dev.settle()
    with dev.measure(drain=True) as m:
        with dev.deferred() as plan:
            for i, (comp, luts, _) in enumerate(lanes):
                with plan.lane(i):
                    for g in range(i, len(groups), p):
                        _, sub, base = where[g]
                        kernel.compute(LaneCtx(dev, i, sub, base, luts, kernel.programs, xor,
                                               luts[-1] if xor == "lut" else None))
    metrics = m.metrics
    metrics.bytes_processed = input_bytes
    outputs = []
    for g in range(len(groups)):
        _, sub, base = where[g]
        outputs.append([dev.peek(sub, base + k) for k in kernel.out_rows])
    return GroupRun(outputs, metrics, dev, p)


def split_rows(data: np.ndarray, row_bytes: int) -> list[np.ndarray]:
    """Cut a byte array into rows, zero-padding the tail."""
    data = np.asarray(data, np.uint8)
    n = -(-data.size // row_bytes) if data.size else 0
    buf = np.zeros(n * row_bytes, np.uint8)
    buf[:data.size] = data
    return [buf[i * row_bytes:(i + 1) * row_bytes] for i in range(n)]
