"""Program-level execution: pluto_op instructions, the pipelined mode,
bandwidth estimates, trace replay and the metrics CSV.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .config import DeviceConfig, paper_ddr4
from .dram import Device, replay
from .errors import InputError, LUTNotLoaded, WidthMismatch
from .metrics import RunMetrics
from .sched import Schedule, Slot
from .subarray import (LargeLayout, ensure_loaded, pluto_query, pluto_query_large,
                       stage_lut_image)
from .timing import Timing
from .trace import read_trace


@dataclass(frozen=True)
class PlutoOpInstr:
    src: tuple          # (subarray, row)
    dst: tuple
    lut_subarr: int
    lut_size: int
    lut_bitw: int


def instruction_count(n_bytes: int, row_size_bytes: int) -> int:
    return -(-n_bytes // row_size_bytes)


def expand(instr: PlutoOpInstr, n_bytes: int, row_size_bytes: int) -> list[PlutoOpInstr]:
    """One instruction per row of an ``n_bytes`` operand stored in consecutive rows."""
    out = []
    for i in range(instruction_count(n_bytes, row_size_bytes)):
        out.append(PlutoOpInstr((instr.src[0], instr.src[1] + i), (instr.dst[0], instr.dst[1] + i),
                                instr.lut_subarr, instr.lut_size, instr.lut_bitw))
    return out


def register_large(dev: Device, layout: LargeLayout) -> None:
    if not hasattr(dev, "large_luts"):
        dev.large_luts = {}
    dev.large_luts[layout.parts[0]] = layout


def exec_pluto_op(dev: Device, instr: PlutoOpInstr) -> RunMetrics:
    """Run one instruction, picking the query form from the LUT metadata."""
    large = getattr(dev, "large_luts", {}).get(instr.lut_subarr)
    with dev.measure() as m:
        if instr.lut_size > dev.cfg.rows_per_subarray:
            if large is None:
                raise LUTNotLoaded(f"no split table registered at subarray {instr.lut_subarr}")
            if instr.lut_bitw != large.program.lane_width:
                raise WidthMismatch(f"lut_bitw {instr.lut_bitw} != {large.program.lane_width}")
            pluto_query_large(dev, large, instr.src, instr.dst)
        else:
            rec = dev.luts.get(instr.lut_subarr)
            if rec is not None and rec.program.size != instr.lut_size:
                raise InputError(f"lut_size {instr.lut_size} does not match the loaded "
                                 f"{rec.program.size}-entry table")
            pluto_query(dev, instr.lut_subarr, instr.src, instr.dst, instr.lut_bitw)
    return m.metrics


# -- pipelined operation --------------------------------------------------------

@dataclass
class PipelineSpec:
    stages: Sequence[tuple]      # (LutProgram, lut subarray) per stage
    source: int
    intermediate: Sequence[int]  # two per stage boundary (ping-pong)
    destination: int
    rows: int
    staging: Sequence[int] = ()  # GSA only: one image copy per stage for reloads

    def __post_init__(self):
        if not self.stages:
            raise InputError("a pipeline needs at least one stage")
        if self.rows < 1:
            raise InputError("a pipeline needs at least one input row")
        need = 2 * (len(self.stages) - 1)
        if len(self.intermediate) < need:
            raise InputError(f"{len(self.stages)} stages need {need} intermediate subarrays")
        if self.staging and len(self.staging) < len(self.stages):
            raise InputError(f"{len(self.stages)} stages need {len(self.stages)} staging subarrays")
        roles = [self.source, self.destination, *self.intermediate[:need],
                 *(s for _, s in self.stages), *self.staging[:len(self.stages)]]
        if len(set(roles)) != len(roles):
            raise InputError("pipeline roles must use distinct subarrays")

    def hop(self, j: int, r: int) -> tuple[int, int]:
        """Where stage ``j`` stores item ``r``."""
        if j == len(self.stages) - 1:
            return (self.destination, r)
        return (self.intermediate[2 * j + (r % 2)], r)

    def feed(self, j: int, r: int) -> tuple[int, int]:
        return (self.source, r) if j == 0 else self.hop(j - 1, r)


def _pipeline_scheduler(spec: PipelineSpec):
    """start(j, r) = max(end(j, r-1), end(j-1, r), end(j+1, r-2)), each job timed on its own.

    The last term protects the ping-pong buffer: stage j reuses the buffer
    stage j+1 read for item r-2.
    """
    n_stages = len(spec.stages)

    def schedule(lanes, cfg: DeviceConfig, base: Timing) -> Schedule:
        start0 = base.cursor
        ends: dict[tuple[int, int], float] = {}
        slots = []
        end = horizon = start0
        for idx, cmds in enumerate(lanes):
            r, j = divmod(idx, n_stages)
            t0 = max(start0, ends.get((j, r - 1), start0), ends.get((j - 1, r), start0),
                     ends.get((j + 1, r - 2), start0))
            t = Timing(cfg, enforce_faw=False)
            t.cursor = t0
            lane_slots = []
            for cmd in cmds:
                issue, stall, bts = t.earliest(cmd)
                t.commit(cmd, issue, stall, bts)
                lane_slots.append(Slot(issue, stall, bts))
            ends[(j, r)] = t.horizon
            end, horizon = max(end, t.end), max(horizon, t.horizon)
            slots.append(lane_slots)
        return Schedule(slots, start0, end, horizon)

    return schedule


def _run_stage(dev: Device, spec: PipelineSpec, j: int, r: int) -> None:
    prog, sub = spec.stages[j]
    ensure_loaded(dev, sub, prog)    # GSA tables are consumed by every query
    pluto_query(dev, sub, spec.feed(j, r), spec.hop(j, r))


def _prepare(dev: Device, spec: PipelineSpec) -> None:
    for j, (prog, sub) in enumerate(spec.stages):
        ensure_loaded(dev, sub, prog)
        if spec.staging:
            stage_lut_image(dev, prog, spec.staging[j], lut_sub=sub)
    if dev.cfg.variant == "GSA" and any(s not in dev.lut_staging for _, s in spec.stages):
        raise InputError("a GSA pipeline reloads its tables and needs staging subarrays")
    dev.settle()


def run_pipeline(dev: Device, spec: PipelineSpec) -> RunMetrics:
    """Chain the stage tables over ``spec.rows`` source rows.

    Functionally every item passes through every stage in order; timing lets
    stage ``j`` work on item ``r`` while stage ``j+1`` handles item ``r-1``.
    """
    _prepare(dev, spec)
    with dev.measure() as m:
        with dev.deferred(_pipeline_scheduler(spec)) as plan:
            for r in range(spec.rows):
                for j in range(len(spec.stages)):
                    with plan.lane((r, j)):
                        _run_stage(dev, spec, j, r)
    return m.metrics


def run_sequential(dev: Device, spec: PipelineSpec) -> RunMetrics:
    """Reference: same work with no overlap between stages."""
    _prepare(dev, spec)
    with dev.measure() as m:
        for r in range(spec.rows):
            for j in range(len(spec.stages)):
                _run_stage(dev, spec, j, r)
    return m.metrics


# -- bandwidth model --------------------------------------------------------------

VARIANT_FACTOR = {"GSA": 0.5, "BSA": 1.0, "GMC": 2.0}
ANCHOR_CAPACITY = 16 * 2**30
ANCHOR_BSA_GBPS = 1017.0


def sweep_step_ns(cfg: DeviceConfig, variant: str) -> float:
    return cfg.tRAS + cfg.tRP if variant == "BSA" else cfg.tRC


def _raw_bandwidth(cfg: DeviceConfig, capacity_bytes: int, variant: str) -> float:
    if capacity_bytes % cfg.subarray_bytes:
        raise InputError(f"capacity {capacity_bytes} is not a multiple of the "
                         f"{cfg.subarray_bytes}-byte subarray")
    n_sub = capacity_bytes // cfg.subarray_bytes
    return n_sub * cfg.row_size_bytes / sweep_step_ns(cfg, variant) * VARIANT_FACTOR[variant]


def default_calibration() -> float:
    """Output rows per sweep step, fitted to the BSA anchor on the DDR4 profile."""
    return ANCHOR_BSA_GBPS / _raw_bandwidth(paper_ddr4(), ANCHOR_CAPACITY, "BSA")


def max_bandwidth(cfg: DeviceConfig, capacity_bytes: int,
                  calibration: Optional[float] = None) -> dict[str, float]:
    """Peak LUT-query throughput in GB/s for each variant."""
    k = default_calibration() if calibration is None else calibration
    return {v: _raw_bandwidth(cfg, capacity_bytes, v) * k for v in ("GSA", "BSA", "GMC")}


# -- replay ---------------------------------------------------------------------

def replay_trace(trace, cfg: DeviceConfig) -> tuple[RunMetrics, str]:
    """Re-execute a trace (path or command list); returns metrics and state digest."""
    cmds = read_trace(trace) if isinstance(trace, (str, Path)) else list(trace)
    metrics, digest, _ = replay(cmds, cfg)
    return metrics, digest


# -- metrics CSV ----------------------------------------------------------------

CSV_COLUMNS = ("workload", "variant", "profile", "parallel_subarrays", "tfaw_ns",
               "elapsed_ns", "energy_pJ", "activations", "sweep_activations", "sweeps",
               "bandwidth_GBps")


def metrics_row(workload: str, cfg: DeviceConfig, m: RunMetrics) -> dict:
    return {
        "workload": workload,
        "variant": cfg.variant,
        "profile": cfg.profile,
        "parallel_subarrays": cfg.parallel_subarrays,
        "tfaw_ns": f"{cfg.tFAW:.4f}",
        "elapsed_ns": f"{m.elapsed_ns:.4f}",
        "energy_pJ": f"{m.energy_pJ:.4f}",
        "activations": m.activations,
        "sweep_activations": m.sweep_activations,
        "sweeps": m.histogram.get("ROW_SWEEP", 0),
        "bandwidth_GBps": f"{m.bandwidth_GBps:.4f}",
    }


def format_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()) if rows else list(CSV_COLUMNS),
                       lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def write_csv(rows: Sequence[dict], path) -> None:
    Path(path).write_text(format_csv(rows), encoding="utf-8")
