"""Workload suite: in-memory programs plus bit-exact scalar oracles."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..config import DeviceConfig
from ..dram import Device
from ..metrics import RunMetrics
from . import arith, basic
from .runner import run_groups
from .spec import (BITWISE_OPS, DEFAULTS, NAMES, WorkloadSpec, effective_seed, input_bytes,
                   load_spec, make_inputs, read_raw_image, spec_from_text, write_raw_image)

_PREPARE = {
    "vec_add_lut": basic.prepare_vec_add,
    "vec_mul_q": arith.prepare_vec_mul_q,
    "bitwise": basic.prepare_bitwise,
    "bitcount": basic.prepare_bitcount,
    "bitcount_short": basic.prepare_bitcount_short,
    "crc8": arith.prepare_crc,
    "crc16": arith.prepare_crc,
    "crc32": arith.prepare_crc,
    "salsa20": arith.prepare_salsa20,
    "vmpc": basic.prepare_vmpc,
    "binarize": basic.prepare_binarize,
    "color_grade": basic.prepare_color_grade,
    "bnn_layer": arith.prepare_bnn,
}

_ORACLE = {
    "vec_mul_q": arith.oracle_vec_mul_q,
    "crc8": arith.oracle_crc,
    "crc16": arith.oracle_crc,
    "crc32": arith.oracle_crc,
    "salsa20": arith.oracle_salsa20,
    "bnn_layer": arith.oracle_bnn,
}


@dataclass
class WorkloadResult:
    spec: WorkloadSpec
    output: bytes
    metrics: RunMetrics
    device: Device
    lanes_used: int
    info: dict = field(default_factory=dict)


def run_workload(spec: WorkloadSpec, cfg: DeviceConfig, inputs: Optional[dict] = None,
                 device: Optional[Device] = None) -> WorkloadResult:
    """Execute ``spec`` in simulated memory; only the compute phase is timed."""
    inputs = make_inputs(spec) if inputs is None else inputs
    prep = _PREPARE[spec.name](spec, inputs, cfg.row_size_bytes)
    run = run_groups(cfg, prep.kernel, prep.groups, input_bytes(spec, inputs), device, spec.xor)
    out = prep.decode(run.outputs)
    return WorkloadResult(spec, out, run.metrics, run.device, run.lanes_used,
                          {**prep.info, "groups": len(prep.groups)})


def oracle(spec: WorkloadSpec, inputs: Optional[dict] = None) -> bytes:
    inputs = make_inputs(spec) if inputs is None else inputs
    fn = _ORACLE.get(spec.name, basic.oracle_basic)
    return fn(spec, inputs)


__all__ = ["BITWISE_OPS", "DEFAULTS", "NAMES", "WorkloadResult", "WorkloadSpec",
           "effective_seed", "load_spec", "make_inputs", "oracle", "read_raw_image",
           "run_workload", "spec_from_text", "write_raw_image"]


def scaled_row_bytes(spec: WorkloadSpec, inputs: dict, groups: int = 16,
                     largest: int = 8192, smallest: int = 64) -> int:
    """Largest power-of-two row size that still splits the input into ``groups`` row groups.

    Desk-scale devices shrink the row so a small input keeps every parallel
    subarray busy.
    """
    r = largest
    while r > smallest:
        if len(_PREPARE[spec.name](spec, inputs, r).groups) >= groups:
            return r
        r //= 2
    return smallest


def scaled_spec(name: str, total_bytes: int = 65536, **params) -> WorkloadSpec:
    """``name`` with its size parameter set so the input is about ``total_bytes``."""
    size = {
        "vec_add_lut": ("elements", total_bytes // 2),
        "vec_mul_q": ("elements", total_bytes // (2 if params.get("q_frac", 7) == 7 else 4)),
        "bitwise": ("bytes", total_bytes // 2),
        "crc8": ("packets", total_bytes // 128),
        "crc16": ("packets", total_bytes // 128),
        "crc32": ("packets", total_bytes // 128),
        "salsa20": ("packets", total_bytes // 512),
        "bnn_layer": ("images", total_bytes // 8),
        "binarize": ("pixels", total_bytes),
        "color_grade": ("pixels", total_bytes),
    }.get(name, ("bytes", total_bytes))
    return WorkloadSpec(name, {size[0]: size[1], **params})
