"""Command-line front door: run, sweep, lut and replay.

Exit codes: 0 success, 1 simulation error, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from . import lut as lutmod
from .config import DeviceConfig, get_profile, load_config, parse_kv
from .engine import format_csv, max_bandwidth, metrics_row, replay_trace
from .errors import ConfigError, InputError, PlutoError, SimulationError
from .trace import write_trace
from .workloads import (NAMES, WorkloadSpec, load_spec, make_inputs, oracle, run_workload,
                        scaled_row_bytes, scaled_spec)

EXIT_OK, EXIT_SIM, EXIT_INPUT = 0, 1, 2


# -- run ------------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = load_config(args.config)
    spec = load_spec(args.workload)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inputs = make_inputs(spec)
    res = run_workload(spec, cfg, inputs)
    matches = res.output == oracle(spec, inputs)
    row = metrics_row(spec.label, cfg, res.metrics)
    (out / "metrics.csv").write_text(format_csv([row]), encoding="utf-8")
    (out / "output.bin").write_bytes(res.output)
    summary = {
        "workload": spec.label,
        "oracle_match": matches,
        "measured": res.metrics.to_dict(),
        "device_total": res.device.metrics().to_dict(),
        "digest": res.device.digest(),
        "info": res.info,
    }
    if args.emit_trace:
        write_trace(out / "trace.txt", res.device.trace)
        summary["trace"] = "trace.txt"
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    print(f"{spec.label}: elapsed {res.metrics.elapsed_ns:.2f} ns, "
          f"energy {res.metrics.energy_pJ:.2f} pJ, oracle {'match' if matches else 'MISMATCH'}")
    return EXIT_OK if matches else EXIT_SIM


# -- replay ------------------------------------------------------------------------

def cmd_replay(args) -> int:
    cfg = load_config(args.config)
    metrics, digest = replay_trace(args.trace, cfg)
    print(json.dumps({"device_total": metrics.to_dict(), "digest": digest},
                     indent=2, sort_keys=True))
    return EXIT_OK


# -- sweep ----------------------------------------------------------------------------

@dataclass
class ExperimentMatrix:
    profiles: list = field(default_factory=lambda: ["paper-DDR4"])
    variants: list = field(default_factory=lambda: ["BSA"])
    parallel: list = field(default_factory=lambda: [1, 16])
    tfaw_fractions: list = field(default_factory=lambda: [100.0])
    workloads: list = field(default_factory=lambda: list(NAMES))
    bytes_per_workload: int = 65536
    row_bytes: Optional[int] = None          # None: scale rows to the input
    capacities_gb: list = field(default_factory=list)
    seed: int = 0

    def cells(self):
        """Cross product in a fixed order: profile, variant, tFAW, parallelism, workload."""
        for prof in self.profiles:
            for var in self.variants:
                for frac in self.tfaw_fractions:
                    for p in self.parallel:
                        for w in self.workloads:
                            yield prof, var, frac, p, w


def _split(v: str) -> list:
    return [x.strip() for x in v.split(",") if x.strip()]


def matrix_from_text(text: str, source: str = "<matrix>") -> ExperimentMatrix:
    m = ExperimentMatrix()
    for ln, k, v in parse_kv(text, source):
        try:
            if k == "profiles":
                m.profiles = _split(v)
                for p in m.profiles:
                    get_profile(p)
            elif k == "variants":
                m.variants = [x.upper() for x in _split(v)]
                bad = set(m.variants) - {"BSA", "GSA", "GMC"}
                if bad:
                    raise ConfigError(f"{source}:{ln}: unknown variant(s) {sorted(bad)}")
            elif k == "parallel":
                m.parallel = [int(x) for x in _split(v)]
            elif k == "tfaw_fractions":
                m.tfaw_fractions = [float(x) for x in _split(v)]
                if any(not 0 <= f <= 100 for f in m.tfaw_fractions):
                    raise ConfigError(f"{source}:{ln}: tFAW fractions are percentages in [0, 100]")
            elif k == "workloads":
                m.workloads = _split(v)
                bad = [w for w in m.workloads if _workload_name(w) not in NAMES]
                if bad:
                    raise ConfigError(f"{source}:{ln}: unknown workload(s) {bad}")
            elif k == "bytes_per_workload":
                m.bytes_per_workload = int(v, 0)
            elif k == "row_bytes":
                m.row_bytes = None if v == "auto" else int(v, 0)
            elif k == "capacities_gb":
                m.capacities_gb = [int(x) for x in _split(v)]
            elif k == "seed":
                m.seed = int(v, 0)
            else:
                raise ConfigError(f"{source}:{ln}: unknown key {k!r}")
        except ValueError:
            raise ConfigError(f"{source}:{ln}: bad value {v!r} for key {k!r}") from None
    return m


# sweep workload names may carry a variant suffix, e.g. bitwise:AND or vec_mul_q:15
def _workload_name(w: str) -> str:
    return w.split(":", 1)[0]


def _cell_spec(w: str, total: int, seed: int) -> WorkloadSpec:
    name, _, arg = w.partition(":")
    extra = {}
    if arg:
        extra = {"op": arg.upper()} if name == "bitwise" else {"q_frac": int(arg)}
    spec = scaled_spec(name, total, **extra)
    return WorkloadSpec(spec.name, spec.params, seed)


def _cell_config(prof: str, var: str, frac: float, p: int, row: int) -> DeviceConfig:
    base = get_profile(prof)
    return base.replace(variant=var, parallel_subarrays=p, tFAW=base.tFAW * frac / 100.0,
                        row_size_bytes=row)


def run_cell(cell, matrix: ExperimentMatrix) -> dict:
    prof, var, frac, p, w = cell
    spec = _cell_spec(w, matrix.bytes_per_workload, matrix.seed)
    inputs = make_inputs(spec)
    if matrix.row_bytes is not None:
        row = matrix.row_bytes
    else:
        cap = get_profile(prof).row_size_bytes
        row = scaled_row_bytes(spec, inputs, groups=max(matrix.parallel), largest=cap)
    cfg = _cell_config(prof, var, frac, p, row)
    res = run_workload(spec, cfg, inputs)
    ok = res.output == oracle(spec, inputs)
    out = metrics_row(spec.label, cfg, res.metrics)
    out.update({"tfaw_fraction": f"{frac:g}", "row_bytes": row, "oracle_match": int(ok)})
    return out


def geomean(values: Sequence[float]) -> float:
    vals = [v for v in values if v > 0]
    if not vals:
        return 0.0
    return math.exp(sum(math.log(v) for v in vals) / len(vals))


def summary_rows(rows: list[dict]) -> list[dict]:
    """Geometric-mean elapsed and energy per (profile, variant, tFAW, parallelism)."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["profile"], r["variant"], r["tfaw_fraction"],
                           r["parallel_subarrays"]), []).append(r)
    out = []
    base_key = {}
    for key, rs in groups.items():
        base_key.setdefault(key[:3], key)
    for key, rs in groups.items():
        ref = groups[base_key[key[:3]]]
        g_el = geomean([float(r["elapsed_ns"]) for r in rs])
        g_ref = geomean([float(r["elapsed_ns"]) for r in ref])
        out.append({
            "workload": "geomean", "profile": key[0], "variant": key[1],
            "tfaw_fraction": key[2], "parallel_subarrays": key[3],
            "elapsed_ns": f"{g_el:.4f}",
            "energy_pJ": f"{geomean([float(r['energy_pJ']) for r in rs]):.4f}",
            "speedup_vs_first_parallel": f"{(g_ref / g_el if g_el else 0.0):.4f}",
            "cells": len(rs),
        })
    return out


def bandwidth_rows(matrix: ExperimentMatrix) -> list[dict]:
    rows = []
    for prof in matrix.profiles:
        cfg = get_profile(prof)
        for gb in matrix.capacities_gb:
            bw = max_bandwidth(cfg, gb * 2**30)
            for var in ("GSA", "BSA", "GMC"):
                rows.append({"profile": prof, "capacity_GB": gb, "variant": var,
                             "bandwidth_GBps": f"{bw[var]:.4f}"})
    return rows


def cmd_sweep(args, argv: Sequence[str]) -> int:
    path = Path(args.matrix)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read matrix file {path}: {exc}") from None
    matrix = matrix_from_text(text, str(path))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cells = list(matrix.cells())
    if args.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(run_cell, cells, [matrix] * len(cells)))
    else:
        rows = [run_cell(c, matrix) for c in cells]
    files = {"sweep.csv": rows, "summary.csv": summary_rows(rows)}
    if matrix.capacities_gb:
        files["bandwidth.csv"] = bandwidth_rows(matrix)
    for name, data in files.items():
        (out / name).write_text(format_csv(data), encoding="utf-8")
    manifest = {
        "command": ["plutosim", *argv],
        "matrix_file": str(path),
        "matrix": text,
        "outputs": sorted(files),
        "cells": len(cells),
        "version": __version__,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    bad = [r for r in rows if not r["oracle_match"]]
    print(f"{len(rows)} cells written to {out / 'sweep.csv'}"
          + (f"; {len(bad)} oracle mismatches" if bad else ""))
    return EXIT_SIM if bad else EXIT_OK


# -- lut ---------------------------------------------------------------------------------

def _unary_functions(args) -> dict:
    from .workloads import arith, oracles as O
    return {
        "popcount": lutmod.popcount,
        "identity": lambda x: x,
        "square": lambda x: x * x,
        "not": lambda x: ~x & ((1 << args.in_width) - 1),
        "binarize": lambda x: O.binarize(x, args.threshold),
        "gamma": O.gamma_curve(args.gamma),
        "vmpc": lambda x: O.vmpc_permutation(args.seed)[x],
        "crc8": lambda x: arith.crc_table("crc8").entries[x],
        "crc16": lambda x: arith.crc_table("crc16").entries[x],
        "crc32": lambda x: arith.crc_table("crc32").entries[x],
        "primes": lambda x: (2, 3, 5, 7)[x],
    }


_BINARY = {
    "add": lambda a, b: a + b,
    "mul": lambda a, b: a * b,
    "and": lambda a, b: a & b,
    "or": lambda a, b: a | b,
    "xor": lambda a, b: a ^ b,
    "xnor": lambda a, b: ~(a ^ b),
}


def cmd_lut_build(args) -> int:
    name = args.function
    unary = _unary_functions(args)
    out_width = args.out_width or args.in_width
    if name in _BINARY:
        if args.in_width % 2:
            raise InputError("binary functions need an even in_width (two equal operands)")
        w = args.in_width // 2
        g = _BINARY[name]
        if name == "xnor":
            g = lambda a, b, m=(1 << w) - 1: ~(a ^ b) & m  # noqa: E731
        prog = lutmod.build_binary_op_lut(g, w, out_width, args.lane_width, name)
    elif name in unary:
        prog = lutmod.build_lut(unary[name], args.in_width, out_width, args.lane_width, name)
    else:
        choices = sorted([*unary, *_BINARY])
        raise InputError(f"unknown LUT function {name!r}; choose from {', '.join(choices)}")
    if args.mask is not None:
        prog = lutmod.compress_with_mask(prog, int(args.mask, 0))
    if args.out:
        lutmod.save(prog, args.out)
        print(f"wrote {prog.size}-entry table to {args.out}")
    else:
        sys.stdout.write(lutmod.to_text(prog))
    return EXIT_OK


def describe_lut(prog: lutmod.LutProgram, samples: int = 8) -> str:
    lines = [
        f"provenance: {prog.provenance}",
        f"entries: {prog.size}",
        f"in_width: {prog.in_width}",
        f"out_width: {prog.out_width}",
        f"lane_width: {prog.lane_width}",
        f"match_mask: 0x{prog.match_mask:x}",
        f"masked: {'yes' if prog.masked else 'no'}",
        f"partition: S={prog.S} R={prog.R}",
    ]
    for i in range(min(samples, prog.size)):
        key = prog.keys[i] if prog.masked else i
        lines.append(f"  [{key:#x}] = {prog.entries[i]:#x}")
    if prog.size > samples:
        lines.append(f"  ... {prog.size - samples} more")
    return "\n".join(lines) + "\n"


def cmd_lut_inspect(args) -> int:
    try:
        prog = lutmod.load(args.path)
    except OSError as exc:
        raise InputError(f"cannot read {args.path}: {exc}") from None
    sys.stdout.write(describe_lut(prog, args.samples))
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plutosim", description="In-DRAM lookup-table simulator")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one workload on one device configuration")
    r.add_argument("--config", required=True, help="device key/value file")
    r.add_argument("--workload", required=True, help="workload key/value file")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--emit-trace", action="store_true", help="also write the command trace")

    s = sub.add_parser("sweep", help="run an experiment matrix")
    s.add_argument("--matrix", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)

    lt = sub.add_parser("lut", help="build or inspect LUT containers")
    lsub = lt.add_subparsers(dest="lut_command", required=True)
    b = lsub.add_parser("build")
    b.add_argument("function")
    b.add_argument("in_width", type=int)
    b.add_argument("--out-width", type=int)
    b.add_argument("--lane-width", type=int)
    b.add_argument("--mask", help="match mask for a compressed table, e.g. 0x80")
    b.add_argument("--threshold", type=int, default=128)
    b.add_argument("--gamma", type=float, default=2.2)
    b.add_argument("--seed", type=int, default=1)
    b.add_argument("--out", help="container path (text listing on stdout if omitted)")
    i = lsub.add_parser("inspect")
    i.add_argument("path")
    i.add_argument("--samples", type=int, default=8)

    rp = sub.add_parser("replay", help="re-execute a trace and print metrics and digest")
    rp.add_argument("--trace", required=True)
    rp.add_argument("--config", required=True)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep":
            return cmd_sweep(args, argv)
        if args.command == "replay":
            return cmd_replay(args)
        if args.lut_command == "build":
            return cmd_lut_build(args)
        return cmd_lut_inspect(args)
    except SimulationError as exc:
        print(f"plutosim: simulation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SIM
    except (InputError, OSError) as exc:
        print(f"plutosim: input error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PlutoError as exc:
        print(f"plutosim: error: {exc}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
