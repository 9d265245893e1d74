"""pLUTo-enabled subarrays: LUT loading and the three query forms.

A query opens the source row, sweeps the LUT rows while the match logic
compares each lane against the activated row's comparand, then moves the
sweep output into the destination row over LISA.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import lanes as L
from .dram import Device
from .errors import (CapacityExceeded, LUTNotLoaded, OverlappingClasses, PartitionTooSmall,
                     WidthMismatch)
from .lut import LutProgram, partition_large
from .trace import act, pre, rbm, row_sweep


@dataclass
class LoadedLut:
    program: LutProgram
    subarray: int
    first_row: int = 0
    valid: bool = True


@dataclass
class SweepResult:
    data: np.ndarray
    matched: np.ndarray        # per-lane bool
    rows_swept: int
    elapsed_ns: float
    energy_pJ: float
    rows_invalidated: tuple = ()


def _check_classes(prog: LutProgram) -> None:
    if not prog.masked:
        return
    m = prog.effective_mask
    seen = set()
    for k in prog.keys:
        if k & m in seen:
            raise OverlappingClasses(f"{prog.provenance}: two rows share key {k & m:#x} under the mask")
        seen.add(k & m)


def lut_rows(prog: LutProgram, row_bytes: int) -> list[np.ndarray]:
    """Vertical layout: entry i replicated into every lane of row i."""
    L.check_width(prog.lane_width, row_bytes)
    return [L.replicate(v, prog.lane_width, row_bytes) for v in prog.entries]


def load_lut(dev: Device, prog: LutProgram, subarray: int, first_row: int = 0,
             staging: Optional[int] = None) -> LoadedLut:
    """Write ``prog`` into ``subarray``.

    With ``staging`` the table image is taken from that subarray (same rows,
    already present) and moved in with one RBM per entry; otherwise every row is
    a host write.
    """
    cfg = dev.cfg
    if first_row + prog.size > cfg.rows_per_subarray:
        raise CapacityExceeded(f"{prog.size} LUT rows do not fit in a "
                               f"{cfg.rows_per_subarray}-row subarray from row {first_row}")
    _check_classes(prog)
    rows = lut_rows(prog, cfg.row_size_bytes)
    for i, data in enumerate(rows):
        r = first_row + i
        if staging is None:
            dev.write_row(subarray, r, data)
        else:
            dev.execute(act(staging, r))
            dev.execute(rbm(staging, subarray, r))
            dev.execute(pre(staging))
            dev.execute(pre(subarray))
    rec = dev.luts[subarray] = LoadedLut(prog, subarray, first_row)
    return rec


def stage_lut_image(dev: Device, prog: LutProgram, staging: int, first_row: int = 0,
                    lut_sub: Optional[int] = None) -> None:
    """Host-write the table image into ``staging``.

    With ``lut_sub`` the staging copy is registered as the reload source for
    that LUT subarray. Destroyed GSA rows cannot be activated, so reloads
    move the image in over the row-buffer link instead of through host writes.
    """
    for i, data in enumerate(lut_rows(prog, dev.cfg.row_size_bytes)):
        dev.write_row(staging, first_row + i, data)
    if lut_sub is not None:
        dev.lut_staging[lut_sub] = staging


def _loaded(dev: Device, subarray: int) -> LoadedLut:
    rec = dev.luts.get(subarray)
    if rec is None:
        raise LUTNotLoaded(f"no LUT loaded in subarray {subarray}")
    if not rec.valid:
        raise LUTNotLoaded(f"LUT in subarray {subarray} was consumed by a destructive sweep; reload it")
    return rec


def row_sweep_op(dev: Device, lut_sub: int, src_sub: int, first_row: int, n_rows: int,
                 width: int, mask: int, tags: Optional[Sequence[int]] = None) -> SweepResult:
    """One ROW_SWEEP against the row currently open in ``src_sub``."""
    with dev.measure() as m:
        dev.execute(row_sweep(lut_sub, first_row, n_rows, src_sub, width, mask, tags))
    st = dev.sub(lut_sub)
    inval = tuple(range(first_row, first_row + n_rows)) if dev.cfg.variant == "GSA" else ()
    return SweepResult(st.latch.copy(), dev.last_sweep_hits.copy(), n_rows,
                       m.elapsed_ns, m.energy_pJ, inval)


def pluto_query(dev: Device, lut_sub: int, src: tuple[int, int], dst: tuple[int, int],
                width: Optional[int] = None) -> None:
    """dst row = LUT[src lane] for every lane. The same call serves masked tables."""
    rec = _loaded(dev, lut_sub)
    prog = rec.program
    if width is not None and width != prog.lane_width:
        raise WidthMismatch(f"source lanes are {width} bits but the LUT uses {prog.lane_width}")
    s_sub, s_row = src
    d_sub, d_row = dst
    dev.execute(act(s_sub, s_row))
    dev.execute(row_sweep(lut_sub, rec.first_row, prog.size, s_sub, prog.lane_width,
                          prog.effective_mask, prog.keys))
    dev.execute(pre(s_sub))
    dev.execute(rbm(lut_sub, d_sub, d_row, "OUT"))
    dev.execute(pre(d_sub))
    if dev.cfg.variant == "GSA":
        rec.valid = False


def pluto_query_masked(dev: Device, lut_sub: int, src, dst, width=None) -> None:
    rec = _loaded(dev, lut_sub)
    _check_classes(rec.program)
    pluto_query(dev, lut_sub, src, dst, width)


def reload(dev: Device, lut_sub: int, staging: Optional[int] = None) -> LoadedLut:
    rec = dev.luts.get(lut_sub)
    if rec is None:
        raise LUTNotLoaded(f"no LUT was ever loaded in subarray {lut_sub}")
    if staging is None:
        staging = dev.lut_staging.get(lut_sub)
    return load_lut(dev, rec.program, lut_sub, rec.first_row, staging)


def ensure_loaded(dev: Device, lut_sub: int, prog: LutProgram) -> None:
    """Load ``prog`` unless a valid copy already sits in ``lut_sub``."""
    rec = dev.luts.get(lut_sub)
    if rec is None or not rec.valid or (rec.program is not prog and rec.program != prog):
        load_lut(dev, prog, lut_sub, staging=dev.lut_staging.get(lut_sub))


# -- large tables -------------------------------------------------------------

@dataclass
class LargeLayout:
    """Subarrays used by a split table. All must share one bank."""
    parts: tuple          # LUT partition subarrays, one per value of the S field
    scratch: tuple        # compute subarrays, one per partition
    program: LutProgram = None
    xor_constants: tuple = ()


# scratch rows inside each compute subarray (below the reserved compute rows)
_SRC, _KEY, _IDX, _PART = 0, 1, 2, 3


def load_lut_large(dev: Device, prog: LutProgram, parts: Sequence[int],
                   scratch: Sequence[int]) -> LargeLayout:
    rows = dev.cfg.rows_per_subarray
    split, recipe = partition_large(prog, rows)
    n = 1 << split.S
    if len(parts) < n or len(scratch) < n:
        raise PartitionTooSmall(f"a {prog.size}-entry table needs {n} partitions, "
                                f"got {len(parts)} LUT and {len(scratch)} scratch subarrays")
    for k in range(n):
        load_lut(dev, split.partition(k, rows), parts[k])
        dev.write_row(scratch[k], _KEY,
                      L.replicate(recipe.xor_constants[k], prog.lane_width, dev.cfg.row_size_bytes))
    return LargeLayout(tuple(parts[:n]), tuple(scratch[:n]), split, recipe.xor_constants)


def pluto_query_large(dev: Device, layout: LargeLayout, src: tuple[int, int],
                      dst: tuple[int, int]) -> None:
    """Split-table query: per-partition queries in parallel, then an OR merge.

    Each scratch subarray receives the source row, XORs it with ``k << R`` so
    that only lanes whose high field equals ``k`` land in ``[0, 2**R)``, and
    queries partition ``k``. Partials are moved into the destination
    subarray and OR-ed together there.
    """
    from . import pum

    n = len(layout.parts)
    for k in range(n):
        _loaded(dev, layout.parts[k])
    s_sub, s_row = src
    d_sub, d_row = dst
    # distribute the source row
    dev.execute(act(s_sub, s_row))
    for q in layout.scratch:
        dev.execute(rbm(s_sub, q, _SRC))
        dev.execute(pre(q))
    dev.execute(pre(s_sub))
    with dev.deferred() as plan:
        for k in range(n):
            q = layout.scratch[k]
            with plan.lane(k):
                pum.ambit_xor(dev, q, _SRC, _KEY, _IDX)
                pluto_query(dev, layout.parts[k], (q, _IDX), (q, _PART))
    # merge
    acc = pum.reserved(dev.cfg).X[8]
    for k in range(n):
        q = layout.scratch[k]
        target = d_row if n == 1 else (acc if k == 0 else pum.reserved(dev.cfg).X[7])
        dev.execute(act(q, _PART))
        dev.execute(rbm(q, d_sub, target))
        dev.execute(pre(q))
        dev.execute(pre(d_sub))
        if k > 0:
            out = d_row if k == n - 1 else acc
            pum.ambit_or(dev, d_sub, acc, target, out)
