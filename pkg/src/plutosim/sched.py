"""Multi-subarray scheduling under per-rank activation windows.

A plan is a list of lanes, each an ordered command list. Lanes that share a
subarray are merged into one chain and run back to back. Chains are first
timed independently with no activation window, then a single pass over all
activations in nominal-time order delays them so that no five activations of
one rank fall inside a tFAW window. Every activation is its own event, so a
delayed later beat of a sweep or an AAP stretches that command (its stall)
rather than holding back other chains. Delays only accumulate along a chain,
so every per-subarray gap (tRC, tRAS, tRP) stays at least as large as in the
unconstrained chain. The pass is a composition of max-plus operations in a
fixed order, which makes the result non-decreasing in tFAW.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .config import DeviceConfig
from .timing import Timing, beats
from .trace import Command


@dataclass
class Slot:
    issue: float
    stall: float = 0.0
    beat_times: Optional[list[float]] = None


@dataclass
class Schedule:
    slots: list[list[Slot]]      # per lane, per command
    start: float
    end: float                   # completion of the last non-posted command
    horizon: float

    @property
    def elapsed(self) -> float:
        return self.end - self.start


def _chains(lanes: Sequence[Sequence[Command]]) -> list[list[int]]:
    parent = list(range(len(lanes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[int, int] = {}
    for i, lane in enumerate(lanes):
        for cmd in lane:
            for s in cmd.subarrays:
                if s in owner:
                    a, b = find(owner[s]), find(i)
                    if a != b:
                        parent[max(a, b)] = min(a, b)
                else:
                    owner[s] = i
    groups: dict[int, list[int]] = {}
    for i in range(len(lanes)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _floor(hist: list[float], t: float, faw: float) -> float:
    recent = hist[-4:]
    if recent:
        t = max(t, recent[-1])
        if faw > 0 and len(recent) == 4:
            t = max(t, recent[0] + faw)
    return t


def schedule_parallel(lanes: Sequence[Sequence[Command]], cfg: DeviceConfig,
                      base: Optional[Timing] = None) -> Schedule:
    """Earliest-issue schedule for ``lanes`` starting from ``base`` state."""
    base = base or Timing(cfg)
    start = base.cursor
    chains = _chains(lanes)

    # 1) unconstrained per-chain timing
    nominal: list[list[tuple[float, float]]] = [[] for _ in lanes]
    for chain in chains:
        t = base.fork(enforce_faw=False)
        for li in chain:
            for cmd in lanes[li]:
                issue, _, _ = t.earliest(cmd)
                end = t.commit(cmd, issue)
                nominal[li].append((issue, end))

    # 2) activation-window pass
    events = []
    for ci, chain in enumerate(chains):
        order = 0
        for li in chain:
            for k, cmd in enumerate(lanes[li]):
                bts = beats(cmd, cfg)
                if not bts:
                    continue
                issue = nominal[li][k][0]
                rank = cfg.rank_of(bts[0][0])
                for b, (_, off) in enumerate(bts):
                    events.append((issue + off, ci, order, b, li, k, rank))
                    order += 1
    events.sort(key=lambda e: e[:4])

    faw = cfg.tFAW
    hist: dict[int, list[float]] = {r: list(h[-4:]) for r, h in base.rank_acts.items()}
    shift = [0.0] * len(chains)
    first_shift: dict[tuple[int, int], float] = {}
    last_shift: dict[tuple[int, int], float] = {}
    beat_at: dict[tuple[int, int], list[float]] = {}
    for when, ci, _, b, li, k, rank in events:
        h = hist.setdefault(rank, [])
        t = when + shift[ci]
        at = _floor(h, t, faw)
        shift[ci] += at - t
        h.append(at)
        key = (li, k)
        if b == 0:
            first_shift[key] = shift[ci]
        last_shift[key] = shift[ci]
        beat_at.setdefault(key, []).append(at)
        if len(h) > 16:
            del h[:-8]

    # 3) read back per command
    slots: list[list[Slot]] = [[] for _ in lanes]
    end, horizon = start, base.horizon
    for chain in chains:
        cur = 0.0
        for li in chain:
            for k, cmd in enumerate(lanes[li]):
                issue, fin = nominal[li][k]
                key = (li, k)
                if key in first_shift:
                    s0, s1 = first_shift[key], last_shift[key]
                    slot = Slot(issue + s0, s1 - s0, beat_at[key])
                    cur = s1
                else:
                    slot = Slot(issue + cur)
                done = fin + cur
                horizon = max(horizon, done)
                if cmd.kind != "PRE":
                    end = max(end, done)
                slots[li].append(slot)
    return Schedule(slots, start, end, horizon)
