"""Command latencies and the per-device timing state machine.

Every command occupies ``[issue, issue + duration)``. Row activations inside
a command ("beats") are what tRC and tFAW constrain. Precharges are posted:
they hold their subarray busy for tRP but do not delay the command stream.
"""

from __future__ import annotations

from bisect import insort
from collections import defaultdict
from typing import Optional

from .config import DeviceConfig
from .trace import Command


def sweep_period(cfg: DeviceConfig) -> float:
    """Spacing between consecutive row activations inside a sweep."""
    return cfg.tRAS + cfg.tRP if cfg.variant == "BSA" else cfg.tRC


def sweep_latency(cfg: DeviceConfig, n: int) -> float:
    if cfg.variant == "BSA":
        return (cfg.tRAS + cfg.tRP) * n
    return cfg.tRC * n + cfg.tRP


def rbm_hops(cmd: Command) -> int:
    """Links crossed by a row-buffer move; neighbours are one hop apart."""
    return max(1, abs(cmd.args[1] - cmd.args[0]))


def duration(cmd: Command, cfg: DeviceConfig) -> float:
    k = cmd.kind
    if k == "ACT":
        return cfg.tRCD
    if k == "PRE":
        return cfg.tRP
    if k in ("RD", "WR"):
        # column access is folded into the activation window
        return 0.0
    if k == "RBM":
        return cfg.tRBM * rbm_hops(cmd)
    if k == "TRA":
        return cfg.tRAS + cfg.tRP
    if k in ("AAP", "SHIFT"):
        # a scheduler may hold the first row open longer before the second ACT
        return cfg.aap_ns + cmd.stall
    if k == "ROW_SWEEP":
        return sweep_latency(cfg, cmd.args[2]) + cmd.stall
    raise AssertionError(k)


def beats(cmd: Command, cfg: DeviceConfig) -> list[tuple[int, float]]:
    """(subarray, offset) of every row activation, before any stall."""
    k = cmd.kind
    if k in ("ACT", "TRA"):
        return [(cmd.args[0], 0.0)]
    if k in ("AAP", "SHIFT"):
        return [(cmd.args[0], 0.0), (cmd.args[0], cfg.tRAS)]
    if k == "ROW_SWEEP":
        period = sweep_period(cfg)
        return [(cmd.args[0], i * period) for i in range(cmd.args[2])]
    return []


class Timing:
    """Tracks issue constraints for one device.

    ``cursor`` is the time at which the last non-posted command completed and
    is what callers read as elapsed time. ``horizon`` also covers posted
    precharges.
    """

    def __init__(self, cfg: DeviceConfig, enforce_faw: bool = True):
        self.cfg = cfg
        self.enforce_faw = enforce_faw and cfg.tFAW > 0
        self.cursor = 0.0
        self.end = 0.0      # last completion of a non-posted command
        self.horizon = 0.0
        self.busy = defaultdict(float)        # subarray -> free at
        self.last_act: dict[int, float] = {}  # subarray -> time of last beat
        self.pre_ready = defaultdict(float)   # subarray -> earliest PRE
        self.rank_acts = defaultdict(list)    # rank -> sorted beat times

    # -- constraint helpers --------------------------------------------------
    def _faw_floor(self, rank: int, t: float, extra: list[float]) -> float:
        hist = self.rank_acts[rank]
        recent = (hist[-4:] + extra)[-4:]
        if len(recent) < 4:
            return t
        return max(t, recent[0] + self.cfg.tFAW)

    def earliest(self, cmd: Command) -> tuple[float, float, Optional[list[float]]]:
        """Issue time, sweep stall and beat times for ``cmd`` in serial order."""
        cfg = self.cfg
        subs = cmd.subarrays
        t = max([self.cursor] + [self.busy[s] for s in subs])
        if cmd.kind == "PRE":
            t = max(t, self.pre_ready[cmd.args[0]])
        bts = beats(cmd, cfg)
        if bts:
            s0 = bts[0][0]
            if s0 in self.last_act:
                t = max(t, self.last_act[s0] + cfg.tRC)
        if not bts or not self.enforce_faw:
            return t, 0.0, None
        rank = cfg.rank_of(bts[0][0])
        if cmd.kind == "ROW_SWEEP":
            placed: list[float] = []
            stall = 0.0
            start = self._faw_floor(rank, t, [])
            for _, off in bts:
                nominal = start + off + stall
                at = self._faw_floor(rank, nominal, placed)
                stall += at - nominal
                placed.append(at)
            return start, stall, placed
        # multi-beat AAP/SHIFT moves as a unit
        while True:
            placed = []
            ok = True
            for _, off in bts:
                at = self._faw_floor(rank, t + off, placed)
                if at > t + off:
                    t = at - off
                    ok = False
                    break
                placed.append(at)
            if ok:
                return t, 0.0, placed

    # -- state update --------------------------------------------------------
    def commit(self, cmd: Command, issue: float, stall: float = 0.0,
               beat_times: Optional[list[float]] = None) -> float:
        """Record ``cmd`` at ``issue``; returns its completion time.

        Without explicit ``beat_times`` a stall is spread evenly over the
        gaps between the command's activations.
        """
        cfg = self.cfg
        end = issue + duration(cmd, cfg) - cmd.stall + stall
        bts = beats(cmd, cfg)
        if bts:
            period_stall = stall / max(len(bts) - 1, 1)
            for i, (s, off) in enumerate(bts):
                if beat_times is not None:
                    at = beat_times[i]
                else:
                    at = issue + off + period_stall * i
                hist = self.rank_acts[cfg.rank_of(s)]
                insort(hist, at)
                if len(hist) > 64:
                    del hist[:-16]
                self.last_act[s] = at
        for s in cmd.subarrays:
            self.busy[s] = max(self.busy[s], end)
        k = cmd.kind
        if k == "ACT":
            self.pre_ready[cmd.args[0]] = issue + cfg.tRAS
        elif k == "RBM":
            self.pre_ready[cmd.args[1]] = end
        elif k in ("RD", "WR"):
            self.pre_ready[cmd.args[0]] = max(self.pre_ready[cmd.args[0]], end)
        if k != "PRE":
            self.cursor = max(self.cursor, end)
            self.end = max(self.end, end)
        self.horizon = max(self.horizon, end)
        return end

    def fork(self, enforce_faw: bool) -> "Timing":
        """An independent copy, used to time one scheduling chain."""
        t = Timing(self.cfg, enforce_faw)
        t.cursor, t.end, t.horizon = self.cursor, self.end, self.horizon
        t.busy = defaultdict(float, self.busy)
        t.last_act = dict(self.last_act)
        t.pre_ready = defaultdict(float, self.pre_ready)
        t.rank_acts = defaultdict(list, {r: h[-8:] for r, h in self.rank_acts.items()})
        return t

    def advance_to(self, t: float) -> None:
        self.cursor = max(self.cursor, t)
        self.horizon = max(self.horizon, t)
