"""Run metrics: latency, energy, activation counts and a command histogram."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional


@dataclass
class RunMetrics:
    elapsed_ns: float = 0.0
    energy_pJ: float = 0.0
    activations: int = 0
    histogram: Counter = field(default_factory=Counter)
    energy_breakdown: Counter = field(default_factory=Counter)
    bytes_processed: int = 0
    sweep_activations: int = 0      # row activations issued inside ROW_SWEEPs

    @property
    def activation_count(self) -> int:
        return self.activations

    @property
    def bandwidth_GBps(self) -> float:
        if self.elapsed_ns <= 0:
            return 0.0
        return self.bytes_processed / self.elapsed_ns  # bytes/ns == GB/s

    def copy(self) -> "RunMetrics":
        return RunMetrics(self.elapsed_ns, self.energy_pJ, self.activations,
                          Counter(self.histogram), Counter(self.energy_breakdown),
                          self.bytes_processed, self.sweep_activations)

    def __add__(self, other: "RunMetrics") -> "RunMetrics":
        return RunMetrics(
            self.elapsed_ns + other.elapsed_ns,
            self.energy_pJ + other.energy_pJ,
            self.activations + other.activations,
            self.histogram + other.histogram,
            self.energy_breakdown + other.energy_breakdown,
            self.bytes_processed + other.bytes_processed,
            self.sweep_activations + other.sweep_activations,
        )

    def __sub__(self, other: "RunMetrics") -> "RunMetrics":
        hist = Counter(self.histogram)
        hist.subtract(other.histogram)
        energy = Counter(self.energy_breakdown)
        energy.subtract(other.energy_breakdown)
        return RunMetrics(
            self.elapsed_ns - other.elapsed_ns,
            self.energy_pJ - other.energy_pJ,
            self.activations - other.activations,
            Counter({k: v for k, v in hist.items() if v}),
            Counter({k: v for k, v in energy.items() if v}),
            self.bytes_processed - other.bytes_processed,
            self.sweep_activations - other.sweep_activations,
        )

    def to_dict(self) -> dict:
        return {
            "elapsed_ns": self.elapsed_ns,
            "energy_pJ": self.energy_pJ,
            "activations": self.activations,
            "histogram": dict(sorted(self.histogram.items())),
            "energy_breakdown": dict(sorted(self.energy_breakdown.items())),
            "bytes_processed": self.bytes_processed,
            "sweep_activations": self.sweep_activations,
            "bandwidth_GBps": self.bandwidth_GBps,
        }


class MetricsHandle:
    """Filled in when a :meth:`Device.measure` block exits."""

    def __init__(self):
        self.metrics: Optional[RunMetrics] = None

    def __getattr__(self, name):
        if name == "metrics":
            raise AttributeError(name)
        if self.metrics is None:
            raise RuntimeError("metrics are available once the measured block exits")
        return getattr(self.metrics, name)
