"""Device configuration: geometry, timing, energy and pLUTo variant.

Times are in nanoseconds, energies in picojoules. Three named profiles ship
with the package:

``paper-DDR4``
    DDR4-2400, 8 GB, one rank of 16 banks, 512 x 8 KB rows per subarray,
    17-17-17 CAS-class timings (tRCD = tRP = 14.16 ns). The CAS rating does
    not fix tRAS/tRC, so JEDEC-style values are used (tRAS = 32 ns,
    tRC = tRAS + tRP).
``paper-3DS``
    HMC-like stacked memory with 256 B rows; vaults are modelled as ranks.
``paper-table8``
    DDR4 geometry with a GMC device whose timings were solved so that a
    2-entry LUT query takes 105 ns and a 4-entry query 165 ns
    (tRC = 30 ns, tRCD + tRP + tRBM = 45 ns). The constants are chosen to be
    exactly representable binary fractions so that latency differences are
    exact in floating point.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigError

VARIANTS = ("GSA", "BSA", "GMC")


@dataclass(frozen=True)
class DeviceConfig:
    profile: str = "custom"

    # geometry
    channels: int = 1
    ranks: int = 1
    banks_per_rank: int = 16
    subarrays_per_bank: int = 128
    rows_per_subarray: int = 512
    row_size_bytes: int = 8192

    # timing (ns)
    tCK: float = 0.8333
    tRCD: float = 14.16
    tRAS: float = 32.0
    tRP: float = 14.16
    tRC: float = 46.16
    tFAW: float = 13.33
    tRBM: float = 8.0
    tFF: float = 1.0
    # None means two activations plus one precharge (2 tRAS + tRP)
    tAAP: Optional[float] = None

    # energy (pJ)
    eACT: float = 1100.0
    ePRE: float = 400.0
    eRBM: float = 500.0
    eFF: float = 50.0
    eCMP: float = 30.0

    variant: str = "BSA"
    parallel_subarrays: int = 16

    def __post_init__(self):
        self.validate()

    # -- derived quantities -------------------------------------------------
    @property
    def total_subarrays(self) -> int:
        return self.channels * self.ranks * self.banks_per_rank * self.subarrays_per_bank

    @property
    def subarrays_per_rank(self) -> int:
        return self.banks_per_rank * self.subarrays_per_bank

    @property
    def row_bits(self) -> int:
        return self.row_size_bytes * 8

    @property
    def subarray_bytes(self) -> int:
        return self.rows_per_subarray * self.row_size_bytes

    @property
    def capacity_bytes(self) -> int:
        return self.total_subarrays * self.subarray_bytes

    @property
    def aap_ns(self) -> float:
        if self.tAAP is not None:
            return self.tAAP
        return self.tRAS + self.tRAS + self.tRP

    def rank_of(self, subarray: int) -> int:
        return subarray // self.subarrays_per_rank

    def bank_of(self, subarray: int) -> int:
        return subarray // self.subarrays_per_bank

    def replace(self, **changes) -> "DeviceConfig":
        return dataclasses.replace(self, **changes)

    def validate(self) -> None:
        for name in ("channels", "ranks", "banks_per_rank", "subarrays_per_bank",
                     "rows_per_subarray", "row_size_bytes", "parallel_subarrays"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.row_size_bytes & (self.row_size_bytes - 1):
            raise ConfigError(f"row_size_bytes must be a power of two, got {self.row_size_bytes}")
        for name in ("tCK", "tRCD", "tRAS", "tRP", "tRC", "tFAW", "tRBM", "tFF",
                     "eACT", "ePRE", "eRBM", "eFF", "eCMP"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.tAAP is not None and self.tAAP < 0:
            raise ConfigError("tAAP must be non-negative")
        if self.tRC > self.tRAS + self.tRP:
            raise ConfigError(
                f"tRC ({self.tRC}) must not exceed tRAS + tRP ({self.tRAS + self.tRP})")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.parallel_subarrays > self.total_subarrays:
            raise ConfigError(
                f"parallel_subarrays ({self.parallel_subarrays}) exceeds the "
                f"{self.total_subarrays} subarrays in the device")


def paper_ddr4() -> DeviceConfig:
    tRAS, tRP = 32.0, 14.16
    return DeviceConfig(profile="paper-DDR4", tRAS=tRAS, tRP=tRP, tRC=tRAS + tRP)


def paper_3ds() -> DeviceConfig:
    tRAS, tRP = 27.5, 13.75
    return DeviceConfig(
        profile="paper-3DS",
        ranks=32, banks_per_rank=16, subarrays_per_bank=128,
        rows_per_subarray=512, row_size_bytes=256,
        tCK=0.8, tRCD=13.75, tRAS=tRAS, tRP=tRP, tRC=tRAS + tRP,
        tFAW=0.0, tRBM=4.0,
        eACT=140.0, ePRE=50.0, eRBM=60.0, eFF=2.0, eCMP=1.0,
        parallel_subarrays=512,
    )


def paper_table8() -> DeviceConfig:
    return DeviceConfig(
        profile="paper-table8",
        tRCD=14.25, tRP=14.25, tRAS=15.75, tRC=30.0, tRBM=16.5,
        variant="GMC",
    )


PROFILES = {
    "paper-DDR4": paper_ddr4,
    "paper-3DS": paper_3ds,
    "paper-table8": paper_table8,
}


def get_profile(name: str, **overrides) -> DeviceConfig:
    try:
        base = PROFILES[name]()
    except KeyError:
        raise ConfigError(f"unknown profile {name!r}; known: {sorted(PROFILES)}") from None
    return base.replace(**overrides) if overrides else base


# -- key/value files -------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(DeviceConfig)}


def parse_kv(text: str, source: str = "<string>") -> list[tuple[int, str, str]]:
    """Split ``key = value`` text into (line number, key, value) triples."""
    items = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        items.append((lineno, key, value))
    return items


def _coerce(name: str, value: str, lineno: int, source: str):
    f = _FIELDS[name]
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    try:
        if "Optional" in kind:
            return None if value.lower() in ("auto", "none", "") else float(value)
        if kind == "int":
            return int(value, 0)
        if kind == "float":
            return float(value)
        return value
    except ValueError:
        raise ConfigError(f"{source}:{lineno}: bad value {value!r} for key {name!r}") from None


def config_from_text(text: str, source: str = "<string>") -> DeviceConfig:
    items = parse_kv(text, source)
    values = {}
    for lineno, key, value in items:
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = (lineno, value)
    profile = values.get("profile", (0, "custom"))[1]
    base = PROFILES[profile]() if profile in PROFILES else DeviceConfig()
    changes = {k: _coerce(k, v, ln, source) for k, (ln, v) in values.items()}
    try:
        return dataclasses.replace(base, **changes)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> DeviceConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_text(text, str(path))


def config_to_text(config: DeviceConfig) -> str:
    lines = []
    for name in _FIELDS:
        value = getattr(config, name)
        if value is None:
            value = "auto"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"
