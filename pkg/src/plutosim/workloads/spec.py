"""Workload descriptions, their key/value config and seeded input generation."""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..config import parse_kv
from ..errors import ConfigError, InputError

NAMES = ("vec_add_lut", "vec_mul_q", "bitwise", "bitcount", "bitcount_short",
         "crc8", "crc16", "crc32", "salsa20", "vmpc", "binarize", "color_grade", "bnn_layer")

BITWISE_OPS = ("AND", "OR", "XOR", "XNOR", "NOT")

# per-workload parameter defaults
DEFAULTS = {
    "vec_add_lut": {"elements": 65536, "element_bits": 4},
    "vec_mul_q": {"elements": 32768, "q_frac": 7},
    "bitwise": {"bytes": 32768, "op": "XOR"},
    "bitcount": {"bytes": 65536},
    "bitcount_short": {"bytes": 65536},
    "crc8": {"packets": 512, "packet_bytes": 128, "chunk_bytes": 4},
    "crc16": {"packets": 512, "packet_bytes": 128, "chunk_bytes": 4},
    "crc32": {"packets": 512, "packet_bytes": 128, "chunk_bytes": 4},
    "salsa20": {"packets": 128, "packet_bytes": 512},
    "vmpc": {"bytes": 65536, "key_seed": 1},
    "binarize": {"pixels": 936000, "threshold": 128},
    "color_grade": {"pixels": 65536, "gamma": 2.2},
    "bnn_layer": {"images": 1024, "filters": 4},
}

_INT_KEYS = {"elements", "element_bits", "q_frac", "bytes", "packets", "packet_bytes",
             "chunk_bytes", "key_seed", "pixels", "threshold", "images", "filters", "seed"}
_FLOAT_KEYS = {"gamma"}
_STR_KEYS = {"op", "input", "workload", "xor"}


@dataclass(frozen=True)
class WorkloadSpec:
    name: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    input_path: Optional[str] = None
    xor: str = "ambit"           # XOR path for in-memory adders: "ambit" or "lut"

    def __post_init__(self):
        if self.name not in NAMES:
            raise InputError(f"unknown workload {self.name!r}; expected one of {', '.join(NAMES)}")
        merged = {**DEFAULTS[self.name], **self.params}
        unknown = set(merged) - set(DEFAULTS[self.name])
        if unknown:
            raise ConfigError(f"{self.name}: unknown parameter(s) {', '.join(sorted(unknown))}")
        object.__setattr__(self, "params", merged)
        if self.name == "bitwise" and merged["op"] not in BITWISE_OPS:
            raise InputError(f"bitwise op must be one of {BITWISE_OPS}, got {merged['op']!r}")
        if self.name == "vec_mul_q" and merged["q_frac"] not in (7, 15):
            raise InputError("vec_mul_q supports Q1.7 and Q1.15 (q_frac 7 or 15)")
        if self.name == "vec_add_lut" and not 1 <= merged["element_bits"] <= 4:
            raise InputError("vec_add_lut element_bits must be 1..4 to fit an 8-bit lane")
        if self.xor not in ("ambit", "lut"):
            raise InputError(f"xor must be 'ambit' or 'lut', got {self.xor!r}")

    def __getitem__(self, key):
        return self.params[key]

    def with_params(self, **kw) -> "WorkloadSpec":
        return replace(self, params={**self.params, **kw})

    @property
    def label(self) -> str:
        if self.name == "bitwise":
            return f"bitwise_{self.params['op']}"
        if self.name == "vec_mul_q":
            return f"vec_mul_q1.{self.params['q_frac']}"
        return self.name


def effective_seed(seed: int) -> int:
    env = os.environ.get("PLUTO_SIM_SEED")
    if env is None or env == "":
        return seed
    try:
        return int(env, 0)
    except ValueError:
        raise ConfigError(f"PLUTO_SIM_SEED must be an integer, got {env!r}") from None


def spec_from_text(text: str, source: str = "<workload>") -> WorkloadSpec:
    items = parse_kv(text, source)
    kv = {k: (ln, v) for ln, k, v in items}
    if "workload" not in kv:
        raise ConfigError(f"{source}: missing 'workload' key")
    name = kv.pop("workload")[1]
    seed = 0
    path = kv.pop("input", (0, None))[1]
    xor = kv.pop("xor", (0, "ambit"))[1]
    params = {}
    for k, (ln, v) in kv.items():
        try:
            if k == "seed":
                seed = int(v, 0)
            elif k in _INT_KEYS:
                params[k] = int(v, 0)
            elif k in _FLOAT_KEYS:
                params[k] = float(v)
            elif k in _STR_KEYS:
                params[k] = v
            else:
                raise ConfigError(f"{source}:{ln}: unknown key {k!r}")
        except ValueError:
            raise ConfigError(f"{source}:{ln}: bad value {v!r} for key {k!r}") from None
    if path is not None and not Path(path).is_absolute() and source not in ("<workload>",):
        path = str(Path(source).parent / path)
    return WorkloadSpec(name, params, seed, path, xor)


def load_spec(path) -> WorkloadSpec:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read workload file {p}: {exc}") from None
    return spec_from_text(text, str(p))


# -- raw grayscale images: <u32 width><u32 height> then width*height bytes --------

def read_raw_image(path) -> tuple[int, int, np.ndarray]:
    blob = Path(path).read_bytes()
    if len(blob) < 8:
        raise InputError(f"{path}: raw image shorter than its 8-byte header")
    w, h = struct.unpack_from("<II", blob, 0)
    if len(blob) - 8 != w * h:
        raise InputError(f"{path}: header says {w}x{h} but {len(blob) - 8} pixel bytes follow")
    return w, h, np.frombuffer(blob, np.uint8, offset=8).copy()


def write_raw_image(path, width: int, height: int, pixels) -> None:
    px = np.asarray(pixels, np.uint8).reshape(-1)
    if px.size != width * height:
        raise InputError(f"{px.size} pixels do not form a {width}x{height} image")
    Path(path).write_bytes(struct.pack("<II", width, height) + px.tobytes())


# -- inputs ------------------------------------------------------------------------

def make_inputs(spec: WorkloadSpec) -> dict:
    """Deterministic inputs for ``spec`` (seeded PRNG, or an image file)."""
    rng = np.random.default_rng(effective_seed(spec.seed))
    p = spec.params
    n = spec.name
    if n == "vec_add_lut":
        m = (1 << p["element_bits"]) - 1
        return {"a": rng.integers(0, m + 1, p["elements"], dtype=np.uint8),
                "b": rng.integers(0, m + 1, p["elements"], dtype=np.uint8)}
    if n == "vec_mul_q":
        dt = np.uint8 if p["q_frac"] == 7 else np.uint16
        hi = 1 << (p["q_frac"] + 1)
        return {"a": rng.integers(0, hi, p["elements"]).astype(dt),
                "b": rng.integers(0, hi, p["elements"]).astype(dt)}
    if n == "bitwise":
        return {"a": rng.integers(0, 256, p["bytes"], dtype=np.uint8),
                "b": rng.integers(0, 256, p["bytes"], dtype=np.uint8)}
    if n in ("bitcount", "bitcount_short", "vmpc"):
        return {"x": rng.integers(0, 256, p["bytes"], dtype=np.uint8)}
    if n.startswith("crc"):
        return {"packets": rng.integers(0, 256, (p["packets"], p["packet_bytes"]), dtype=np.uint8)}
    if n == "salsa20":
        return {"key": rng.integers(0, 256, 32, dtype=np.uint8).tobytes(),
                "nonce": rng.integers(0, 256, 8, dtype=np.uint8).tobytes()}
    if n in ("binarize", "color_grade"):
        if spec.input_path:
            _, _, px = read_raw_image(spec.input_path)
            return {"x": px}
        return {"x": rng.integers(0, 256, p["pixels"], dtype=np.uint8)}
    if n == "bnn_layer":
        return {"images": rng.integers(0, 2, (p["images"], 64), dtype=np.uint8),
                "filters": rng.integers(0, 2, (p["filters"], 64), dtype=np.uint8)}
    raise InputError(n)


def input_bytes(spec: WorkloadSpec, inputs: dict) -> int:
    if spec.name == "salsa20":
        return spec["packets"] * spec["packet_bytes"]
    if spec.name == "bnn_layer":
        return inputs["images"].size // 8
    return sum(np.asarray(v).nbytes for v in inputs.values())
