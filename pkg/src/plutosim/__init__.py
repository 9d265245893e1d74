"""Simulator for lookup-table computation inside DRAM subarrays."""

__version__ = "0.1.0"

from .config import DeviceConfig, get_profile, load_config  # noqa: E402
from .dram import Device, replay  # noqa: E402
from .errors import InputError, PlutoError, SimulationError  # noqa: E402

__all__ = ["Device", "DeviceConfig", "InputError", "PlutoError", "SimulationError",
           "get_profile", "load_config", "replay", "__version__"]
