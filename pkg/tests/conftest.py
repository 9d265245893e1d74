import numpy as np
import pytest

from plutosim.config import DeviceConfig, get_profile
from plutosim.dram import Device


@pytest.fixture
def small_cfg() -> DeviceConfig:
    """Narrow rows keep functional tests fast; timing matches the DDR4 profile."""
    return get_profile("paper-DDR4").replace(row_size_bytes=64)


@pytest.fixture
def dev(small_cfg) -> Device:
    return Device(small_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from _support import ACCEPTANCE, format_line
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(format_line(n))
