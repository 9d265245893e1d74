import pytest

from plutosim.config import (DeviceConfig, PROFILES, config_from_text, config_to_text, get_profile,
                             load_config)
from plutosim.errors import ConfigError, InputError


def test_defaults_are_valid():
    cfg = DeviceConfig()
    assert cfg.total_subarrays == 16 * 128
    assert cfg.subarray_bytes == 512 * 8192
    assert cfg.aap_ns == 2 * cfg.tRAS + cfg.tRP


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_profiles_round_trip_through_text(name):
    cfg = get_profile(name)
    assert config_from_text(config_to_text(cfg)) == cfg


def test_ddr4_profile_has_trc_equal_tras_plus_trp():
    cfg = get_profile("paper-DDR4")
    assert cfg.tRC == cfg.tRAS + cfg.tRP


def test_profile_key_selects_base_and_overrides_apply():
    cfg = config_from_text("profile = paper-3DS\nvariant = GSA\ntFAW = 5.5\n")
    assert cfg.ranks == 32 and cfg.variant == "GSA" and cfg.tFAW == 5.5


def test_unknown_key_names_line():
    with pytest.raises(ConfigError, match=r"<string>:2: unknown key 'tBOGUS'"):
        config_from_text("variant = BSA\ntBOGUS = 3\n")


def test_bad_value_names_key():
    with pytest.raises(ConfigError, match="tRAS"):
        config_from_text("tRAS = fast\n")


def test_missing_equals_is_an_error():
    with pytest.raises(ConfigError, match=":1:"):
        config_from_text("variant BSA\n")


@pytest.mark.parametrize("changes", [
    {"row_size_bytes": 100},
    {"variant": "XYZ"},
    {"tRC": 100.0},
    {"tRAS": -1.0},
    {"parallel_subarrays": 10**7},
    {"banks_per_rank": 0},
])
def test_validation_rejects(changes):
    with pytest.raises(ConfigError):
        DeviceConfig(**changes)


def test_config_error_is_an_input_error():
    assert issubclass(ConfigError, InputError)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.cfg")


def test_unknown_profile():
    with pytest.raises(ConfigError, match="unknown profile"):
        get_profile("DDR9")


def test_tAAP_auto_round_trip():
    cfg = DeviceConfig(tAAP=50.0)
    assert cfg.aap_ns == 50.0
    assert config_from_text("tAAP = auto\n").tAAP is None


def test_address_helpers():
    cfg = DeviceConfig(ranks=2)
    assert cfg.rank_of(cfg.subarrays_per_rank) == 1
    assert cfg.bank_of(cfg.subarrays_per_bank * 3 + 5) == 3
