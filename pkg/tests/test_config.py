import pytest

from eit_bistability.backend.memory import InMemoryCacheBackend
from eit_bistability.cavity import CavityMode
from eit_bistability.config import (
    WORKERS_ENV,
    ConfigError,
    ResultCacheConfig,
    RunConfig,
    apply_overrides,
    dump_config,
    load_config,
    parse_config,
    resolve_parameter_path,
)
from eit_bistability.exceptions import CacheNotInitializedError
from eit_bistability.presets import preset_config

SAMPLE = """
[atom]
gamma31 = 0.1
eps_p = 1.5
eps_c = 1.5

[drive]
omega_c = 2.0

[cavity]
C = 150
mode = z-resolved
alphaL = 0.3

[grid]
x_max = 30
x_count = 300

[axes]
eps = 0.5, 1.0
"""


def test_parse_sample():
    cfg = parse_config(SAMPLE)
    assert cfg.atom.gamma31 == 0.1
    assert cfg.atom_params().eps_p == 1.5
    assert cfg.omega_c == 2.0
    assert cfg.cavity.mode is CavityMode.Z_RESOLVED
    assert cfg.cavity_params().effective_C == pytest.approx(0.3 / (2 * 0.1))
    assert cfg.x_grid()[-1] == 30.0
    assert cfg.axes == {"eps": (0.5, 1.0)}


def test_defaults():
    cfg = RunConfig()
    assert cfg.cavity.C == 150.0
    assert cfg.cavity.T == 0.1
    assert cfg.atom.gamma31 == preset_config("fig3a").atom.gamma31 == 0.1
    assert cfg.x_grid().size == 600
    assert cfg.sweep.outputs == ("thresholds", "multiplicity")
    assert cfg.y_ramp()[-1] == pytest.approx(40.0)


@pytest.mark.parametrize("cfg", [RunConfig(), parse_config(SAMPLE), preset_config("fig5b")])
def test_dump_round_trip(cfg):
    assert parse_config(dump_config(cfg)) == cfg


def test_coupling_phase():
    cfg = parse_config("[drive]\nomega_c = 2.0\nomega_c_phase = 1.5707963267948966\n")
    assert cfg.omega_c == pytest.approx(2j)


@pytest.mark.parametrize(
    "text, match",
    [
        ("[atom]\ngamma99 = 1\n", "gamma99"),
        ("[laser]\npower = 1\n", "unknown config section"),
        ("[atom]\ngamma21 = -1\n", "gamma21"),
        ("[grid]\nx_min = 5\nx_max = 1\n", "x_max must exceed x_min"),
        ("[sweep]\noutputs = curve, spectrum\n", "unknown sweep outputs"),
        ("[axes]\nomega_q = 1, 2\n", "unknown parameter path"),
        ("[DEFAULT]\nC = 1\n", "DEFAULT"),
        ("not an ini file", "malformed"),
        ("[atom]\ngamma21 = nan\n", "gamma21"),
    ],
)
def test_invalid_configs(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_load_config_reports_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.ini")


def test_load_config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(SAMPLE, encoding="utf-8")
    assert load_config(path) == parse_config(SAMPLE)


def test_overrides():
    cfg = apply_overrides(RunConfig(), ["cavity.C=20", "atom.delta_p = 0.5", "axes.omega_c=1, 2"])
    assert cfg.cavity.C == 20.0
    assert cfg.atom.delta_p == 0.5
    assert cfg.axes == {"omega_c": (1.0, 2.0)}


@pytest.mark.parametrize("override", ["cavity.C", "C=1", "laser.power=1", "cavity.T=2"])
def test_bad_overrides(override):
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), [override])


def test_parameter_paths():
    assert resolve_parameter_path("eps") == (("atom", "eps_p"), ("atom", "eps_c"))
    assert resolve_parameter_path("gamma_d") == (("atom", "gammaD21"), ("atom", "gammaD23"))
    assert resolve_parameter_path("cavity.C") == (("cavity", "C"),)
    with pytest.raises(ConfigError):
        resolve_parameter_path("atom.C")


def test_with_parameter_sets_aliases():
    cfg = RunConfig().with_parameter("gamma_d", 1.5)
    assert cfg.atom.gammaD21 == cfg.atom.gammaD23 == 1.5
    with pytest.raises(ConfigError):
        RunConfig().with_parameter("gamma21", -1.0)


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "6")
    assert RunConfig().sweep.parallelism == 6
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ConfigError, match=WORKERS_ENV):
        RunConfig()


def test_result_cache_config_lifecycle():
    assert not ResultCacheConfig.is_initialized()
    with pytest.raises(CacheNotInitializedError):
        ResultCacheConfig.get_backend()

    backend = InMemoryCacheBackend()
    ResultCacheConfig.init(backend)
    assert ResultCacheConfig.get_backend() is backend
    with pytest.raises(ConfigError, match="already initialized"):
        ResultCacheConfig.init(backend)


def test_result_cache_config_rejects_other_objects():
    with pytest.raises(ConfigError, match="BaseCacheBackend"):
        ResultCacheConfig.init(object())
