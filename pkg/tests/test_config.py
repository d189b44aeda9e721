import math
from pathlib import Path

import pytest

from riccicone.config import cross_section_for, dump_config, load_config, parse_config
from riccicone.flow import FlowConfig
from riccicone.kvtext import ConfigError
from riccicone.spectra import dump_cross_section, make_round_sphere

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_minimal_file_gets_defaults():
    cfg, cs = load_config("cross_section = sphere\nn = 3\n")
    assert cfg == FlowConfig(n=3)
    assert cs == make_round_sphere(3)
    assert (cfg.N, cfg.stencil_order, cfg.boundary, cfg.gamma_prime) == (200, 4, "auto", 2.0)


def test_unknown_key_is_named():
    with pytest.raises(ConfigError) as e:
        load_config("n = 3\ngird.N = 100\n", "run.cfg")
    assert "'gird.N'" in str(e.value)
    assert e.value.line == 2 and str(e.value).startswith("run.cfg:2:")


def test_rational_is_exact():
    cfg, _ = load_config("n = 3\ninitial.amplitude = 16/5\n")
    assert cfg.amplitude == 3.2


def test_bad_number_points_at_line():
    with pytest.raises(ConfigError) as e:
        load_config("n = 3\n\ngrid.N = many\n")
    assert e.value.line == 3 and "grid.N" in str(e.value)


def test_validation_error_points_at_key():
    with pytest.raises(ConfigError) as e:
        load_config("n = 3\ntime.cfl = 2\n")
    assert e.value.line == 2 and "time.cfl" in str(e.value)


def test_missing_n():
    with pytest.raises(ConfigError, match="missing key 'n'"):
        load_config("grid.N = 100\n")


def test_none_cross_section():
    cfg, cs = load_config("cross_section = none\nn = 4\n")
    assert cs is None and cfg.n == 4


def test_cross_section_file(tmp_path):
    (tmp_path / "s4.txt").write_text(dump_cross_section(make_round_sphere(4)))
    (tmp_path / "run.cfg").write_text("cross_section = s4.txt\n")
    cfg, cs = parse_config(tmp_path / "run.cfg")
    assert cfg.n == 4 and cs.n == 4
    assert Path(cfg.cross_section).is_absolute() or cfg.cross_section == str(tmp_path / "s4.txt")
    assert cross_section_for(cfg) == cs


def test_cross_section_dimension_clash(tmp_path):
    (tmp_path / "s4.txt").write_text(dump_cross_section(make_round_sphere(4)))
    with pytest.raises(ConfigError, match="disagrees"):
        load_config("cross_section = s4.txt\nn = 3\n", base=tmp_path)


def test_missing_cross_section_file(tmp_path):
    with pytest.raises(ConfigError) as e:
        load_config("n = 3\ncross_section = nope.txt\n", base=tmp_path)
    assert e.value.line == 2


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        parse_config(tmp_path / "absent.cfg")


def test_dump_round_trip():
    cfg = FlowConfig(n=3, amplitude=1 / 3, profile="perturbed_cone", t_end=math.pi / 100, dt=1e-5)
    back, _ = load_config(dump_config(cfg))
    assert back == cfg


@pytest.mark.parametrize("name", ["shrinking_sphere.cfg", "perturbed_cone.cfg"])
def test_shipped_configs_parse(name):
    cfg, _ = parse_config(CONFIGS / name)
    assert cfg.out_dir is not None
