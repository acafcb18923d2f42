import numpy as np
import pytest

from etdw.attacks import DosConfig, GraConfig, ReplayConfig
from etdw.config import DEFAULTS, build_scenario, dump_settings, load_settings, parse_override
from etdw.detection import CDW_TEST_PARAMS, TestParams
from etdw.errors import ConfigurationError

SCENARIOS = __import__("pathlib").Path(__file__).resolve().parents[1] / "scenarios"


def write(tmp_path, name, body):
    path = tmp_path / name
    path.write_text("[scenario]\n" + body, encoding="utf-8")
    return path


def test_defaults_build_reference_setup():
    cfg = build_scenario(load_settings())
    assert cfg.mode == "etdw" and cfg.delta == 1e-5 and cfg.horizon == 2000
    assert np.array_equal(cfg.watermark_cov, 0.01 * np.eye(2))
    assert np.array_equal(cfg.Q, 10 * np.eye(4)) and np.array_equal(cfg.R, np.eye(1))
    assert cfg.attack is None and cfg.detector is None


def test_layering_and_overrides(tmp_path):
    a = write(tmp_path, "a.cfg", 'seed = 1\nmode = "cdw_etc"\n')
    b = write(tmp_path, "b.cfg", "seed = 2\n")
    s = load_settings([a, b], ["horizon=50", "mode=plain"])
    assert s["seed"] == 2 and s["horizon"] == 50 and s["mode"] == "plain"


def test_parse_override_types():
    assert parse_override("delta=2e-5") == ("delta", 2e-5)
    assert parse_override("mode=cdw_ttc") == ("mode", "cdw_ttc")
    assert parse_override('x0=[0, 0.02, 0, 0]') == ("x0", [0, 0.02, 0, 0])
    with pytest.raises(ConfigurationError):
        parse_override("delta")


@pytest.mark.parametrize("body", ["bogus = 1\n", "seed = [1,\n", "schema_version = 2\n"])
def test_bad_files_rejected(tmp_path, body):
    with pytest.raises(ConfigurationError):
        load_settings([write(tmp_path, "x.cfg", body)])


def test_missing_file_and_section(tmp_path):
    with pytest.raises(ConfigurationError):
        load_settings([tmp_path / "nope.cfg"])
    p = tmp_path / "nosection.cfg"
    p.write_text("seed = 1\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_settings([p])


def test_attack_specs():
    gra = build_scenario(load_settings([SCENARIOS / "nipvss_etdw_gra.cfg"])).attack
    assert isinstance(gra, GraConfig) and gra.scale == -1.0 and gra.start_step == 400
    assert np.array_equal(gra.A_a, 0.1 * np.eye(4))
    rep = build_scenario(load_settings([SCENARIOS / "nipvss_replay.cfg"])).attack
    assert isinstance(rep, ReplayConfig) and rep.record_start == 200
    dos = build_scenario(load_settings([SCENARIOS / "nipvss_dos.cfg"])).attack
    assert isinstance(dos, DosConfig) and dos.stop_step is None
    with pytest.raises(ConfigurationError):
        build_scenario(load_settings(overrides=["attack=jam"]))


def test_detector_settings():
    s = load_settings(overrides=["mode=cdw_etc", "detector=explicit", "kappa1=2e-5"])
    p = build_scenario(s).detector
    assert isinstance(p, TestParams)
    assert p.kappa1 == 2e-5 and p.kappa2 == CDW_TEST_PARAMS.kappa2
    assert build_scenario(load_settings(overrides=["detector=calibrate"])).detector == "calibrate"


def test_explicit_matrices_model():
    s = load_settings(overrides=[
        "model=matrices", "A=[[0.5]]", "B=[[1.0]]", "C=[[1.0]]", "sigma_w=[[0.1]]", "sigma_v=[[0.1]]",
        "position_limit=10", "angle_limit=null", "watermark_cov=0.2", "control_watermark_cov=0.2",
    ])
    cfg = build_scenario(s)
    assert cfg.model.nx == 1 and cfg.bounds.limits == {0: 10}
    with pytest.raises(ConfigurationError):
        build_scenario(load_settings(overrides=["model=matrices"]))


def test_matrix_shapes_checked():
    with pytest.raises(ConfigurationError):
        build_scenario(load_settings(overrides=["Q=[1, 2]"]))


def test_dump_round_trip(tmp_path):
    s = load_settings(overrides=["seed=9", "attack=gra"])
    p = tmp_path / "dump.cfg"
    p.write_text(dump_settings(s), encoding="utf-8")
    assert load_settings([p]) == s
    assert set(load_settings([p])) == set(DEFAULTS)
