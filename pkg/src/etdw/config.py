"""Scenario files: flat ``key = value`` pairs in a single ``[scenario]`` section.

Values are JSON literals (numbers, strings in double quotes, nested lists for
matrices). Unknown keys are rejected. Several files can be layered; later
files and ``--set`` overrides win.

Example::

    [scenario]
    schema_version = 1
    mode = "etdw"
    attack = "gra"
    attack_start = 400
    gra_scale = -1.0
    seed = 3
"""

from __future__ import annotations

import configparser
import json
from pathlib import Path

import numpy as np

from .attacks import DosConfig, GraConfig, ReplayConfig
from .detection import TestParams
from .errors import ConfigurationError
from .plant import PlantModel, nipvss_bounds, nipvss_model, SafetyBounds
from .simulation import ScenarioConfig, default_test_params

__all__ = ["SCHEMA_VERSION", "DEFAULTS", "load_settings", "parse_override", "build_scenario",
           "dump_settings"]

SCHEMA_VERSION = 1
SECTION = "scenario"

DEFAULTS: dict = {
    "schema_version": SCHEMA_VERSION,
    "model": "nipvss",  # nipvss | nipvss_rounded | matrices
    "A": None, "B": None, "C": None, "sigma_w": None, "sigma_v": None,
    "position_limit": 0.3,
    "angle_limit": 0.8,
    "mode": "etdw",
    "triggering": "event",
    "delta": 1e-5,
    "watermark_cov": 0.01,  # scalar means a multiple of the identity
    "control_watermark_cov": 0.01,
    "watermark_seed": None,
    "beta1": 0.02,
    "beta2": 0.02,
    "x0": None,
    "Q": 10.0,
    "R": 1.0,
    "attack": "none",  # none | gra | replay | dos
    "attack_start": 400,
    "gra_scale": -1.0,
    "gra_Aa": 0.1,
    "gra_noise_cov": 0.0,
    "replay_record_start": 200,
    "replay_record_length": 200,
    "dos_stop": None,
    "channel": "formal",
    "detector": "default",  # default | calibrate | explicit (uses the keys below)
    "iota1": None, "iota2": None, "kappa1": None, "kappa2": None, "added_threshold": None,
    "burn_in": None,
    "residual_cov": "calibrate",
    "calibration_runs": 6,
    "calibration_slack": 1.2,
    "horizon": 2000,
    "seed": 0,
    "on_violation": "stop",
}


def _parse_value(key: str, text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"value of {key!r} is not valid JSON: {text!r}") from exc


def _check_keys(values: dict, origin: str) -> None:
    unknown = sorted(set(values) - set(DEFAULTS))
    if unknown:
        raise ConfigurationError(f"{origin}: unknown keys {', '.join(unknown)}")


def load_settings(paths=(), overrides=()) -> dict:
    """Merge defaults, config files in order, then ``key=value`` overrides."""
    settings = dict(DEFAULTS)
    for path in paths:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
        if not parser.has_section(SECTION):
            raise ConfigurationError(f"{path}: missing [{SECTION}] section")
        values = {k: _parse_value(k, v) for k, v in parser.items(SECTION)}
        _check_keys(values, str(path))
        settings.update(values)
    for item in overrides:
        key, value = parse_override(item)
        _check_keys({key: value}, "override")
        settings[key] = value
    if settings["schema_version"] != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported schema_version {settings['schema_version']!r}")
    return settings


def parse_override(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise ConfigurationError(f"override must look like key=value, got {item!r}")
    key, text = item.split("=", 1)
    key = key.strip()
    text = text.strip()
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text  # bare strings like mode=cdw_ttc
    return key, value


def _matrix(value, n: int, name: str) -> np.ndarray:
    if np.isscalar(value):
        return float(value) * np.eye(n)
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        arr = np.diag(arr)
    if arr.shape != (n, n):
        raise ConfigurationError(f"{name} must be a scalar, a length-{n} diagonal or {n}x{n}")
    return arr


def _model(s: dict) -> PlantModel:
    kind = s["model"]
    if kind == "nipvss":
        return nipvss_model()
    if kind == "nipvss_rounded":
        return nipvss_model(rounded=True)
    if kind == "matrices":
        missing = [k for k in ("A", "B", "C", "sigma_w", "sigma_v") if s[k] is None]
        if missing:
            raise ConfigurationError(f"model=matrices needs {', '.join(missing)}")
        return PlantModel(s["A"], s["B"], s["C"], s["sigma_w"], s["sigma_v"])
    raise ConfigurationError(f"unknown model {kind!r}")


def _bounds(s: dict, model: PlantModel) -> SafetyBounds:
    if s["model"].startswith("nipvss"):
        return nipvss_bounds(s["position_limit"], s["angle_limit"])
    limits = {}
    if s["position_limit"] is not None and model.nx > 0:
        limits[0] = s["position_limit"]
    if s["angle_limit"] is not None and model.nx > 1:
        limits[1] = s["angle_limit"]
    return SafetyBounds(limits)


def _attack(s: dict, model: PlantModel):
    kind = s["attack"]
    start = int(s["attack_start"])
    if kind in (None, "none"):
        return None
    if kind == "gra":
        return GraConfig(float(s["gra_scale"]), _matrix(s["gra_Aa"], model.nx, "gra_Aa"),
                         _matrix(s["gra_noise_cov"], model.ny, "gra_noise_cov"), start)
    if kind == "replay":
        return ReplayConfig(start, int(s["replay_record_start"]), int(s["replay_record_length"]))
    if kind == "dos":
        stop = s["dos_stop"]
        return DosConfig(start, None if stop is None else int(stop))
    raise ConfigurationError(f"unknown attack {kind!r}")


def _detector(s: dict):
    kind = s["detector"]
    if kind == "default":
        return None
    if kind == "calibrate":
        return "calibrate"
    if kind == "explicit":
        base = default_test_params(s["mode"])
        fields = {"iota1": "iota1", "iota2": "iota2", "kappa1": "kappa1", "kappa2": "kappa2",
                  "added_threshold": "added", "burn_in": "burn_in"}
        kwargs = {attr: s[key] for key, attr in fields.items() if s[key] is not None}
        merged = {**base.__dict__, **kwargs}
        merged["burn_in"] = int(merged["burn_in"])
        return TestParams(**merged)
    raise ConfigurationError(f"unknown detector setting {kind!r}")


def build_scenario(settings: dict) -> ScenarioConfig:
    s = settings
    model = _model(s)
    residual_cov = s["residual_cov"]
    if not isinstance(residual_cov, str):
        residual_cov = _matrix(residual_cov, model.ny, "residual_cov")
    try:
        return ScenarioConfig(
            model=model,
            bounds=_bounds(s, model),
            mode=s["mode"],
            triggering=s["triggering"],
            delta=float(s["delta"]),
            watermark_cov=_matrix(s["watermark_cov"], model.ny, "watermark_cov"),
            control_watermark_cov=_matrix(s["control_watermark_cov"], model.nu, "control_watermark_cov"),
            watermark_seed=s["watermark_seed"],
            beta1=float(s["beta1"]),
            beta2=float(s["beta2"]),
            x0=s["x0"],
            Q=_matrix(s["Q"], model.nx, "Q"),
            R=_matrix(s["R"], model.nu, "R"),
            attack=_attack(s, model),
            channel=s["channel"],
            detector=_detector(s),
            residual_cov=residual_cov,
            calibration_runs=int(s["calibration_runs"]),
            calibration_slack=float(s["calibration_slack"]),
            horizon=int(s["horizon"]),
            seed=int(s["seed"]),
            on_violation=s["on_violation"],
        )
    except (TypeError, KeyError) as exc:
        raise ConfigurationError(f"invalid scenario setting: {exc}") from exc


def dump_settings(settings: dict) -> str:
    lines = [f"[{SECTION}]"]
    for key in DEFAULTS:
        lines.append(f"{key} = {json.dumps(settings[key])}")
    return "\n".join(lines) + "\n"
