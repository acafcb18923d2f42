"""Closed-loop scenario runner.

One call to :func:`run_scenario` simulates plant, trigger, channel (with
optional encryption and attack), event-triggered estimator, LQG controller
and detector for ``horizon`` steps. Every random source has its own named
stream derived from the scenario seed, so switching the watermark or the
attack on or off never shifts the process or measurement noise.

Loop modes:

``etdw``     output watermark added before the network, removed after it
``cdw_ttc``  control-input watermark, every sample transmitted
``cdw_etc``  control-input watermark with send-on-delta triggering
``plain``    no watermark at all (reference runs)
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import attacks as atk
from .detection import (
    CDW_TEST_PARAMS,
    ETDW_TEST_PARAMS,
    Calibration,
    CdwDetectorState,
    DetectorState,
    StatisticSeries,
    TestParams,
    accumulate,
    calibrate,
    cdw_accumulate,
    cdw_evaluate,
    evaluate_tests,
)
from .errors import ConfigurationError
from .estimation import gain_and_update, initial_estimator, innovation_bound, predict, solve_lqg
from .plant import (
    GaussianNoise,
    PlantModel,
    PlantState,
    SafetyBounds,
    check_safety,
    nipvss_bounds,
    nipvss_model,
    propagate,
    stream_rng,
)
from .trigger import TriggerState, evaluate_trigger
from .watermark import WatermarkStream, decrypt_output, encrypt_output

__all__ = [
    "MODES",
    "ScenarioConfig",
    "Trace",
    "RunResult",
    "run_scenario",
    "run_many",
    "estimate_lqg_cost",
    "calibrate_scenario",
    "compare_schemes",
    "statistic_series",
    "default_test_params",
]

MODES = ("etdw", "cdw_ttc", "cdw_etc", "plain")


@dataclass(frozen=True)
class ScenarioConfig:
    model: PlantModel = field(default_factory=nipvss_model)
    bounds: SafetyBounds = field(default_factory=nipvss_bounds)
    mode: str = "etdw"
    triggering: str = "event"  # event | time; fixed by the mode for CDW
    delta: float = 1e-5
    watermark_cov: np.ndarray | None = None  # output watermark, default 0.01 I
    control_watermark_cov: np.ndarray | None = None  # control watermark, default 0.01 I
    watermark_seed: int | None = None  # defaults to seed
    beta1: float = 0.02
    beta2: float = 0.02
    x0: np.ndarray | None = None
    x_hat0: np.ndarray | None = None
    P0: np.ndarray | None = None
    Q: np.ndarray | None = None  # default 10 I
    R: np.ndarray | None = None  # default I
    attack: object = None  # GraConfig | ReplayConfig | DosConfig | None
    channel: str = "formal"  # formal | hold
    detector: object = None  # TestParams | "calibrate" | None for the mode default
    residual_cov: object = "calibrate"  # time-triggered CDW only: matrix or "calibrate"
    calibration_runs: int = 6
    calibration_slack: float = 1.2
    horizon: int = 2000
    seed: int = 0
    on_violation: str = "stop"  # stop | continue

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.triggering not in ("event", "time"):
            raise ConfigurationError(f"triggering must be 'event' or 'time', got {self.triggering!r}")
        if self.channel not in ("formal", "hold"):
            raise ConfigurationError(f"channel must be 'formal' or 'hold', got {self.channel!r}")
        if self.on_violation not in ("stop", "continue"):
            raise ConfigurationError(f"on_violation must be 'stop' or 'continue', got {self.on_violation!r}")
        if int(self.horizon) < 1:
            raise ConfigurationError("horizon must be at least 1")
        if not self.delta > 0:
            raise ConfigurationError("delta must be positive")
        if self.attack is not None and not isinstance(
                self.attack, (atk.GraConfig, atk.ReplayConfig, atk.DosConfig)):
            raise ConfigurationError(f"unsupported attack specification {type(self.attack).__name__}")
        if isinstance(self.attack, atk.GraConfig) and self.attack.A_a.shape[0] != self.model.nx:
            raise ConfigurationError("GRA hidden state must have the plant state dimension")
        if not (self.detector is None or self.detector == "calibrate" or isinstance(self.detector, TestParams)):
            raise ConfigurationError("detector must be TestParams, 'calibrate' or None")
        m = self.model
        for name, n in (("watermark_cov", m.ny), ("control_watermark_cov", m.nu)):
            cov = getattr(self, name)
            cov = 0.01 * np.eye(n) if cov is None else np.atleast_2d(np.asarray(cov, dtype=float))
            if cov.shape != (n, n):
                raise ConfigurationError(f"{name} must be {n}x{n}, got {cov.shape}")
            object.__setattr__(self, name, cov)
        x0 = np.zeros(m.nx) if self.x0 is None else np.asarray(self.x0, dtype=float)
        if x0.shape != (m.nx,):
            raise ConfigurationError(f"x0 must have shape ({m.nx},)")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "Q", 10.0 * np.eye(m.nx) if self.Q is None else np.atleast_2d(self.Q))
        object.__setattr__(self, "R", np.eye(m.nu) if self.R is None else np.atleast_2d(self.R))

    @property
    def event_triggered(self) -> bool:
        if self.mode == "cdw_ttc":
            return False
        if self.mode == "cdw_etc":
            return True
        return self.triggering == "event"

    @property
    def control_watermarked(self) -> bool:
        return self.mode in ("cdw_ttc", "cdw_etc")


def default_test_params(mode: str) -> TestParams:
    if mode == "cdw_ttc":
        return replace(CDW_TEST_PARAMS, added=0.0)
    if mode == "cdw_etc":
        return CDW_TEST_PARAMS
    return ETDW_TEST_PARAMS


@dataclass
class Trace:
    """Per-step record of one run; row ``j`` is sampling instant ``k = j``."""

    x: np.ndarray
    y: np.ndarray
    gamma: np.ndarray  # sensor-side trigger decision
    gamma_rx: np.ndarray  # what the estimator saw (differs under packet drop)
    ybar: np.ndarray
    d: np.ndarray  # watermark drawn at this step (output or control)
    ybar_plus: np.ndarray  # packet put on the network
    a: np.ndarray  # attack vector added to the packet
    y_rx: np.ndarray  # output value used by the estimator
    r: np.ndarray
    u: np.ndarray  # input actually applied
    x_hat: np.ndarray
    psi: np.ndarray
    cross: np.ndarray  # per-step cross term fed to the correlation test
    stat1: np.ndarray
    th1: np.ndarray
    stat2: np.ndarray
    th2: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    alarm: np.ndarray  # latched
    safe: np.ndarray
    attack_power: np.ndarray

    @property
    def k(self) -> np.ndarray:
        return np.arange(len(self.gamma))

    def __len__(self) -> int:
        return len(self.gamma)


@dataclass
class RunResult:
    trace: Trace
    summary: dict


def _derived_seeds(seed: int, tag: str, n: int) -> list[int]:
    rng = stream_rng(seed, tag)
    return [int(s) for s in rng.integers(0, 2**31 - 1, size=n)]


def _to_arrays(rows: dict) -> dict:
    return {key: np.asarray(val) for key, val in rows.items()}


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    """Simulate one closed-loop run; see the module docstring for the modes.

    Per sampling instant: measure, trigger, draw the watermark, encrypt,
    attack, decrypt (or hold), predict, residual and bound, detector,
    estimator update, control, safety check, plant step. On a safety
    violation the run ends at that step (``on_violation="stop"``) or the
    input is forced to zero for the remaining steps (``"continue"``).
    """
    m = cfg.model
    params, residual_cov = _resolve_detector(cfg)
    design = solve_lqg(m, cfg.Q, cfg.R)
    K = design.K

    process = GaussianNoise.from_seed(m.sigma_w, cfg.seed, "process")
    sensor = GaussianNoise.from_seed(m.sigma_v, cfg.seed, "measurement")
    wm_seed = cfg.seed if cfg.watermark_seed is None else cfg.watermark_seed
    out_wm = rx_wm = ctl_wm = None
    if cfg.mode == "etdw":
        # sensor and estimator hold separate generators sharing the seed (the key)
        out_wm = WatermarkStream(wm_seed, cfg.watermark_cov, "watermark")
        rx_wm = WatermarkStream(wm_seed, cfg.watermark_cov, "watermark")
    elif cfg.control_watermarked:
        ctl_wm = WatermarkStream(wm_seed, cfg.control_watermark_cov, "control-watermark")
    attack = cfg.attack
    attack_noise = None
    x_a = None
    if isinstance(attack, atk.GraConfig):
        x_a = attack.initial_state()
        if np.any(attack.sigma_va):
            attack_noise = GaussianNoise.from_seed(attack.sigma_va, cfg.seed, "attack")
    replay_log: dict = {}

    if cfg.control_watermarked:
        det = CdwDetectorState(m.ny, m.nu)
        cb_sigma = m.C @ m.B @ cfg.control_watermark_cov
        cdw_mode = "ttc" if cfg.mode == "cdw_ttc" else "etc"
    else:
        det = DetectorState(m.ny, m.ny)

    state = PlantState(cfg.x0.copy(), 0)
    est = initial_estimator(m.nx, cfg.x_hat0, cfg.P0, cfg.beta1, cfg.beta2, cfg.delta)
    trig = TriggerState(cfg.delta)
    u_prev = np.zeros(m.nu)
    d_prev = np.zeros(m.nu)
    y_last_rx = None
    dropped = False
    power = atk.AttackPower()
    alarm_step = alarm_tests = None
    violation = None
    rows = {name: [] for name in Trace.__dataclass_fields__}

    for k in range(cfg.horizon):
        y = sensor.draw() + m.C @ state.x
        if cfg.event_triggered:
            gamma, ybar, trig = evaluate_trigger(y, trig)
        else:
            gamma, ybar = 1, y.copy()

        d_n = out_wm.next() if out_wm is not None else np.zeros(m.ny)
        d_rx = rx_wm.next() if rx_wm is not None else np.zeros(m.ny)
        d_c = ctl_wm.next() if ctl_wm is not None else np.zeros(m.nu)
        packet = encrypt_output(ybar, d_n)  # d_n = 0 without an output watermark

        a = np.zeros(m.ny)
        gamma_rx = gamma
        if isinstance(attack, atk.GraConfig):
            a, _, x_a = atk.gra_step(attack, x_a, packet, gamma, m.C, k, attack_noise)
        elif isinstance(attack, atk.ReplayConfig):
            replay_log.setdefault(k, packet)
            if k >= attack.start_step:
                a = atk.replay_step(replay_log, k, attack.offset(k), gamma, packet) - packet
        elif isinstance(attack, atk.DosConfig):
            gamma_rx = atk.dos_step(attack.active(k), gamma)
        power.add(a)

        if gamma_rx:
            if cfg.channel == "formal":
                # decrypt(encrypt(ybar) + a) in closed form, exact to the bit
                y_rx = ybar + a
            else:
                y_rx = decrypt_output(packet + a, d_rx)
            y_last_rx = y_rx
            dropped = False
        elif gamma:
            dropped = True
        # a dropped transmission means the estimator never saw the sensor's held
        # value, so it keeps the last packet it actually got
        if not gamma_rx:
            if y_last_rx is not None and (dropped or cfg.channel == "hold"):
                y_rx = y_last_rx
            else:
                y_rx = ybar

        est = predict(est, m, u_prev)
        psi = innovation_bound(est.P_prior, gamma_rx, cfg.delta, cfg.beta1, cfg.beta2, m)
        r = y_rx - m.C @ est.x_prior
        if cfg.control_watermarked:
            cdw_accumulate(det, r, d_prev, psi, gamma_rx, cb_sigma)
            cross = np.outer(r, d_prev) - (gamma_rx - 1) * cb_sigma
            out = cdw_evaluate(det, params, cdw_mode, residual_cov)
        else:
            accumulate(det, r, d_rx, psi)
            cross = np.outer(r, d_rx)
            out = evaluate_tests(det, params)
        if alarm_step is None and out.alarm:
            alarm_step = det.i
            alarm_tests = [name for name, hit in (("cross", out.xi1), ("auto", out.xi2)) if hit]
        _, est = gain_and_update(est, psi, gamma_rx, y_rx, m)

        u = K @ est.x_post + d_c
        status = check_safety(state, cfg.bounds)
        if violation is None and not status:
            violation = (k, status.component)
        if violation is not None:
            u = np.zeros(m.nu)

        for name, val in (("x", state.x), ("y", y), ("gamma", gamma), ("gamma_rx", gamma_rx),
                          ("ybar", ybar), ("d", d_n if out_wm is not None else d_c),
                          ("ybar_plus", packet), ("a", a), ("y_rx", y_rx), ("r", r), ("u", u),
                          ("x_hat", est.x_post), ("psi", psi), ("cross", cross),
                          ("stat1", out.stat1), ("th1", out.th1), ("stat2", out.stat2),
                          ("th2", out.th2), ("xi1", out.xi1), ("xi2", out.xi2),
                          ("alarm", alarm_step is not None), ("safe", bool(status)),
                          ("attack_power", power.total / power.i)):
            rows[name].append(val)

        if violation is not None and cfg.on_violation == "stop":
            break
        state = propagate(m, state, u, process)
        u_prev, d_prev = u, d_c

    trace = Trace(**_to_arrays(rows))
    summary = {
        "mode": cfg.mode,
        "seed": int(cfg.seed),
        "steps": len(trace),
        "triggering_rate": float(np.mean(trace.gamma)),
        "alarm_step": alarm_step,
        "alarm_tests": alarm_tests,
        "violation_step": None if violation is None else violation[0],
        "violation_component": None if violation is None else violation[1],
        "max_abs_angle": float(np.max(np.abs(trace.x[:, 1]))) if m.nx > 1 else None,
        "attack_power_final": float(trace.attack_power[-1]),
        "mean_trace_psi": float(np.mean(np.trace(trace.psi, axis1=1, axis2=2))),
        "gain": K.ravel().tolist(),
        "test_params": {
            "iota1": params.iota1, "iota2": params.iota2, "kappa1": params.kappa1,
            "kappa2": params.kappa2, "added": params.added, "burn_in": params.burn_in,
        },
    }
    if residual_cov is not None:
        summary["residual_cov"] = np.asarray(residual_cov).tolist()
    return RunResult(trace, summary)


def _resolve_detector(cfg: ScenarioConfig):
    needs_cov = cfg.mode == "cdw_ttc"
    cov = cfg.residual_cov if needs_cov else None
    if cfg.detector == "calibrate" or (needs_cov and isinstance(cov, str)):
        cal = calibrate_scenario(cfg, cfg.calibration_runs, cfg.calibration_slack)
        params = cal.params if cfg.detector == "calibrate" else (cfg.detector or default_test_params(cfg.mode))
        if needs_cov and isinstance(cov, str):
            cov = cal.residual_cov
        return params, cov
    if needs_cov:
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if cov.shape != (cfg.model.ny, cfg.model.ny):
            raise ConfigurationError("residual_cov has the wrong shape")
    return cfg.detector or default_test_params(cfg.mode), cov


def statistic_series(trace: Trace, mode: str) -> StatisticSeries:
    auto = np.einsum("ki,kj->kij", trace.r, trace.r)
    bound = None if mode == "cdw_ttc" else trace.psi
    return StatisticSeries(trace.cross, auto, bound)


def _calibration_config(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    # placeholder detector settings so the calibration runs never recurse
    cov = np.eye(cfg.model.ny) if cfg.mode == "cdw_ttc" else cfg.residual_cov
    return replace(cfg, attack=None, seed=seed, watermark_seed=None,
                   detector=default_test_params(cfg.mode), residual_cov=cov)


def calibrate_scenario(cfg: ScenarioConfig, runs: int = 6, slack: float = 1.2,
                       seeds=None, workers: int | None = None) -> Calibration:
    """Fit detector thresholds on attack-free copies of ``cfg``.

    Seeds default to a fixed derivation from ``cfg.seed`` so the result is
    reproducible but does not reuse the evaluation noise.
    """
    if seeds is None:
        seeds = _derived_seeds(cfg.seed, "calibration", runs)
    cfgs = [_calibration_config(cfg, s) for s in seeds]
    results = run_many(cfgs, workers)
    burn_in = (cfg.detector.burn_in if isinstance(cfg.detector, TestParams)
               else default_test_params(cfg.mode).burn_in)
    series = [statistic_series(res.trace, cfg.mode) for res in results]
    return calibrate(series, slack=slack, burn_in=burn_in,
                     added_threshold=cfg.mode != "cdw_ttc")


def run_many(cfgs, workers: int | None = None) -> list[RunResult]:
    """Run independent scenarios, optionally in worker processes; order is preserved."""
    cfgs = list(cfgs)
    if workers is None or workers <= 1 or len(cfgs) <= 1:
        return [run_scenario(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_scenario, cfgs))


def estimate_lqg_cost(traces, Q, R) -> float:
    """Average of ``x'Qx + u'Ru`` over all runs and steps."""
    traces = list(traces)
    if not traces:
        raise ValueError("no traces given")
    n = {len(t) for t in traces}
    if len(n) != 1:
        raise ValueError("traces must share the same horizon")
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    total = 0.0
    for t in traces:
        total += np.einsum("ki,ij,kj->", t.x, Q, t.x) + np.einsum("ki,ij,kj->", t.u, R, t.u)
    return float(total / (len(traces) * n.pop()))


def compare_schemes(base: ScenarioConfig, modes=("etdw", "cdw_ttc", "cdw_etc"),
                    workers: int | None = None) -> dict:
    """Run the same seed and attack under several loop modes."""
    results = run_many([replace(base, mode=mode) for mode in modes], workers)
    report = {}
    for mode, res in zip(modes, results):
        t = res.trace
        report[mode] = {
            "summary": res.summary,
            "attack_power": t.attack_power,
            "trace_psi": np.trace(t.psi, axis1=1, axis2=2),
        }
    return report
