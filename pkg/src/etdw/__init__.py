"""Event-triggered dynamic watermarking for networked control loops."""

from .attacks import AttackPower, DosConfig, GraConfig, ReplayConfig, attack_power
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
    cdw_evaluate,
    evaluate_tests,
    thresholds,
)
from .errors import CalibrationError, ConfigurationError, DesignError, EtdwError, NumericError
from .estimation import performance_loss, solve_lqg
from .plant import PlantModel, SafetyBounds, nipvss_bounds, nipvss_model
from .simulation import (
    RunResult,
    ScenarioConfig,
    Trace,
    calibrate_scenario,
    compare_schemes,
    estimate_lqg_cost,
    run_many,
    run_scenario,
)
from .trigger import TriggerState, evaluate_trigger, triggering_rate
from .watermark import WatermarkStream

__version__ = "0.1.0"
