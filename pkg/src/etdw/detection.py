"""Finite-sample watermarking tests.

Running sums over all sampling instants

    D_i = sum r(k) d(k)'          (cross term, watermark correlation)
    R_i = sum r(k) r(k)'          (auto term)
    P_i = sum Psi(k)              (event-inflated innovation bound)

are compared, as spectral norms of their sample means, against thresholds
of the form ``sqrt((1 + iota) kappa ln(i) / i)``. The auto-term test adds a
constant ``added`` that stands in for the unknown gap between the bound and
the true residual covariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, ConfigurationError

__all__ = [
    "TestParams",
    "TestOutcome",
    "DetectorState",
    "CdwDetectorState",
    "StatisticSeries",
    "Calibration",
    "ETDW_TEST_PARAMS",
    "CDW_TEST_PARAMS",
    "spectral_norm",
    "accumulate",
    "cdw_accumulate",
    "thresholds",
    "evaluate_tests",
    "cdw_evaluate",
    "statistic_trajectories",
    "calibrate",
]


def spectral_norm(M) -> float:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return float(np.linalg.svd(M, compute_uv=False)[0])


@dataclass(frozen=True)
class TestParams:
    iota1: float = 1.0
    iota2: float = 1.0
    kappa1: float = 1.8e-7
    kappa2: float = 1.0e-6
    added: float = 1.0e-3
    burn_in: int = 100

    __test__ = False  # not a pytest class

    def __post_init__(self):
        for name in ("iota1", "iota2", "kappa1", "kappa2"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.added < 0:
            raise ConfigurationError("added threshold must be nonnegative")
        if self.burn_in < 2:
            raise ConfigurationError("burn_in must be at least 2")


ETDW_TEST_PARAMS = TestParams(1.0, 1.0, 1.8e-7, 1.0e-6, 1.0e-3)
CDW_TEST_PARAMS = TestParams(1.0, 1.0, 1.0e-5, 1.0e-6, 1.0e-3)


@dataclass(frozen=True)
class TestOutcome:
    evaluated: bool
    xi1: bool
    xi2: bool
    stat1: float
    stat2: float
    th1: float
    th2: float

    __test__ = False

    @property
    def alarm(self) -> bool:
        return self.xi1 or self.xi2


@dataclass
class DetectorState:
    ny: int
    nd: int | None = None
    D_sum: np.ndarray = field(init=False)
    R_sum: np.ndarray = field(init=False)
    Psi_sum: np.ndarray = field(init=False)
    i: int = field(init=False, default=0)

    def __post_init__(self):
        nd = self.ny if self.nd is None else self.nd
        self.nd = nd
        self.D_sum = np.zeros((self.ny, nd))
        self.R_sum = np.zeros((self.ny, self.ny))
        self.Psi_sum = np.zeros((self.ny, self.ny))


def accumulate(det: DetectorState, r, d, psi) -> DetectorState:
    r = np.asarray(r, dtype=float)
    det.D_sum += np.outer(r, d)
    det.R_sum += np.outer(r, r)
    det.Psi_sum += psi
    det.i += 1
    return det


@dataclass
class CdwDetectorState(DetectorState):
    """Sums for the control-watermark baseline; the cross term uses ``d(k - 1)``."""


def cdw_accumulate(det: CdwDetectorState, r, d_prev, psi, gamma: int, CB_sigma_d) -> CdwDetectorState:
    """Accumulate with the event mean correction ``(gamma - 1) C B Sigma_d`` removed."""
    r = np.asarray(r, dtype=float)
    det.D_sum += np.outer(r, d_prev) - (int(gamma) - 1) * CB_sigma_d
    det.R_sum += np.outer(r, r)
    det.Psi_sum += psi
    det.i += 1
    return det


def thresholds(i: int, params: TestParams) -> tuple[float, float]:
    """Return ``(theta1, theta2 + added)`` at sample count ``i``."""
    if i < 2:
        raise ValueError("thresholds need i >= 2")
    rate = np.log(i) / i
    th1 = np.sqrt((1.0 + params.iota1) * params.kappa1 * rate)
    th2 = np.sqrt((1.0 + params.iota2) * params.kappa2 * rate) + params.added
    return float(th1), float(th2)


def _outcome(i, stat1, stat2, params) -> TestOutcome:
    if i < 2:
        return TestOutcome(False, False, False, stat1, stat2, np.nan, np.nan)
    th1, th2 = thresholds(i, params)
    if i < params.burn_in:
        return TestOutcome(False, False, False, stat1, stat2, th1, th2)
    return TestOutcome(True, stat1 >= th1, stat2 >= th2, stat1, stat2, th1, th2)


def evaluate_tests(det: DetectorState, params: TestParams) -> TestOutcome:
    i = det.i
    if i == 0:
        return TestOutcome(False, False, False, 0.0, 0.0, np.nan, np.nan)
    stat1 = spectral_norm(det.D_sum / i)
    stat2 = spectral_norm((det.R_sum - det.Psi_sum) / i)
    return _outcome(i, stat1, stat2, params)


def cdw_evaluate(det: CdwDetectorState, params: TestParams, mode: str,
                 residual_cov=None) -> TestOutcome:
    """Baseline tests.

    ``mode="ttc"`` compares the auto term with a calibrated residual
    covariance; ``mode="etc"`` uses the accumulated bound plus ``params.added``.
    """
    i = det.i
    if mode == "ttc":
        if residual_cov is None:
            raise ConfigurationError("time-triggered CDW test needs a calibrated residual covariance")
    elif mode != "etc":
        raise ConfigurationError(f"unknown CDW test mode {mode!r}")
    if i == 0:
        return TestOutcome(False, False, False, 0.0, 0.0, np.nan, np.nan)
    stat1 = spectral_norm(det.D_sum / i)
    if mode == "ttc":
        stat2 = spectral_norm(det.R_sum / i - np.asarray(residual_cov, dtype=float))
    else:
        stat2 = spectral_norm((det.R_sum - det.Psi_sum) / i)
    return _outcome(i, stat1, stat2, params)


@dataclass
class StatisticSeries:
    """Per-step terms of one run, shape (N, ny, m) / (N, ny, ny).

    ``bound`` is None for the time-triggered baseline, whose auto term is
    compared with a calibrated constant covariance instead.
    """

    cross: np.ndarray
    auto: np.ndarray
    bound: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.cross)


def _stack_norms(M: np.ndarray) -> np.ndarray:
    return np.linalg.norm(M, ord=2, axis=(1, 2))


def statistic_trajectories(series: StatisticSeries, residual_cov=None) -> tuple[np.ndarray, np.ndarray]:
    """Both test statistics for i = 1..N, computed from cumulative sums."""
    i = np.arange(1, len(series) + 1, dtype=float)[:, None, None]
    s1 = _stack_norms(np.cumsum(series.cross, axis=0) / i)
    if residual_cov is not None:
        s2 = _stack_norms(np.cumsum(series.auto, axis=0) / i - residual_cov)
    elif series.bound is not None:
        s2 = _stack_norms(np.cumsum(series.auto - series.bound, axis=0) / i)
    else:
        raise ConfigurationError("series without a bound needs a residual covariance")
    return s1, s2


@dataclass(frozen=True)
class Calibration:
    params: TestParams
    residual_cov: np.ndarray | None = None


def _kappa(excess: np.ndarray, i: np.ndarray, iota: float) -> float:
    return float(np.max(excess ** 2 * i / ((1.0 + iota) * np.log(i))))


def calibrate(runs, slack: float = 1.2, burn_in: int = 100, iota1: float = 1.0, iota2: float = 1.0,
              added_threshold: bool = True, min_steps: int = 500, kappa_floor: float = 1e-12,
              tail_fraction: float = 0.1) -> Calibration:
    """Fit threshold parameters so every attack-free run stays below them.

    ``kappa1`` is the smallest value with ``slack * |D/i| <= theta1`` for all
    ``i >= burn_in``. The added threshold is the mean auto statistic over the
    last ``tail_fraction`` of each run and ``kappa2`` covers what remains.
    Runs without a bound (time-triggered baseline) also get a residual
    covariance equal to the empirical mean of ``r r'``; their auto test then
    has no added threshold.
    """
    runs = list(runs)
    if slack <= 1:
        raise ConfigurationError("calibration slack must exceed 1")
    if len(runs) < 2:
        raise CalibrationError("calibration needs at least two attack-free runs")
    for run in runs:
        if len(run) < burn_in + min_steps:
            raise CalibrationError(f"calibration runs need at least {burn_in + min_steps} steps")
    ttc = any(run.bound is None for run in runs)
    residual_cov = None
    if ttc:
        residual_cov = np.concatenate([run.auto for run in runs]).mean(axis=0)
        added_threshold = False
    kappa1 = kappa2 = 0.0
    tails, trajectories = [], []
    for run in runs:
        s1, s2 = statistic_trajectories(run, residual_cov)
        trajectories.append(s2)
        idx = np.arange(1, len(run) + 1, dtype=float)[burn_in - 1:]
        kappa1 = max(kappa1, _kappa(slack * s1[burn_in - 1:], idx, iota1))
        tail = max(1, int(round(tail_fraction * len(run))))
        tails.append(s2[-tail:].mean())
    added = float(np.mean(tails)) if added_threshold else 0.0
    for run, s2 in zip(runs, trajectories):
        idx = np.arange(1, len(run) + 1, dtype=float)[burn_in - 1:]
        excess = np.clip(slack * s2[burn_in - 1:] - added, 0.0, None)
        kappa2 = max(kappa2, _kappa(excess, idx, iota2))
    params = TestParams(iota1, iota2, max(kappa1, kappa_floor), max(kappa2, kappa_floor), added, burn_in)
    return Calibration(params, residual_cov)
