"""Discrete-time LTI plant with Gaussian noise and safety bounds.

The plant follows

    x(k+1) = A x(k) + B u(k) + w(k),    w ~ N(0, Sigma_w)
    y(k)   = C x(k) + v(k),             v ~ N(0, Sigma_v)
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import ConfigurationError, NumericError

__all__ = [
    "PlantModel",
    "PlantState",
    "SafetyBounds",
    "SafetyStatus",
    "GaussianNoise",
    "covariance_factor",
    "stream_rng",
    "measure",
    "propagate",
    "step_plant",
    "check_safety",
    "nipvss_model",
    "nipvss_bounds",
    "NIPVSS_ROUNDED_A",
    "NIPVSS_ROUNDED_B",
]


def _as_matrix(value, name: str) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    if arr.ndim != 2:
        raise ConfigurationError(f"{name} must be a matrix, got shape {arr.shape}")
    return arr


def _check_covariance(cov: np.ndarray, name: str, tol: float = 1e-12) -> None:
    if cov.shape[0] != cov.shape[1]:
        raise ConfigurationError(f"{name} must be square, got {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise ConfigurationError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.abs(cov).max()))
    if not np.allclose(cov, cov.T, atol=tol * scale, rtol=0.0):
        raise ConfigurationError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(cov).min() < -tol * scale:
        raise ConfigurationError(f"{name} must be positive semidefinite")


@dataclass(frozen=True)
class PlantModel:
    """System matrices and noise covariances of the plant."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    sigma_w: np.ndarray
    sigma_v: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C", "sigma_w", "sigma_v"):
            arr = _as_matrix(getattr(self, name), name)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        nx = self.A.shape[0]
        if self.A.shape != (nx, nx):
            raise ConfigurationError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != nx:
            raise ConfigurationError(f"B has {self.B.shape[0]} rows, expected {nx}")
        if self.C.shape[1] != nx:
            raise ConfigurationError(f"C has {self.C.shape[1]} columns, expected {nx}")
        if self.sigma_w.shape != (nx, nx):
            raise ConfigurationError(f"sigma_w must be {nx}x{nx}, got {self.sigma_w.shape}")
        ny = self.C.shape[0]
        if self.sigma_v.shape != (ny, ny):
            raise ConfigurationError(f"sigma_v must be {ny}x{ny}, got {self.sigma_v.shape}")
        _check_covariance(self.sigma_w, "sigma_w")
        _check_covariance(self.sigma_v, "sigma_v")

    @property
    def nx(self) -> int:
        return self.A.shape[0]

    @property
    def nu(self) -> int:
        return self.B.shape[1]

    @property
    def ny(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class PlantState:
    x: np.ndarray
    k: int = 0


@dataclass(frozen=True)
class SafetyBounds:
    """Closed absolute limits ``|x[index]| <= limit`` on selected state entries."""

    limits: dict = field(default_factory=dict)  # index -> limit
    names: dict = field(default_factory=dict)  # index -> label

    def __post_init__(self):
        for idx, lim in self.limits.items():
            if not lim > 0:
                raise ConfigurationError(f"safety limit for state {idx} must be positive, got {lim}")

    def name(self, index: int) -> str:
        return self.names.get(index, f"x{index}")


@dataclass(frozen=True)
class SafetyStatus:
    safe: bool
    index: int | None = None
    component: str | None = None

    def __bool__(self) -> bool:
        return self.safe


def covariance_factor(cov) -> np.ndarray:
    """Return F with F @ F.T == cov for a symmetric PSD matrix.

    Diagonal matrices use elementwise square roots. Otherwise an
    eigendecomposition is used and small negative eigenvalues are clipped,
    so singular covariances are fine.
    """
    cov = _as_matrix(cov, "covariance")
    if np.count_nonzero(cov - np.diag(np.diagonal(cov))) == 0:
        diag = np.diagonal(cov)
        if diag.min() < 0:
            raise ConfigurationError("covariance has negative diagonal entries")
        return np.diag(np.sqrt(diag))
    _check_covariance(cov, "covariance", tol=1e-9)
    vals, vecs = np.linalg.eigh((cov + cov.T) / 2)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def stream_rng(seed: int, label: str) -> np.random.Generator:
    """Independent generator for a named sub-stream of a scenario seed."""
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(key,)))


class GaussianNoise:
    """Zero-mean Gaussian vector source with a fixed covariance."""

    def __init__(self, cov, rng: np.random.Generator):
        self.cov = _as_matrix(cov, "covariance")
        self.factor = covariance_factor(self.cov)
        self.rng = rng
        self.dim = self.cov.shape[0]

    @classmethod
    def from_seed(cls, cov, seed: int, label: str) -> "GaussianNoise":
        return cls(cov, stream_rng(seed, label))

    def draw(self) -> np.ndarray:
        return self.factor @ self.rng.standard_normal(self.dim)

    def draw_many(self, n: int) -> np.ndarray:
        return self.rng.standard_normal((n, self.dim)) @ self.factor.T


def _check_finite(x: np.ndarray, k: int) -> None:
    if not np.all(np.isfinite(x)):
        raise NumericError(f"plant state became non-finite at step {k}")


def measure(model: PlantModel, state: PlantState, measurement_noise: GaussianNoise) -> np.ndarray:
    """y(k) = C x(k) + v(k)."""
    return model.C @ state.x + measurement_noise.draw()


def propagate(model: PlantModel, state: PlantState, u, process_noise: GaussianNoise) -> PlantState:
    """x(k+1) = A x(k) + B u(k) + w(k)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (model.nu,):
        raise ConfigurationError(f"input must have shape ({model.nu},), got {u.shape}")
    with np.errstate(over="ignore", invalid="ignore"):  # reported below instead
        x = model.A @ state.x + model.B @ u + process_noise.draw()
    _check_finite(x, state.k + 1)
    return PlantState(x, state.k + 1)


def step_plant(model: PlantModel, state: PlantState, u, process_noise: GaussianNoise,
               measurement_noise: GaussianNoise) -> tuple[PlantState, np.ndarray]:
    """Measure the current output, then advance the state by one sample."""
    x = np.asarray(state.x, dtype=float)
    if x.shape != (model.nx,):
        raise ConfigurationError(f"state must have shape ({model.nx},), got {x.shape}")
    _check_finite(x, state.k)
    state = PlantState(x, state.k)
    y = measure(model, state, measurement_noise)
    return propagate(model, state, u, process_noise), y


def check_safety(state: PlantState, bounds: SafetyBounds) -> SafetyStatus:
    for idx, lim in bounds.limits.items():
        if abs(state.x[idx]) > lim:
            return SafetyStatus(False, idx, bounds.name(idx))
    return SafetyStatus(True)


# Inverted pendulum rig matrices rounded to 4 decimals.
NIPVSS_ROUNDED_A = np.array([
    [1.0, 0.0, 0.0100, 0.0],
    [0.0, 1.0015, 0.0, 0.0100],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.2945, 0.0, 1.0015],
])
NIPVSS_ROUNDED_B = np.array([[0.0], [0.0002], [0.0100], [0.0300]])
NIPVSS_SIGMA_W = np.diag([0.0, 0.0, 1e-5, 1e-5])
NIPVSS_SIGMA_V = np.diag([2.7e-7, 5.5e-6])


def _cart_pole_zoh(gravity: float, length: float, period: float) -> tuple[np.ndarray, np.ndarray]:
    # uniform rod on a cart with cart acceleration as input:
    # theta'' = 3g/(2L) theta + 3/(2L) u
    a = 3.0 * gravity / (2.0 * length)
    b = 3.0 / (2.0 * length)
    Ac = np.zeros((4, 4))
    Ac[0, 2] = Ac[1, 3] = 1.0
    Ac[3, 1] = a
    Bc = np.array([[0.0], [0.0], [1.0], [b]])
    M = expm(np.block([[Ac, Bc], [np.zeros((1, 5))]]) * period)
    return M[:4, :4], M[:4, 4:]


def nipvss_model(rounded: bool = False, gravity: float = 9.81, length: float = 0.5,
                 period: float = 0.01) -> PlantModel:
    """Networked inverted pendulum model, state [position, angle, rates].

    By default A and B are the exact zero-order-hold discretization of the
    linearized rod-on-cart dynamics. ``rounded=True`` returns the 4-decimal
    rounding of the rig matrices instead.
    """
    if rounded:
        A, B = NIPVSS_ROUNDED_A.copy(), NIPVSS_ROUNDED_B.copy()
    else:
        A, B = _cart_pole_zoh(gravity, length, period)
    C = np.hstack([np.eye(2), np.zeros((2, 2))])
    return PlantModel(A, B, C, NIPVSS_SIGMA_W.copy(), NIPVSS_SIGMA_V.copy())


def nipvss_bounds(position: float = 0.3, angle: float = 0.8) -> SafetyBounds:
    return SafetyBounds({0: position, 1: angle}, {0: "position", 1: "angle"})
