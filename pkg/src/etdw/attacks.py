"""Sensor-channel attacks: generalized replay (GRA), record-and-replay, packet-drop DoS.

All attacks act on the sensor-to-estimator channel only, and only on
sampling instants where a packet is actually transmitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .plant import GaussianNoise

__all__ = [
    "GraConfig",
    "ReplayConfig",
    "DosConfig",
    "AttackPower",
    "gra_step",
    "replay_step",
    "dos_step",
    "attack_power",
]


@dataclass(frozen=True)
class GraConfig:
    """Hidden-Markov false-data model ``a = gamma (s y+ + C x_a + v_a)``, ``x_a <- A_a x_a``."""

    scale: float
    A_a: np.ndarray
    sigma_va: np.ndarray
    start_step: int = 0
    x_a_init: np.ndarray | None = None  # zeros when None

    def __post_init__(self):
        A_a = np.atleast_2d(np.asarray(self.A_a, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma_va, dtype=float))
        object.__setattr__(self, "A_a", A_a)
        object.__setattr__(self, "sigma_va", sigma)
        if A_a.shape[0] != A_a.shape[1]:
            raise ConfigurationError(f"A_a must be square, got {A_a.shape}")
        if max(abs(np.linalg.eigvals(A_a))) >= 1.0:
            raise ConfigurationError("A_a must be Schur stable (spectral radius < 1)")
        if not np.allclose(sigma, sigma.T) or np.linalg.eigvalsh(sigma).min() < -1e-12:
            raise ConfigurationError("attack noise covariance must be symmetric PSD")
        if self.x_a_init is not None:
            x0 = np.asarray(self.x_a_init, dtype=float)
            if x0.shape != (A_a.shape[0],):
                raise ConfigurationError(f"x_a_init must have shape ({A_a.shape[0]},)")
            object.__setattr__(self, "x_a_init", x0)

    def initial_state(self) -> np.ndarray:
        if self.x_a_init is None:
            return np.zeros(self.A_a.shape[0])
        return self.x_a_init.copy()


@dataclass(frozen=True)
class ReplayConfig:
    """Replay a recorded window ``[record_start, record_start + record_length)`` cyclically."""

    start_step: int
    record_start: int
    record_length: int

    def __post_init__(self):
        if self.record_length < 1:
            raise ConfigurationError("replay record_length must be >= 1")
        if self.record_start + self.record_length > self.start_step:
            raise ConfigurationError("replay recording window must end before the attack starts")

    def offset(self, k: int) -> int:
        source = self.record_start + (k - self.start_step) % self.record_length
        return k - source


@dataclass(frozen=True)
class DosConfig:
    start_step: int
    stop_step: int | None = None  # exclusive; None means until the end

    def active(self, k: int) -> bool:
        return k >= self.start_step and (self.stop_step is None or k < self.stop_step)


def gra_step(cfg: GraConfig, x_a: np.ndarray, packet, gamma: int, C: np.ndarray, k: int,
             noise: GaussianNoise | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(a, attacked_packet, next_x_a)`` for step ``k``.

    Before ``start_step`` the attack is dormant: ``a = 0`` and ``x_a`` is left
    untouched. Afterwards the hidden state evolves every step, while ``a`` is
    nonzero only on transmitted samples.
    """
    packet = np.asarray(packet, dtype=float)
    if k < cfg.start_step:
        return np.zeros_like(packet), packet, x_a
    v_a = noise.draw() if noise is not None else 0.0
    if gamma:
        a = cfg.scale * packet + C @ x_a + v_a
    else:
        a = np.zeros_like(packet)
    return a, packet + a, cfg.A_a @ x_a


def replay_step(log: dict, k: int, replay_offset: int, gamma: int, packet) -> np.ndarray:
    """Substitute the packet recorded at ``k - replay_offset``; pass through if missing."""
    if not gamma or replay_offset == 0:
        return packet
    old = log.get(k - replay_offset)
    return packet if old is None else old


def dos_step(active: bool, gamma: int) -> int:
    """Packet drop: the receiver sees no transmission while the attack is active."""
    return 0 if active else int(gamma)


@dataclass
class AttackPower:
    """Running mean of ``a(k)' a(k)``."""

    total: float = 0.0
    i: int = 0
    history: list = field(default_factory=list)

    def add(self, a) -> float:
        a = np.asarray(a, dtype=float)
        self.total += float(a @ a)
        self.i += 1
        value = self.total / self.i
        self.history.append(value)
        return value


def attack_power(metrics: AttackPower) -> float:
    if metrics.i < 1:
        raise ValueError("attack power needs at least one sample")
    return metrics.total / metrics.i
