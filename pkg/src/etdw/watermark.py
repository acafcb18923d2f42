"""Synchronized watermark streams and the two encryption mechanisms.

ETDW adds ``d_n(k)`` to the network input at the sensor and removes the same
draw after the network; the shared generator seed plays the role of the
symmetric key. CDW adds ``d(k)`` to the control input instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .plant import covariance_factor, stream_rng

__all__ = [
    "WatermarkStream",
    "CdwConfig",
    "next_watermark",
    "encrypt_output",
    "decrypt_output",
    "encrypt_control",
]


class WatermarkStream:
    """Gaussian watermark generator; equal ``(seed, cov)`` give equal sequences.

    The cursor advances once per sampling instant, whether or not the sample
    is transmitted, so sensor and estimator stay aligned without exchanging
    anything.
    """

    def __init__(self, seed: int, cov, label: str = "watermark"):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if cov.shape[0] != cov.shape[1]:
            raise ConfigurationError(f"watermark covariance must be square, got {cov.shape}")
        if not np.allclose(cov, cov.T) or np.linalg.eigvalsh(cov).min() <= 0:
            raise ConfigurationError("watermark covariance must be symmetric positive definite")
        self.seed = int(seed)
        self.cov = cov
        self.label = label
        self.k = 0
        self._factor = covariance_factor(cov)
        self._rng = stream_rng(self.seed, label)

    @property
    def dim(self) -> int:
        return self.cov.shape[0]

    def next(self) -> np.ndarray:
        d = self._factor @ self._rng.standard_normal(self.dim)
        self.k += 1
        return d


@dataclass(frozen=True)
class CdwConfig:
    sigma_d: np.ndarray
    lag: int = 1

    def __post_init__(self):
        if self.lag < 1:
            raise ConfigurationError(f"CDW correlation lag must be >= 1, got {self.lag}")


def next_watermark(stream: WatermarkStream) -> np.ndarray:
    return stream.next()


def _same_shape(a, b, what: str) -> tuple[np.ndarray, np.ndarray]:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ConfigurationError(f"{what}: shape mismatch {a.shape} vs {b.shape}")
    return a, b


def encrypt_output(ybar, d_n) -> np.ndarray:
    ybar, d_n = _same_shape(ybar, d_n, "encrypt_output")
    return ybar + d_n


def decrypt_output(ybar_a_plus, d_n) -> np.ndarray:
    ybar_a_plus, d_n = _same_shape(ybar_a_plus, d_n, "decrypt_output")
    return ybar_a_plus - d_n


def encrypt_control(u_c, d) -> np.ndarray:
    u_c, d = _same_shape(u_c, d, "encrypt_control")
    return u_c + d
