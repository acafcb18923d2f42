"""Send-on-delta event trigger.

A sample is transmitted when the squared distance to the last transmitted
output exceeds ``delta``; otherwise the network input holds that last value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

__all__ = ["TriggerState", "evaluate_trigger", "triggering_rate"]


@dataclass(frozen=True)
class TriggerState:
    delta: float
    y_last_sent: np.ndarray | None = None  # None until the first sample
    gamma: int = 0

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigurationError(f"trigger threshold delta must be positive, got {self.delta}")


def evaluate_trigger(y, trig: TriggerState) -> tuple[int, np.ndarray, TriggerState]:
    """Return ``(gamma, ybar, next_state)``.

    The very first sample always fires so the estimator receives one real
    packet. The comparison is strict: ``eps @ eps == delta`` does not fire.
    """
    y = np.asarray(y, dtype=float)
    if trig.y_last_sent is None:
        gamma = 1
    else:
        eps = y - trig.y_last_sent
        gamma = int(float(eps @ eps) > trig.delta)
    if gamma:
        sent = y.copy()
        return 1, sent, TriggerState(trig.delta, sent, 1)
    return 0, trig.y_last_sent.copy(), TriggerState(trig.delta, trig.y_last_sent, 0)


def triggering_rate(gammas) -> float:
    g = np.asarray(gammas)
    if g.size == 0:
        raise ValueError("triggering rate of an empty sequence is undefined")
    return float(np.count_nonzero(g == 1)) / g.size
