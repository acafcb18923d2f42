"""Event-triggered state estimator and LQG state-feedback design.

On non-transmitted samples the estimator still performs a measurement update
with the held output, but inflates the prior covariance by ``1 + beta1`` and
the innovation bound by the send-on-delta term

    Psi = (1 + b1 (1-g)) C P C' + (1 + b2 (1-g)) Sigma_v + (1-g)(1 + 1/b1 + 1/b2) delta I

With ``g = 1`` every step this is exactly the standard Kalman filter.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DesignError, NumericError
from .plant import PlantModel

__all__ = [
    "EstimatorState",
    "LqgDesign",
    "initial_estimator",
    "predict",
    "innovation_bound",
    "gain_and_update",
    "solve_lqg",
    "riccati_residual",
    "control",
    "performance_loss",
]

_PSD_TOL = 1e-10


@dataclass(frozen=True)
class EstimatorState:
    x_prior: np.ndarray
    x_post: np.ndarray
    P_prior: np.ndarray
    P_post: np.ndarray
    beta1: float = 0.02
    beta2: float = 0.02
    delta: float = 1e-5
    gain: np.ndarray | None = None

    def __post_init__(self):
        if not (self.beta1 > 0 and self.beta2 > 0):
            raise ConfigurationError("beta1 and beta2 must be positive")
        if not self.delta > 0:
            raise ConfigurationError("delta must be positive")


def initial_estimator(nx: int, x0=None, P0=None, beta1: float = 0.02, beta2: float = 0.02,
                      delta: float = 1e-5) -> EstimatorState:
    """Posterior at k = -1; the default P0 = 0 treats the initial estimate as exact."""
    x0 = np.zeros(nx) if x0 is None else np.asarray(x0, dtype=float)
    P0 = np.zeros((nx, nx)) if P0 is None else np.asarray(P0, dtype=float)
    return EstimatorState(x0.copy(), x0.copy(), P0.copy(), P0.copy(), beta1, beta2, delta)


def _clip_psd(P: np.ndarray, what: str) -> np.ndarray:
    P = 0.5 * (P + P.T)
    vals, vecs = np.linalg.eigh(P)
    lo = vals[0]
    if lo >= 0:
        return P
    if lo < -_PSD_TOL * max(1.0, vals[-1]):
        raise NumericError(f"{what} lost positive semidefiniteness (min eigenvalue {lo:.3e})")
    return (vecs * np.clip(vals, 0.0, None)) @ vecs.T


def predict(est: EstimatorState, model: PlantModel, u_prev) -> EstimatorState:
    u_prev = np.atleast_1d(np.asarray(u_prev, dtype=float))
    x_prior = model.A @ est.x_post + model.B @ u_prev
    P_prior = model.A @ est.P_post @ model.A.T + model.sigma_w
    return replace(est, x_prior=x_prior, P_prior=0.5 * (P_prior + P_prior.T))


def innovation_bound(P_prior: np.ndarray, gamma: int, delta: float, beta1: float, beta2: float,
                     model: PlantModel) -> np.ndarray:
    miss = 1 - int(gamma)
    C = model.C
    psi = (1.0 + beta1 * miss) * (C @ P_prior @ C.T) + (1.0 + beta2 * miss) * model.sigma_v
    if miss:
        psi = psi + (1.0 + 1.0 / beta1 + 1.0 / beta2) * delta * np.eye(model.ny)
    return 0.5 * (psi + psi.T)


def gain_and_update(est: EstimatorState, psi: np.ndarray, gamma: int, y_received,
                    model: PlantModel) -> tuple[np.ndarray, EstimatorState]:
    """Measurement update; returns the residual and the new state."""
    C = model.C
    r = np.asarray(y_received, dtype=float) - C @ est.x_prior
    inflate = 1.0 + est.beta1 * (1 - int(gamma))
    try:
        # L = inflate * P C' Psi^-1, with Psi and P symmetric
        L = inflate * np.linalg.solve(psi, C @ est.P_prior).T
    except np.linalg.LinAlgError:
        # exactly singular bound only happens without measurement noise;
        # the pseudo-inverse gives the minimum-norm gain (zero when Psi = 0)
        L = inflate * (np.linalg.pinv(psi) @ C @ est.P_prior).T
    if not np.all(np.isfinite(L)):
        raise NumericError("estimator gain is not finite")
    x_post = est.x_prior + L @ r
    P_post = inflate * (est.P_prior - L @ (C @ est.P_prior))
    P_post = _clip_psd(P_post, "posterior covariance")
    return r, replace(est, x_post=x_post, P_post=P_post, gain=L)


@dataclass(frozen=True)
class LqgDesign:
    Q: np.ndarray
    R: np.ndarray
    S: np.ndarray
    K: np.ndarray
    iterations: int = 0


def _riccati_rhs(S, A, B, Q, R):
    BtSA = B.T @ S @ A
    return A.T @ S @ A + Q - BtSA.T @ np.linalg.solve(B.T @ S @ B + R, BtSA)


def riccati_residual(S, model: PlantModel, Q, R) -> float:
    """Frobenius norm of ``S - RHS(S)``."""
    return float(np.linalg.norm(S - _riccati_rhs(S, model.A, model.B, Q, R)))


def solve_lqg(model: PlantModel, Q, R, tol: float = 1e-10, max_iter: int = 100_000) -> LqgDesign:
    """Solve the discrete algebraic Riccati equation by value iteration from S = Q.

    Stops when the relative Frobenius change drops below ``tol`` and checks
    that the resulting gain stabilizes ``A + B K``.
    """
    A, B = model.A, model.B
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if Q.shape != (model.nx, model.nx) or R.shape != (model.nu, model.nu):
        raise ConfigurationError("LQG weights have wrong dimensions")
    if np.linalg.eigvalsh(0.5 * (R + R.T)).min() <= 0:
        raise ConfigurationError("R must be positive definite")
    S = Q.copy()
    for it in range(1, max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):  # divergence is reported below
            S_next = _riccati_rhs(S, A, B, Q, R)
            S_next = 0.5 * (S_next + S_next.T)
            change = np.linalg.norm(S_next - S) / max(np.linalg.norm(S_next), 1e-300)
        if not (np.all(np.isfinite(S_next)) and np.isfinite(change)):
            raise DesignError("Riccati iteration diverged")
        S = S_next
        if change < tol:
            break
    else:
        raise DesignError(f"Riccati iteration did not converge in {max_iter} iterations")
    K = -np.linalg.solve(B.T @ S @ B + R, B.T @ S @ A)
    if max(abs(np.linalg.eigvals(A + B @ K))) >= 1.0:
        raise DesignError("LQG gain does not stabilize the plant")
    return LqgDesign(Q, R, S, K, it)


def control(K: np.ndarray, x_post) -> np.ndarray:
    return K @ np.asarray(x_post, dtype=float)


def performance_loss(S, R, B, sigma_d) -> float:
    """Extra LQG cost of an i.i.d. control watermark: tr((B'SB + R) Sigma_d)."""
    S, R, B = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (S, R, B))
    sigma_d = np.atleast_2d(np.asarray(sigma_d, dtype=float))
    return float(np.trace((B.T @ S @ B + R) @ sigma_d))
