"""Gradient-flow fine-tuning of a distilled weight, closed form and oracle.

Fine-tuning minimizes L(w) = (1/2) ||Zw - Y||^2 by the continuous-time flow
dw/dtau = -grad L(w). In the singular basis the top np coefficients relax
exponentially toward the interpolating targets at rate sigma_i^2 while
every coefficient outside the data span stays frozen. The forward-Euler
integrator is the independent oracle for the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, RankDeficient, UnstableStep
from .distill import DistillState
from .spectral import RANK_RTOL, DesignMatrix, SpectralDecomposition


@dataclass(frozen=True)
class FlowConfig:
    """Fine-tuning horizon and the oracle integrator's step size.

    ``euler_step`` of None means "pick 1e-3 / sigma_1^2 at use".
    """

    T: float = 5.0
    euler_step: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise DimensionMismatch(f"T must be finite and positive, got {self.T}")
        if self.euler_step is not None and not self.euler_step > 0:
            raise DimensionMismatch(f"euler_step must be > 0, got {self.euler_step}")


@dataclass(frozen=True)
class FineTuneTrajectory:
    """Fine-tuning endpoint in the singular basis.

    ``c0`` and ``cT`` are the top np coefficients before and after the flow;
    the frozen component outside the data span is kept as the vector
    ``null_part`` rather than as individual coefficients (the basis there is
    never materialized). ``w_final`` = sum_i cT_i u_i + null_part.
    """

    q: np.ndarray
    c0: np.ndarray
    cT: np.ndarray
    null_part: np.ndarray
    w_final: np.ndarray


def min_norm_targets(spec: SpectralDecomposition, Y: np.ndarray) -> np.ndarray:
    """Coefficients q of the minimum-norm interpolant of Y in the top basis.

    The tail coefficients (i > np) of the interpolant are zero by the
    minimum-norm choice and are not stored.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (spec.np_,):
        raise DimensionMismatch(f"Y must have length {spec.np_}")
    if spec.sigma[-1] <= RANK_RTOL * spec.sigma[0]:
        raise RankDeficient(int(np.sum(spec.sigma > RANK_RTOL * spec.sigma[0])), spec.np_)
    return spec.vt_times(Y) / spec.sigma


def flow_coefficient(q: float, c0: float, sigma: float, tau: float) -> float:
    """Exponential relaxation q (1 - e^{-sigma^2 tau}) + c0 e^{-sigma^2 tau}."""
    if tau < 0:
        raise DimensionMismatch(f"tau must be >= 0, got {tau}")
    if sigma < 0:
        raise DimensionMismatch(f"sigma must be >= 0, got {sigma}")
    decay = np.exp(-(sigma**2) * tau)
    return q * (1.0 - decay) + c0 * decay


def finetune_closed_form(
    spec: SpectralDecomposition,
    state: DistillState,
    Y: np.ndarray,
    config: FlowConfig,
) -> FineTuneTrajectory:
    """Endpoint of the gradient flow started at the distilled weight."""
    q = min_norm_targets(spec, Y)
    c0 = np.asarray(state.coeffs, dtype=float)
    if c0.shape != (spec.np_,):
        raise DimensionMismatch("state does not match the decomposition")
    decay = np.exp(-(spec.sigma**2) * config.T)
    cT = q * (1.0 - decay) + c0 * decay
    w_final = spec.from_top_coefficients(cT) + state.null_part
    return FineTuneTrajectory(q=q, c0=c0, cT=cT, null_part=state.null_part.copy(), w_final=w_final)


def training_loss(phi: np.ndarray, p: int, Y: np.ndarray, w: np.ndarray) -> float:
    """L(w) = (1/2) sum_i ||f(x_i, w) - y_i||^2, computed blockwise."""
    d, n = phi.shape
    R = w.reshape(p, d) @ phi - Y.reshape(p, n)
    return 0.5 * float(np.sum(R * R))


def euler_oracle(
    phi: DesignMatrix | np.ndarray,
    p: int,
    Y: np.ndarray,
    w_start: np.ndarray,
    config: FlowConfig,
) -> np.ndarray:
    """Forward-Euler integration of the fine-tuning flow for time T.

    Works from the raw feature matrix so it shares no spectral machinery
    with the closed form. Raises if the step exceeds the stability bound
    1/sigma_1^2 or if the loss ever increases beyond roundoff.
    """
    Phi = phi.Phi if isinstance(phi, DesignMatrix) else np.asarray(phi, dtype=float)
    d, n = Phi.shape
    Y = np.asarray(Y, dtype=float)
    w = np.asarray(w_start, dtype=float).copy()
    if Y.shape != (n * p,):
        raise DimensionMismatch(f"Y must have length {n * p}")
    if w.shape != (d * p,):
        raise DimensionMismatch(f"w_start must have length {d * p}")
    sigma1_sq = np.linalg.norm(Phi, 2) ** 2
    step = config.euler_step if config.euler_step is not None else 1e-3 / sigma1_sq
    if step > 1.0 / sigma1_sq:
        raise UnstableStep(f"step {step} exceeds stability bound {1.0 / sigma1_sq}")
    n_steps = int(np.ceil(config.T / step))
    Ymat = Y.reshape(p, n)
    W = w.reshape(p, d)
    loss = 0.5 * float(np.sum((W @ Phi - Ymat) ** 2))
    remaining = config.T
    for _ in range(n_steps):
        h = min(step, remaining)
        R = W @ Phi - Ymat
        W -= h * (R @ Phi.T)
        remaining -= h
        new_loss = 0.5 * float(np.sum((W @ Phi - Ymat) ** 2))
        if new_loss > loss + 1e-9 * max(1.0, loss):
            raise UnstableStep(f"loss increased from {loss} to {new_loss}")
        loss = new_loss
    return W.ravel()
