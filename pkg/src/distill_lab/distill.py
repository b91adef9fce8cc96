"""Ridge-regularized self-distillation dynamics in the linear feature model.

One distillation round replaces the labels with the current teacher's
outputs and solves the ridge problem

    minimize (1/n) sum_i ||f(x_i, w) - f(x_i, w_prev)||^2 + lambda ||w||^2,

whose unique minimizer in the lifted singular basis shrinks coefficient i
by sigma_i^2 / (sigma_i^2 + n lambda) per round and drops every component
outside the data span after the first round. Both the closed form and a
literal iteration of the minimization are provided; the dense iterative
path is the trusted oracle for the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError, SingularSystem, ZeroInitialWeight
from .spectral import SpectralDecomposition

# Instance size up to which the iterative solver defaults to the dense path.
DENSE_LIMIT = 64


@dataclass(frozen=True)
class DistillConfig:
    """Ridge coefficient, round count, and the sample count entering n*lambda."""

    lam: float
    rounds: int
    n: int

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"lambda must be > 0, got {self.lam}")
        if self.rounds < 0:
            raise DomainError(f"rounds must be >= 0, got {self.rounds}")
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")

    @property
    def nlam(self) -> float:
        return self.n * self.lam


@dataclass(frozen=True)
class DistillState:
    """Weight vector after t distillation rounds, in factored form.

    ``coeffs`` holds u_i^T w for the top np singular directions;
    ``null_part`` is the component outside the data span (nonzero only at
    t = 0); ``teacher_outputs`` is the stacked model output of this weight
    on the training inputs.
    """

    t: int
    w: np.ndarray
    coeffs: np.ndarray
    null_part: np.ndarray
    teacher_outputs: np.ndarray


def alpha_coefficient(sigma: float, n: int, lam: float, t: int) -> float:
    """Per-direction coefficient (1/sigma) * (1 / (1 + n lambda / sigma^2))^t."""
    if sigma <= 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    if lam <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    ratio = sigma * sigma / (sigma * sigma + n * lam)
    return (1.0 / sigma) * ratio**t


def _shrink_ratios(spec: SpectralDecomposition, config: DistillConfig) -> np.ndarray:
    """sigma_i^2 / (sigma_i^2 + n lambda) for the top np directions."""
    s2 = spec.sigma**2
    return s2 / (s2 + config.nlam)


def ridge_distill_step(
    spec: SpectralDecomposition,
    teacher_outputs: np.ndarray,
    config: DistillConfig,
    method: str = "auto",
) -> np.ndarray:
    """One literal ridge solve against the teacher's outputs.

    ``method`` picks the solver: ``dense`` assembles the dp x dp normal
    equations from the materialized Kronecker operator (the trusted oracle),
    ``factored`` filters in the singular basis. ``auto`` uses dense up to
    dp = 64.
    """
    f = np.asarray(teacher_outputs, dtype=float)
    if f.shape != (spec.np_,):
        raise DimensionMismatch(f"teacher outputs must have length {spec.np_}")
    if method == "auto":
        method = "dense" if spec.dp <= DENSE_LIMIT else "factored"
    if method == "dense":
        Op = spec.materialize()
        A = Op @ Op.T + config.nlam * np.eye(spec.dp)
        rhs = Op @ f
        try:
            w = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError as exc:  # cannot occur for lambda > 0
            raise SingularSystem(str(exc)) from exc
        return w
    if method == "factored":
        filt = spec.sigma / (spec.sigma**2 + config.nlam)
        return spec.from_top_coefficients(filt * spec.vt_times(f))
    raise ValueError(f"unknown method {method!r}")


def closed_form_distill(
    spec: SpectralDecomposition, w00: np.ndarray, config: DistillConfig
) -> DistillState:
    """Weights after ``config.rounds`` distillation rounds, by closed form.

    The teacher signal is always derived from ``w00`` itself: the round-0
    outputs are the model outputs of w00 on the shared training inputs.
    """
    w00 = np.asarray(w00, dtype=float)
    if w00.shape != (spec.dp,):
        raise DimensionMismatch(f"w00 must have length {spec.dp}")
    if np.linalg.norm(w00) == 0.0:
        raise ZeroInitialWeight("w00 must be nonzero")
    t = config.rounds
    f0 = spec.apply_operator_t(w00)
    ytilde = spec.vt_times(f0)
    ratios = _shrink_ratios(spec, config)
    teacher = spec.v_times(ratios**t * ytilde)
    if t == 0:
        return DistillState(
            t=0,
            w=w00.copy(),
            coeffs=spec.top_coefficients(w00),
            null_part=spec.null_projection(w00),
            teacher_outputs=teacher,
        )
    coeffs = (1.0 / spec.sigma) * ratios**t * ytilde
    w = spec.from_top_coefficients(coeffs)
    return DistillState(
        t=t,
        w=w,
        coeffs=coeffs,
        null_part=np.zeros(spec.dp),
        teacher_outputs=teacher,
    )


def iterate_distill(
    spec: SpectralDecomposition,
    w00: np.ndarray,
    config: DistillConfig,
    method: str = "dense",
) -> np.ndarray:
    """Literal t-fold iteration of the ridge minimization (oracle path)."""
    w00 = np.asarray(w00, dtype=float)
    if np.linalg.norm(w00) == 0.0:
        raise ZeroInitialWeight("w00 must be nonzero")
    w = w00.copy()
    for _ in range(config.rounds):
        f = spec.apply_operator_t(w)
        w = ridge_distill_step(spec, f, config, method=method)
    return w


def propagate_teacher(
    spec: SpectralDecomposition, f0: np.ndarray, t: int, config: DistillConfig
) -> np.ndarray:
    """Teacher outputs after t rounds: contraction of f0 in the right basis."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    f0 = np.asarray(f0, dtype=float)
    if f0.shape != (spec.np_,):
        raise DimensionMismatch(f"f0 must have length {spec.np_}")
    ratios = _shrink_ratios(spec, config)
    return spec.v_times(ratios**t * spec.vt_times(f0))


def random_initial_weight(spec: SpectralDecomposition, rng: np.random.Generator) -> np.ndarray:
    """Standard-normal initial weight (generic: nonzero span and null parts)."""
    return rng.normal(size=spec.dp)


def pretrained_initial_weight(
    phi_pretrain: np.ndarray,
    p: int,
    mu: float = 0.1,
    seed: int = 0,
) -> np.ndarray:
    """Ridge fit to a seeded synthetic task on the pre-training feature pool.

    Emulates 'the result of further pre-training': labels come from a random
    teacher plus a constant shift, and the fit is ridge-regularized so no
    rank condition is needed on the pool.
    """
    Phi = np.asarray(phi_pretrain, dtype=float)
    d, m = Phi.shape
    rng = np.random.default_rng(seed)
    W_star = rng.normal(size=(p, d)) / np.sqrt(d)
    shift = 0.5 * rng.normal(size=(p, 1))
    Y_pre = W_star @ Phi + shift
    A = Phi @ Phi.T + m * mu * np.eye(d)
    W = np.linalg.solve(A, (Y_pre @ Phi.T).T).T
    w = W.ravel()
    if np.linalg.norm(w) == 0.0:
        raise ZeroInitialWeight("pretrained fit collapsed to zero")
    return w
