"""Generalization and weight-distance bounds over distillation rounds.

``zeta`` is the norm bound on the fine-tuned weight that drives the
generalization remainder; ``psi`` is the tight bound on the distance
between any fixed initial weight and the fine-tuned weight. Both shrink
strictly with every distillation round on generic instances, and the
entire component of the starting weight outside the data span is removed
in round one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distill import DistillState
from .errors import DomainError, InsufficientRounds
from .flow import FlowConfig, finetune_closed_form, min_norm_targets
from .spectral import SpectralDecomposition

# Relative margin below which two adjacent bound values count as a tie.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class BoundInputs:
    """Constants of the generalization remainder.

    ``c`` is the hypothesis-class comparison constant; only its existence
    is guaranteed, so it is a user knob defaulting to 1 and every remainder
    is to be read "up to the constant c".
    """

    R: float
    M: float
    delta: float
    c: float = 1.0

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError(f"R must be > 0, got {self.R}")
        if not self.M > 0:
            raise DomainError(f"M must be > 0, got {self.M}")
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must be in (0,1), got {self.delta}")
        if not self.c > 0:
            raise DomainError(f"c must be > 0, got {self.c}")


@dataclass(frozen=True)
class BoundReport:
    """Bound values for one round, with the distance-bound decomposition.

    psi = sqrt(G1 + psi1 + [t = 0] * B) + G2. ``B`` is the energy of the
    starting weight outside the data span; it enters the bound only at
    t = 0. ``bound_rhs`` is the generalization remainder, present when the
    remainder constants were supplied.
    """

    t: int
    zeta: float
    psi: float
    G1: float
    psi1: float
    B: float
    G2: float
    bound_rhs: float | None = None


def _terms(spec: SpectralDecomposition, state: DistillState, Y, flow: FlowConfig):
    q = min_norm_targets(spec, Y)
    gain = 1.0 - np.exp(-(spec.sigma**2) * flow.T)
    decay2 = np.exp(-2.0 * spec.sigma**2 * flow.T)
    G1 = float(np.sum((q * gain) ** 2))
    psi1 = float(np.sum(state.coeffs**2 * decay2))
    null_energy = float(np.dot(state.null_part, state.null_part))
    return G1, psi1, null_energy


def zeta(
    spec: SpectralDecomposition, state: DistillState, Y: np.ndarray, flow: FlowConfig
) -> float:
    """Norm bound on the fine-tuned weight for this dataset and round."""
    G1, psi1, null_energy = _terms(spec, state, Y, flow)
    return float(np.sqrt(G1 + psi1 + null_energy))


def psi(
    spec: SpectralDecomposition,
    state: DistillState,
    Y: np.ndarray,
    flow: FlowConfig,
    w_init_norm: float,
    null_energy: float | None = None,
    inputs: BoundInputs | None = None,
) -> BoundReport:
    """Distance bound ||w_init - w_{t,T}|| <= psi(t), with decomposition.

    ``null_energy`` overrides the reported B (useful to carry the constant
    t = 0 value through later rounds, whose own states have no null part);
    the bound itself always applies the [t = 0] indicator.
    """
    if w_init_norm < 0:
        raise DomainError(f"w_init_norm must be >= 0, got {w_init_norm}")
    G1, psi1, state_null = _terms(spec, state, Y, flow)
    B = state_null if null_energy is None else float(null_energy)
    indicator = B if state.t == 0 else 0.0
    psi_val = float(np.sqrt(G1 + psi1 + indicator)) + w_init_norm
    zeta_val = float(np.sqrt(G1 + psi1 + state_null))
    rhs = None
    if inputs is not None:
        rhs = generalization_remainder(zeta_val, inputs, spec.p, spec.n)
    return BoundReport(
        t=state.t, zeta=zeta_val, psi=psi_val, G1=G1, psi1=psi1, B=B,
        G2=float(w_init_norm), bound_rhs=rhs,
    )


def tightness_witness(
    spec: SpectralDecomposition,
    state: DistillState,
    Y: np.ndarray,
    flow: FlowConfig,
    alpha: float,
) -> np.ndarray:
    """Initial weight achieving equality in the distance bound.

    Any negative multiple of the fine-tuned endpoint works: the distance
    then equals the endpoint norm plus the initial norm, which is exactly
    psi(t) evaluated at that initial norm.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    traj = finetune_closed_form(spec, state, Y, flow)
    return -alpha * traj.w_final


@dataclass(frozen=True)
class PairVerdict:
    t_from: int
    t_to: int
    margin: float
    verdict: str  # strictly-decreasing | tie | violation


@dataclass(frozen=True)
class MonotonicityReport:
    """Verdicts per adjacent round pair for both bounds.

    ``first_drop_null_share`` is the part of the squared t=0 -> 1 drop
    attributable to the null-space energy:
    (zeta(0)^2 - zeta(1)^2) - (psi1(0) - psi1(1)).
    """

    zeta_pairs: tuple[PairVerdict, ...]
    psi_pairs: tuple[PairVerdict, ...]
    first_drop_null_share: float

    @property
    def all_strict(self) -> bool:
        return all(
            v.verdict == "strictly-decreasing" for v in self.zeta_pairs + self.psi_pairs
        )


def _classify(prev: float, nxt: float) -> tuple[float, str]:
    margin = prev - nxt
    tol = TIE_RTOL * max(abs(prev), abs(nxt))
    if margin > tol:
        verdict = "strictly-decreasing"
    elif margin < -tol:
        verdict = "violation"
    else:
        verdict = "tie"
    return margin, verdict


def monotonicity_report(reports: list[BoundReport]) -> MonotonicityReport:
    """Adjacent-pair verdicts for both bounds over a sweep of rounds."""
    if len(reports) < 2:
        raise InsufficientRounds(f"need >= 2 reports, got {len(reports)}")
    reports = sorted(reports, key=lambda r: r.t)
    zeta_pairs = []
    psi_pairs = []
    for a, b in zip(reports, reports[1:]):
        m, v = _classify(a.zeta, b.zeta)
        zeta_pairs.append(PairVerdict(a.t, b.t, m, v))
        m, v = _classify(a.psi, b.psi)
        psi_pairs.append(PairVerdict(a.t, b.t, m, v))
    first = reports[0]
    second = reports[1]
    drop_share = (first.zeta**2 - second.zeta**2) - (first.psi1 - second.psi1)
    return MonotonicityReport(
        zeta_pairs=tuple(zeta_pairs),
        psi_pairs=tuple(psi_pairs),
        first_drop_null_share=float(drop_share),
    )


def generalization_remainder(zeta_t: float, inputs: BoundInputs, p: int, n: int) -> float:
    """zeta * sqrt(4 c^2 R^2 p / n) + M * sqrt(ln(2/delta) / (2n))."""
    term1 = zeta_t * np.sqrt(4.0 * inputs.c**2 * inputs.R**2 * p / n)
    term2 = inputs.M * np.sqrt(np.log(2.0 / inputs.delta) / (2.0 * n))
    return float(term1 + term2)


def empirical_bound_inputs(
    spec: SpectralDecomposition,
    Y: np.ndarray,
    weights: list[np.ndarray],
    delta: float = 0.05,
    c: float = 1.0,
) -> BoundInputs:
    """Data-driven defaults: mean feature norm for R, max observed loss for M.

    The loss grid is the supplied weight vectors (typically the fine-tuned
    endpoints of a sweep) crossed with the training samples.
    """
    R = float(np.mean(np.linalg.norm(spec.Phi, axis=0)))
    Ymat = np.asarray(Y, dtype=float).reshape(spec.p, spec.n)
    M = 0.0
    for w in weights:
        Rsd = w.reshape(spec.p, spec.d) @ spec.Phi - Ymat
        M = max(M, float(np.max(np.sum(Rsd * Rsd, axis=0))))
    if M == 0.0:
        M = 1.0
    return BoundInputs(R=R, M=M, delta=delta, c=c)
