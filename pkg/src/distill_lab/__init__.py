"""Self-distillation laboratory: linear-model closed forms, their brute-force
oracles, the bound machinery, and a desk-scale masked autoencoder."""

from .errors import (
    ConfigError,
    DimensionMismatch,
    DistillLabError,
    DomainError,
    InsufficientRounds,
    ModeMismatch,
    NonFiniteLoss,
    RankDeficient,
    ShapeMismatch,
    SingularSystem,
    SubsampleTooSmall,
    UnknownVariant,
    UnstableStep,
    ZeroInitialWeight,
)
from .spectral import (
    DesignMatrix,
    FeatureMap,
    SpectralDecomposition,
    SyntheticTask,
    build_design_matrix,
    decompose,
    design_from_matrix,
    null_projection,
    vectorize_outputs,
)
from .distill import (
    DistillConfig,
    DistillState,
    alpha_coefficient,
    closed_form_distill,
    iterate_distill,
    propagate_teacher,
    ridge_distill_step,
)
from .flow import (
    FineTuneTrajectory,
    FlowConfig,
    euler_oracle,
    finetune_closed_form,
    flow_coefficient,
    min_norm_targets,
    training_loss,
)
from .bounds import (
    BoundInputs,
    BoundReport,
    MonotonicityReport,
    empirical_bound_inputs,
    generalization_remainder,
    monotonicity_report,
    psi,
    tightness_witness,
    zeta,
)

__version__ = "0.1.0"
