"""Feature maps, design matrices, and the spectral decomposition of the
lifted regression operator.

A dataset of n inputs with p-dimensional outputs is modelled linearly after
a fixed feature map phi: the prediction for input x is W phi(x) with
W in R^{p x d}. Weights are handled in vectorized form w = vec[W^T] in
R^{dp} (p contiguous blocks of length d, one per output coordinate), and
stacked outputs as vectors in R^{np} (p blocks of length n). The operator
mapping weights to stacked outputs is then the Kronecker lift
[I_p (x) Phi]^T, and every closed form in this package is expressed in its
singular basis.

The decomposition is stored in factored form: only the d x n SVD of Phi is
computed, and the lifted operator's singular triples are materialized
lazily by index arithmetic (each singular value of Phi appears p times,
once per output block). ``materialize`` builds the dense Kronecker matrix
for oracle comparisons on small instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, RankDeficient

# Relative threshold under which a singular value counts as zero.
RANK_RTOL = 1e-9


def vectorize_outputs(Ymat: np.ndarray) -> np.ndarray:
    """Stack an n x p output matrix into R^{np}, grouped by output coordinate."""
    return np.ravel(np.asarray(Ymat, dtype=float), order="F")


def unvectorize_outputs(Y: np.ndarray, n: int, p: int) -> np.ndarray:
    """Inverse of :func:`vectorize_outputs`."""
    return np.asarray(Y, dtype=float).reshape(p, n).T


@dataclass(frozen=True)
class SyntheticTask:
    """A small regression dataset: raw inputs plus an n x p label matrix.

    ``pretrain_inputs`` is an optional second pool of inputs standing in for
    the general domain the initial weights were trained on.
    """

    inputs: np.ndarray
    labels: np.ndarray
    pretrain_inputs: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", np.atleast_2d(np.asarray(self.inputs, dtype=float)))
        object.__setattr__(self, "labels", np.atleast_2d(np.asarray(self.labels, dtype=float)))
        if self.labels.shape[0] != self.inputs.shape[0]:
            raise DimensionMismatch(
                f"{self.inputs.shape[0]} inputs vs {self.labels.shape[0]} label rows"
            )
        if self.n < 1 or self.p < 1:
            raise DimensionMismatch("need n >= 1 and p >= 1")
        if not np.all(np.isfinite(self.labels)):
            raise DimensionMismatch("labels must be finite")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def p(self) -> int:
        return self.labels.shape[1]

    @property
    def y_vector(self) -> np.ndarray:
        """Labels stacked into R^{np}."""
        return vectorize_outputs(self.labels)


@dataclass(frozen=True)
class FeatureMap:
    """A frozen feature map x -> phi(x) in R^d.

    Kinds: ``identity`` (d must equal the input dimension), ``random-tanh``
    (tanh(Gx + b)) and ``random-fourier`` (cos(Gx + b)), with G and b drawn
    once from a standard normal scaled by 1/sqrt(input dim).
    """

    kind: str
    d: int
    input_dim: int
    seed: int = 0
    G: np.ndarray = field(init=False, repr=False)
    b: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("identity", "random-tanh", "random-fourier"):
            raise ValueError(f"unknown feature map kind {self.kind!r}")
        if self.kind == "identity":
            if self.d != self.input_dim:
                raise DimensionMismatch("identity map requires d == input dimension")
            G = np.eye(self.d)
            b = np.zeros(self.d)
        else:
            rng = np.random.default_rng(self.seed)
            scale = 1.0 / np.sqrt(self.input_dim)
            G = rng.normal(size=(self.d, self.input_dim)) * scale
            b = rng.normal(size=self.d) * scale
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "b", b)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.input_dim:
            raise DimensionMismatch(f"input dim {x.shape[-1]} != {self.input_dim}")
        z = x @ self.G.T + self.b
        if self.kind == "identity":
            return x
        if self.kind == "random-tanh":
            return np.tanh(z)
        return np.cos(z)


@dataclass(frozen=True)
class DesignMatrix:
    """Feature matrix Phi in R^{d x n} (column j = features of sample j)."""

    Phi: np.ndarray
    rank: int

    @property
    def d(self) -> int:
        return self.Phi.shape[0]

    @property
    def n(self) -> int:
        return self.Phi.shape[1]


def numerical_rank(A: np.ndarray) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def build_design_matrix(task: SyntheticTask, fmap: FeatureMap) -> DesignMatrix:
    """Apply the feature map columnwise; fails unless Phi has full column rank."""
    if fmap.d < task.n:
        raise DimensionMismatch(f"need d >= n, got d={fmap.d} < n={task.n}")
    Phi = np.column_stack([fmap(x) for x in task.inputs])
    if not np.all(np.isfinite(Phi)):
        raise DimensionMismatch("feature matrix has non-finite entries")
    rank = numerical_rank(Phi)
    if rank < task.n:
        raise RankDeficient(rank, task.n)
    return DesignMatrix(Phi=Phi, rank=rank)


def design_from_matrix(Phi: np.ndarray) -> DesignMatrix:
    """Wrap an explicit d x n matrix, enforcing the full-rank requirement."""
    Phi = np.asarray(Phi, dtype=float)
    d, n = Phi.shape
    if d < n:
        raise DimensionMismatch(f"need d >= n, got d={d} < n={n}")
    rank = numerical_rank(Phi)
    if rank < n:
        raise RankDeficient(rank, n)
    return DesignMatrix(Phi=Phi, rank=rank)


class SpectralDecomposition:
    """Singular data of the lifted operator, stored in factored form.

    The lifted operator is block diagonal with p copies of Phi, so its
    singular values are those of Phi each repeated p times, and its
    singular vectors are unit-block embeddings of Phi's. Index i of the
    sorted lifted spectrum maps to Phi's singular index ``i // p`` inside
    output block ``i % p``.
    """

    def __init__(self, design: DesignMatrix | np.ndarray, p: int):
        if isinstance(design, np.ndarray):
            design = design_from_matrix(design)
        if p < 1:
            raise DimensionMismatch("p must be >= 1")
        self.Phi = design.Phi
        self.d, self.n = self.Phi.shape
        self.p = int(p)
        U, s, Vt = np.linalg.svd(self.Phi, full_matrices=False)
        self.U_phi = U          # d x n, columns orthonormal
        self.s_phi = s          # length n, non-increasing
        self.V_phi = Vt.T       # n x n orthogonal
        # Each Phi singular value appears once per output block.
        self.sigma = np.repeat(s, self.p)

    @property
    def r(self) -> int:
        """Rank of the lifted operator (= np for full-rank Phi)."""
        return self.n * self.p

    @property
    def dp(self) -> int:
        return self.d * self.p

    @property
    def np_(self) -> int:
        return self.n * self.p

    def _check_weight(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dp,):
            raise DimensionMismatch(f"weight vector must have length {self.dp}, got {w.shape}")
        return w

    def _check_output(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.np_,):
            raise DimensionMismatch(f"output vector must have length {self.np_}, got {f.shape}")
        return f

    # -- lazy singular vectors ------------------------------------------------

    def u_vector(self, i: int) -> np.ndarray:
        """Left singular vector i of the lifted operator, materialized."""
        j, b = divmod(i, self.p)
        u = np.zeros(self.dp)
        u[b * self.d:(b + 1) * self.d] = self.U_phi[:, j]
        return u

    def v_vector(self, i: int) -> np.ndarray:
        j, b = divmod(i, self.p)
        v = np.zeros(self.np_)
        v[b * self.n:(b + 1) * self.n] = self.V_phi[:, j]
        return v

    def U_top(self) -> np.ndarray:
        """Dense dp x np matrix of the top left singular vectors (small use only)."""
        return np.column_stack([self.u_vector(i) for i in range(self.np_)])

    def V(self) -> np.ndarray:
        """Dense np x np right singular-vector matrix."""
        return np.column_stack([self.v_vector(i) for i in range(self.np_)])

    # -- factored products ----------------------------------------------------

    def top_coefficients(self, w: np.ndarray) -> np.ndarray:
        """u_i^T w for i = 1..np, without materializing the basis."""
        W = self._check_weight(w).reshape(self.p, self.d)
        return (W @ self.U_phi).T.ravel()

    def from_top_coefficients(self, coeffs: np.ndarray) -> np.ndarray:
        """Assemble sum_i coeffs_i u_i in R^{dp}."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.np_,):
            raise DimensionMismatch(f"need {self.np_} coefficients, got {coeffs.shape}")
        C = coeffs.reshape(self.n, self.p).T               # p x n
        return (C @ self.U_phi.T).ravel()

    def vt_times(self, f: np.ndarray) -> np.ndarray:
        """V^T f for a stacked output vector f."""
        F = self._check_output(f).reshape(self.p, self.n)
        return (F @ self.V_phi).T.ravel()

    def v_times(self, c: np.ndarray) -> np.ndarray:
        """V c back to stacked output space."""
        c = np.asarray(c, dtype=float)
        if c.shape != (self.np_,):
            raise DimensionMismatch(f"need {self.np_} coefficients, got {c.shape}")
        C = c.reshape(self.n, self.p).T                    # p x n
        return (C @ self.V_phi.T).ravel()

    def apply_operator_t(self, w: np.ndarray) -> np.ndarray:
        """Model outputs [I_p (x) Phi]^T w in R^{np}."""
        W = self._check_weight(w).reshape(self.p, self.d)
        return (W @ self.Phi).ravel()

    def apply_operator(self, f: np.ndarray) -> np.ndarray:
        """[I_p (x) Phi] f in R^{dp}."""
        F = self._check_output(f).reshape(self.p, self.n)
        return (F @ self.Phi.T).ravel()

    def null_projection(self, w: np.ndarray) -> np.ndarray:
        """Project w onto the orthogonal complement of the top singular span."""
        W = self._check_weight(w).reshape(self.p, self.d)
        span = (W @ self.U_phi) @ self.U_phi.T
        return (W - span).ravel()

    def materialize(self) -> np.ndarray:
        """Dense [I_p (x) Phi] for oracle comparisons; dp x np storage."""
        return np.kron(np.eye(self.p), self.Phi)


def decompose(design: DesignMatrix | np.ndarray, p: int) -> SpectralDecomposition:
    """Spectral decomposition of the operator lifted to p output coordinates."""
    return SpectralDecomposition(design, p)


def null_projection(spec: SpectralDecomposition, w: np.ndarray) -> np.ndarray:
    """Component of w orthogonal to every top singular direction."""
    return spec.null_projection(w)
