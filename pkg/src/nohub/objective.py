"""noHub / noHub-S: uniformity plus local-similarity objective on the sphere.

The loss trades off two terms for embeddings ``Z`` with unit-norm rows::

    L_LSP  = -kappa * sum_{i != j} p_ij <z_i, z_j>
    L_Unif = log sum_{l != m} exp(kappa * s(z_l, z_m))
    L      = alpha * L_LSP + (1 - alpha) * L_Unif

where ``s`` is the plain inner product, or for the label-informed variant a
masked version in which same-class support pairs are dropped and
different-class support pairs are scaled by ``epsilon``.
"""
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .affinity import (
    KappaVector,
    SupportLabelInfo,
    affinity_matrix,
    label_informed_gram,
)
from .errors import EmptySumError, NonFiniteError
from .geometry import cosine_matrix, inner_product_matrix, l2_normalize_rows, pca_init

NOHUB = "nohub"
NOHUB_S = "nohub-s"
VARIANTS = (NOHUB, NOHUB_S)


@dataclass(frozen=True)
class NoHubConfig:
    """Hyperparameters of the embedding procedure.

    ``iterations`` and ``epsilon`` default per variant: 50 / unused for
    noHub, 150 / 8 for noHub-S.
    """

    alpha: float = 0.2
    kappa: float = 0.5
    perplexity: float = 45.0
    iterations: Optional[int] = None
    learning_rate: float = 0.1
    dim: int = 400
    epsilon: float = 8.0
    variant: str = NOHUB
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.iterations is None:
            object.__setattr__(self, "iterations", 150 if self.variant == NOHUB_S else 50)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.perplexity < 2:
            raise ValueError(f"perplexity must be >= 2, got {self.perplexity}")

    def with_(self, **changes) -> "NoHubConfig":
        if "variant" in changes and "iterations" not in changes:
            changes["iterations"] = None
        return replace(self, **changes)


@dataclass(frozen=True)
class UnifMask:
    """Pair weighting for the uniformity term.

    ``keep[l, m]`` selects the pairs in the sum and ``scale[l, m]`` multiplies
    their inner product.
    """

    keep: np.ndarray
    scale: np.ndarray

    @classmethod
    def plain(cls, n: int) -> "UnifMask":
        keep = ~np.eye(n, dtype=bool)
        return cls(keep=keep, scale=np.ones((n, n)))

    @classmethod
    def from_labels(cls, info: SupportLabelInfo, epsilon: float) -> "UnifMask":
        n = info.labels.shape[0]
        same, diff = info.pair_masks()
        keep = ~np.eye(n, dtype=bool) & ~same
        scale = np.where(diff, float(epsilon), 1.0)
        return cls(keep=keep, scale=scale)


@dataclass
class OptimizerState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0

    @classmethod
    def zeros(cls, shape) -> "OptimizerState":
        return cls(np.zeros(shape), np.zeros(shape), 0)


@dataclass
class EmbeddingResult:
    embeddings: np.ndarray
    loss_trace: np.ndarray  # (T, 3): L_LSP, L_Unif, L_noHub after each update
    converged_kappas: Optional[KappaVector]
    affinities: np.ndarray = field(repr=False)
    rank_deficient_init: bool = False


def pair_logits(G, kappa: float, mask: Optional[UnifMask] = None) -> np.ndarray:
    """Logits ``kappa * s(z_l, z_m)`` of the uniformity sum; excluded pairs
    (self-pairs always) are ``-inf``."""
    G = np.asarray(G, dtype=np.float64)
    if mask is None:
        mask = UnifMask.plain(G.shape[0])
    logits = kappa * mask.scale * G
    return np.where(mask.keep, logits, -np.inf)


def loss_lsp(P, Z, kappa: float) -> float:
    """Local similarity preservation term, ``-kappa * sum_{i!=j} p_ij z_i.z_j``."""
    Z = np.asarray(Z, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    G = inner_product_matrix(Z)
    off = ~np.eye(G.shape[0], dtype=bool)
    return float(-kappa * np.sum(P[off] * G[off]))


def loss_unif_gram(G, kappa: float, mask: Optional[UnifMask] = None) -> float:
    logits = pair_logits(G, kappa, mask)
    if not np.any(np.isfinite(logits)):
        raise EmptySumError("the mask excludes every pair")
    return float(logsumexp(logits))


def loss_unif(Z, kappa: float, mask: Optional[UnifMask] = None) -> float:
    """Uniformity term, natural-log log-sum-exp over distinct pairs."""
    return loss_unif_gram(inner_product_matrix(Z), kappa, mask)


def _mask_for(config: NoHubConfig, n: int, info: Optional[SupportLabelInfo]) -> Optional[UnifMask]:
    if config.variant == NOHUB_S:
        if info is None:
            raise ValueError("the nohub-s variant needs support label information")
        return UnifMask.from_labels(info, config.epsilon)
    return None


def loss_nohub(P, Z, config: NoHubConfig, info: Optional[SupportLabelInfo] = None):
    """Return ``(L_LSP, L_Unif, alpha * L_LSP + (1 - alpha) * L_Unif)``."""
    Z = np.asarray(Z, dtype=np.float64)
    mask = _mask_for(config, Z.shape[0], info)
    lsp = loss_lsp(P, Z, config.kappa)
    unif = loss_unif(Z, config.kappa, mask)
    return lsp, unif, config.alpha * lsp + (1.0 - config.alpha) * unif


def _grad(P, Z, kappa, alpha, mask):
    G = inner_product_matrix(Z)
    logits = pair_logits(G, kappa, mask)
    top = np.max(logits)
    w = np.exp(logits - top)
    w /= w.sum()
    scale = mask.scale if mask is not None else 1.0
    W = scale * w
    grad_unif = kappa * (W + W.T) @ Z
    Poff = np.array(P, dtype=np.float64, copy=True)
    np.fill_diagonal(Poff, 0.0)
    grad_lsp = -kappa * (Poff + Poff.T) @ Z
    return alpha * grad_lsp + (1.0 - alpha) * grad_unif


def grad_nohub(P, Z, config: NoHubConfig, info: Optional[SupportLabelInfo] = None) -> np.ndarray:
    """Ambient (unprojected) gradient of the total loss w.r.t. ``Z``."""
    Z = np.asarray(Z, dtype=np.float64)
    mask = _mask_for(config, Z.shape[0], info)
    return _grad(P, Z, config.kappa, config.alpha, mask)


def adam_step(state: OptimizerState, grad, Z, eta: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update. Returns ``(new_state, new_Z)``."""
    grad = np.asarray(grad, dtype=np.float64)
    t = state.step_count + 1
    m = beta1 * state.first_moment + (1.0 - beta1) * grad
    v = beta2 * state.second_moment + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    Z_new = np.asarray(Z, dtype=np.float64) - eta * m_hat / (np.sqrt(v_hat) + eps)
    return OptimizerState(m, v, t), Z_new


def optimize(P, Z0, config: NoHubConfig, mask: Optional[UnifMask] = None,
             callback: Optional[Callable[[int, np.ndarray], None]] = None):
    """Run the gradient / Adam / renormalize loop from a given start.

    Returns the final embeddings and a ``(T, 3)`` loss trace.
    """
    P = np.asarray(P, dtype=np.float64)
    Z = l2_normalize_rows(Z0)
    state = OptimizerState.zeros(Z.shape)
    trace = np.empty((config.iterations, 3))
    for t in range(config.iterations):
        g = _grad(P, Z, config.kappa, config.alpha, mask)
        state, Z = adam_step(state, g, Z, config.learning_rate,
                             config.adam_beta1, config.adam_beta2, config.adam_eps)
        if not np.all(np.isfinite(Z)):
            raise NonFiniteError(t + 1)
        Z = l2_normalize_rows(Z)
        lsp = loss_lsp(P, Z, config.kappa)
        unif = loss_unif(Z, config.kappa, mask)
        trace[t] = lsp, unif, config.alpha * lsp + (1.0 - config.alpha) * unif
        if callback is not None:
            callback(t + 1, Z)
    return Z, trace


def input_affinities(X, config: NoHubConfig, info: Optional[SupportLabelInfo] = None):
    """Joint affinities of the raw features (label-informed for noHub-S)."""
    S = cosine_matrix(X)
    if config.variant == NOHUB_S:
        if info is None:
            raise ValueError("the nohub-s variant needs support label information")
        S = label_informed_gram(S, info)
    return affinity_matrix(S, config.perplexity)


def embed(X, config: Optional[NoHubConfig] = None, info: Optional[SupportLabelInfo] = None,
          callback: Optional[Callable[[int, np.ndarray], None]] = None) -> EmbeddingResult:
    """Embed the rows of `X` on the unit sphere in R^dim.

    Parameters
    ----------
    X : (n, k) array
        Support and query features of one episode, embedded jointly.
    config : NoHubConfig, optional
        Defaults to the noHub settings.
    info : SupportLabelInfo, optional
        Required for the ``nohub-s`` variant.
    callback : callable, optional
        Called as ``callback(iteration, Z)`` after every renormalization.

    Notes
    -----
    The features are first divided by their global max-abs entry. Cosine
    similarities and the direction of the PCA start are unaffected, and an
    exactly representable rescaling of `X` (e.g. ``10 * X`` for features of
    float32 precision) then yields bit-identical output.
    """
    config = config or NoHubConfig()
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if X.ndim != 2 or n < 2:
        raise ValueError(f"need at least two feature rows, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    if info is not None and info.labels.shape[0] != n:
        raise ValueError("label info length must match the number of rows")
    top = np.max(np.abs(X))
    if top == 0:
        raise ValueError("all features are zero")
    X = X / top

    P, kappas = input_affinities(X, config, info)
    mask = _mask_for(config, n, info)

    Z0, deficient = pca_init(X, config.dim)
    norms = np.linalg.norm(Z0, axis=1)
    degenerate = norms < 1e-12
    if np.any(degenerate):
        # a point sitting exactly on the data mean has no PCA direction
        rng = np.random.default_rng(config.seed)
        Z0[degenerate] = rng.standard_normal((int(degenerate.sum()), config.dim))
    Z, trace = optimize(P, Z0, config, mask, callback)
    return EmbeddingResult(
        embeddings=Z,
        loss_trace=trace,
        converged_kappas=kappas,
        affinities=P,
        rank_deficient_init=deficient,
    )


def kl_divergence(P, Z, kappa: float) -> float:
    """``KL(P || Q)`` with ``q_ij`` the softmax of ``kappa * z_i.z_j`` over
    distinct pairs."""
    P = np.asarray(P, dtype=np.float64)
    logits = pair_logits(inner_product_matrix(Z), kappa)
    log_q = logits - logsumexp(logits)
    sel = P > 0
    np.fill_diagonal(sel, False)
    return float(np.sum(P[sel] * (np.log(P[sel]) - log_q[sel])))


def renyi2_entropy(Z, kappa: float) -> float:
    """Gaussian-kernel plug-in estimate of the order-2 Renyi entropy,
    ``-log(n^-2 sum_{l!=m} exp(-kappa/2 ||z_l - z_m||^2))``."""
    Z = np.asarray(Z, dtype=np.float64)
    n = Z.shape[0]
    diff = Z[:, None, :] - Z[None, :, :]
    sq = np.einsum("lmd,lmd->lm", diff, diff)
    logits = -0.5 * kappa * sq
    np.fill_diagonal(logits, -np.inf)
    return float(2.0 * np.log(n) - logsumexp(logits))
