"""Input similarity distribution: per-point concentrations and affinities."""
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NotNormalizedError, PerplexityOutOfRangeError

KAPPA_MIN = 1e-6
KAPPA_MAX = 1e6
MAX_ITER = 100


@dataclass(frozen=True)
class KappaVector:
    """Per-point concentrations and the row entropies (bits) they achieve."""

    values: np.ndarray
    achieved_entropy: np.ndarray
    converged: np.ndarray
    perplexity: float

    @property
    def converged_fraction(self) -> float:
        return float(np.mean(self.converged))


@dataclass(frozen=True)
class SupportLabelInfo:
    """Which rows are labeled support samples, and their class.

    Query rows carry the label -1.
    """

    labels: np.ndarray
    is_support: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        is_support = np.asarray(self.is_support, dtype=bool)
        if labels.shape != is_support.shape or labels.ndim != 1:
            raise ValueError("labels and is_support must be 1-D and equally long")
        if np.any(labels[is_support] < 0):
            raise ValueError("support rows need nonnegative labels")
        if np.any(labels[~is_support] != -1):
            raise ValueError("query rows must carry the label -1")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "is_support", is_support)

    @classmethod
    def from_labels(cls, labels) -> "SupportLabelInfo":
        """Build from a label vector where -1 marks unlabeled (query) rows."""
        labels = np.asarray(labels, dtype=np.int64)
        return cls(labels=labels, is_support=labels >= 0)

    def pair_masks(self) -> tuple[np.ndarray, np.ndarray]:
        """Boolean n x n masks of (same-class, different-class) support pairs."""
        both = self.is_support[:, None] & self.is_support[None, :]
        same = self.labels[:, None] == self.labels[None, :]
        return both & same, both & ~same


def row_entropy(p_row) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(p_row, dtype=np.float64)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
        raise NotNormalizedError(f"probabilities sum to {p.sum()!r}")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def _masked_logits(S: np.ndarray, kappa: np.ndarray) -> np.ndarray:
    logits = kappa[:, None] * S
    np.fill_diagonal(logits, -np.inf)
    return logits


def _entropy_bits(S: np.ndarray, kappa: np.ndarray) -> np.ndarray:
    # H = lse - E_p[logit], computed without forming log p
    logits = _masked_logits(S, kappa)
    lse = logsumexp(logits, axis=1)
    p = np.exp(logits - lse[:, None])
    finite = np.where(np.isfinite(logits), logits, 0.0)
    return (lse - np.sum(p * finite, axis=1)) / np.log(2.0)


def calibrate_kappa(S, perplexity: float, max_iter: int = MAX_ITER) -> KappaVector:
    """Binary-search one concentration per row so its neighbor entropy hits
    ``log2(perplexity)`` within ``0.1 * log2(perplexity)``.

    Entropy is non-increasing in the concentration, so the search first
    doubles the upper bracket from 1 until the entropy drops below target
    (capped at 1e6) and then bisects. Rows still outside the tolerance after
    `max_iter` bisections keep their last midpoint and are flagged as not
    converged.
    """
    S = np.asarray(S, dtype=np.float64)
    n = S.shape[0]
    if not 2 <= perplexity <= n - 1:
        raise PerplexityOutOfRangeError(
            f"perplexity {perplexity} outside [2, n-1={n - 1}]"
        )
    target = np.log2(perplexity)
    tol = 0.1 * target

    lo = np.full(n, KAPPA_MIN)
    hi = np.ones(n)
    kappa = np.ones(n)
    H = _entropy_bits(S, kappa)
    done = np.abs(H - target) <= tol

    # grow the bracket while the entropy is still too high
    grow = ~done & (H > target)
    while np.any(grow):
        lo[grow] = hi[grow]
        hi[grow] = np.minimum(hi[grow] * 2.0, KAPPA_MAX)
        kappa[grow] = hi[grow]
        H = np.where(grow, _entropy_bits(S, kappa), H)
        done |= np.abs(H - target) <= tol
        grow = ~done & (H > target) & (hi < KAPPA_MAX)

    for _ in range(max_iter):
        active = ~done
        if not np.any(active):
            break
        too_high = active & (H > target)
        too_low = active & ~too_high
        lo[too_high] = kappa[too_high]
        hi[too_low] = kappa[too_low]
        kappa[active] = (lo[active] + hi[active]) / 2.0
        H = np.where(active, _entropy_bits(S, kappa), H)
        done |= np.abs(H - target) <= tol

    return KappaVector(values=kappa, achieved_entropy=H, converged=done, perplexity=float(perplexity))


def conditional_affinities(S, kappa) -> np.ndarray:
    """Row-stochastic neighbor distributions.

    Row i is the softmax of ``kappa[i] * S[i, j]`` over ``j != i``; the
    diagonal is zero.
    """
    S = np.asarray(S, dtype=np.float64)
    k = np.asarray(getattr(kappa, "values", kappa), dtype=np.float64)
    if k.shape != (S.shape[0],):
        raise ValueError("kappa length must match the Gram matrix")
    logits = _masked_logits(S, k)
    C = np.exp(logits - logsumexp(logits, axis=1)[:, None])
    np.fill_diagonal(C, 0.0)
    return C


def symmetrize(C) -> np.ndarray:
    """Joint affinities ``(C + C.T) / (2n)``; symmetric and summing to one."""
    C = np.asarray(C, dtype=np.float64)
    return (C + C.T) / (2.0 * C.shape[0])


def label_informed_gram(S, info: SupportLabelInfo) -> np.ndarray:
    """Overwrite support-support similarities with +1 (same class) or -1.

    Every other entry is returned untouched.
    """
    S = np.array(S, dtype=np.float64, copy=True)
    if info.labels.shape[0] != S.shape[0]:
        raise ValueError("label info length must match the Gram matrix")
    same, diff = info.pair_masks()
    S[same] = 1.0
    S[diff] = -1.0
    return S


def affinity_matrix(S, perplexity: float, max_iter: int = MAX_ITER) -> tuple[np.ndarray, KappaVector]:
    """Calibrate concentrations on `S` and return the joint affinities."""
    kappas = calibrate_kappa(S, perplexity, max_iter)
    return symmetrize(conditional_affinities(S, kappas)), kappas
