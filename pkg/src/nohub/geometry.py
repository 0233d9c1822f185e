"""Hypersphere primitives: normalization, Gram matrices, sampling, PCA."""
import warnings

import numpy as np

from .errors import DimTooLargeError, ZeroRowError

ZERO_NORM = 1e-12


class RankDeficientWarning(UserWarning):
    """Requested more principal directions than the data spans."""


def _as_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    return M


def l2_normalize_rows(M) -> np.ndarray:
    """Scale every row of `M` to unit Euclidean norm.

    Raises
    ------
    ZeroRowError
        If a row has norm below 1e-12.
    """
    M = _as_matrix(M)
    norms = np.linalg.norm(M, axis=1)
    bad = np.flatnonzero(norms < ZERO_NORM)
    if bad.size:
        raise ZeroRowError(int(bad[0]))
    return M / norms[:, None]


def inner_product_matrix(Z) -> np.ndarray:
    """Gram matrix ``Z @ Z.T``, symmetrized to remove rounding asymmetry."""
    Z = _as_matrix(Z)
    G = Z @ Z.T
    return (G + G.T) / 2


def cosine_matrix(M) -> np.ndarray:
    """Pairwise cosine similarities of the rows of `M` (unit diagonal)."""
    G = inner_product_matrix(l2_normalize_rows(M))
    np.fill_diagonal(G, 1.0)
    return G


def sample_uniform_sphere(n: int, d: int, seed: int = 0) -> np.ndarray:
    """Draw `n` points uniformly from the unit sphere in R^d.

    Standard normal draws are row-normalized, which is exact for the
    rotation-invariant distribution.
    """
    if n < 1 or d < 2:
        raise ValueError(f"need n >= 1 and d >= 2, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    while True:
        X = rng.standard_normal((n, d))
        norms = np.linalg.norm(X, axis=1)
        # a zero draw has probability zero but would poison the normalization
        if np.all(norms > ZERO_NORM):
            return X / norms[:, None]


def _principal_axes(Mc: np.ndarray):
    _, s, Vt = np.linalg.svd(Mc, full_matrices=False)
    # deterministic signs: largest-magnitude coordinate of each axis is positive
    lead = np.argmax(np.abs(Vt), axis=1)
    signs = np.sign(Vt[np.arange(Vt.shape[0]), lead])
    signs[signs == 0] = 1.0
    return s, Vt * signs[:, None]


def pca_project(M, d: int) -> np.ndarray:
    """Project the centered rows of `M` onto their top-`d` principal axes.

    Columns are ordered by decreasing singular value. Axes beyond the rank of
    the centered data carry no information; their coordinates are set to zero
    and a :class:`RankDeficientWarning` is emitted.
    """
    M = _as_matrix(M)
    n, k = M.shape
    if d < 1 or d > min(n, k):
        raise DimTooLargeError(f"d={d} must lie in [1, min(n, k)={min(n, k)}]")
    Mc = M - M.mean(axis=0)
    s, V = _principal_axes(Mc)
    proj = Mc @ V[:d].T
    tol = max(n, k) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    dead = s[:d] <= tol
    if np.any(dead):
        proj[:, dead] = 0.0
        warnings.warn(
            f"data rank {int(np.sum(s > tol))} is below d={d}; padding with zeros",
            RankDeficientWarning,
            stacklevel=2,
        )
    return proj


def pca_init(M, d: int) -> tuple[np.ndarray, bool]:
    """PCA projection to exactly `d` columns, zero-padding past min(n, k).

    Returns the projection and whether any column had to be padded.
    """
    M = _as_matrix(M)
    d_eff = min(d, *M.shape)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RankDeficientWarning)
        proj = pca_project(M, d_eff)
    deficient = d_eff < d or any(issubclass(w.category, RankDeficientWarning) for w in caught)
    if d_eff < d:
        proj = np.hstack([proj, np.zeros((proj.shape[0], d - d_eff))])
    return proj, deficient
