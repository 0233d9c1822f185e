"""k-occurrence based hubness measures."""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import BadKError
from .geometry import l2_normalize_rows

METRICS = ("cosine", "euclidean")


@dataclass(frozen=True)
class KOccurrence:
    counts: np.ndarray  # N_k per point
    neighbors: np.ndarray  # (n, k) neighbor indices, nearest first
    k: int


@dataclass(frozen=True)
class HubnessReport:
    skewness: float
    hub_occurrence: float
    k: int
    hub_threshold: float
    n: int


def pairwise_distances(points, metric: str = "cosine") -> np.ndarray:
    X = np.asarray(points, dtype=np.float64)
    if metric == "cosine":
        Xn = l2_normalize_rows(X)
        return 1.0 - Xn @ Xn.T
    if metric == "euclidean":
        return cdist(X, X, metric="euclidean")
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def k_occurrence(points, k: int = 5, metric: str = "cosine") -> KOccurrence:
    """Count how often each point appears in the others' k-NN lists.

    A point is never its own neighbor. Equal distances are resolved in favor
    of the smaller index, so the result is deterministic.
    """
    D = pairwise_distances(points, metric)
    n = D.shape[0]
    if not 1 <= k <= n - 1:
        raise BadKError(f"k={k} must lie in [1, n-1={n - 1}]")
    np.fill_diagonal(D, np.inf)
    neighbors = np.argsort(D, axis=1, kind="stable")[:, :k]
    counts = np.bincount(neighbors.ravel(), minlength=n)
    return KOccurrence(counts=counts, neighbors=neighbors, k=k)


def skewness(counts) -> float:
    """Population skewness ``m3 / m2**1.5``; zero for a constant sample."""
    c = np.asarray(getattr(counts, "counts", counts), dtype=np.float64)
    dev = c - c.mean()
    m2 = np.mean(dev**2)
    if m2 == 0:
        return 0.0
    return float(np.mean(dev**3) / m2**1.5)


def hub_occurrence(occ: KOccurrence, hub_size: float = 2.0) -> float:
    """Fraction of all k-NN slots taken by hubs (points with N_k > hub_size * k)."""
    hubs = occ.counts > hub_size * occ.k
    return float(np.mean(hubs[occ.neighbors]))


def hubness(points, k: int = 5, metric: str = "cosine", hub_size: float = 2.0) -> HubnessReport:
    occ = k_occurrence(points, k, metric)
    return HubnessReport(
        skewness=skewness(occ),
        hub_occurrence=hub_occurrence(occ, hub_size),
        k=k,
        hub_threshold=hub_size * k,
        n=occ.counts.shape[0],
    )
