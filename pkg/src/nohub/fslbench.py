"""Few-shot episodes, baseline embeddings, SimpleShot, and benchmarking."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .affinity import SupportLabelInfo
from .errors import InsufficientPoolError, NoHubError, ZeroVarianceError
from .geometry import l2_normalize_rows, sample_uniform_sphere
from .hubness import HubnessReport, hubness
from .objective import NOHUB, NOHUB_S, NoHubConfig, embed

BASELINES = ("none", "l2", "cl2", "zn")
METHODS = BASELINES + (NOHUB, NOHUB_S)


@dataclass(frozen=True)
class Episode:
    support_x: np.ndarray
    support_y: np.ndarray
    query_x: np.ndarray
    query_y: np.ndarray
    K: int
    N_S: int
    N_Q: int

    @property
    def features(self) -> np.ndarray:
        """Support rows followed by query rows."""
        return np.vstack([self.support_x, self.query_x])

    def label_info(self) -> SupportLabelInfo:
        labels = np.concatenate([self.support_y, np.full(len(self.query_y), -1)])
        return SupportLabelInfo.from_labels(labels)


@dataclass(frozen=True)
class EpisodeResult:
    accuracy: float
    hubness: HubnessReport
    method: str
    predictions: np.ndarray = field(repr=False)
    seed: int = 0


@dataclass(frozen=True)
class AggregateStats:
    mean_accuracy: float
    ci95_halfwidth: float
    mean_skewness: float
    mean_hub_occurrence: float
    episode_count: int
    results: tuple = field(default=(), repr=False)

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([r.accuracy for r in self.results])

    @property
    def skewnesses(self) -> np.ndarray:
        return np.array([r.hubness.skewness for r in self.results])

    @property
    def hub_occurrences(self) -> np.ndarray:
        return np.array([r.hubness.hub_occurrence for r in self.results])


def synth_pool(classes: int, per_class: int, dim: int, separation: float,
               within_spread: float = 1.0, seed: int = 0):
    """Labeled Gaussian clusters around means spread uniformly on a sphere.

    Class means are uniform on the sphere of radius `separation`; samples add
    isotropic noise of scale `within_spread`. Values are rounded to float32
    precision, like the output of a float32 feature extractor. Rows are
    grouped by class.
    """
    if classes < 1 or per_class < 1:
        raise ValueError("need at least one class and one sample per class")
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if separation < 0 or within_spread < 0:
        raise ValueError("separation and within_spread must be nonnegative")
    ss = np.random.SeedSequence(seed)
    mean_seed, noise_seed = ss.spawn(2)
    means = separation * sample_uniform_sphere(classes, dim, seed=mean_seed)
    rng = np.random.default_rng(noise_seed)
    y = np.repeat(np.arange(classes), per_class)
    X = means[y] + within_spread * rng.standard_normal((classes * per_class, dim))
    return X.astype(np.float32).astype(np.float64), y


def _split(X, y, K, N_S, N_Q) -> Episode:
    sx, sy, qx, qy = [], [], [], []
    for c in range(K):
        rows = X[y == c]
        sx.append(rows[:N_S])
        qx.append(rows[N_S:N_S + N_Q])
        sy.append(np.full(N_S, c))
        qy.append(np.full(N_Q, c))
    return Episode(np.vstack(sx), np.concatenate(sy), np.vstack(qx), np.concatenate(qy), K, N_S, N_Q)


def synth_episode(K: int = 5, N_S: int = 1, N_Q: int = 15, dim: int = 512,
                  separation: float = 1.0, within_spread: float = 1.0, seed: int = 0) -> Episode:
    if K < 2:
        raise ValueError(f"need K >= 2, got {K}")
    X, y = synth_pool(K, N_S + N_Q, dim, separation, within_spread, seed)
    return _split(X, y, K, N_S, N_Q)


def sample_episode(pool_x, pool_y, K: int, N_S: int, N_Q: int, seed: int = 0) -> Episode:
    """Draw K classes, then N_S + N_Q rows per class, all without replacement.

    Episode labels are relabeled to 0..K-1 in the order the classes were drawn.
    """
    pool_x = np.asarray(pool_x, dtype=np.float64)
    pool_y = np.asarray(pool_y)
    rng = np.random.default_rng(seed)
    classes, counts = np.unique(pool_y[pool_y >= 0], return_counts=True)
    eligible = classes[counts >= N_S + N_Q]
    if len(eligible) < K:
        raise InsufficientPoolError(
            f"need {K} classes with >= {N_S + N_Q} rows each, pool has {len(eligible)}"
        )
    chosen = rng.choice(eligible, size=K, replace=False)
    rows, labels = [], []
    for c_new, c in enumerate(chosen):
        idx = rng.choice(np.flatnonzero(pool_y == c), size=N_S + N_Q, replace=False)
        rows.append(pool_x[idx])
        labels.append(np.full(N_S + N_Q, c_new))
    return _split(np.vstack(rows), np.concatenate(labels), K, N_S, N_Q)


def baseline_embed(X, method: str = "none") -> np.ndarray:
    """Apply one of the fixed baseline transforms: none, l2, cl2, zn.

    ``zn`` standardizes each row across its features (population std);
    ``cl2`` centers with the column mean of the given rows before L2.
    """
    X = np.asarray(X, dtype=np.float64)
    if method == "none":
        return X
    if method == "l2":
        return l2_normalize_rows(X)
    if method == "cl2":
        return l2_normalize_rows(X - X.mean(axis=0))
    if method == "zn":
        mu = X.mean(axis=1, keepdims=True)
        sd = X.std(axis=1, keepdims=True)
        bad = np.flatnonzero(sd[:, 0] == 0)
        if bad.size:
            raise ZeroVarianceError(int(bad[0]))
        return (X - mu) / sd
    raise ValueError(f"unknown baseline {method!r}; expected one of {BASELINES}")


def simpleshot_classify(support_z, support_y, query_z, metric: str = "euclidean") -> np.ndarray:
    """Nearest-centroid labels for the query rows (ties go to the lower class)."""
    support_z = np.asarray(support_z, dtype=np.float64)
    query_z = np.asarray(query_z, dtype=np.float64)
    support_y = np.asarray(support_y)
    classes = np.unique(support_y)
    centroids = np.stack([support_z[support_y == c].mean(axis=0) for c in classes])
    if metric == "euclidean":
        d = np.sum((query_z[:, None, :] - centroids[None, :, :]) ** 2, axis=-1)
    elif metric == "cosine":
        d = -l2_normalize_rows(query_z) @ l2_normalize_rows(centroids).T
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return classes[np.argmin(d, axis=1)]


def embed_episode(episode: Episode, method: str, config: Optional[NoHubConfig] = None) -> np.ndarray:
    """Jointly embed support and query rows; support rows come first."""
    X = episode.features
    if method in BASELINES:
        return baseline_embed(X, method)
    if method in (NOHUB, NOHUB_S):
        config = config or NoHubConfig(variant=method)
        if config.variant != method:
            config = config.with_(variant=method)
        info = episode.label_info() if method == NOHUB_S else None
        return embed(X, config, info).embeddings
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def run_episode(episode: Episode, method: str, config: Optional[NoHubConfig] = None,
                metric: str = "euclidean", k_hubness: int = 5, seed: int = 0) -> EpisodeResult:
    Z = embed_episode(episode, method, config)
    n_s = len(episode.support_y)
    pred = simpleshot_classify(Z[:n_s], episode.support_y, Z[n_s:], metric)
    correct = int(np.sum(pred == episode.query_y))
    return EpisodeResult(
        accuracy=correct / len(episode.query_y),
        hubness=hubness(Z, k=k_hubness),
        method=method,
        predictions=pred,
        seed=seed,
    )


def episode_seed(run_seed: int, index: int) -> int:
    """Per-episode seed derived only from (run seed, episode index)."""
    return int(np.random.SeedSequence([run_seed, index]).generate_state(1)[0])


def synthetic_source(K=5, N_S=1, N_Q=15, dim=512, separation=1.0, within_spread=1.0):
    """Episode source drawing fresh synthetic episodes from a seed."""
    def source(seed: int) -> Episode:
        return synth_episode(K, N_S, N_Q, dim, separation, within_spread, seed)
    return source


def pool_source(pool_x, pool_y, K=5, N_S=1, N_Q=15):
    """Episode source sampling episodes from a labeled feature pool."""
    def source(seed: int) -> Episode:
        return sample_episode(pool_x, pool_y, K, N_S, N_Q, seed)
    return source


class EpisodeFailure(NoHubError):
    def __init__(self, seed: int, index: int, cause: Exception):
        self.seed = seed
        self.index = index
        super().__init__(f"episode {index} (seed {seed}) failed: {cause}")


def run_benchmark(source: Callable[[int], Episode], method: str, episodes: int = 500,
                  config: Optional[NoHubConfig] = None, metric: str = "euclidean",
                  k_hubness: int = 5, seed: int = 0, threads: int = 1) -> AggregateStats:
    """Evaluate `method` with SimpleShot on `episodes` episodes from `source`.

    Episode ``i`` is drawn from ``source(episode_seed(seed, i))`` so the
    outcome does not depend on `threads`.
    """
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")

    def one(i: int) -> EpisodeResult:
        s = episode_seed(seed, i)
        try:
            return run_episode(source(s), method, config, metric, k_hubness, s)
        except Exception as exc:
            raise EpisodeFailure(s, i, exc) from exc

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = tuple(pool.map(one, range(episodes)))
    else:
        results = tuple(one(i) for i in range(episodes))
    return aggregate(results)


def aggregate(results) -> AggregateStats:
    acc = np.array([r.accuracy for r in results])
    m = len(acc)
    return AggregateStats(
        mean_accuracy=float(acc.mean()),
        ci95_halfwidth=float(1.96 * acc.std() / np.sqrt(m)),
        mean_skewness=float(np.mean([r.hubness.skewness for r in results])),
        mean_hub_occurrence=float(np.mean([r.hubness.hub_occurrence for r in results])),
        episode_count=m,
        results=tuple(results),
    )
