"""Shape-based clustering of zone trajectories under dynamic time warping.

Cell cost is the squared Euclidean norm between per-day metric vectors; the
DP optimum over warping paths is the *cost*, and :func:`dtw_distance`
reports ``sqrt(cost)``. The k-means objective is therefore the sum of DP
costs, which avoids squaring twice.

Kernels are compiled with numba; pairwise matrices run in parallel, each
cell written by exactly one task, so results do not depend on the thread
count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

__all__ = [
    "NumericalError",
    "SeriesMatrix",
    "ClusterModel",
    "KSelection",
    "dtw_cost",
    "dtw_distance",
    "dtw_path",
    "cdist_dtw",
    "dba_barycenter",
    "kmeanspp_init",
    "fit_kmeans",
    "silhouette",
    "select_k",
    "set_threads",
]

_NO_BAND = -1

# the bundled TBB is often too old for numba; prefer OpenMP and avoid the warning
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


class NumericalError(RuntimeError):
    """An iterative numerical routine violated its monotonicity contract."""


def set_threads(n: int | None) -> None:
    """Limit the numba worker pool; ``None`` means all cores.

    Requests above the pool size are clamped to it.
    """
    cap = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(cap if n is None else min(cap, max(1, int(n))))


@numba.njit(cache=True)
def _band_width(n, m, band):
    if band < 0:
        return max(n, m)
    return max(band, abs(n - m))


@numba.njit(cache=True)
def _acc_matrix(p, q, band):
    n = p.shape[0]
    m = q.shape[0]
    d = p.shape[1]
    w = _band_width(n, m, band)
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        lo = max(1, i - w)
        hi = min(m, i + w)
        for j in range(lo, hi + 1):
            c = 0.0
            for k in range(d):
                diff = p[i - 1, k] - q[j - 1, k]
                c += diff * diff
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = c + best
    return acc


@numba.njit(cache=True)
def _cost(p, q, band):
    return _acc_matrix(p, q, band)[p.shape[0], q.shape[0]]


@numba.njit(cache=True)
def _path(p, q, band):
    acc = _acc_matrix(p, q, band)
    i = p.shape[0]
    j = q.shape[0]
    out = np.empty((i + j, 2), dtype=np.int64)
    n_steps = 0
    while True:
        out[n_steps, 0] = i - 1
        out[n_steps, 1] = j - 1
        n_steps += 1
        if i == 1 and j == 1:
            break
        diag = acc[i - 1, j - 1]
        up = acc[i - 1, j]
        left = acc[i, j - 1]
        # ties prefer the diagonal, then the step that advances p
        if diag <= up and diag <= left:
            i -= 1
            j -= 1
        elif up <= left:
            i -= 1
        else:
            j -= 1
    return out[:n_steps][::-1].copy()


@numba.njit(parallel=True, cache=True)
def _cdist_cost(a, b, band):
    na = a.shape[0]
    nb = b.shape[0]
    out = np.empty((na, nb))
    for idx in numba.prange(na * nb):
        i = idx // nb
        j = idx % nb
        out[i, j] = _cost(a[i], b[j], band)
    return out


@numba.njit(parallel=True, cache=True)
def _pdist_cost(a, band):
    n = a.shape[0]
    out = np.zeros((n, n))
    for i in numba.prange(n):
        for j in range(i + 1, n):
            out[i, j] = _cost(a[i], a[j], band)
    for i in range(n):
        for j in range(i + 1, n):
            out[j, i] = out[i, j]
    return out


@numba.njit(cache=True)
def _dba_update(members, centroid, band):
    t = centroid.shape[0]
    d = centroid.shape[1]
    sums = np.zeros((t, d))
    counts = np.zeros(t)
    for s in range(members.shape[0]):
        path = _path(centroid, members[s], band)
        for step in range(path.shape[0]):
            i = path[step, 0]
            j = path[step, 1]
            for k in range(d):
                sums[i, k] += members[s, j, k]
            counts[i] += 1.0
    for i in range(t):
        for k in range(d):
            sums[i, k] /= counts[i]
    return sums


@numba.njit(cache=True)
def _total_cost(members, centroid, band):
    total = 0.0
    for s in range(members.shape[0]):
        total += _cost(centroid, members[s], band)
    return total


def _as_series(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"a series must be 1-d or (length, dim), got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError("empty sequence")
    return np.ascontiguousarray(arr)


def _as_dataset(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError(f"a dataset must be (n, length) or (n, length, dim), got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("empty dataset")
    if not np.all(np.isfinite(arr)):
        raise ValueError("dataset contains non-finite values")
    return np.ascontiguousarray(arr)


def _band(band: int | None) -> int:
    if band is None or (isinstance(band, float) and math.isinf(band)):
        return _NO_BAND
    if band < 0:
        raise ValueError("band radius must be non-negative")
    return int(band)


def dtw_cost(p, q, band: int | None = None) -> float:
    """Minimum cumulative squared-norm cost over admissible warping paths."""
    sp, sq = _as_series(p), _as_series(q)
    if sp.shape[1] != sq.shape[1]:
        raise ValueError("series dimensions differ")
    return float(_cost(sp, sq, _band(band)))


def dtw_distance(p, q, band: int | None = None) -> float:
    """DTW distance ``sqrt(cost)`` between two (multivariate) sequences.

    ``band`` is a Sakoe-Chiba radius; ``None`` means unconstrained. For
    unequal lengths the radius is widened to at least the length gap so a
    path always exists.
    """
    return math.sqrt(dtw_cost(p, q, band))


def dtw_path(p, q, band: int | None = None) -> list[tuple[int, int]]:
    """Optimal warping path as (index in p, index in q) pairs."""
    sp, sq = _as_series(p), _as_series(q)
    return [tuple(map(int, row)) for row in _path(sp, sq, _band(band))]


def cdist_dtw(a, b=None, band: int | None = None, squared: bool = False) -> np.ndarray:
    """Pairwise DTW distances between two datasets (or within one)."""
    xa = _as_dataset(a)
    if b is None:
        cost = _pdist_cost(xa, _band(band))
    else:
        xb = _as_dataset(b)
        cost = _cdist_cost(xa, xb, _band(band))
    return cost if squared else np.sqrt(cost)


@dataclass
class SeriesMatrix:
    """Equal-length per-zone trajectories of one or more metrics."""

    zone_ids: tuple[str, ...]
    data: np.ndarray  # (n_zones, n_days, n_metrics)
    metrics: tuple[str, ...]

    def __post_init__(self):
        self.data = _as_dataset(self.data)
        self.zone_ids = tuple(self.zone_ids)
        self.metrics = tuple(self.metrics)
        if len(self.zone_ids) != self.data.shape[0]:
            raise ValueError("zone_ids length does not match data")
        if len(self.metrics) != self.data.shape[2]:
            raise ValueError("metrics length does not match data dimension")

    def select(self, metrics: Sequence[str]) -> "SeriesMatrix":
        idx = [self.metrics.index(m) for m in metrics]
        return SeriesMatrix(self.zone_ids, self.data[:, :, idx], tuple(metrics))

    def __len__(self) -> int:
        return len(self.zone_ids)


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    seed: int
    iterations_run: int
    inertia_history: list[float] = field(default_factory=list)
    zone_ids: tuple[str, ...] = ()
    silhouette: float | None = None

    @property
    def assignments(self) -> dict[str, int]:
        return {z: int(c) for z, c in zip(self.zone_ids, self.labels)}


def dba_barycenter(members, init=None, max_iter: int = 10, tol: float = 1e-6, band: int | None = None):
    """DTW barycenter averaging.

    Returns ``(centroid, total_cost, iterations)``. An iteration that would
    raise the summed cost to the members is rejected, so the returned cost
    never exceeds the cost of ``init``.
    """
    xs = _as_dataset(members)
    centroid = xs[0].copy() if init is None else _as_series(init).copy()
    b = _band(band)
    cost = float(_total_cost(xs, centroid, b))
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        candidate = _dba_update(xs, centroid, b)
        new_cost = float(_total_cost(xs, candidate, b))
        if new_cost > cost:
            break
        improvement = cost - new_cost
        centroid, cost = candidate, new_cost
        if improvement < tol:
            break
    return centroid, cost, iterations


def kmeanspp_init(series, k: int, seed=0, band: int | None = None) -> np.ndarray:
    """Indices of ``k`` seeds chosen by k-means++ under DTW.

    The first seed is uniform; each further seed is drawn with probability
    proportional to the squared DTW distance (the DP cost) to its nearest
    chosen seed. When every remaining series coincides with a seed, the
    draw falls back to uniform over unchosen series.
    """
    xs = _as_dataset(series)
    n = xs.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    b = _band(band)
    chosen = [int(rng.integers(n))]
    closest = _cdist_cost(xs[chosen[0]][None], xs, b)[0]
    while len(chosen) < k:
        mask = np.ones(n, dtype=bool)
        mask[chosen] = False
        weights = np.where(mask, closest, 0.0)
        total = weights.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=weights / total))
        else:
            nxt = int(rng.choice(np.flatnonzero(mask)))
        chosen.append(nxt)
        closest = np.minimum(closest, _cdist_cost(xs[nxt][None], xs, b)[0])
    return np.array(chosen, dtype=np.int64)


def _assign(costs: np.ndarray) -> np.ndarray:
    return np.argmin(costs, axis=1)


def _repair_empty(costs: np.ndarray, labels: np.ndarray, centroids: np.ndarray, xs: np.ndarray, k: int):
    # reseed each empty cluster with the series farthest from its centroid
    labels = labels.copy()
    own = costs[np.arange(len(labels)), labels].copy()
    for c in range(k):
        if np.any(labels == c):
            continue
        sizes = np.bincount(labels, minlength=k)
        movable = sizes[labels] > 1
        if not movable.any():
            raise NumericalError("cannot repair empty cluster: no cluster has spare members")
        cand = np.where(movable, own, -np.inf)
        i = int(np.argmax(cand))
        labels[i] = c
        centroids[c] = xs[i]
        own[i] = 0.0
    return labels, own


def fit_kmeans(
    series,
    k: int,
    seed: int = 0,
    max_iter: int = 50,
    tol: float = 1e-6,
    band: int | None = None,
    dba_max_iter: int = 10,
    dba_tol: float = 1e-6,
    zone_ids: Sequence[str] | None = None,
) -> ClusterModel:
    """DTW k-means with k-means++ seeding and DBA centroids."""
    if isinstance(series, SeriesMatrix):
        zone_ids = series.zone_ids if zone_ids is None else zone_ids
        series = series.data
    xs = _as_dataset(series)
    n = xs.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds number of series ({n})")
    b = _band(band)
    rng = np.random.default_rng(seed)
    centroids = xs[kmeanspp_init(xs, k, rng, band)].copy()
    history: list[float] = []
    labels = np.zeros(n, dtype=np.int64)
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        costs = _cdist_cost(xs, centroids, b)
        labels, own = _repair_empty(costs, _assign(costs), centroids, xs, k)
        assigned = float(own.sum())
        if history and assigned > history[-1] * (1 + 1e-12) + 1e-12:
            raise NumericalError(f"inertia increased in assignment step ({history[-1]} -> {assigned})")
        inertia = 0.0
        for c in range(k):
            members = xs[labels == c]
            centroids[c], cost, _ = dba_barycenter(members, centroids[c], dba_max_iter, dba_tol, band)
            inertia += cost
        if inertia > assigned * (1 + 1e-12) + 1e-12:
            raise NumericalError(f"inertia increased in centroid update ({assigned} -> {inertia})")
        previous = history[-1] if history else math.inf
        history.append(inertia)
        if previous - inertia < tol:
            break
    # final assignment so labels are consistent with the returned centroids
    costs = _cdist_cost(xs, centroids, b)
    labels, own = _repair_empty(costs, _assign(costs), centroids, xs, k)
    final = float(_total_cost_by_label(xs, centroids, labels, b))
    if final > history[-1] * (1 + 1e-12) + 1e-12:
        raise NumericalError("inertia increased in final assignment")
    history.append(final)
    if zone_ids is None:
        zone_ids = tuple(str(i) for i in range(n))
    return ClusterModel(
        k=k,
        centroids=centroids,
        labels=labels,
        inertia=final,
        seed=seed,
        iterations_run=iterations,
        inertia_history=history,
        zone_ids=tuple(zone_ids),
    )


def _total_cost_by_label(xs, centroids, labels, b) -> float:
    return sum(float(_cost(centroids[labels[i]], xs[i], b)) for i in range(xs.shape[0]))


def silhouette(series=None, labels=None, distances: np.ndarray | None = None, band: int | None = None) -> float:
    """Mean silhouette under DTW distance.

    Singletons score 0, and so does any point with ``a = b = 0``.
    Pass a precomputed ``distances`` matrix to skip the pairwise DTW.
    """
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    if distances is None:
        if isinstance(series, SeriesMatrix):
            series = series.data
        distances = cdist_dtw(series, band=band)
    dist = np.asarray(distances, dtype=float)
    n = labels.size
    scores = np.zeros(n)
    for i in range(n):
        same = labels == labels[i]
        n_same = same.sum() - 1
        if n_same == 0:
            continue
        a = dist[i, same].sum() / n_same
        b = min(dist[i, labels == c].mean() for c in uniq if c != labels[i])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


@dataclass
class KSelection:
    k_star: int
    scores: dict[int, float]
    models: dict[int, ClusterModel]

    @property
    def best(self) -> ClusterModel:
        return self.models[self.k_star]


def select_k(series, k_range: Sequence[int] = (2, 3, 4, 5, 6), seed: int = 0, band: int | None = None, **fit_kwargs) -> KSelection:
    """Fit each k and pick the highest silhouette; ties go to the smaller k."""
    if isinstance(series, SeriesMatrix):
        zone_ids = series.zone_ids
        data = series.data
    else:
        zone_ids = None
        data = series
    xs = _as_dataset(data)
    dist = cdist_dtw(xs, band=band)
    scores: dict[int, float] = {}
    models: dict[int, ClusterModel] = {}
    for k in sorted(set(int(k) for k in k_range)):
        model = fit_kmeans(xs, k, seed=seed, band=band, zone_ids=zone_ids, **fit_kwargs)
        model.silhouette = silhouette(labels=model.labels, distances=dist)
        scores[k] = model.silhouette
        models[k] = model
    k_star = max(scores, key=lambda k: (scores[k], -k))
    return KSelection(k_star, scores, models)
