"""Scalable tissue-phenotype discovery over precomputed embeddings.

Three phases: diversity-aware per-slide subsampling, mini-batch k-means
with k-means++ seeding, chunked nearest-centroid assignment. A hierarchy
of coarser cluster scales is derived by agglomerative centroid merging.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import SemanticMap

DEFAULT_SCALE_KS = (5, 10, 20, 50, 100)


@dataclass(frozen=True)
class FeatureMatrix:
    """n x d embedding rows, optionally with patch-grid positions."""

    data: np.ndarray  # (n, d) float32
    positions: np.ndarray | None = None  # (n, 2) int32 (row, col)
    wsi_ids: list[str] | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("feature matrix must be (n>=1, d>=1)")
        if not np.isfinite(data).all():
            raise ValueError("feature matrix contains NaN/Inf")
        object.__setattr__(self, "data", np.ascontiguousarray(data))
        if self.positions is not None:
            pos = np.asarray(self.positions, dtype=np.int32)
            if pos.shape != (data.shape[0], 2):
                raise ValueError("positions must be (n, 2)")
            object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ClusterModel:
    """Fitted centroids plus per-cluster assignment statistics."""

    centroids: np.ndarray  # (K, d) float32
    per_cluster_count: np.ndarray  # (K,) int64
    per_cluster_variance: np.ndarray  # (K,) mean squared distance to centroid
    seed: int
    snapshots: tuple = ()  # optional centroid snapshots captured during fit

    def __post_init__(self):
        if not np.isfinite(self.centroids).all():
            raise ValueError("centroids must be finite")
        if (self.per_cluster_variance < 0).any():
            raise ValueError("variance must be >= 0")

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def d(self) -> int:
        return self.centroids.shape[1]


@dataclass(frozen=True)
class ScaleHierarchy:
    """Nested relabelings of base clusters at progressively coarser scales."""

    base_k: int
    levels: dict[int, np.ndarray]  # k -> (base_k,) merged-id per base cluster

    def relabel(self, labels: np.ndarray, k: int) -> np.ndarray:
        return self.levels[k][labels]

    def to_json_dict(self) -> dict:
        return {
            "base_K": self.base_k,
            "levels": {str(k): v.tolist() for k, v in self.levels.items()},
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ScaleHierarchy":
        return cls(
            base_k=int(obj["base_K"]),
            levels={
                int(k): np.asarray(v, dtype=np.int64)
                for k, v in obj["levels"].items()
            },
        )


def _sq_dists(rows: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (n, K) squared L2 via expansion; rows/centroids float32
    return (
        (rows * rows).sum(axis=1)[:, None]
        - 2.0 * rows @ centroids.T
        + (centroids * centroids).sum(axis=1)[None, :]
    )


def _kmeans_pp_init(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = data.shape[0]
    centroids = np.empty((k, data.shape[1]), dtype=np.float64)
    first = rng.integers(n)
    centroids[0] = data[first]
    closest = ((data - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total <= 0:
            # all remaining points coincide with chosen centers
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=closest / total)
        centroids[i] = data[idx]
        closest = np.minimum(closest, ((data - centroids[i]) ** 2).sum(axis=1))
    return centroids


def full_batch_inertia(data: np.ndarray, centroids: np.ndarray) -> float:
    return float(
        _sq_dists(data.astype(np.float64), centroids.astype(np.float64))
        .min(axis=1)
        .sum()
    )


def fit_kmeans(
    features: FeatureMatrix,
    k: int,
    iters: int = 100,
    batch_size: int = 1024,
    seed: int = 0,
    snapshot_every: int = 0,
) -> ClusterModel:
    """Mini-batch k-means with k-means++ initialization.

    When batch_size >= n each iteration is an exact Lloyd step (means
    recomputed from full assignments), which makes full-batch inertia
    non-increasing. Empty clusters are re-seeded to the point farthest
    from its current centroid. Deterministic for a fixed seed.

    snapshot_every > 0 records centroid snapshots every that many
    iterations (plus the final state) for convergence auditing.
    """
    data = features.data.astype(np.float64)
    n = data.shape[0]
    if k < 1 or n < k:
        raise ValueError(f"need n >= K (n={n}, K={k})")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(data, k, rng)
    counts = np.zeros(k, dtype=np.int64)  # mini-batch per-center learning rates
    snapshots: list[np.ndarray] = []
    full_batch = batch_size >= n

    for it in range(iters):
        if snapshot_every > 0 and it % snapshot_every == 0:
            snapshots.append(centroids.astype(np.float32).copy())
        if full_batch:
            batch = data
        else:
            batch = data[rng.choice(n, size=batch_size, replace=False)]
        labels = _sq_dists(batch, centroids).argmin(axis=1)
        if full_batch:
            new_centroids = centroids.copy()
            for j in range(k):
                members = batch[labels == j]
                if len(members):
                    new_centroids[j] = members.mean(axis=0)
            centroids = new_centroids
            # re-seed empties to the globally worst-fit point
            empty = np.flatnonzero(np.bincount(labels, minlength=k) == 0)
            if len(empty):
                dist = _sq_dists(data, centroids).min(axis=1)
                for j in empty:
                    centroids[j] = data[dist.argmax()]
                    dist = np.minimum(dist, ((data - centroids[j]) ** 2).sum(axis=1))
        else:
            for j, x in zip(labels, batch):
                counts[j] += 1
                centroids[j] += (x - centroids[j]) / counts[j]

    centroids32 = centroids.astype(np.float32)
    if snapshot_every > 0:
        snapshots.append(centroids32.copy())
    final_labels = _sq_dists(data, centroids).argmin(axis=1)
    per_count = np.bincount(final_labels, minlength=k).astype(np.int64)
    per_var = np.zeros(k, dtype=np.float64)
    sq = ((data - centroids[final_labels]) ** 2).sum(axis=1)
    for j in range(k):
        if per_count[j]:
            per_var[j] = sq[final_labels == j].mean()
    return ClusterModel(
        centroids=centroids32,
        per_cluster_count=per_count,
        per_cluster_variance=per_var,
        seed=seed,
        snapshots=tuple(snapshots),
    )


def assign_nearest(
    features: FeatureMatrix, model: ClusterModel, chunk: int = 1000
) -> np.ndarray:
    """Nearest-centroid labels, computed in chunks; ties go to the lowest id."""
    if features.d != model.d:
        raise ValueError(f"feature dim {features.d} != model dim {model.d}")
    if chunk < 1:
        raise ValueError("chunk must be >= 1")
    data = features.data.astype(np.float64)
    centroids = model.centroids.astype(np.float64)
    out = np.empty(features.n, dtype=np.int64)
    for start in range(0, features.n, chunk):
        block = data[start : start + chunk]
        # exact squared distances so chunking cannot change argmin ties
        d2 = ((block[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        out[start : start + chunk] = d2.argmin(axis=1)
    return out


def subcluster_high_variance(
    features: FeatureMatrix,
    labels: np.ndarray,
    model: ClusterModel,
    z_threshold: float = 1.0,
    seed: int = 0,
) -> tuple[ClusterModel, np.ndarray, dict[int, int]]:
    """Split clusters whose variance is an outlier (> mean + z*std).

    Each selected cluster is re-clustered with K=2 on its members; one half
    keeps the original id, the other gets a new id appended after the
    existing ones. Clusters with < 2 members are skipped. Returns the new
    model, new labels and the {original_id: appended_id} split map.
    """
    labels = np.asarray(labels)
    if len(labels) != features.n:
        raise ValueError("labels length must match feature count")
    variances = model.per_cluster_variance
    if np.isinf(z_threshold):
        return model, labels.copy(), {}
    cutoff = variances.mean() + z_threshold * variances.std()
    to_split = [j for j in range(model.k) if variances[j] > cutoff]

    new_labels = labels.copy()
    centroid_list = [model.centroids[j].copy() for j in range(model.k)]
    split_map: dict[int, int] = {}
    next_id = model.k
    for j in to_split:
        member_idx = np.flatnonzero(labels == j)
        if len(member_idx) < 2:
            continue  # nothing to split; recorded by absence from split_map
        sub = fit_kmeans(
            FeatureMatrix(features.data[member_idx]),
            k=2,
            iters=50,
            batch_size=len(member_idx),
            seed=seed + j,
        )
        sub_labels = assign_nearest(FeatureMatrix(features.data[member_idx]), sub)
        centroid_list[j] = sub.centroids[0]
        centroid_list.append(sub.centroids[1])
        new_labels[member_idx[sub_labels == 1]] = next_id
        split_map[j] = next_id
        next_id += 1

    new_k = len(centroid_list)
    centroids = np.stack(centroid_list).astype(np.float32)
    counts = np.bincount(new_labels, minlength=new_k).astype(np.int64)
    per_var = np.zeros(new_k, dtype=np.float64)
    data = features.data.astype(np.float64)
    sq = ((data - centroids[new_labels].astype(np.float64)) ** 2).sum(axis=1)
    for j in range(new_k):
        if counts[j]:
            per_var[j] = sq[new_labels == j].mean()
    new_model = ClusterModel(
        centroids=centroids,
        per_cluster_count=counts,
        per_cluster_variance=per_var,
        seed=model.seed,
    )
    return new_model, new_labels, split_map


def merge_to_scales(
    model: ClusterModel, ks: list[int] | tuple[int, ...] = DEFAULT_SCALE_KS
) -> ScaleHierarchy:
    """Count-weighted average-linkage merging of centroids down to each k.

    Levels are nested: the merge sequence is a single agglomeration and
    every requested k is a snapshot along it. Merged ids at each level are
    assigned by the smallest base-cluster id each group contains.
    """
    ks = sorted(int(k) for k in ks)
    if not ks:
        raise ValueError("ks must be non-empty")
    if ks[-1] > model.k:
        raise ValueError(f"cannot merge to k={ks[-1]} > base K={model.k}")
    wanted = set(ks)

    # groups: list of (member base ids, weighted centroid, total count)
    groups: list[tuple[list[int], np.ndarray, float]] = [
        ([j], model.centroids[j].astype(np.float64), max(1.0, float(model.per_cluster_count[j])))
        for j in range(model.k)
    ]
    levels: dict[int, np.ndarray] = {}

    def snapshot() -> np.ndarray:
        order = sorted(range(len(groups)), key=lambda g: min(groups[g][0]))
        relabel = np.empty(model.k, dtype=np.int64)
        for new_id, g in enumerate(order):
            for base in groups[g][0]:
                relabel[base] = new_id
        return relabel

    if model.k in wanted:
        levels[model.k] = snapshot()
    while len(groups) > min(ks):
        best = None
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                d = float(((groups[a][1] - groups[b][1]) ** 2).sum())
                if best is None or d < best[0]:
                    best = (d, a, b)
        _, a, b = best
        members = groups[a][0] + groups[b][0]
        wa, wb = groups[a][2], groups[b][2]
        centroid = (groups[a][1] * wa + groups[b][1] * wb) / (wa + wb)
        merged = (members, centroid, wa + wb)
        groups = [g for i, g in enumerate(groups) if i not in (a, b)] + [merged]
        if len(groups) in wanted:
            levels[len(groups)] = snapshot()
    return ScaleHierarchy(base_k=model.k, levels=levels)


def diversity_sample(
    features: FeatureMatrix,
    n_select: int,
    w_spatial: float = 0.3,
    w_feature: float = 0.7,
    seed: int = 0,
) -> np.ndarray:
    """Greedy farthest-point selection under a blended distance.

    D = w_spatial * d_spatial/max(d_spatial) + w_feature * d_feat/max(d_feat),
    both terms squared L2 and max-normalized per call. The first pick is
    uniform under the seed; subsequent picks maximize the min blended
    distance to the selected set.
    """
    if features.positions is None:
        raise ValueError("diversity_sample requires positions")
    if n_select > features.n:
        raise ValueError(f"cannot select {n_select} of {features.n} points")
    if abs(w_spatial + w_feature - 1.0) > 1e-9:
        raise ValueError("w_spatial + w_feature must equal 1")
    if n_select == features.n:
        return np.arange(features.n)

    feat = features.data.astype(np.float64)
    pos = features.positions.astype(np.float64)

    def pairwise_sq(x):
        return _sq_dists(x, x)

    d_feat = pairwise_sq(feat)
    d_spatial = pairwise_sq(pos)
    max_f = d_feat.max()
    max_s = d_spatial.max()
    blended = np.zeros_like(d_feat)
    if max_s > 0:
        blended += w_spatial * d_spatial / max_s
    if max_f > 0:
        blended += w_feature * d_feat / max_f

    rng = np.random.default_rng(seed)
    first = int(rng.integers(features.n))
    selected = [first]
    min_dist = blended[first].copy()
    for _ in range(n_select - 1):
        nxt = int(min_dist.argmax())
        selected.append(nxt)
        min_dist = np.minimum(min_dist, blended[nxt])
    return np.asarray(selected)


def build_slide_map(patch_grid_dims: tuple[int, int], labels: np.ndarray) -> SemanticMap:
    """Assemble per-patch cluster labels into a slide-level SemanticMap."""
    rows, cols = patch_grid_dims
    labels = np.asarray(labels)
    if labels.size != rows * cols:
        raise ValueError(f"labels length {labels.size} != rows*cols {rows * cols}")
    grid = labels.reshape(rows, cols).astype(np.int32)
    return SemanticMap(labels=grid, num_classes=int(grid.max()) + 1)
