"""Heterogeneous patch selection and the adaptive training schedules.

The sampler draws random patches, keeps those with a balanced tissue
ratio, enough regional entropy, at least two tissue classes and adequate
per-class coverage, and returns the highest-entropy candidate. When no
candidate survives, constraints are relaxed in bounded rounds; a final
exhaustive scan proves absence before erroring.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Protocol

import numpy as np

from .clustering import ClusterModel
from .errors import NoHeterogeneousPatchError
from .grid import SemanticMap, entropy_map, tissue_ratio

RELAXATION_ROUNDS = 5
RATIO_WIDEN_PER_ROUND = 0.05


@dataclass(frozen=True)
class SamplerConfig:
    r_min: float = 0.2
    r_max: float = 0.8
    d_min: int = 50
    d_max: int = 200
    tau_entropy: float = 0.3
    tau_coverage: float = 0.05
    max_tries: int = 100
    relax_factor: float = 0.5
    seed: int = 0
    min_classes: int = 2
    entropy_region_size: int = 64
    entropy_stride: int = 32

    def __post_init__(self):
        if not (0 <= self.r_min < self.r_max <= 1):
            raise ValueError("require 0 <= r_min < r_max <= 1")
        if not (0 < self.d_min <= self.d_max):
            raise ValueError("require 0 < d_min <= d_max")
        if self.max_tries < 1:
            raise ValueError("max_tries must be >= 1")
        if not (0 < self.relax_factor < 1):
            raise ValueError("relax_factor must be in (0, 1)")


@dataclass(frozen=True)
class Candidate:
    patch_id: str
    index: int
    mean_entropy: float
    tissue_ratio: float
    present_classes: frozenset[int]

    def __post_init__(self):
        if self.mean_entropy < 0:
            raise ValueError("mean_entropy must be >= 0")
        if not (0 <= self.tissue_ratio <= 1):
            raise ValueError("tissue_ratio must be in [0, 1]")


class PatchMapStore(Protocol):
    """Indexed store of patches with their semantic maps."""

    def __len__(self) -> int: ...

    def patch_id(self, index: int) -> str: ...

    def get_map(self, index: int) -> SemanticMap: ...


def guarantee_min_classes(semantic_map: SemanticMap, min_classes: int = 2) -> bool:
    """True iff the map shows at least min_classes non-background classes."""
    return len(semantic_map.present_classes(exclude_background=True)) >= min_classes


def _class_coverages(semantic_map: SemanticMap) -> dict[int, float]:
    counts = np.bincount(
        semantic_map.labels.ravel(), minlength=semantic_map.num_classes
    )
    total = semantic_map.labels.size
    return {k: counts[k] / total for k in range(semantic_map.num_classes) if counts[k]}


def _evaluate(store: PatchMapStore, index: int, cfg: SamplerConfig) -> Candidate:
    smap = store.get_map(index)
    ratio = (
        tissue_ratio(smap) if smap.background_label is not None else 1.0
    )
    region = min(cfg.entropy_region_size, smap.height, smap.width)
    stride = min(cfg.entropy_stride, region)
    emap = entropy_map(smap, region_size=region, stride=stride)
    return Candidate(
        patch_id=store.patch_id(index),
        index=index,
        mean_entropy=emap.mean(),
        tissue_ratio=ratio,
        present_classes=frozenset(smap.present_classes(exclude_background=True)),
    )


def _passes(
    cand: Candidate,
    smap: SemanticMap,
    cfg: SamplerConfig,
    r_min: float,
    r_max: float,
    tau: float,
) -> bool:
    if not (r_min <= cand.tissue_ratio <= r_max):
        return False
    if cand.mean_entropy <= tau:
        return False
    if len(cand.present_classes) < cfg.min_classes:
        return False
    bg = smap.background_label
    for cls, cov in _class_coverages(smap).items():
        if cls == bg:
            continue
        if cov < cfg.tau_coverage:
            return False
    return True


def sample_heterogeneous(store: PatchMapStore, cfg: SamplerConfig) -> Candidate:
    """Draw the best heterogeneous patch under cfg, relaxing if needed.

    Per round: up to cfg.max_tries uniform draws, filtered and ranked by
    mean entropy. Between rounds tau_entropy is multiplied by
    relax_factor and the ratio bounds widen by 0.05 per side (clamped to
    [0, 1]). After RELAXATION_ROUNDS unsuccessful rounds the whole store
    is scanned once at the final thresholds; only then does the sampler
    raise NoHeterogeneousPatchError.
    """
    if len(store) == 0:
        raise ValueError("dataset is empty")
    rng = np.random.default_rng(cfg.seed)
    r_min, r_max, tau = cfg.r_min, cfg.r_max, cfg.tau_entropy
    cache: dict[int, Candidate] = {}

    def eval_cached(i: int) -> Candidate:
        if i not in cache:
            cache[i] = _evaluate(store, i, cfg)
        return cache[i]

    for round_idx in range(RELAXATION_ROUNDS + 1):
        best: Candidate | None = None
        for _ in range(cfg.max_tries):
            i = int(rng.integers(len(store)))
            cand = eval_cached(i)
            if _passes(cand, store.get_map(i), cfg, r_min, r_max, tau):
                if best is None or cand.mean_entropy > best.mean_entropy:
                    best = cand
        if best is not None:
            return best
        if round_idx < RELAXATION_ROUNDS:
            tau *= cfg.relax_factor
            r_min = max(0.0, r_min - RATIO_WIDEN_PER_ROUND)
            r_max = min(1.0, r_max + RATIO_WIDEN_PER_ROUND)

    # exhaustive scan at the most relaxed thresholds proves absence
    best = None
    for i in range(len(store)):
        cand = eval_cached(i)
        if _passes(cand, store.get_map(i), cfg, r_min, r_max, tau):
            if best is None or cand.mean_entropy > best.mean_entropy:
                best = cand
    if best is not None:
        return best
    raise NoHeterogeneousPatchError(
        tau_entropy=tau, r_min=r_min, r_max=r_max, rounds=RELAXATION_ROUNDS
    )


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def adaptive_crop_size(
    d_base: int,
    alpha: float,
    complexity: float,
    d_min: int = 50,
    d_max: int = 200,
) -> int:
    """Crop size grows with tissue complexity, clamped to [d_min, d_max]."""
    if d_base <= 0:
        raise ValueError("d_base must be positive")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    size = _round_half_up(d_base * (1.0 + alpha * complexity))
    return max(d_min, min(d_max, size))


def complexity_score(model: ClusterModel, cluster_id: int) -> float:
    """Per-cluster variance normalized by the maximum variance."""
    if not (0 <= cluster_id < model.k):
        raise ValueError(f"unknown cluster id {cluster_id}")
    max_var = model.per_cluster_variance.max()
    if max_var == 0:
        return 0.0
    return float(model.per_cluster_variance[cluster_id] / max_var)


def curriculum_k(t: int, k_min: int, k_max: int, t_warmup: int) -> int:
    """Cluster-granularity warmup: k_min at t=0, k_max from t_warmup on."""
    if k_min > k_max:
        raise ValueError("k_min must be <= k_max")
    if t_warmup < 1:
        raise ValueError("t_warmup must be >= 1")
    frac = min(1.0, t / t_warmup)
    return _round_half_up(k_min + (k_max - k_min) * frac)
