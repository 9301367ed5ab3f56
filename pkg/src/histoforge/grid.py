"""Semantic label grids: one-hot masks, tissue ratios and entropy maps.

Maps are stored densely as integer label grids; the K one-hot planes are
materialized on demand. All entropies are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SemanticMap:
    """Row-major grid of class ids in [0, num_classes)."""

    labels: np.ndarray  # (H, W) integer grid
    num_classes: int
    background_label: int | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.size == 0:
            raise ValueError("labels must be a non-empty 2-D grid")
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise ValueError("label values must lie in [0, num_classes)")
        if self.background_label is not None and not (
            0 <= self.background_label < self.num_classes
        ):
            raise ValueError("background_label must be a valid class id")
        object.__setattr__(self, "labels", np.ascontiguousarray(labels.astype(np.int32)))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def present_classes(self, exclude_background: bool = False) -> set[int]:
        classes = set(int(c) for c in np.unique(self.labels))
        if exclude_background and self.background_label is not None:
            classes.discard(self.background_label)
        return classes


@dataclass(frozen=True)
class RegionSpec:
    """A square region inside a parent map."""

    row: int
    col: int
    size: int

    def validate_inside(self, height: int, width: int) -> None:
        if self.size <= 0:
            raise ValueError("region size must be positive")
        if self.row < 0 or self.col < 0:
            raise ValueError("region origin must be non-negative")
        if self.row + self.size > height or self.col + self.size > width:
            raise ValueError("region extends beyond the parent map")


@dataclass(frozen=True)
class EntropyMap:
    """Sliding-window entropy grid; values in [0, ln K] nats."""

    region_size: int
    stride: int
    values: np.ndarray  # (rows, cols) float grid

    def mean(self) -> float:
        return float(self.values.mean())


def one_hot(semantic_map: SemanticMap) -> np.ndarray:
    """K binary planes (K, H, W); plane k is the indicator of label k."""
    labels = semantic_map.labels
    planes = np.zeros((semantic_map.num_classes,) + labels.shape, dtype=np.uint8)
    for k in range(semantic_map.num_classes):
        planes[k] = labels == k
    return planes


def tissue_ratio(semantic_map: SemanticMap) -> float:
    """Fraction of pixels whose label differs from the background label."""
    if semantic_map.background_label is None:
        raise ValueError("tissue_ratio requires background_label to be set")
    non_bg = np.count_nonzero(semantic_map.labels != semantic_map.background_label)
    return non_bg / semantic_map.labels.size


def background_ratio(semantic_map: SemanticMap) -> float:
    return 1.0 - tissue_ratio(semantic_map)


def _histogram_entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def region_entropy(semantic_map: SemanticMap, region: RegionSpec) -> float:
    """Shannon entropy (nats) of the label histogram inside the region.

    Background, when present, counts as its own class in the histogram.
    """
    region.validate_inside(semantic_map.height, semantic_map.width)
    window = semantic_map.labels[
        region.row : region.row + region.size,
        region.col : region.col + region.size,
    ]
    counts = np.bincount(window.ravel(), minlength=semantic_map.num_classes)
    return _histogram_entropy(counts)


def entropy_map(
    semantic_map: SemanticMap, region_size: int = 64, stride: int = 32
) -> EntropyMap:
    """Sliding-window region_entropy over the whole map."""
    h, w = semantic_map.height, semantic_map.width
    if region_size > min(h, w):
        raise ValueError("region_size larger than the map")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    rows = (h - region_size) // stride + 1
    cols = (w - region_size) // stride + 1
    values = np.empty((rows, cols), dtype=np.float32)
    for i in range(rows):
        for j in range(cols):
            values[i, j] = region_entropy(
                semantic_map, RegionSpec(i * stride, j * stride, region_size)
            )
    return EntropyMap(region_size=region_size, stride=stride, values=values)


def is_tissue(
    patch: np.ndarray,
    luminance_threshold: float = 0.10,
    luminance_cutoff: float = 0.9,
) -> bool:
    """Tissue detection: enough pixels darker than the luminance cutoff.

    True iff the fraction of pixels with luminance < luminance_cutoff*255
    exceeds luminance_threshold. Patch is 8-bit RGB (H, W, 3).
    """
    patch = np.asarray(patch)
    if patch.size == 0:
        raise ValueError("empty image")
    if patch.ndim != 3 or patch.shape[2] != 3:
        raise ValueError("patch must be (H, W, 3) RGB")
    # ITU-R BT.601 luma weights
    luma = patch @ np.array([0.299, 0.587, 0.114])
    dark_fraction = np.count_nonzero(luma < luminance_cutoff * 255) / luma.size
    return dark_fraction > luminance_threshold
