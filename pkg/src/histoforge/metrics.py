"""Generative-quality and task metrics.

Fréchet Distance between Gaussian fits of embedding sets, k-NN manifold
precision/recall, segmentation IoU, confusion matrices with equivalence
groups, and aggregation of blinded rating sessions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import SemanticMap
from .study import EvalSession

EIGENVALUE_CLAMP_REL = 1e-6


@dataclass(frozen=True)
class EmbeddingSet:
    data: np.ndarray  # (n, d) float rows
    encoder_tag: str = ""

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError("embedding set must be 2-D (n, d)")
        if not np.isfinite(data).all():
            raise ValueError("embedding set contains NaN/Inf")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class EquivalenceGroups:
    """Disjoint sets of class ids scored as interchangeable."""

    groups: tuple[frozenset[int], ...] = ()

    def __post_init__(self):
        seen: set[int] = set()
        normalized = []
        for g in self.groups:
            g = frozenset(int(i) for i in g)
            if seen & g:
                raise ValueError("equivalence groups must be disjoint")
            seen |= g
            normalized.append(g)
        object.__setattr__(self, "groups", tuple(normalized))

    def canonical(self, class_id: int) -> int:
        for g in self.groups:
            if class_id in g:
                return min(g)
        return class_id


def _psd_sqrt(mat: np.ndarray, clamp: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    floor = -clamp
    if (vals < floor).any():
        raise ValueError(
            f"matrix indefinite beyond tolerance (min eigenvalue {vals.min():.3e})"
        )
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """2-Wasserstein distance between Gaussian fits of the two sets.

    Sample covariances use the n-1 denominator. The trace term is computed
    from the symmetric product sqrt(Sb) Sa sqrt(Sb); eigenvalues slightly
    below zero (within 1e-6 of the largest) are clamped, larger negative
    values are an error.
    """
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    if a.n < 2 or b.n < 2:
        raise ValueError("each set needs n >= 2 for a covariance estimate")
    mu_a, mu_b = a.data.mean(axis=0), b.data.mean(axis=0)
    cov_a = np.cov(a.data, rowvar=False).reshape(a.d, a.d)
    cov_b = np.cov(b.data, rowvar=False).reshape(b.d, b.d)
    scale = max(
        np.abs(np.linalg.eigvalsh(cov_a)).max(),
        np.abs(np.linalg.eigvalsh(cov_b)).max(),
        1.0,
    )
    clamp = EIGENVALUE_CLAMP_REL * scale
    sqrt_b = _psd_sqrt(cov_b, clamp)
    inner = sqrt_b @ cov_a @ sqrt_b
    vals = np.linalg.eigvalsh(inner)
    if (vals < -clamp * scale).any():
        raise ValueError("covariance product indefinite beyond tolerance")
    trace_sqrt = np.sqrt(np.clip(vals, 0.0, None)).sum()
    diff = mu_a - mu_b
    fd = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * trace_sqrt)
    return max(fd, 0.0)


def _pairwise_dist(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d2 = (
        (x * x).sum(axis=1)[:, None]
        - 2.0 * x @ y.T
        + (y * y).sum(axis=1)[None, :]
    )
    return np.sqrt(np.clip(d2, 0.0, None))


def _knn_radii(points: np.ndarray, k: int) -> np.ndarray:
    dist = _pairwise_dist(points, points)
    np.fill_diagonal(dist, np.inf)
    return np.sort(dist, axis=1)[:, k - 1]


def precision_recall_f1(
    real: EmbeddingSet, gen: EmbeddingSet, k: int = 3
) -> tuple[float, float, float]:
    """k-NN manifold precision/recall between real and generated sets.

    A generated point counts for precision if it falls within the k-th-NN
    radius of at least one real point; recall is the symmetric statement.
    """
    if real.d != gen.d:
        raise ValueError("dimension mismatch")
    if real.n <= k or gen.n <= k:
        raise ValueError(f"both sets need n > k={k}")
    real_radii = _knn_radii(real.data, k)
    gen_radii = _knn_radii(gen.data, k)
    d_gr = _pairwise_dist(gen.data, real.data)
    precision = float((d_gr <= real_radii[None, :]).any(axis=1).mean())
    recall = float((d_gr.T <= gen_radii[None, :]).any(axis=1).mean())
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def iou(pred: SemanticMap, gt: SemanticMap, class_id: int) -> float:
    if pred.labels.shape != gt.labels.shape:
        raise ValueError("maps must have congruent dims")
    p = pred.labels == class_id
    g = gt.labels == class_id
    union = np.count_nonzero(p | g)
    if union == 0:
        return float("nan")  # class absent from both maps
    return np.count_nonzero(p & g) / union


def mean_iou(pred: SemanticMap, gt: SemanticMap) -> float:
    """Mean IoU over classes present in at least one of the maps."""
    if pred.labels.shape != gt.labels.shape:
        raise ValueError("maps must have congruent dims")
    num_classes = max(pred.num_classes, gt.num_classes)
    scores = [iou(pred, gt, c) for c in range(num_classes)]
    scores = [s for s in scores if not np.isnan(s)]
    return float(np.mean(scores)) if scores else float("nan")


def confusion_with_equivalence(
    preds: np.ndarray,
    truth: np.ndarray,
    groups: EquivalenceGroups = EquivalenceGroups(),
) -> tuple[dict[int, dict[int, int]], float]:
    """Confusion matrix over collapsed class ids plus accuracy.

    A prediction is correct when it equals the truth or shares an
    equivalence group with it; group members collapse to one id.
    """
    preds = np.asarray(preds)
    truth = np.asarray(truth)
    if preds.shape != truth.shape:
        raise ValueError("preds and truth must have equal length")
    matrix: dict[int, dict[int, int]] = {}
    correct = 0
    for p, t in zip(preds.tolist(), truth.tolist()):
        cp, ct = groups.canonical(p), groups.canonical(t)
        matrix.setdefault(ct, {}).setdefault(cp, 0)
        matrix[ct][cp] += 1
        if cp == ct:
            correct += 1
    accuracy = correct / len(preds) if len(preds) else 0.0
    return matrix, accuracy


LIKERT_CRITERIA = ("quality", "structure", "nuclear")


def likert_aggregate(sessions: list[EvalSession]) -> dict:
    """Per (dataset, criterion, origin): mean, sample SD and n.

    A single rating has undefined SD; it is reported as 0 with n=1 so the
    flag is visible in the output.
    """
    strata: dict[tuple[str, str, str], list[int]] = {}
    for session in sessions:
        for r in session.ratings:
            for crit in LIKERT_CRITERIA:
                key = (r.dataset, crit, r.origin)
                strata.setdefault(key, []).append(getattr(r, crit))
    out: dict = {}
    for (dataset, crit, origin), scores in sorted(strata.items()):
        arr = np.asarray(scores, dtype=np.float64)
        sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        out.setdefault(dataset, {}).setdefault(crit, {})[origin] = {
            "mean": float(arr.mean()),
            "sd": sd,
            "n": len(arr),
        }
    return out


def discrimination_accuracy(sessions: list[EvalSession]) -> dict:
    """Per dataset: 2x2 real/synthetic confusion and accuracy.

    Rows are the true origin, columns the rater's judgment. Items without
    a judgment are excluded and counted separately.
    """
    per_dataset: dict[str, dict] = {}
    for session in sessions:
        for r in session.ratings:
            entry = per_dataset.setdefault(
                r.dataset,
                {
                    "confusion": {
                        "real": {"real": 0, "synthetic": 0},
                        "synthetic": {"real": 0, "synthetic": 0},
                    },
                    "excluded": 0,
                },
            )
            if r.judged_real is None:
                entry["excluded"] += 1
                continue
            judged = "real" if r.judged_real else "synthetic"
            entry["confusion"][r.origin][judged] += 1
    for entry in per_dataset.values():
        conf = entry["confusion"]
        total = sum(sum(row.values()) for row in conf.values())
        trace = conf["real"]["real"] + conf["synthetic"]["synthetic"]
        entry["total"] = total
        entry["accuracy"] = trace / total if total else 0.0
    return per_dataset
