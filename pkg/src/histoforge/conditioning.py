"""Dual-conditioning tensor construction: one-hot masks + sparse RGB crops.

For each tissue class present in a patch, a random square crop is taken
from that class's own region, optionally augmented, and pasted into an
otherwise-zero plane. The full tensor is the K semantic planes followed
by K three-channel crop planes (4K channels total), with a pooled
latent-space form for denoiser input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ftensor import read_ftensor, write_ftensor
from .grid import SemanticMap, one_hot
from .sampling import SamplerConfig

AUGMENT_OPS = ("identity", "rot90", "rot180", "rot270", "hflip", "vflip")


@dataclass(frozen=True)
class CropRecord:
    class_id: int
    row: int
    col: int
    size: int
    source_patch_id: str | None = None
    augment_op: str = "identity"


@dataclass(frozen=True)
class ConditioningTensor:
    """K binary semantic planes followed by K RGB crop planes.

    Stored channel-first (4K, H, W) float32; RGB values scaled to [0, 1].
    """

    planes: np.ndarray
    num_classes: int
    crop_records: dict[int, CropRecord]

    def __post_init__(self):
        if self.planes.shape[0] != 4 * self.num_classes:
            raise ValueError("plane count must equal 4K")

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]

    @property
    def channels(self) -> int:
        return self.planes.shape[0]

    def semantic_planes(self) -> np.ndarray:
        return self.planes[: self.num_classes]

    def crop_planes(self, class_id: int) -> np.ndarray:
        k = self.num_classes
        return self.planes[k + 3 * class_id : k + 3 * (class_id + 1)]

    def save(self, path: str | Path) -> None:
        path = Path(path)
        write_ftensor(path, self.planes.astype(np.float32))
        sidecar = {
            "num_classes": self.num_classes,
            "crop_records": {
                str(k): vars(r) for k, r in self.crop_records.items()
            },
        }
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "ConditioningTensor":
        path = Path(path)
        planes = read_ftensor(path)
        sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        records = {
            int(k): CropRecord(**v) for k, v in sidecar["crop_records"].items()
        }
        return cls(planes=planes, num_classes=sidecar["num_classes"], crop_records=records)


@dataclass(frozen=True)
class LatentCondition:
    planes: np.ndarray  # (4K, H/f, W/f) float32
    factor: int

    @property
    def channels(self) -> int:
        return self.planes.shape[0]


def extract_crop(
    patch: np.ndarray, mask: np.ndarray, d: int, seed: int
) -> tuple[np.ndarray, tuple[int, int]]:
    """Square crop whose center pixel lies in the mask, clamped in bounds.

    The center is drawn uniformly among mask-positive pixels; the square's
    origin is center - d//2 clamped into the image. Returns (crop, origin).
    """
    patch = np.asarray(patch)
    h, w = patch.shape[:2]
    if d > min(h, w):
        raise ValueError(f"crop size {d} exceeds patch dims {h}x{w}")
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        raise ValueError("mask has no positive pixels")
    rng = np.random.default_rng(seed)
    pick = int(rng.integers(len(ys)))
    center = (int(ys[pick]), int(xs[pick]))
    row = min(max(center[0] - d // 2, 0), h - d)
    col = min(max(center[1] - d // 2, 0), w - d)
    return patch[row : row + d, col : col + d].copy(), (row, col)


def apply_augment(crop: np.ndarray, op: str) -> np.ndarray:
    if op == "identity":
        return crop.copy()
    if op == "rot90":
        return np.rot90(crop, 1).copy()
    if op == "rot180":
        return np.rot90(crop, 2).copy()
    if op == "rot270":
        return np.rot90(crop, 3).copy()
    if op == "hflip":
        return crop[:, ::-1].copy()
    if op == "vflip":
        return crop[::-1, :].copy()
    raise ValueError(f"unknown augment op {op!r}")


def invert_augment(crop: np.ndarray, op: str) -> np.ndarray:
    inverse = {"rot90": "rot270", "rot270": "rot90"}.get(op, op)
    return apply_augment(crop, inverse)


def augment_crop(
    crop: np.ndarray, seed: int, brightness_jitter: float = 0.0
) -> tuple[np.ndarray, str]:
    """Seeded dihedral augmentation with optional uniform brightness jitter.

    Jitter scales all channels by a factor in [1-j, 1+j], clamped to
    [0, 255]; defaults to 0 so augmented pixels stay exactly invertible.
    """
    rng = np.random.default_rng(seed)
    op = AUGMENT_OPS[int(rng.integers(len(AUGMENT_OPS)))]
    out = apply_augment(crop, op)
    if brightness_jitter > 0:
        scale = 1.0 + rng.uniform(-brightness_jitter, brightness_jitter)
        out = np.clip(out.astype(np.float64) * scale, 0, 255).astype(crop.dtype)
    return out, op


def place_crop(
    height: int, width: int, crop: np.ndarray, origin: tuple[int, int]
) -> np.ndarray:
    """Paste a square crop into an otherwise-zero (H, W, 3) plane."""
    row, col = origin
    d = crop.shape[0]
    if row < 0 or col < 0 or row + d > height or col + d > width:
        raise ValueError(f"crop at {origin} size {d} out of {height}x{width} bounds")
    plane = np.zeros((height, width, 3), dtype=crop.dtype)
    plane[row : row + d, col : col + d] = crop
    return plane


def build_condition(
    patch: np.ndarray,
    semantic_map: SemanticMap,
    cfg: SamplerConfig,
    seed: int,
    patch_id: str | None = None,
    brightness_jitter: float = 0.0,
) -> ConditioningTensor:
    """Assemble the 4K-channel dual-conditioning tensor for one patch.

    The per-class RNG is split deterministically from (seed, class id),
    so per-class construction order cannot change the result.
    """
    patch = np.asarray(patch)
    h, w = patch.shape[:2]
    if (h, w) != (semantic_map.height, semantic_map.width):
        raise ValueError("patch and map dims must match")
    k = semantic_map.num_classes
    masks = one_hot(semantic_map)
    planes = np.zeros((4 * k, h, w), dtype=np.float32)
    planes[:k] = masks
    records: dict[int, CropRecord] = {}
    for cls in range(k):
        if not masks[cls].any():
            continue
        class_rng = np.random.default_rng(np.random.SeedSequence([seed, cls]))
        d_hi = min(cfg.d_max, h, w)
        d_lo = min(cfg.d_min, d_hi)
        d = int(class_rng.integers(d_lo, d_hi + 1))
        crop, origin = extract_crop(
            patch, masks[cls], d, seed=int(class_rng.integers(2**31))
        )
        crop, op = augment_crop(
            crop, seed=int(class_rng.integers(2**31)), brightness_jitter=brightness_jitter
        )
        plane = place_crop(h, w, crop, origin)
        planes[k + 3 * cls : k + 3 * (cls + 1)] = (
            plane.transpose(2, 0, 1).astype(np.float32) / 255.0
        )
        records[cls] = CropRecord(
            class_id=cls,
            row=origin[0],
            col=origin[1],
            size=d,
            source_patch_id=patch_id,
            augment_op=op,
        )
    return ConditioningTensor(planes=planes, num_classes=k, crop_records=records)


def downsample_condition(cond: ConditioningTensor, factor: int = 4) -> LatentCondition:
    """Per-channel mean pooling stand-in for the latent encoder."""
    h, w = cond.height, cond.width
    if h % factor or w % factor:
        raise ValueError(f"factor {factor} must divide dims {h}x{w}")
    c = cond.channels
    pooled = (
        cond.planes.reshape(c, h // factor, factor, w // factor, factor)
        .mean(axis=(2, 4))
        .astype(np.float32)
    )
    return LatentCondition(planes=pooled, factor=factor)


def concat_latent(z_t: np.ndarray, cond: LatentCondition) -> np.ndarray:
    """Channel concatenation of the noisy latent and the latent condition."""
    z_t = np.asarray(z_t)
    if z_t.shape[1:] != cond.planes.shape[1:]:
        raise ValueError(
            f"spatial mismatch: z {z_t.shape[1:]} vs cond {cond.planes.shape[1:]}"
        )
    return np.concatenate([z_t, cond.planes], axis=0)
