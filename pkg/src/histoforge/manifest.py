"""Dataset manifests: indexed stores of patches and semantic maps.

A manifest is a JSON array of {patch_id, image_path, map_path, wsi_id?,
dataset?, num_classes?, background_label?} with paths resolved relative
to the manifest file. Maps may be FTensor i32 [H, W] files or 8-bit
indexed PNGs whose palette indices are the labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .ftensor import read_ftensor
from .grid import SemanticMap


def _load_map(
    path: Path, num_classes: int | None, background_label: int | None
) -> SemanticMap:
    if path.suffix.lower() == ".png":
        img = Image.open(path)
        if img.mode != "P":
            raise ValueError(f"{path}: label PNGs must be indexed (mode P)")
        labels = np.asarray(img, dtype=np.int32)
    else:
        labels = read_ftensor(path)
        if labels.ndim != 2:
            raise ValueError(f"{path}: semantic map must be 2-D")
    k = num_classes if num_classes is not None else int(labels.max()) + 1
    return SemanticMap(labels=labels, num_classes=k, background_label=background_label)


def load_image(path: str | Path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"), dtype=np.uint8)


@dataclass(frozen=True)
class ManifestEntry:
    patch_id: str
    image_path: Path
    map_path: Path
    wsi_id: str | None = None
    dataset: str | None = None
    num_classes: int | None = None
    background_label: int | None = None


class ManifestStore:
    """Patch+map store backed by a JSON manifest; maps are cached."""

    def __init__(self, manifest_path: str | Path):
        manifest_path = Path(manifest_path)
        base = manifest_path.parent
        raw = json.loads(manifest_path.read_text())
        entries = []
        seen: set[str] = set()
        for obj in raw:
            if obj["patch_id"] in seen:
                raise ValueError(f"duplicate patch_id {obj['patch_id']}")
            seen.add(obj["patch_id"])
            entries.append(
                ManifestEntry(
                    patch_id=obj["patch_id"],
                    image_path=base / obj["image_path"],
                    map_path=base / obj["map_path"],
                    wsi_id=obj.get("wsi_id"),
                    dataset=obj.get("dataset"),
                    num_classes=obj.get("num_classes"),
                    background_label=obj.get("background_label"),
                )
            )
        self.entries = entries
        self._map_cache: dict[int, SemanticMap] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def patch_id(self, index: int) -> str:
        return self.entries[index].patch_id

    def get_map(self, index: int) -> SemanticMap:
        if index not in self._map_cache:
            e = self.entries[index]
            self._map_cache[index] = _load_map(
                e.map_path, e.num_classes, e.background_label
            )
        return self._map_cache[index]

    def get_image(self, index: int) -> np.ndarray:
        return load_image(self.entries[index].image_path)


class InMemoryStore:
    """Store over in-memory maps; handy for tests and synthetic data."""

    def __init__(self, maps: list[SemanticMap], ids: list[str] | None = None):
        self.maps = maps
        self.ids = ids or [f"patch-{i:04d}" for i in range(len(maps))]

    def __len__(self) -> int:
        return len(self.maps)

    def patch_id(self, index: int) -> str:
        return self.ids[index]

    def get_map(self, index: int) -> SemanticMap:
        return self.maps[index]
