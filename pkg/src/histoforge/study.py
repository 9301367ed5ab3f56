"""Blinded rating study: manifest, sessions and append-only persistence.

Each session is one rater's pass through the study items in a seeded
random order. Ratings are appended to a JSON-lines log per session before
they are acknowledged; the item order is recomputed from the stored seed
on resume, never re-shuffled.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DATASETS = ("camelyon16", "panda", "tcga")
ORIGINS = ("real", "synthetic")


@dataclass(frozen=True)
class StudyItem:
    item_id: str
    dataset: str
    image_path: str
    origin: str

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"origin must be one of {ORIGINS}")


@dataclass(frozen=True)
class StudyManifest:
    items: tuple[StudyItem, ...]

    def __post_init__(self):
        ids = [it.item_id for it in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("item_ids must be unique")

    def __len__(self) -> int:
        return len(self.items)

    def by_id(self, item_id: str) -> StudyItem:
        for it in self.items:
            if it.item_id == item_id:
                return it
        raise KeyError(item_id)

    def validate_balanced(self) -> None:
        """Each dataset must hold equal real and synthetic counts."""
        per: dict[str, dict[str, int]] = {}
        for it in self.items:
            per.setdefault(it.dataset, {"real": 0, "synthetic": 0})
            per[it.dataset][it.origin] += 1
        for dataset, counts in per.items():
            if counts["real"] != counts["synthetic"]:
                raise ValueError(
                    f"dataset {dataset} is unbalanced: "
                    f"{counts['real']} real vs {counts['synthetic']} synthetic"
                )

    @classmethod
    def load(cls, path: str | Path) -> "StudyManifest":
        raw = json.loads(Path(path).read_text())
        base = Path(path).parent
        items = []
        for obj in raw["items"]:
            image_path = obj["image_path"]
            if not Path(image_path).is_absolute():
                image_path = str(base / image_path)
            items.append(
                StudyItem(
                    item_id=obj["item_id"],
                    dataset=obj["dataset"],
                    image_path=image_path,
                    origin=obj["origin"],
                )
            )
        return cls(items=tuple(items))


@dataclass(frozen=True)
class Rating:
    item_id: str
    dataset: str
    origin: str
    quality: int
    structure: int
    nuclear: int
    hallucination: bool
    judged_real: bool | None
    timestamp: float = 0.0

    def __post_init__(self):
        for name in ("quality", "structure", "nuclear"):
            v = getattr(self, name)
            if not (1 <= v <= 5):
                raise ValueError(f"{name} score {v} outside 1..5")


@dataclass
class EvalSession:
    session_id: str
    rater_id: str
    seed: int
    order: list[str]  # item ids in presentation order
    ratings: list[Rating] = field(default_factory=list)

    @property
    def cursor(self) -> int:
        return len(self.ratings)

    @property
    def complete(self) -> bool:
        return self.cursor >= len(self.order)

    def current_item_id(self) -> str | None:
        return None if self.complete else self.order[self.cursor]


def shuffled_order(manifest: StudyManifest, seed: int) -> list[str]:
    ids = [it.item_id for it in manifest.items]
    rng = np.random.default_rng(seed)
    return [ids[i] for i in rng.permutation(len(ids))]


class SessionStore:
    """Append-only JSON-lines persistence, one log file per session.

    The first line is the session header; every later line is one rating.
    A rating is written and flushed before the caller sees an ack, so a
    crash after the ack can always be replayed from the log.
    """

    def __init__(self, root: str | Path, manifest: StudyManifest):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest
        self._sessions: dict[str, EvalSession] = {}
        self._replay()

    def _log_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def _replay(self) -> None:
        for path in sorted(self.root.glob("*.jsonl")):
            lines = [
                json.loads(line)
                for line in path.read_text().splitlines()
                if line.strip()
            ]
            if not lines:
                continue
            header = lines[0]
            session = EvalSession(
                session_id=header["session_id"],
                rater_id=header["rater_id"],
                seed=header["seed"],
                order=shuffled_order(self.manifest, header["seed"]),
            )
            for obj in lines[1:]:
                session.ratings.append(Rating(**obj))
            self._sessions[session.session_id] = session

    def create(self, rater_id: str, seed: int) -> EvalSession:
        session_id = f"s{len(self._sessions):04d}-{seed}"
        if session_id in self._sessions:
            session_id = f"{session_id}-{int(time.time() * 1000)}"
        session = EvalSession(
            session_id=session_id,
            rater_id=rater_id,
            seed=seed,
            order=shuffled_order(self.manifest, seed),
        )
        header = {"session_id": session_id, "rater_id": rater_id, "seed": seed}
        with open(self._log_path(session_id), "w") as fh:
            fh.write(json.dumps(header) + "\n")
            fh.flush()
        self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> EvalSession:
        if session_id not in self._sessions:
            raise KeyError(session_id)
        return self._sessions[session_id]

    def sessions(self) -> list[EvalSession]:
        return list(self._sessions.values())

    def append_rating(self, session_id: str, rating: Rating) -> None:
        session = self.get(session_id)
        with open(self._log_path(session_id), "a") as fh:
            fh.write(json.dumps(vars(rating)) + "\n")
            fh.flush()
        session.ratings.append(rating)
