"""Bundled pathologist-study fixture.

Reconstructs the recorded blinded-evaluation outcome: 120 items (40 per
dataset, balanced real/synthetic), Likert score lists hitting the
reported per-stratum means exactly, and authenticity judgments matching
the reported correct counts (camelyon16 6+12 of 40, panda 11+10 of 40,
tcga 9+9 of 40).
"""

from __future__ import annotations

import json
from pathlib import Path

from .study import EvalSession, Rating, StudyItem, StudyManifest, shuffled_order

BUNDLE_DIR = Path(__file__).parent / "fixtures"

# per dataset: {criterion: (synthetic mean, real mean)}, correct judgment
# counts (real, synthetic) out of 20 each, and hallucination flags of 40
FIXTURE_SPEC = {
    "camelyon16": {
        "means": {"quality": (4.40, 4.00), "structure": (4.60, 4.05), "nuclear": (4.60, 4.15)},
        "correct": (6, 12),
        "hallucinations": 23,
    },
    "panda": {
        "means": {"quality": (4.25, 3.95), "structure": (4.00, 4.20), "nuclear": (3.85, 3.90)},
        "correct": (11, 10),
        "hallucinations": 19,
    },
    "tcga": {
        "means": {"quality": (4.15, 3.65), "structure": (4.05, 3.25), "nuclear": (4.30, 2.80)},
        "correct": (9, 9),
        "hallucinations": 22,
    },
}

ITEMS_PER_ORIGIN = 20


def _scores_with_mean(mean: float, n: int = ITEMS_PER_ORIGIN) -> list[int]:
    """n Likert scores in 1..5 whose arithmetic mean is exactly `mean`."""
    total = round(mean * n)
    base = total // n
    rem = total - base * n
    if not (1 <= base <= 5) or (rem and base + 1 > 5):
        raise ValueError(f"mean {mean} unreachable with scores in 1..5")
    return [base + 1] * rem + [base] * (n - rem)


def build_manifest() -> StudyManifest:
    items = []
    for dataset in FIXTURE_SPEC:
        for origin in ("real", "synthetic"):
            for i in range(ITEMS_PER_ORIGIN):
                item_id = f"{dataset}-{origin[0]}{i:02d}"
                items.append(
                    StudyItem(
                        item_id=item_id,
                        dataset=dataset,
                        image_path=f"images/{item_id}.png",
                        origin=origin,
                    )
                )
    return StudyManifest(items=tuple(items))


def build_session(manifest: StudyManifest, seed: int = 20240901) -> EvalSession:
    session = EvalSession(
        session_id="fixture-pathologist",
        rater_id="pathologist-1",
        seed=seed,
        order=shuffled_order(manifest, seed),
    )
    ratings_by_item: dict[str, Rating] = {}
    for dataset, spec in FIXTURE_SPEC.items():
        scores = {
            crit: {
                "synthetic": _scores_with_mean(means[0]),
                "real": _scores_with_mean(means[1]),
            }
            for crit, means in spec["means"].items()
        }
        correct_real, correct_syn = spec["correct"]
        flags_left = spec["hallucinations"]
        for origin, correct_n in (("real", correct_real), ("synthetic", correct_syn)):
            for i in range(ITEMS_PER_ORIGIN):
                item_id = f"{dataset}-{origin[0]}{i:02d}"
                judged_correct = i < correct_n
                judged_real = judged_correct if origin == "real" else not judged_correct
                hallucination = flags_left > 0
                if hallucination:
                    flags_left -= 1
                ratings_by_item[item_id] = Rating(
                    item_id=item_id,
                    dataset=dataset,
                    origin=origin,
                    quality=scores["quality"][origin][i],
                    structure=scores["structure"][origin][i],
                    nuclear=scores["nuclear"][origin][i],
                    hallucination=hallucination,
                    judged_real=judged_real,
                )
    session.ratings = [ratings_by_item[item_id] for item_id in session.order]
    return session


def write_bundle(directory: str | Path = BUNDLE_DIR) -> None:
    """Write the fixture manifest and session log to disk."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = build_manifest()
    session = build_session(manifest)
    manifest_obj = {"items": [vars(it) for it in manifest.items]}
    (directory / "study_manifest.json").write_text(json.dumps(manifest_obj, indent=2))
    with open(directory / f"{session.session_id}.jsonl", "w") as fh:
        header = {
            "session_id": session.session_id,
            "rater_id": session.rater_id,
            "seed": session.seed,
        }
        fh.write(json.dumps(header) + "\n")
        for rating in session.ratings:
            fh.write(json.dumps(vars(rating)) + "\n")


def load_bundle() -> tuple[StudyManifest, list[EvalSession]]:
    """Load the bundled fixture, rebuilding it in memory if absent."""
    manifest_path = BUNDLE_DIR / "study_manifest.json"
    if not manifest_path.exists():
        manifest = build_manifest()
        return manifest, [build_session(manifest)]
    raw = json.loads(manifest_path.read_text())
    manifest = StudyManifest(
        items=tuple(StudyItem(**obj) for obj in raw["items"])
    )
    sessions = []
    for log in sorted(BUNDLE_DIR.glob("*.jsonl")):
        lines = [json.loads(line) for line in log.read_text().splitlines() if line.strip()]
        header = lines[0]
        session = EvalSession(
            session_id=header["session_id"],
            rater_id=header["rater_id"],
            seed=header["seed"],
            order=shuffled_order(manifest, header["seed"]),
        )
        session.ratings = [Rating(**obj) for obj in lines[1:]]
        sessions.append(session)
    return manifest, sessions
