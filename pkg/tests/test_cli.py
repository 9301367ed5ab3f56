import json

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from histoforge.cli import main
from histoforge.ftensor import read_ftensor, write_ftensor


@pytest.fixture
def runner():
    return CliRunner()


def run_json(runner, args):
    result = runner.invoke(main, args + ["--json"])
    assert result.exit_code == 0, result.output
    return json.loads(result.output.strip().splitlines()[-1])


class TestClusterCommands:
    def test_fit_assign_pipeline(self, runner, tmp_path):
        rng = np.random.default_rng(0)
        centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        data = np.concatenate(
            [c + 0.1 * rng.standard_normal((50, 2)) for c in centers]
        ).astype(np.float32)
        write_ftensor(tmp_path / "f.ft", data)
        out = run_json(
            runner,
            ["cluster", "fit", "--features", str(tmp_path / "f.ft"),
             "--k", "3", "--iters", "20", "--seed", "7",
             "--out", str(tmp_path / "c.ft")],
        )
        assert out["k"] == 3
        centroids = read_ftensor(tmp_path / "c.ft")
        assert centroids.shape == (3, 2)

        out = run_json(
            runner,
            ["cluster", "assign", "--features", str(tmp_path / "f.ft"),
             "--model", str(tmp_path / "c.ft"),
             "--out", str(tmp_path / "labels.ft")],
        )
        labels = read_ftensor(tmp_path / "labels.ft")
        assert out["n"] == 150 and len(labels) == 150

        out = run_json(
            runner,
            ["cluster", "scales", "--model", str(tmp_path / "c.ft"),
             "--ks", "2,3", "--out", str(tmp_path / "scales.json")],
        )
        scales = json.loads((tmp_path / "scales.json").read_text())
        assert scales["base_K"] == 3
        assert len(scales["levels"]["2"]) == 3

    def test_fit_deterministic(self, runner, tmp_path):
        rng = np.random.default_rng(1)
        write_ftensor(tmp_path / "f.ft", rng.standard_normal((40, 3)).astype(np.float32))
        for name in ("a.ft", "b.ft"):
            run_json(
                runner,
                ["cluster", "fit", "--features", str(tmp_path / "f.ft"),
                 "--k", "4", "--iters", "10", "--seed", "3",
                 "--out", str(tmp_path / name)],
            )
        assert (tmp_path / "a.ft").read_bytes() == (tmp_path / "b.ft").read_bytes()

    def test_diversity(self, runner, tmp_path):
        rng = np.random.default_rng(2)
        write_ftensor(tmp_path / "f.ft", rng.standard_normal((30, 4)).astype(np.float32))
        write_ftensor(tmp_path / "p.ft", rng.integers(0, 50, size=(30, 2)).astype(np.int32))
        out = run_json(
            runner,
            ["cluster", "diversity", "--features", str(tmp_path / "f.ft"),
             "--positions", str(tmp_path / "p.ft"), "--n", "5", "--seed", "1",
             "--out", str(tmp_path / "idx.ft")],
        )
        assert out["selected"] == 5

    def test_domain_error_exit_1(self, runner, tmp_path):
        write_ftensor(tmp_path / "f.ft", np.zeros((2, 2), dtype=np.float32))
        result = runner.invoke(
            main,
            ["cluster", "fit", "--features", str(tmp_path / "f.ft"),
             "--k", "5", "--out", str(tmp_path / "c.ft")],
        )
        assert result.exit_code == 1


class TestMapAndSample:
    def test_map_entropy(self, runner, tmp_path):
        labels = (np.indices((16, 16)).sum(axis=0) % 2).astype(np.int32)
        write_ftensor(tmp_path / "m.ft", labels)
        out = run_json(
            runner,
            ["map", "entropy", "--map", str(tmp_path / "m.ft"),
             "--region-size", "2", "--stride", "2",
             "--out", str(tmp_path / "e.ft")],
        )
        assert out["mean_entropy"] == pytest.approx(np.log(2), abs=1e-6)

    def test_sample_hetero(self, runner, tmp_path):
        labels = ((np.indices((16, 16)).sum(axis=0) % 2) + 1).astype(np.int32)
        labels[:4] = 0
        write_ftensor(tmp_path / "m.ft", labels)
        img = Image.fromarray(np.full((16, 16, 3), 128, dtype=np.uint8))
        img.save(tmp_path / "p.png")
        manifest = [
            {"patch_id": "p0", "image_path": "p.png", "map_path": "m.ft",
             "num_classes": 3, "background_label": 0}
        ]
        (tmp_path / "man.json").write_text(json.dumps(manifest))
        out = run_json(
            runner,
            ["sample", "hetero", "--manifest", str(tmp_path / "man.json"),
             "--tau-entropy", "0.3", "--region-size", "4", "--stride", "4",
             "--seed", "7"],
        )
        assert out["patch_id"] == "p0"
        assert out["mean_entropy"] > 0.3


class TestCondCommands:
    def test_build_and_downsample(self, runner, tmp_path):
        rng = np.random.default_rng(3)
        patch = rng.integers(0, 255, size=(64, 64, 3), dtype=np.uint8)
        Image.fromarray(patch).save(tmp_path / "p.png")
        labels = np.zeros((64, 64), dtype=np.int32)
        labels[:, 32:] = 1
        write_ftensor(tmp_path / "m.ft", labels)
        out = run_json(
            runner,
            ["cond", "build", "--patch", str(tmp_path / "p.png"),
             "--map", str(tmp_path / "m.ft"), "--d-min", "8", "--d-max", "16",
             "--seed", "7", "--out", str(tmp_path / "c.ft")],
        )
        assert out["channels"] == 8
        out = run_json(
            runner,
            ["cond", "downsample", "--cond", str(tmp_path / "c.ft"),
             "--factor", "4", "--out", str(tmp_path / "l.ft")],
        )
        assert out["shape"] == [8, 16, 16]


class TestDiffuseCommands:
    def test_schedule_export(self, runner, tmp_path):
        out = run_json(
            runner,
            ["diffuse", "schedule", "--t", "100", "--out", str(tmp_path / "s.ft")],
        )
        arr = read_ftensor(tmp_path / "s.ft")
        assert arr.shape == (3, 100)
        assert out["T"] == 100

    def test_check_small(self, runner):
        out = run_json(
            runner,
            ["diffuse", "check", "--mu", "0", "--var", "1", "--t", "200",
             "--n", "4000", "--seed", "7"],
        )
        assert abs(out["mean"]) < 0.1
        assert abs(out["variance"] - 1.0) < 0.15


class TestMetricsCommands:
    def test_fd(self, runner, tmp_path):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((50, 4)).astype(np.float32)
        write_ftensor(tmp_path / "r.ft", a)
        write_ftensor(tmp_path / "g.ft", a)
        out = run_json(
            runner,
            ["metrics", "fd", "--real", str(tmp_path / "r.ft"),
             "--gen", str(tmp_path / "g.ft"), "--encoder-tag", "uni"],
        )
        assert out["value"] <= 1e-6
        assert out["n_real"] == 50 and out["encoder_tag"] == "uni"

    def test_pr(self, runner, tmp_path):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((20, 3)).astype(np.float32)
        write_ftensor(tmp_path / "r.ft", a)
        write_ftensor(tmp_path / "g.ft", a)
        out = run_json(
            runner,
            ["metrics", "pr", "--real", str(tmp_path / "r.ft"),
             "--gen", str(tmp_path / "g.ft"), "--k", "3"],
        )
        assert out["precision"] == 1.0 and out["recall"] == 1.0

    def test_iou(self, runner, tmp_path):
        labels = np.zeros((8, 8), dtype=np.int32)
        labels[:4] = 1
        write_ftensor(tmp_path / "p.ft", labels)
        write_ftensor(tmp_path / "g.ft", labels)
        out = run_json(
            runner,
            ["metrics", "iou", "--pred", str(tmp_path / "p.ft"),
             "--gt", str(tmp_path / "g.ft")],
        )
        assert out["value"] == 1.0

    def test_confusion_with_groups(self, runner, tmp_path):
        write_ftensor(tmp_path / "p.ft", np.array([88, 1], dtype=np.int32))
        write_ftensor(tmp_path / "t.ft", np.array([25, 2], dtype=np.int32))
        out = run_json(
            runner,
            ["metrics", "confusion", "--pred", str(tmp_path / "p.ft"),
             "--truth", str(tmp_path / "t.ft"), "--groups", "88,64,39,25"],
        )
        assert out["accuracy"] == 0.5


class TestEvalExport:
    def test_bundled_fixture_export(self, runner, tmp_path):
        from histoforge.fixtures import BUNDLE_DIR

        out = run_json(
            runner,
            ["eval", "export",
             "--manifest", str(BUNDLE_DIR / "study_manifest.json"),
             "--store", str(BUNDLE_DIR)],
        )
        disc = out["discrimination"]
        assert disc["camelyon16"]["accuracy"] == pytest.approx(0.45)
        assert disc["panda"]["accuracy"] == pytest.approx(0.525)
        assert disc["tcga"]["accuracy"] == pytest.approx(0.45)


class TestUsageErrors:
    def test_unknown_flag_exit_2(self, runner):
        result = runner.invoke(main, ["cluster", "fit", "--bogus", "x"])
        assert result.exit_code == 2
        assert "Usage" in result.output or "no such option" in result.output.lower()

    def test_unknown_command_exit_2(self, runner):
        result = runner.invoke(main, ["frobnicate"])
        assert result.exit_code == 2
