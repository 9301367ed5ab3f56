"""Unified command-line surface binding the pipeline modules together.

Exit codes: 0 ok, 1 domain error, 2 usage error. Every subcommand taking
--seed is deterministic across runs. HISTOFORGE_THREADS caps the BLAS
thread pools used by the numeric kernels.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import clustering, conditioning, diffusion, grid, metrics, sampling
from .errors import HistoforgeError
from .ftensor import read_ftensor, write_ftensor
from .manifest import ManifestStore, load_image

_threads = os.environ.get("HISTOFORGE_THREADS")
if _threads:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, _threads)


def domain_errors(fn):
    """Convert domain failures into a structured message and exit 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (HistoforgeError, ValueError, OSError) as exc:
            click.echo(json.dumps({"error": str(exc)}), err=True)
            sys.exit(1)

    return wrapper


def emit(payload: dict, as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps(payload))
    else:
        for key, value in payload.items():
            click.echo(f"{key}: {value}")


json_flag = click.option("--json", "as_json", is_flag=True, help="machine-readable output")


@click.group()
def main():
    """Heterogeneous tissue synthesis toolkit."""


# --- cluster -----------------------------------------------------------


@main.group()
def cluster():
    """Tissue-phenotype clustering over precomputed embeddings."""


def _write_model(path: Path, model: clustering.ClusterModel) -> None:
    write_ftensor(path, model.centroids)
    stats = {
        "per_cluster_count": model.per_cluster_count.tolist(),
        "per_cluster_variance": model.per_cluster_variance.tolist(),
        "seed": model.seed,
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(stats))


def _read_model(path: Path) -> clustering.ClusterModel:
    centroids = read_ftensor(path)
    stats = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return clustering.ClusterModel(
        centroids=centroids,
        per_cluster_count=np.asarray(stats["per_cluster_count"], dtype=np.int64),
        per_cluster_variance=np.asarray(stats["per_cluster_variance"]),
        seed=stats["seed"],
    )


@cluster.command("fit")
@click.option("--features", required=True, type=click.Path(exists=True))
@click.option("--k", required=True, type=int)
@click.option("--iters", default=100, show_default=True, type=int)
@click.option("--batch-size", default=1024, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@json_flag
@domain_errors
def cluster_fit(features, k, iters, batch_size, seed, out, as_json):
    mat = clustering.FeatureMatrix(read_ftensor(features))
    model = clustering.fit_kmeans(mat, k=k, iters=iters, batch_size=batch_size, seed=seed)
    _write_model(Path(out), model)
    emit({"k": model.k, "d": model.d, "out": out}, as_json)


@cluster.command("assign")
@click.option("--features", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--chunk", default=1000, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@json_flag
@domain_errors
def cluster_assign(features, model_path, chunk, out, as_json):
    mat = clustering.FeatureMatrix(read_ftensor(features))
    model = _read_model(Path(model_path))
    labels = clustering.assign_nearest(mat, model, chunk=chunk)
    write_ftensor(out, labels.astype(np.int32))
    emit({"n": len(labels), "out": out}, as_json)


@cluster.command("subsplit")
@click.option("--features", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--z-threshold", default=1.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@click.option("--labels-out", required=True, type=click.Path())
@json_flag
@domain_errors
def cluster_subsplit(features, model_path, labels_path, z_threshold, seed, out, labels_out, as_json):
    mat = clustering.FeatureMatrix(read_ftensor(features))
    model = _read_model(Path(model_path))
    labels = read_ftensor(labels_path)
    new_model, new_labels, split_map = clustering.subcluster_high_variance(
        mat, labels, model, z_threshold=z_threshold, seed=seed
    )
    _write_model(Path(out), new_model)
    write_ftensor(labels_out, new_labels.astype(np.int32))
    emit(
        {"k_before": model.k, "k_after": new_model.k, "splits": split_map, "out": out},
        as_json,
    )


@cluster.command("scales")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--ks", default="5,10,20,50,100", show_default=True)
@click.option("--out", required=True, type=click.Path())
@json_flag
@domain_errors
def cluster_scales(model_path, ks, out, as_json):
    model = _read_model(Path(model_path))
    k_list = [int(x) for x in ks.split(",") if x.strip()]
    hierarchy = clustering.merge_to_scales(model, k_list)
    Path(out).write_text(json.dumps(hierarchy.to_json_dict()))
    emit({"base_K": hierarchy.base_k, "levels": sorted(hierarchy.levels), "out": out}, as_json)


@cluster.command("diversity")
@click.option("--features", required=True, type=click.Path(exists=True))
@click.option("--positions", required=True, type=click.Path(exists=True))
@click.option("--n", "n_select", required=True, type=int)
@click.option("--w-spatial", default=0.3, show_default=True, type=float)
@click.option("--w-feature", default=0.7, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@json_flag
@domain_errors
def cluster_diversity(features, positions, n_select, w_spatial, w_feature, seed, out, as_json):
    mat = clustering.FeatureMatrix(
        read_ftensor(features), positions=read_ftensor(positions)
    )
    idx = clustering.diversity_sample(
        mat, n_select, w_spatial=w_spatial, w_feature=w_feature, seed=seed
    )
    write_ftensor(out, idx.astype(np.int32))
    emit({"selected": len(idx), "out": out}, as_json)


# --- map ---------------------------------------------------------------


@main.group(name="map")
def map_group():
    """Semantic map operations."""


@map_group.command("entropy")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--num-classes", type=int, default=None)
@click.option("--region-size", default=64, show_default=True, type=int)
@click.option("--stride", default=32, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@json_flag
@domain_errors
def map_entropy(map_path, num_classes, region_size, stride, out, as_json):
    labels = read_ftensor(map_path)
    k = num_classes if num_classes is not None else int(labels.max()) + 1
    smap = grid.SemanticMap(labels=labels, num_classes=k)
    emap = grid.entropy_map(smap, region_size=region_size, stride=stride)
    write_ftensor(out, emap.values.astype(np.float32))
    emit({"mean_entropy": emap.mean(), "shape": list(emap.values.shape), "out": out}, as_json)


# --- sample ------------------------------------------------------------


@main.group()
def sample():
    """Heterogeneous patch selection."""


@sample.command("hetero")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--tau-entropy", default=0.3, show_default=True, type=float)
@click.option("--tau-coverage", default=0.05, show_default=True, type=float)
@click.option("--r-min", default=0.2, show_default=True, type=float)
@click.option("--r-max", default=0.8, show_default=True, type=float)
@click.option("--max-tries", default=100, show_default=True, type=int)
@click.option("--relax-factor", default=0.5, show_default=True, type=float)
@click.option("--region-size", default=64, show_default=True, type=int)
@click.option("--stride", default=32, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@json_flag
@domain_errors
def sample_hetero(
    manifest_path, tau_entropy, tau_coverage, r_min, r_max, max_tries,
    relax_factor, region_size, stride, seed, as_json,
):
    store = ManifestStore(manifest_path)
    cfg = sampling.SamplerConfig(
        r_min=r_min,
        r_max=r_max,
        tau_entropy=tau_entropy,
        tau_coverage=tau_coverage,
        max_tries=max_tries,
        relax_factor=relax_factor,
        entropy_region_size=region_size,
        entropy_stride=stride,
        seed=seed,
    )
    cand = sampling.sample_heterogeneous(store, cfg)
    emit(
        {
            "patch_id": cand.patch_id,
            "mean_entropy": cand.mean_entropy,
            "tissue_ratio": cand.tissue_ratio,
            "present_classes": sorted(cand.present_classes),
        },
        as_json,
    )


# --- cond --------------------------------------------------------------


@main.group()
def cond():
    """Dual-conditioning tensor construction."""


@cond.command("build")
@click.option("--patch", "patch_path", required=True, type=click.Path(exists=True))
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--num-classes", type=int, default=None)
@click.option("--d-min", default=50, show_default=True, type=int)
@click.option("--d-max", default=200, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@json_flag
@domain_errors
def cond_build(patch_path, map_path, num_classes, d_min, d_max, seed, out, as_json):
    patch = load_image(patch_path)
    labels = read_ftensor(map_path)
    k = num_classes if num_classes is not None else int(labels.max()) + 1
    smap = grid.SemanticMap(labels=labels, num_classes=k)
    cfg = sampling.SamplerConfig(d_min=d_min, d_max=d_max, seed=seed)
    tensor = conditioning.build_condition(
        patch, smap, cfg, seed=seed, patch_id=Path(patch_path).stem
    )
    tensor.save(out)
    emit({"channels": tensor.channels, "classes": k, "out": out}, as_json)


@cond.command("downsample")
@click.option("--cond", "cond_path", required=True, type=click.Path(exists=True))
@click.option("--factor", default=4, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@json_flag
@domain_errors
def cond_downsample(cond_path, factor, out, as_json):
    tensor = conditioning.ConditioningTensor.load(cond_path)
    latent = conditioning.downsample_condition(tensor, factor=factor)
    write_ftensor(out, latent.planes)
    emit({"channels": latent.channels, "shape": list(latent.planes.shape), "out": out}, as_json)


# --- diffuse -----------------------------------------------------------


@main.group()
def diffuse():
    """Diffusion process numerics."""


@diffuse.command("schedule")
@click.option("--beta1", default=diffusion.DEFAULT_BETA1, show_default=True, type=float)
@click.option("--beta2", default=diffusion.DEFAULT_BETA2, show_default=True, type=float)
@click.option("--t", "num_steps", default=diffusion.DEFAULT_T, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@json_flag
@domain_errors
def diffuse_schedule(beta1, beta2, num_steps, out, as_json):
    sched = diffusion.linear_schedule(beta1, beta2, num_steps)
    write_ftensor(out, sched.as_array())
    emit(
        {"T": num_steps, "alpha_bar_final": float(sched.alpha_bar[-1]), "out": out},
        as_json,
    )


@diffuse.command("check")
@click.option("--mu", default=3.0, show_default=True, type=float)
@click.option("--var", default=0.25, show_default=True, type=float)
@click.option("--t", "num_steps", default=diffusion.DEFAULT_T, show_default=True, type=int)
@click.option("--n", "n_samples", default=10000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@json_flag
@domain_errors
def diffuse_check(mu, var, num_steps, n_samples, seed, as_json):
    """Sample a Gaussian target with the analytic denoiser and report moments."""
    sched = diffusion.linear_schedule(num_steps=num_steps)
    denoiser = diffusion.analytic_gaussian_denoiser(mu, var, sched)
    rng = np.random.default_rng(seed)
    samples = diffusion.sample(denoiser, sched, (n_samples,), rng=rng)
    m, v = float(samples.mean()), float(samples.var())
    ok = abs(m - mu) <= 0.02 and abs(v - var) <= 0.1 * var
    emit(
        {"mean": m, "variance": v, "target_mean": mu, "target_variance": var, "pass": ok},
        as_json,
    )
    if not ok:
        sys.exit(1)


# --- metrics -----------------------------------------------------------


@main.group(name="metrics")
def metrics_group():
    """Generative-quality and task metrics."""


@metrics_group.command("fd")
@click.option("--real", "real_path", required=True, type=click.Path(exists=True))
@click.option("--gen", "gen_path", required=True, type=click.Path(exists=True))
@click.option("--encoder-tag", default="")
@json_flag
@domain_errors
def metrics_fd(real_path, gen_path, encoder_tag, as_json):
    real = metrics.EmbeddingSet(read_ftensor(real_path), encoder_tag=encoder_tag)
    gen = metrics.EmbeddingSet(read_ftensor(gen_path), encoder_tag=encoder_tag)
    value = metrics.frechet_distance(real, gen)
    emit(
        {
            "metric": "frechet_distance",
            "value": value,
            "n_real": real.n,
            "n_gen": gen.n,
            "encoder_tag": encoder_tag,
        },
        as_json,
    )


@metrics_group.command("pr")
@click.option("--real", "real_path", required=True, type=click.Path(exists=True))
@click.option("--gen", "gen_path", required=True, type=click.Path(exists=True))
@click.option("--k", default=3, show_default=True, type=int)
@click.option("--encoder-tag", default="")
@json_flag
@domain_errors
def metrics_pr(real_path, gen_path, k, encoder_tag, as_json):
    real = metrics.EmbeddingSet(read_ftensor(real_path), encoder_tag=encoder_tag)
    gen = metrics.EmbeddingSet(read_ftensor(gen_path), encoder_tag=encoder_tag)
    p, r, f1 = metrics.precision_recall_f1(real, gen, k=k)
    emit(
        {
            "metric": "precision_recall_f1",
            "precision": p,
            "recall": r,
            "f1": f1,
            "k": k,
            "n_real": real.n,
            "n_gen": gen.n,
            "encoder_tag": encoder_tag,
        },
        as_json,
    )


@metrics_group.command("iou")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True))
@click.option("--class-id", type=int, default=None, help="single class; omit for mean IoU")
@json_flag
@domain_errors
def metrics_iou(pred_path, gt_path, class_id, as_json):
    pred_labels = read_ftensor(pred_path)
    gt_labels = read_ftensor(gt_path)
    k = int(max(pred_labels.max(), gt_labels.max())) + 1
    pred = grid.SemanticMap(labels=pred_labels, num_classes=k)
    gt = grid.SemanticMap(labels=gt_labels, num_classes=k)
    if class_id is not None:
        value = metrics.iou(pred, gt, class_id)
        payload = {"metric": "iou", "class_id": class_id, "value": value}
    else:
        payload = {"metric": "mean_iou", "value": metrics.mean_iou(pred, gt)}
    emit(payload, as_json)


@metrics_group.command("confusion")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--truth", "truth_path", required=True, type=click.Path(exists=True))
@click.option("--groups", default="", help="equivalence groups, e.g. '88,64,39,25;3,4'")
@json_flag
@domain_errors
def metrics_confusion(pred_path, truth_path, groups, as_json):
    preds = read_ftensor(pred_path)
    truth = read_ftensor(truth_path)
    group_sets = tuple(
        frozenset(int(x) for x in part.split(","))
        for part in groups.split(";")
        if part.strip()
    )
    matrix, accuracy = metrics.confusion_with_equivalence(
        preds, truth, metrics.EquivalenceGroups(group_sets)
    )
    emit({"metric": "confusion", "accuracy": accuracy, "matrix": matrix}, as_json)


# --- eval --------------------------------------------------------------


@main.group(name="eval")
def eval_group():
    """Blinded rating service."""


@eval_group.command("serve")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--require-balanced", is_flag=True)
@click.option("--show-dataset", is_flag=True)
@click.option("--static", "static_dir", type=click.Path(), default=None)
@domain_errors
def eval_serve(manifest_path, port, host, store_dir, require_balanced, show_dataset, static_dir):
    import uvicorn

    from .service import create_app

    app = create_app(
        manifest_path,
        store_dir,
        require_balanced=require_balanced,
        show_dataset=show_dataset,
        static_dir=static_dir,
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


@eval_group.command("export")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--dataset", default=None)
@json_flag
@domain_errors
def eval_export(manifest_path, store_dir, dataset, as_json):
    from .study import SessionStore, StudyManifest

    manifest = StudyManifest.load(manifest_path)
    store = SessionStore(store_dir, manifest)
    sessions = store.sessions()
    likert = metrics.likert_aggregate(sessions)
    disc = metrics.discrimination_accuracy(sessions)
    if dataset is not None:
        likert = {dataset: likert.get(dataset, {})}
        disc = {dataset: disc[dataset]} if dataset in disc else {}
    emit({"likert": likert, "discrimination": disc, "sessions": len(sessions)}, as_json)


if __name__ == "__main__":
    main()
