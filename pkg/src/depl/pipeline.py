"""Glue between datasets, features, models, and result files.

Feature caches and result documents are written deterministically: same
dataset bytes, config, and seed give bitwise-identical files regardless
of the fold-level parallelism. Result JSON embeds the config hash, seed,
preset, and layout hash so every file is self-describing.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluation
from .configfile import (RunConfig, config_hash, layout_hash,
                         preprocess_hash)
from .dataio import load_dataset, read_manifest
from .errors import ArgumentError, ConfigError
from .features import FeatureEpoch, eeg_pre
from .models import make_model

FEATURES_FILE = "features.npy"
COLUMNS_FILE = "columns.npy"
META_FILE = "feature_meta.json"


# ---------------------------------------------------------------------------
# preprocessing and the feature cache

def preprocess_dataset(data_dir, cfg: RunConfig) -> tuple[np.ndarray, np.ndarray, dict]:
    """Extract features for every trial of a dataset directory.

    Returns (values, columns, meta): values is (n x 128) float64;
    columns is (n x 5) int64 with subject, trial, epoch index, valence
    label, arousal label per row.
    """
    manifest = read_manifest(data_dir)
    trials = load_dataset(data_dir, label_threshold=cfg.label_threshold)
    all_values = []
    all_columns = []
    for trial in trials:
        for epoch in eeg_pre(trial, cfg.preprocess):
            all_values.append(epoch.values)
            all_columns.append((epoch.subject_id, epoch.trial_id,
                                epoch.epoch_index, epoch.label_valence,
                                epoch.label_arousal))
    values = np.asarray(all_values, dtype=np.float64)
    columns = np.asarray(all_columns, dtype=np.int64)
    meta = {
        "kind": "depl-features",
        "preprocess_hash": preprocess_hash(cfg),
        "dataset_name": manifest.name,
        "subjects": manifest.subjects,
        "channel_names": list(manifest.channel_names),
        "n_epochs": int(len(values)),
        "label_threshold": cfg.label_threshold,
    }
    return values, columns, meta


def save_feature_cache(out_dir, values, columns, meta) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    np.save(out_dir / FEATURES_FILE, values)
    np.save(out_dir / COLUMNS_FILE, columns)
    (out_dir / META_FILE).write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_feature_cache(cache_dir, cfg: RunConfig):
    """Load a cache, refusing it when the preprocessing config changed."""
    cache_dir = Path(cache_dir)
    meta_path = cache_dir / META_FILE
    if not meta_path.exists():
        raise ConfigError(f"{cache_dir} holds no feature cache")
    meta = json.loads(meta_path.read_text())
    if meta.get("preprocess_hash") != preprocess_hash(cfg):
        raise ConfigError(
            "feature cache was built with a different preprocessing config; "
            "re-run preprocess")
    values = np.load(cache_dir / FEATURES_FILE)
    columns = np.load(cache_dir / COLUMNS_FILE)
    return values, columns, meta


def has_feature_cache(path) -> bool:
    return (Path(path) / META_FILE).exists()


def features_for(data_dir, cfg: RunConfig):
    """Features from a cache dir if present, else computed from raw trials."""
    if has_feature_cache(data_dir):
        return load_feature_cache(data_dir, cfg)
    return preprocess_dataset(data_dir, cfg)


def epochs_by_subject(values: np.ndarray,
                      columns: np.ndarray) -> dict[int, list[FeatureEpoch]]:
    out: dict[int, list[FeatureEpoch]] = {}
    for row, (subject, trial, epoch, lv, la) in zip(values, columns):
        out.setdefault(int(subject), []).append(FeatureEpoch(
            subject_id=int(subject), trial_id=int(trial),
            epoch_index=int(epoch), values=row,
            label_valence=int(lv), label_arousal=int(la)))
    return out


# ---------------------------------------------------------------------------
# LOSO orchestration

def fold_seed(global_seed: int, test_subject: int) -> int:
    """Stable per-fold seed, independent of fold scheduling order."""
    ss = np.random.SeedSequence([int(global_seed), int(test_subject)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] % (2 ** 63))


def _run_one_fold(args):
    fold, model_name, cfg, by_subject, task, channel_names = args
    seed = fold_seed(cfg.train.seed, fold.test_subject)
    make = lambda: make_model(model_name, cfg.model, cfg.train, cfg.layout,
                              channel_names=channel_names, seed=seed)
    return evaluation.run_fold(fold, make, by_subject, task)


def run_loso(model_name: str, cfg: RunConfig, values, columns, meta,
             task: str = "valence", jobs: int = 1) -> dict:
    """Run every fold, aggregate, and assemble the results document."""
    by_subject = epochs_by_subject(values, columns)
    subjects = sorted(by_subject)
    plan = evaluation.loso_split(subjects)
    channel_names = tuple(meta["channel_names"])
    work = [(fold, model_name, cfg, by_subject, task, channel_names)
            for fold in plan.folds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one_fold, work))
    else:
        results = [_run_one_fold(w) for w in work]
    results.sort(key=lambda r: r.test_subject)
    summary = evaluation.aggregate(results)

    label = f"{model_name}:{cfg.model.band}:{task}" if model_name == "depl" \
        else f"{model_name}:{task}"
    return {
        "kind": "loso-results",
        "label": label,
        "model": model_name,
        "preset": cfg.model.preset if model_name == "depl" else None,
        "band": cfg.model.band if model_name == "depl" else None,
        "task": task,
        "seed": cfg.train.seed,
        "config_hash": config_hash(cfg),
        "layout_hash": layout_hash(cfg.layout),
        "dataset": {"name": meta.get("dataset_name"),
                    "subjects": meta.get("subjects"),
                    "n_epochs": meta.get("n_epochs")},
        "folds": [_fold_doc(r) for r in results],
        "summary": summary,
    }


def _fold_doc(r: evaluation.FoldResult) -> dict:
    doc = {
        "test_subject": r.test_subject,
        "task": r.task,
        "tp": r.tp, "fp": r.fp, "tn": r.tn, "fn": r.fn,
        "accuracy": r.accuracy,
        "f1": r.f1,
        "trial_accuracy": r.trial_accuracy,
        "n_trials": r.n_trials,
    }
    if r.loss_curve is not None:
        doc["loss_curve"] = list(r.loss_curve)
    return doc


def write_results(out_dir, name: str, doc: dict) -> tuple[Path, Path]:
    """Write the JSON document and the flat per-fold CSV atomically."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f"{name}.json"
    csv_path = out_dir / f"{name}_folds.csv"
    _atomic_write(json_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")

    fields = ["test_subject", "task", "model", "band", "preset",
              "tp", "fp", "tn", "fn", "accuracy", "f1",
              "trial_accuracy", "n_trials"]
    rows = []
    for fold in doc["folds"]:
        row = {k: fold.get(k) for k in fields if k in fold}
        row["model"] = doc["model"]
        row["band"] = doc["band"] or ""
        row["preset"] = doc["preset"] or ""
        rows.append(row)
    lines = []
    lines.append(",".join(fields))
    for row in rows:
        lines.append(",".join(str(row.get(k, "")) for k in fields))
    _atomic_write(csv_path, "\n".join(lines) + "\n")
    return json_path, csv_path


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# comparisons

def compare_results(results_dir) -> dict:
    """Pairwise paired t-tests across every loso results file in a dir."""
    results_dir = Path(results_dir)
    acc_by_label: dict[str, dict[int, float]] = {}
    for path in sorted(results_dir.glob("*.json")):
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError:
            continue
        if doc.get("kind") != "loso-results":
            continue
        per_subject = {f["test_subject"]: f["accuracy"] for f in doc["folds"]}
        acc_by_label[doc["label"]] = per_subject
    if len(acc_by_label) < 2:
        raise ArgumentError(
            f"need at least two loso results files in {results_dir} to compare")
    matrix = evaluation.comparison_matrix(acc_by_label)
    return {
        "kind": "comparison",
        "labels": list(matrix.labels),
        "t": [[float(v) for v in row] for row in matrix.t],
        "p": [[float(v) for v in row] for row in matrix.p],
    }


def write_comparison(out_dir, doc: dict) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "comparison.json"
    csv_path = out_dir / "comparison.csv"
    _atomic_write(json_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    lines = ["model_a,model_b,t,p"]
    labels = doc["labels"]
    for i, a in enumerate(labels):
        for j, b in enumerate(labels):
            if i < j:
                lines.append(f"{a},{b},{doc['t'][i][j]},{doc['p'][i][j]}")
    _atomic_write(csv_path, "\n".join(lines) + "\n")
    return json_path, csv_path
