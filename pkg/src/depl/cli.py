"""Command-line surface: synth, preprocess, train, loso, compare, inspect.

Every command exits 0 on success and a category-specific nonzero code on
failure: 2 for configuration/argument problems, 3 for file-format
problems, 4 for degenerate inputs, 5 for training divergence, 1 for
anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .configfile import (apply_overrides, config_hash, default_config,
                         load_config)
from .errors import (ArgumentError, ConfigError, DegenerateInputError,
                     DeplError, FormatError, TrainingError)
from .models import MODEL_NAMES, make_model
from .nn import make_depl_config, param_count, save_params
from .nn.network import infer_layers
from .signals import BAND_ORDER
from .synth import SynthSpec, generate_dataset

# parameter count reported for this architecture in the original
# publication; our computed counts are printed next to it (see README)
PUBLISHED_PARAM_COUNT = 152_566

_EXIT_CODES = (
    (ConfigError, 2),
    (ArgumentError, 2),
    (FormatError, 3),
    (DegenerateInputError, 4),
    (TrainingError, 5),
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depl",
        description="EEG emotion recognition: entropy features, band-plane "
                    "CNN, and leave-one-subject-out evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, data=False, out=False, model=False, jobs=False):
        if data:
            p.add_argument("--data", required=True, metavar="DIR",
                           help="dataset or feature-cache directory")
        if out:
            p.add_argument("--out", required=True, metavar="DIR",
                           help="output directory")
        p.add_argument("--config", metavar="FILE", help="run configuration file")
        if model:
            p.add_argument("--model", choices=MODEL_NAMES, default="depl")
            p.add_argument("--preset", choices=("depl-text", "depl-table6"))
            p.add_argument("--band", choices=BAND_ORDER)
            p.add_argument("--task", choices=("valence", "arousal"),
                           default="valence")
        p.add_argument("--smooth-d", type=int, metavar="N",
                       help="smoothing delay in windows")
        p.add_argument("--threshold", type=float, metavar="R",
                       help="high/low rating threshold")
        p.add_argument("--seed", type=int, metavar="N")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, metavar="N",
                           help="parallel fold workers")

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--subjects", type=int, default=8)
    p.add_argument("--trials", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--effect-size", type=float, default=3.0)
    p.add_argument("--duration-s", type=float, default=60.0)
    p.add_argument("--baseline-s", type=float, default=3.0)

    p = sub.add_parser("preprocess", help="extract features into a cache")
    add_common(p, data=True, out=True)

    p = sub.add_parser("train", help="train one model on a whole dataset")
    add_common(p, data=True, out=True, model=True)

    p = sub.add_parser("loso", help="leave-one-subject-out evaluation")
    add_common(p, data=True, out=True, model=True, jobs=True)

    p = sub.add_parser("compare", help="paired t-tests across loso results")
    p.add_argument("--data", required=True, metavar="DIR",
                   help="directory holding loso result files")
    p.add_argument("--out", required=True, metavar="DIR")

    p = sub.add_parser("inspect", help="print a preset's layer geometry")
    p.add_argument("--preset", choices=("depl-text", "depl-table6"),
                   default="depl-text")
    p.add_argument("--config", metavar="FILE")
    return parser


def _load_run_config(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else default_config()
    return apply_overrides(
        cfg,
        smooth_d=getattr(args, "smooth_d", None),
        threshold=getattr(args, "threshold", None),
        seed=getattr(args, "seed", None),
        preset=getattr(args, "preset", None),
        band=getattr(args, "band", None),
    )


def _cmd_synth(args) -> int:
    spec = SynthSpec(subjects=args.subjects, trials=args.trials,
                     seed=args.seed, effect_size=args.effect_size,
                     duration_s=args.duration_s, baseline_s=args.baseline_s)
    manifest = generate_dataset(spec, args.out)
    print(f"wrote {len(manifest.files)} trials to {args.out} "
          f"({manifest.subjects} subjects x {manifest.trials_per_subject} trials, "
          f"effect size {args.effect_size})")
    return 0


def _cmd_preprocess(args) -> int:
    cfg = _load_run_config(args)
    values, columns, meta = pipeline.preprocess_dataset(args.data, cfg)
    pipeline.save_feature_cache(args.out, values, columns, meta)
    print(f"wrote {len(values)} feature epochs to {args.out} "
          f"(preprocess hash {meta['preprocess_hash'][:12]})")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_run_config(args)
    values, columns, meta = pipeline.features_for(args.data, cfg)
    by_subject = pipeline.epochs_by_subject(values, columns)
    epochs = [e for s in sorted(by_subject) for e in by_subject[s]]

    from .evaluation import _labels_for, confusion_counts, accuracy_f1
    from .features import apply_normalizer, epoch_matrix, fit_normalizer
    norm = fit_normalizer(epochs)
    x = epoch_matrix(apply_normalizer(norm, epochs))
    y = _labels_for(epochs, args.task)

    model = make_model(args.model, cfg.model, cfg.train, cfg.layout,
                       channel_names=tuple(meta["channel_names"]),
                       seed=cfg.train.seed)
    model.fit(x, y)
    pred = model.predict(x)
    acc, f1 = accuracy_f1(*confusion_counts(y, pred))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "kind": "train-results",
        "model": args.model,
        "task": args.task,
        "seed": cfg.train.seed,
        "config_hash": config_hash(cfg),
        "training_accuracy": acc,
        "training_f1": f1,
        "n_epochs_data": int(len(x)),
    }
    if getattr(model, "loss_curve", None) is not None:
        doc["loss_curve"] = list(model.loss_curve)
        save_params(out / f"train_{args.model}.params",
                    model.net.state_arrays())
    (out / f"train_{args.model}_{args.task}.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"training accuracy {acc:.4f}, f1 {f1:.4f} ({args.model}, {args.task})")
    return 0


def _cmd_loso(args) -> int:
    cfg = _load_run_config(args)
    values, columns, meta = pipeline.features_for(args.data, cfg)
    doc = pipeline.run_loso(args.model, cfg, values, columns, meta,
                            task=args.task, jobs=args.jobs)
    name = f"loso_{doc['label'].replace(':', '_')}"
    json_path, csv_path = pipeline.write_results(args.out, name, doc)
    s = doc["summary"]
    print(f"{doc['label']}: accuracy {s['accuracy_mean']:.4f} "
          f"(std {s['accuracy_std']:.4f}), f1 {s['f1_mean']:.4f} "
          f"over {len(doc['folds'])} folds")
    print(f"results: {json_path} and {csv_path}")
    return 0


def _cmd_compare(args) -> int:
    doc = pipeline.compare_results(args.data)
    json_path, csv_path = pipeline.write_comparison(args.out, doc)
    labels = doc["labels"]
    for i, a in enumerate(labels):
        for j, b in enumerate(labels):
            if i < j:
                print(f"{a} vs {b}: t = {doc['t'][i][j]:+.4f}, "
                      f"p = {doc['p'][i][j]:.6f}")
    print(f"comparison: {json_path} and {csv_path}")
    return 0


def _cmd_inspect(args) -> int:
    cfg = _load_run_config(args) if args.config else default_config()
    net_cfg = make_depl_config(preset=args.preset,
                               keep_p=cfg.train.keep_prob, l2=cfg.train.l2,
                               se_ratio=cfg.model.se_ratio,
                               init_std=cfg.model.init_std)
    infos = infer_layers(net_cfg)
    print(f"preset {args.preset}: input {net_cfg.input_shape}")
    print(f"{'#':>3} {'layer':<18} {'output':<14} {'params':>9} {'buffers':>8}")
    for info in infos:
        print(f"{info.index:>3} {info.spec.to_text():<18} "
              f"{str(info.out_shape):<14} {info.n_params:>9} "
              f"{info.n_buffers:>8}")
    total = param_count(net_cfg)
    buffers = sum(i.n_buffers for i in infos)
    print(f"computed trainable parameters: {total}")
    print(f"batchnorm running statistics (not trained): {buffers}")
    print(f"originally reported parameter count:        {PUBLISHED_PARAM_COUNT}")
    print("the gap is analyzed in docs/parameter_count.md")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "preprocess": _cmd_preprocess,
    "train": _cmd_train,
    "loso": _cmd_loso,
    "compare": _cmd_compare,
    "inspect": _cmd_inspect,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DeplError as exc:
        for err_type, code in _EXIT_CODES:
            if isinstance(exc, err_type):
                print(f"error: {exc}", file=sys.stderr)
                return code
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
