"""Plain-text run configuration: key = value lines under [sections].

Unknown sections or keys are hard errors so a typo in a hyperparameter
name cannot silently fall back to a default. The canonical dump of the
effective configuration (after CLI overrides) is hashed into every
results file and feature cache.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, replace

from .errors import ConfigError
from .features import PreprocessConfig
from .nn.train import TrainConfig
from .topomap import ElectrodeLayout, layout_from_entries, layout_hash_text, standard_layout


@dataclass(frozen=True)
class ModelOptions:
    """Model-selection knobs shared by the CLI commands."""

    preset: str = "depl-text"
    band: str = "gamma"
    se_ratio: int = 4
    init_std: float = 0.05
    knn_k: int = 20
    logreg_lr: float = 0.1
    logreg_epochs: int = 500
    logreg_l2: float = 1e-4


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs: preprocessing, training, model, layout."""

    preprocess: PreprocessConfig
    train: TrainConfig
    model: ModelOptions
    layout: ElectrodeLayout
    label_threshold: float = 5.0


_SCHEMA = {
    "preprocess": {
        "window_len": int,
        "smooth_d": int,
        "filter_order": int,
        "threshold": float,
    },
    "train": {
        "learning_rate": float,
        "batch_size": int,
        "epochs": int,
        "beta1": float,
        "beta2": float,
        "eps": float,
        "keep_prob": float,
        "l2": float,
        "seed": int,
    },
    "model": {
        "preset": str,
        "band": str,
        "se_ratio": int,
        "init_std": float,
        "knn_k": int,
        "logreg_lr": float,
        "logreg_epochs": int,
        "logreg_l2": float,
    },
    # [layout] entries are electrode overrides, validated separately
}


def default_config() -> RunConfig:
    return RunConfig(preprocess=PreprocessConfig(), train=TrainConfig(),
                     model=ModelOptions(), layout=standard_layout())


def load_config(path) -> RunConfig:
    """Parse a config file, rejecting unknown sections and keys."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case (electrode labels)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config file {path}: {exc}") from None

    values: dict[str, dict] = {"preprocess": {}, "train": {}, "model": {}}
    layout_entries: dict[str, str] = {}
    for section in parser.sections():
        if section == "layout":
            layout_entries = dict(parser.items(section))
            continue
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            key_l = key.lower()
            if key_l not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            try:
                values[section][key_l] = _SCHEMA[section][key_l](raw)
            except ValueError:
                raise ConfigError(
                    f"bad value {raw!r} for {section}.{key_l}") from None

    pre_kwargs = {k: v for k, v in values["preprocess"].items() if k != "threshold"}
    threshold = values["preprocess"].get("threshold", 5.0)
    layout = layout_from_entries(layout_entries) if layout_entries else standard_layout()
    return RunConfig(
        preprocess=PreprocessConfig(**pre_kwargs),
        train=TrainConfig(**values["train"]),
        model=ModelOptions(**values["model"]),
        layout=layout,
        label_threshold=threshold,
    )


def apply_overrides(cfg: RunConfig, *, smooth_d=None, threshold=None,
                    seed=None, preset=None, band=None) -> RunConfig:
    """Fold CLI flags into a config; flags win over file values."""
    if smooth_d is not None:
        cfg = replace(cfg, preprocess=replace(cfg.preprocess, smooth_d=smooth_d))
    if threshold is not None:
        cfg = replace(cfg, label_threshold=threshold)
    if seed is not None:
        cfg = replace(cfg, train=replace(cfg.train, seed=seed))
    if preset is not None:
        cfg = replace(cfg, model=replace(cfg.model, preset=preset))
    if band is not None:
        cfg = replace(cfg, model=replace(cfg.model, band=band))
    return cfg


def canonical_text(cfg: RunConfig) -> str:
    """Deterministic one-line-per-key dump of the effective config."""
    lines = []
    for section, obj in (("preprocess", cfg.preprocess), ("train", cfg.train),
                         ("model", cfg.model)):
        for key in sorted(_SCHEMA[section]):
            if section == "preprocess" and key == "threshold":
                value = cfg.label_threshold
            else:
                value = getattr(obj, key)
            lines.append(f"{section}.{key} = {value!r}")
    lines.append("layout = " + layout_hash_text(cfg.layout).replace("\n", ";"))
    return "\n".join(lines)


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(canonical_text(cfg).encode()).hexdigest()


def preprocess_hash(cfg: RunConfig) -> str:
    """Hash of only the fields that determine preprocessed features."""
    text = (f"window_len={cfg.preprocess.window_len};"
            f"smooth_d={cfg.preprocess.smooth_d};"
            f"filter_order={cfg.preprocess.filter_order};"
            f"threshold={cfg.label_threshold!r}")
    return hashlib.sha256(text.encode()).hexdigest()


def layout_hash(layout: ElectrodeLayout) -> str:
    return hashlib.sha256(layout_hash_text(layout).encode()).hexdigest()
