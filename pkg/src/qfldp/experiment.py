"""Run configured experiments and write metrics, model and manifest files."""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass

from sklearn.model_selection import train_test_split

from . import _rng
from .config import ConfigError, TrainingConfig
from .data import DataFormatError, generate_synthetic, load_features_csv
from .estimator import QFLDPClassifier
from .federation import METRIC_FIELDS

log = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
MODEL_FILE = "model.txt"
MANIFEST_FILE = "manifest.txt"

# manifest keys that record results rather than inputs
RESULT_KEYS = (
    "final_epsilon",
    "resolved_noise_multiplier",
    "sampling_rate",
    "shard_size",
    "max_client_steps",
    "final_test_accuracy",
)

# privacy budget shared by every run of the epoch sweep
EPOCH_SWEEP_EPSILON = 5.0

# name -> (base overrides, [(subdirectory, per-run overrides), ...])
PRESETS = {
    "paper-shape": ({}, [("", {})]),
    "sigma-sweep": ({}, [(f"sigma-{s:g}", {"noise_multiplier": s}) for s in (0.15, 1.0, 4.0)]),
    "epoch-sweep": (
        {"target_epsilon": EPOCH_SWEEP_EPSILON},
        [(f"epochs-{t}", {"local_epochs": t}) for t in (1, 2, 4)],
    ),
    "non-dp": ({"noise_multiplier": 0.0, "clip_norm": math.inf}, [("", {})]),
}


@dataclass
class ExperimentResult:
    config: TrainingConfig
    classifier: QFLDPClassifier
    output_dir: str

    @property
    def history(self):
        return self.classifier.history_

    @property
    def epsilon(self):
        return self.classifier.epsilon_


def load_dataset(config):
    """Train/test arrays for ``config``: synthetic or from a feature CSV, stratified split."""
    if config.source == "synthetic":
        if config.n_samples < 2 or config.n_features < 4:
            raise ConfigError("synthetic data needs n_samples >= 2 and n_features >= 4")
        data = generate_synthetic(
            config.n_samples,
            config.n_features,
            config.separation,
            _rng.stream(config.seed, _rng.SYNTHETIC_DATA),
        )
    else:
        data = load_features_csv(config.source)
    if len(data) == 0:
        raise DataFormatError(f"{config.source}: dataset is empty")
    split_seed = int(_rng.stream(config.seed, _rng.SPLIT).integers(2**31))
    try:
        return train_test_split(
            data.X,
            data.y,
            test_size=config.test_fraction,
            random_state=split_seed,
            stratify=data.y,
        )
    except ValueError as exc:
        raise DataFormatError(f"cannot split dataset: {exc}") from None


def make_classifier(config):
    return QFLDPClassifier(
        n_clients=config.n_clients,
        clients_per_round=config.clients_per_round,
        local_epochs=config.local_epochs,
        rounds=config.rounds,
        lot_size=config.lot_size,
        clip_norm=config.clip_norm,
        noise_multiplier=config.noise_multiplier,
        learning_rate=config.learning_rate,
        delta=config.delta,
        target_epsilon=config.target_epsilon,
        reducer=config.reducer,
        random_state=config.seed,
        timing=config.timing,
    )


def run_experiment(config, output_dir=None):
    """Train per ``config`` and write ``metrics.csv``, ``model.txt``, ``manifest.txt``."""
    output_dir = output_dir or config.output_dir
    X_train, X_test, y_train, y_test = load_dataset(config)
    clf = make_classifier(config)
    clf.fit(X_train, y_train, eval_set=(X_test, y_test))

    os.makedirs(output_dir, exist_ok=True)
    write_metrics_csv(os.path.join(output_dir, METRICS_FILE), clf.history_)
    clf.model_.save(os.path.join(output_dir, MODEL_FILE))
    final_acc = clf.history_[-1]["test_accuracy"] if clf.history_ else math.nan
    extra = {
        "final_epsilon": clf.epsilon_,
        "resolved_noise_multiplier": clf.noise_multiplier_,
        "sampling_rate": clf.sampling_rate_,
        "shard_size": clf.shard_size_,
        "max_client_steps": int(clf.client_steps_.max()),
        "final_test_accuracy": final_acc,
    }
    manifest = config.override(output_dir=output_dir).to_text(extra)
    with open(os.path.join(output_dir, MANIFEST_FILE), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(manifest)
    log.info("%s: epsilon=%.4g accuracy=%.4f", output_dir, clf.epsilon_, final_acc)
    return ExperimentResult(config, clf, output_dir)


def preset_base(name):
    """Overrides that preset ``name`` applies before config files and flags."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return dict(PRESETS[name][0])


def preset_configs(name, base):
    """One config per run of preset ``name``; sweep values override ``base``.

    Runs of a sweep write to subdirectories of ``base.output_dir``.
    """
    preset_base(name)
    return [
        base.override(**overrides, output_dir=os.path.join(base.output_dir, sub) if sub else base.output_dir)
        for sub, overrides in PRESETS[name][1]
    ]


def write_metrics_csv(path, history):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRIC_FIELDS)
        for row in history:
            writer.writerow(
                [row["round"]] + [format(float(row[k]), ".17g") for k in METRIC_FIELDS[1:]]
            )


def read_metrics_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            {k: int(v) if k == "round" else float(v) for k, v in row.items()}
            for row in reader
        ]


def read_manifest(path):
    """Config stored in a manifest (result keys dropped)."""
    return TrainingConfig.load(path, ignore=RESULT_KEYS)
