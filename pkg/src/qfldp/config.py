"""Experiment configuration as a flat ``key=value`` text file."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional_float(text):
    text = text.strip()
    return None if text.lower() in ("", "none") else float(text)


@dataclass(frozen=True)
class TrainingConfig:
    """Every knob that affects a training run.

    ``source`` is ``"synthetic"`` or the path of a feature CSV; the
    ``n_samples``/``n_features``/``separation`` keys only apply to synthetic
    data.  ``target_epsilon``, when set, replaces ``noise_multiplier`` by the
    calibrated value.
    """

    source: str = "synthetic"
    n_samples: int = 28750
    n_features: int = 16
    separation: float = 6.0
    test_fraction: float = 0.2
    n_clients: int = 100
    clients_per_round: int = 5
    local_epochs: int = 1
    rounds: int = 60
    clip_norm: float = 1.0
    noise_multiplier: float = 1.0
    lot_size: int = 10
    learning_rate: float = 0.2
    target_epsilon: float | None = None
    delta: float = 1e-5
    reducer: str = "pca"
    seed: int = 0
    timing: bool = False
    output_dir: str = "runs/default"

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must be in (0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must be in (0, 1)")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if self.target_epsilon is not None and not self.target_epsilon > 0:
            raise ConfigError("target_epsilon must be positive")
        if self.reducer not in ("pca", "random"):
            raise ConfigError(f"reducer must be 'pca' or 'random', got {self.reducer!r}")
        for name in ("n_samples", "n_features", "n_clients", "clients_per_round",
                     "local_epochs", "lot_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.rounds < 0:
            raise ConfigError("rounds must be >= 0")
        if self.clients_per_round > self.n_clients:
            raise ConfigError("clients_per_round cannot exceed n_clients")
        if not self.clip_norm > 0:
            raise ConfigError("clip_norm must be positive")
        if not (self.noise_multiplier >= 0 and math.isfinite(self.noise_multiplier)):
            raise ConfigError("noise_multiplier must be finite and >= 0")
        if math.isinf(self.clip_norm) and (self.noise_multiplier > 0 or self.target_epsilon):
            raise ConfigError("noise requires a finite clip_norm")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    def override(self, **values):
        """Copy with string or typed values replacing fields; ``None`` entries are skipped."""
        parsed = {k: _coerce(k, v) for k, v in values.items() if v is not None}
        try:
            return replace(self, **parsed)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_text(self, extra=None):
        """Serialize as ``key=value`` lines; ``extra`` entries are appended verbatim."""
        items = list(asdict(self).items()) + list((extra or {}).items())
        return "".join(f"{k}={_format(v)}\n" for k, v in items)

    @classmethod
    def from_text(cls, text, ignore=()):
        return cls().override(**parse_values(text, ignore))

    @classmethod
    def load(cls, path, ignore=()):
        return cls.from_text(read_text(path), ignore)


def read_text(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def parse_values(text, ignore=()):
    """Raw ``key -> value`` strings from ``key=value`` lines.

    Blank lines and ``#`` comments are skipped, as are keys in ``ignore``
    (e.g. the result fields of a manifest).
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value")
        if key in ignore:
            continue
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


_PARSERS = {
    "float | None": _parse_optional_float,
    "int": int,
    "float": float,
    "str": str,
    "bool": _parse_bool,
}


def _coerce(key, value):
    types = {f.name: f.type for f in fields(TrainingConfig)}
    if key not in types:
        raise ConfigError(f"unknown config key {key!r}")
    if not isinstance(value, str):
        return value
    try:
        return _PARSERS[types[key]](value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)
