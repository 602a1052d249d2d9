"""DP-SGD: Poisson lots, per-example clipping, Gaussian noise on the clipped sum."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import N_PARAMS, per_example_loss_and_grad


@dataclass(frozen=True)
class DpConfig:
    """Hyperparameters of one DP-SGD step.

    ``clip_norm=inf`` disables clipping, which is only allowed without noise.
    ``lot_size`` is the *expected* lot size; the update always divides by it.
    """

    clip_norm: float = 1.0
    noise_multiplier: float = 1.0
    lot_size: int = 10
    learning_rate: float = 0.2

    def __post_init__(self):
        if not self.clip_norm > 0:
            raise ValueError(f"clip_norm must be positive, got {self.clip_norm}")
        if not (self.noise_multiplier >= 0 and math.isfinite(self.noise_multiplier)):
            raise ValueError(f"noise_multiplier must be finite and >= 0, got {self.noise_multiplier}")
        if math.isinf(self.clip_norm) and self.noise_multiplier > 0:
            raise ValueError("noise requires a finite clip_norm")
        if int(self.lot_size) != self.lot_size or self.lot_size < 1:
            raise ValueError(f"lot_size must be a positive integer, got {self.lot_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")

    def sampling_rate(self, n_examples):
        return min(1.0, self.lot_size / n_examples)

    def steps_per_epoch(self, n_examples):
        return math.ceil(n_examples / self.lot_size)


def clip_gradient(g, clip_norm):
    """Scale ``g`` by ``min(1, C / ||g||)``."""
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient contains non-finite values")
    return clip_gradients(g[None, :], clip_norm)[0]


def clip_gradients(G, clip_norm):
    """Row-wise clipping of a ``(B, p)`` gradient matrix."""
    G = np.asarray(G, dtype=float)
    if not clip_norm > 0:
        raise ValueError("clip_norm must be positive")
    norms = np.linalg.norm(G, axis=1)
    with np.errstate(divide="ignore"):
        factors = np.minimum(1.0, clip_norm / norms)
    return G * factors[:, None]


def sample_lot(n_examples, q, rng):
    """Poisson sampling: each index kept independently with probability ``q``."""
    if not 0.0 < q <= 1.0:
        raise ValueError(f"sampling probability must be in (0, 1], got {q}")
    if q == 1.0:
        return np.arange(n_examples)
    return np.flatnonzero(rng.random(n_examples) < q)


def noisy_clipped_sum(grads, cfg, rng):
    """Sum of clipped rows plus N(0, (sigma C)^2 I) noise."""
    total = np.zeros(N_PARAMS)
    if len(grads):
        total = clip_gradients(grads, cfg.clip_norm).sum(axis=0)
    if cfg.noise_multiplier > 0:
        total = total + rng.normal(0.0, cfg.noise_multiplier * cfg.clip_norm, size=N_PARAMS)
    return total


def dp_sgd_step(model, X_lot, y_lot, cfg, rng):
    """One private update on an already-sampled lot (which may be empty)."""
    if len(y_lot):
        _, grads = per_example_loss_and_grad(model, X_lot, y_lot)
    else:
        grads = np.zeros((0, N_PARAMS))
    update = cfg.learning_rate / cfg.lot_size * noisy_clipped_sum(grads, cfg, rng)
    params = model.params - update
    if not np.all(np.isfinite(params)):
        raise FloatingPointError("DP-SGD update produced non-finite parameters")
    return model.with_params(params)


def run_dp_sgd(model, X, y, cfg, n_steps, rng, ledger=None, on_step=None):
    """``n_steps`` DP-SGD steps with Poisson lots at rate ``L / N``.

    Lot sampling and noise share ``rng`` in a fixed order (lot, then noise), so a
    given stream always yields the same trajectory.  Returns the model and the
    ledger advanced by one step per update.
    """
    n = len(y)
    q = cfg.sampling_rate(n)
    for step in range(n_steps):
        lot = sample_lot(n, q, rng)
        model = dp_sgd_step(model, X[lot], y[lot], cfg, rng)
        if ledger is not None:
            ledger = ledger.accumulate(1)
        if on_step is not None:
            on_step(step, model)
    return model, ledger
