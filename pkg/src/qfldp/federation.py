"""Federated orchestration: partition, sample clients, local DP-SGD, average.

Execution is in-process and sequential.  Each client's randomness comes from a
stream keyed by ``(seed, round, client)``, so the order in which clients run
never changes the result.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .accountant import PrivacyLedger
from .dp_sgd import run_dp_sgd
from .model import HybridModel, evaluate, example_losses

log = logging.getLogger(__name__)

METRIC_FIELDS = ("round", "epsilon", "train_loss", "test_loss", "test_accuracy", "wall_seconds")


@dataclass(frozen=True)
class RoundConfig:
    n_clients: int = 100
    clients_per_round: int = 5
    local_epochs: int = 1
    rounds: int = 60

    def __post_init__(self):
        if self.n_clients < 1:
            raise ValueError("n_clients must be >= 1")
        if not 1 <= self.clients_per_round <= self.n_clients:
            raise ValueError("clients_per_round must be in [1, n_clients]")
        if self.local_epochs < 1:
            raise ValueError("local_epochs must be >= 1")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")


@dataclass(eq=False)
class ClientShard:
    client_id: int
    X: np.ndarray
    y: np.ndarray
    indices: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.y)


def partition(X, y, n_clients, rng):
    """Random split into ``n_clients`` equal shards; the remainder is dropped.

    Shards keep the original relative order of their examples, so a single
    shard is the whole dataset in its original order.
    """
    X = np.asarray(X)
    y = np.asarray(y)
    m = len(y)
    if n_clients < 1:
        raise ValueError("n_clients must be >= 1")
    if n_clients > m:
        raise ValueError(f"cannot split {m} examples among {n_clients} clients")
    size = m // n_clients
    dropped = m - size * n_clients
    if dropped:
        msg = f"dropping {dropped} example(s) so that {n_clients} shards hold {size} each"
        warnings.warn(msg, stacklevel=2)
        log.warning(msg)
    perm = rng.permutation(m)
    shards = []
    for k in range(n_clients):
        idx = np.sort(perm[k * size : (k + 1) * size])
        shards.append(ClientShard(k, X[idx], y[idx], idx))
    return shards


def sample_clients(n_clients, n_selected, rng):
    """Uniform sample of distinct client ids, sorted."""
    if not 1 <= n_selected <= n_clients:
        raise ValueError(f"cannot select {n_selected} of {n_clients} clients")
    return np.sort(rng.choice(n_clients, size=n_selected, replace=False))


def client_schedule(round_cfg, seed):
    """Client ids selected in every round; depends only on the seed."""
    return [
        sample_clients(
            round_cfg.n_clients,
            round_cfg.clients_per_round,
            _rng.stream(seed, _rng.CLIENT_SAMPLING, r),
        )
        for r in range(round_cfg.rounds)
    ]


def client_rng(seed, round_index, client_id):
    return _rng.stream(seed, _rng.CLIENT_UPDATE, round_index, client_id)


def client_update(shard, global_model, epochs, dp, ledger, rng):
    """Local training: ``epochs * ceil(N / L)`` DP-SGD steps from a copy of the global model."""
    if len(shard) == 0:
        raise ValueError("client shard is empty")
    n_steps = epochs * dp.steps_per_epoch(len(shard))
    return run_dp_sgd(global_model.copy(), shard.X, shard.y, dp, n_steps, rng, ledger)


def aggregate(models):
    """Average trainable parameters; reducers must match exactly."""
    models = list(models)
    if not models:
        raise ValueError("nothing to aggregate")
    first = models[0]
    for m in models[1:]:
        if not first.same_reducer(m):
            raise ValueError("cannot average models with different reducers")
    params = np.mean(np.stack([m.params for m in models]), axis=0)
    return first.with_params(params)


@dataclass
class TrainingResult:
    model: HybridModel
    history: list
    epsilon: float
    client_steps: np.ndarray
    sigma: float


def max_client_steps(round_cfg, dp, shard_size, seed):
    """Worst-case per-client DP-SGD step count implied by the seed's schedule."""
    counts = np.zeros(round_cfg.n_clients, dtype=int)
    for chosen in client_schedule(round_cfg, seed):
        counts[chosen] += 1
    per_round = round_cfg.local_epochs * dp.steps_per_epoch(shard_size)
    return int(counts.max(initial=0)) * per_round


def run_training(
    round_cfg,
    dp,
    shards,
    initial_model,
    seed,
    delta=1e-5,
    test_set=None,
    train_set=None,
    timing=False,
    on_round=None,
):
    """Federated DP training.

    Each round: sample clients, run :func:`client_update` on each from the same
    global snapshot, average the results.  The reported epsilon is the largest
    per-client epsilon, since a client's data is touched only by its own steps.
    """
    shard_size = len(shards[0])
    if any(len(s) != shard_size for s in shards):
        raise ValueError("all shards must have the same size")
    if len(shards) != round_cfg.n_clients:
        raise ValueError("number of shards must equal n_clients")
    q = dp.sampling_rate(shard_size)
    ledgers = [PrivacyLedger(q, dp.noise_multiplier, delta) for _ in shards]
    model = initial_model
    history = []
    start = time.perf_counter()
    schedule = client_schedule(round_cfg, seed)
    for r, chosen in enumerate(schedule):
        locals_ = []
        for k in chosen:
            local, ledgers[k] = client_update(
                shards[k], model, round_cfg.local_epochs, dp, ledgers[k], client_rng(seed, r, k)
            )
            locals_.append(local)
        model = aggregate(locals_)
        if not np.all(np.isfinite(model.params)):
            raise FloatingPointError(f"non-finite parameters after round {r}")
        row = {"round": r + 1, "epsilon": _global_epsilon(ledgers)}
        if train_set is not None:
            row["train_loss"] = float(np.mean(example_losses(model, *train_set)))
        else:
            row["train_loss"] = float(
                np.mean(np.concatenate([example_losses(model, shards[k].X, shards[k].y) for k in chosen]))
            )
        if test_set is not None:
            row["test_loss"], row["test_accuracy"] = evaluate(model, *test_set)
        else:
            row["test_loss"], row["test_accuracy"] = math.nan, math.nan
        row["wall_seconds"] = time.perf_counter() - start if timing else 0.0
        history.append(row)
        if on_round is not None:
            on_round(row, model)
    return TrainingResult(
        model,
        history,
        _global_epsilon(ledgers),
        np.array([lg.steps for lg in ledgers]),
        dp.noise_multiplier,
    )


def _global_epsilon(ledgers):
    worst = max(ledgers, key=lambda lg: lg.steps)
    return worst.epsilon()
