"""scikit-learn front end for federated DP training of the hybrid classifier."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import type_of_target
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import _rng
from .accountant import calibrate_sigma
from .dp_sgd import DpConfig
from .federation import RoundConfig, max_client_steps, partition, run_training
from .model import FeatureReducer, HybridModel


def resolve_seed(random_state):
    if random_state is None:
        return int(np.random.SeedSequence().entropy % (2**63))
    if isinstance(random_state, (int, np.integer)) and random_state >= 0:
        return int(random_state)
    raise ValueError(f"random_state must be a non-negative int or None, got {random_state!r}")


class QFLDPClassifier(ClassifierMixin, BaseEstimator):
    """Binary classifier trained by federated averaging over DP-SGD clients.

    ``fit`` fits the frozen feature reducer on the training data, splits the
    data evenly over ``n_clients`` simulated clients and runs ``rounds`` rounds
    in which ``clients_per_round`` clients each take ``local_epochs`` epochs of
    DP-SGD from the current global model; the trained copies are averaged.

    If ``target_epsilon`` is given, ``noise_multiplier`` is ignored and the
    smallest noise multiplier meeting the budget (for the most frequently
    selected client under this seed's schedule) is used instead.

    Fitted attributes: ``model_``, ``reducer_``, ``history_`` (one metrics dict
    per round), ``epsilon_``, ``noise_multiplier_``, ``client_steps_``,
    ``classes_``.
    """

    def __init__(
        self,
        n_clients=100,
        clients_per_round=5,
        local_epochs=1,
        rounds=60,
        lot_size=10,
        clip_norm=1.0,
        noise_multiplier=1.0,
        learning_rate=0.2,
        delta=1e-5,
        target_epsilon=None,
        reducer="pca",
        random_state=0,
        timing=False,
    ):
        self.n_clients = n_clients
        self.clients_per_round = clients_per_round
        self.local_epochs = local_epochs
        self.rounds = rounds
        self.lot_size = lot_size
        self.clip_norm = clip_norm
        self.noise_multiplier = noise_multiplier
        self.learning_rate = learning_rate
        self.delta = delta
        self.target_epsilon = target_epsilon
        self.reducer = reducer
        self.random_state = random_state
        self.timing = timing

    def _round_config(self):
        return RoundConfig(self.n_clients, self.clients_per_round, self.local_epochs, self.rounds)

    def _resolve_sigma(self, round_cfg, shard_size, seed):
        if self.target_epsilon is None:
            return float(self.noise_multiplier)
        probe = DpConfig(self.clip_norm, 1.0, self.lot_size, self.learning_rate)
        steps = max_client_steps(round_cfg, probe, shard_size, seed)
        return calibrate_sigma(
            self.target_epsilon, probe.sampling_rate(shard_size), steps, self.delta
        )

    def fit(self, X, y, eval_set=None):
        """Train on ``(X, y)``; ``eval_set=(X_test, y_test)`` adds per-round test metrics."""
        X, y = check_X_y(X, y, dtype=float)
        if type_of_target(y) != "binary" or len(np.unique(y)) != 2:
            raise ValueError("QFLDPClassifier needs exactly two classes")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must be in (0, 1)")
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        seed = resolve_seed(self.random_state)
        round_cfg = self._round_config()

        self.reducer_ = FeatureReducer(self.reducer, random_state=_rng.stream(seed, _rng.REDUCER))
        self.reducer_.fit(X)
        initial = HybridModel.from_reducer(self.reducer_, _rng.stream(seed, _rng.MODEL_INIT))
        shards = partition(X, y_enc, round_cfg.n_clients, _rng.stream(seed, _rng.PARTITION))

        self.noise_multiplier_ = self._resolve_sigma(round_cfg, len(shards[0]), seed)
        dp = DpConfig(self.clip_norm, self.noise_multiplier_, self.lot_size, self.learning_rate)

        test_set = None
        if eval_set is not None:
            X_test, y_test = check_X_y(*eval_set, dtype=float)
            test_set = (X_test, self._encode(y_test))
        result = run_training(
            round_cfg,
            dp,
            shards,
            initial,
            seed,
            delta=self.delta,
            test_set=test_set,
            train_set=(X, y_enc),
            timing=self.timing,
        )
        self.model_ = result.model
        self.history_ = result.history
        self.epsilon_ = result.epsilon
        self.client_steps_ = result.client_steps
        self.sampling_rate_ = dp.sampling_rate(len(shards[0]))
        self.shard_size_ = len(shards[0])
        self.n_features_in_ = X.shape[1]
        return self

    def _encode(self, y):
        y = np.asarray(y)
        idx = np.searchsorted(self.classes_, y)
        idx = np.clip(idx, 0, len(self.classes_) - 1)
        if not np.all(self.classes_[idx] == y):
            raise ValueError("labels not seen during fit")
        return idx

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        return self.model_.predict_proba(X)

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        logits = self.model_.logits(check_array(X, dtype=float))
        return logits[:, 1] - logits[:, 0]

    def predict(self, X):
        check_is_fitted(self, "model_")
        # argmax picks class 0 on ties
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
