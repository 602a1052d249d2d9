"""Hybrid classifier: frozen feature reducer -> VQC -> affine head -> softmax.

Trainable parameters are flattened in a fixed order::

    [vqc angles (4x3, row-major) | head weights (2x2, row-major) | head bias (2)]

for 18 entries in total.  ``head weights[c, k]`` maps VQC output ``k`` to class
logit ``c``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, softmax
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import vqc

N_REDUCED = vqc.N_QUBITS
N_CLASSES = 2
N_PARAMS = vqc.N_ANGLES + N_CLASSES * vqc.N_OUTPUTS + N_CLASSES
_ANGLE_SLICE = slice(0, vqc.N_ANGLES)
_WEIGHT_SLICE = slice(vqc.N_ANGLES, vqc.N_ANGLES + N_CLASSES * vqc.N_OUTPUTS)
_BIAS_SLICE = slice(N_PARAMS - N_CLASSES, N_PARAMS)

_FORMAT_HEADER = "qfldp-hybrid-model 1"


class FeatureReducer(TransformerMixin, BaseEstimator):
    """Fixed linear map to 4 features, shifted and scaled into ``feature_range``.

    Each output is shifted so its minimum over the fit data sits at the lower
    end of ``feature_range``; all outputs share one scale, chosen so the widest
    output spans the whole range.

    ``method="pca"`` projects onto the leading principal directions of the fit
    data; ``method="random"`` uses a Gaussian random projection drawn from
    ``random_state``.  Neither looks at labels.  The output range is one-sided
    (non-negative by default) because the circuit is an even function of its
    input: features symmetric about zero would make mirrored classes
    indistinguishable.
    """

    def __init__(self, method="pca", feature_range=(0.0, 3.0), random_state=None):
        self.method = method
        self.feature_range = feature_range
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        n, d = X.shape
        if d < N_REDUCED:
            raise ValueError(f"need at least {N_REDUCED} input features, got {d}")
        if self.method == "pca":
            centered = X - X.mean(axis=0)
            _, _, vt = np.linalg.svd(centered, full_matrices=False)
            comps = vt[:N_REDUCED]
            # deterministic sign: largest-magnitude loading positive
            signs = np.sign(comps[np.arange(N_REDUCED), np.argmax(np.abs(comps), axis=1)])
            signs[signs == 0] = 1.0
            projection = (comps * signs[:, None]).T
        elif self.method == "random":
            rng = np.random.default_rng(self.random_state)
            projection = rng.normal(size=(d, N_REDUCED)) / np.sqrt(d)
        else:
            raise ValueError(f"unknown reducer method {self.method!r}")
        lo, hi = self.feature_range
        if not hi > lo:
            raise ValueError("feature_range must be increasing")
        proj = X @ projection
        pmin = proj.min(axis=0)
        widest = float((proj.max(axis=0) - pmin).max())
        if widest == 0:
            widest = 1.0
        self.projection_ = projection
        # reduce(x) = (x @ projection - offset) / scale; one shared scale keeps the
        # relative spread of the outputs, so low-variance directions stay near `lo`
        self.scale_ = np.full(N_REDUCED, widest / (hi - lo))
        self.offset_ = pmin - lo * self.scale_
        self.n_features_in_ = d
        return self

    def transform(self, X):
        check_is_fitted(self, "projection_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        return (X @ self.projection_ - self.offset_) / self.scale_


@dataclass(eq=False)
class HybridModel:
    """Frozen reducer constants plus the 18 trainable parameters."""

    projection: np.ndarray
    offset: np.ndarray
    scale: np.ndarray
    angles: np.ndarray
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.projection = np.array(self.projection, dtype=float)
        if self.projection.ndim != 2 or self.projection.shape[1] != N_REDUCED:
            raise ValueError(f"projection must be (d, {N_REDUCED})")
        self.offset = np.array(self.offset, dtype=float).reshape(N_REDUCED)
        self.scale = np.array(self.scale, dtype=float).reshape(N_REDUCED)
        for arr in (self.projection, self.offset, self.scale):
            arr.setflags(write=False)
        self.angles = vqc.check_angles(self.angles).copy()
        self.weights = np.array(self.weights, dtype=float).reshape(N_CLASSES, vqc.N_OUTPUTS)
        self.bias = np.array(self.bias, dtype=float).reshape(N_CLASSES)

    @classmethod
    def from_reducer(cls, reducer, rng):
        """Fresh model around a fitted :class:`FeatureReducer`."""
        check_is_fitted(reducer, "projection_")
        return cls(
            reducer.projection_,
            reducer.offset_,
            reducer.scale_,
            vqc.init_angles(rng),
            rng.uniform(-0.5, 0.5, size=(N_CLASSES, vqc.N_OUTPUTS)),
            np.zeros(N_CLASSES),
        )

    @property
    def n_features(self):
        return self.projection.shape[0]

    @property
    def params(self):
        """Flat copy of the trainable parameters."""
        return np.concatenate([self.angles.ravel(), self.weights.ravel(), self.bias])

    def with_params(self, params):
        params = np.asarray(params, dtype=float)
        if params.shape != (N_PARAMS,):
            raise ValueError(f"expected {N_PARAMS} parameters, got shape {params.shape}")
        return HybridModel(
            self.projection,
            self.offset,
            self.scale,
            params[_ANGLE_SLICE].reshape(vqc.N_QUBITS, 3),
            params[_WEIGHT_SLICE].reshape(N_CLASSES, vqc.N_OUTPUTS),
            params[_BIAS_SLICE],
        )

    def copy(self):
        return self.with_params(self.params)

    def same_reducer(self, other):
        return (
            np.array_equal(self.projection, other.projection)
            and np.array_equal(self.offset, other.offset)
            and np.array_equal(self.scale, other.scale)
        )

    def reduce(self, X):
        X = _check_features(X, self.n_features)
        return (X @ self.projection - self.offset) / self.scale

    def logits(self, X):
        q = vqc.forward_batch(self.reduce(X), self.angles)
        return q @ self.weights.T + self.bias

    def predict_proba(self, X):
        return softmax(self.logits(X), axis=-1)

    def to_text(self):
        fmt = lambda arr: " ".join(format(v, ".17g") for v in np.ravel(arr))  # noqa: E731
        lines = [
            _FORMAT_HEADER,
            f"n_features {self.n_features}",
            f"projection {fmt(self.projection)}",
            f"offset {fmt(self.offset)}",
            f"scale {fmt(self.scale)}",
            f"angles {fmt(self.angles)}",
            f"weights {fmt(self.weights)}",
            f"bias {fmt(self.bias)}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != _FORMAT_HEADER:
            raise ValueError("not a hybrid model file")
        fields = {}
        for ln in lines[1:]:
            key, _, rest = ln.partition(" ")
            fields[key] = rest.split()
        try:
            d = int(fields["n_features"][0])
            values = {
                k: np.array([float(v) for v in fields[k]])
                for k in ("projection", "offset", "scale", "angles", "weights", "bias")
            }
        except (KeyError, IndexError, ValueError) as exc:
            raise ValueError(f"malformed model file: {exc}") from None
        return cls(
            values["projection"].reshape(d, N_REDUCED),
            values["offset"],
            values["scale"],
            values["angles"],
            values["weights"],
            values["bias"],
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def _check_features(X, n_features):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features per example, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    return X


def _check_labels(y, n):
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {y.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return y.astype(int)


def model_forward(model, features):
    """Class probabilities for one feature vector."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 1:
        raise ValueError("model_forward takes one example; use predict_proba for batches")
    return model.predict_proba(features)[0]


def per_example_loss_and_grad(model, X, y):
    """Cross-entropy losses ``(B,)`` and their parameter gradients ``(B, 18)``."""
    X = _check_features(X, model.n_features)
    y = _check_labels(y, X.shape[0])
    q, jac = vqc.forward_and_jacobian(model.reduce(X), model.angles)
    logits = q @ model.weights.T + model.bias
    logp = log_softmax(logits, axis=-1)
    idx = np.arange(len(y))
    losses = -logp[idx, y]
    dlogits = np.exp(logp)
    dlogits[idx, y] -= 1.0
    dq = dlogits @ model.weights
    grads = np.empty((len(y), N_PARAMS))
    grads[:, _ANGLE_SLICE] = np.einsum("bk,bkj->bj", dq, jac)
    grads[:, _WEIGHT_SLICE] = (dlogits[:, :, None] * q[:, None, :]).reshape(len(y), -1)
    grads[:, _BIAS_SLICE] = dlogits
    return losses, grads


def loss_and_gradient(model, features, label):
    """Loss ``-log p_label`` and its 18-entry gradient for one example."""
    features = np.asarray(features, dtype=float)
    losses, grads = per_example_loss_and_grad(model, features[None, :], [label])
    return float(losses[0]), grads[0]


def example_losses(model, X, y):
    X = _check_features(X, model.n_features)
    y = _check_labels(y, X.shape[0])
    logp = log_softmax(model.logits(X), axis=-1)
    return -logp[np.arange(len(y)), y]


def evaluate(model, X, y):
    """(mean cross-entropy, accuracy); argmax ties go to class 0."""
    X = _check_features(X, model.n_features)
    if X.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    y = _check_labels(y, X.shape[0])
    logp = log_softmax(model.logits(X), axis=-1)
    loss = float(np.mean(-logp[np.arange(len(y)), y]))
    acc = float(np.mean(np.argmax(logp, axis=1) == y))
    return loss, acc
