import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfldp.dp_sgd import DpConfig, dp_sgd_step
from qfldp.model import (
    N_PARAMS,
    FeatureReducer,
    HybridModel,
    evaluate,
    example_losses,
    loss_and_gradient,
    model_forward,
    per_example_loss_and_grad,
)

import oracles

H = 1e-5


def random_model(rng, d=6, scale=1.0):
    reducer = FeatureReducer().fit(rng.normal(size=(50, d)))
    model = HybridModel.from_reducer(reducer, rng)
    return model.with_params(rng.uniform(-np.pi, np.pi, N_PARAMS) * scale)


def full_finite_difference(model, x, label):
    base = model.params
    grad = np.empty(N_PARAMS)
    for j in range(N_PARAMS):
        up, down = base.copy(), base.copy()
        up[j] += H
        down[j] -= H
        grad[j] = (
            loss_and_gradient(model.with_params(up), x, label)[0]
            - loss_and_gradient(model.with_params(down), x, label)[0]
        ) / (2 * H)
    return grad


def test_zero_head_gives_uniform_probabilities():
    rng = np.random.default_rng(0)
    model = random_model(rng)
    params = model.params
    params[12:] = 0
    model = model.with_params(params)
    for _ in range(5):
        np.testing.assert_array_equal(model_forward(model, rng.normal(size=6)), [0.5, 0.5])


def test_probabilities_normalized():
    rng = np.random.default_rng(1)
    for _ in range(100):
        p = model_forward(random_model(rng, scale=3), rng.normal(scale=5, size=6))
        assert np.all(p >= 0)
        assert abs(p.sum() - 1) <= 1e-12


def test_forward_matches_oracle_composition():
    rng = np.random.default_rng(2)
    model = random_model(rng)
    x = rng.normal(size=6)
    expected = oracles.hybrid_probabilities(
        x, model.projection, model.offset, model.scale, model.angles, model.weights, model.bias
    )
    np.testing.assert_allclose(model_forward(model, x), expected, rtol=0, atol=1e-12)


@pytest.mark.parametrize("label", [0, 1])
def test_equal_logits_loss_is_ln2(label):
    rng = np.random.default_rng(3)
    model = random_model(rng)
    params = model.params
    params[12:] = 0
    loss, _ = loss_and_gradient(model.with_params(params), rng.normal(size=6), label)
    assert loss == pytest.approx(math.log(2), abs=1e-15)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(4)
    for _ in range(50):
        model = random_model(rng)
        x, label = rng.normal(scale=2, size=6), int(rng.integers(2))
        _, grad = loss_and_gradient(model, x, label)
        np.testing.assert_allclose(grad, full_finite_difference(model, x, label), rtol=0, atol=1e-5)


def test_batched_gradients_match_single():
    rng = np.random.default_rng(5)
    model = random_model(rng)
    X, y = rng.normal(size=(9, 6)), rng.integers(0, 2, 9)
    losses, grads = per_example_loss_and_grad(model, X, y)
    for i in range(9):
        loss, grad = loss_and_gradient(model, X[i], y[i])
        assert losses[i] == pytest.approx(loss, abs=1e-15)
        np.testing.assert_allclose(grads[i], grad, rtol=0, atol=1e-15)


@pytest.mark.parametrize("label", [0, 1])
def test_confident_correct_prediction_is_cheap(label):
    rng = np.random.default_rng(6)
    model = random_model(rng)
    params = model.params
    params[12:16] = rng.uniform(-0.5, 0.5, 4)
    params[16:] = 0
    params[16 + label] = 10.0
    loss, grad = loss_and_gradient(model.with_params(params), rng.normal(size=6), label)
    assert loss < 0.01
    assert np.linalg.norm(grad) < 0.1


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 1))
def test_loss_nonnegative(seed, label):
    rng = np.random.default_rng(seed)
    loss, _ = loss_and_gradient(random_model(rng, scale=5), rng.normal(scale=4, size=6), label)
    assert loss >= 0


def test_evaluate_always_correct_model():
    # with x1..x3 = 0 the CNOT ring copies qubit 0 down the chain, so
    # <Z_1> = cos(arctan x0): about 0.995 for x0 = 0.1 and 0.447 for x0 = 2
    rng = np.random.default_rng(7)
    X = np.zeros((200, 4))
    X[:, 0] = np.where(rng.random(200) < 0.5, 2.0, 0.1) + 0.01 * rng.random(200)
    y = (X[:, 0] > 1).astype(int)
    model = HybridModel(np.eye(4), np.zeros(4), np.ones(4), np.zeros(12), [[0, 30], [0, -30]], [-22, 22])
    assert evaluate(model, X, y)[1] == 1.0


def test_evaluate_ties_go_to_label_zero():
    rng = np.random.default_rng(8)
    model = random_model(rng)
    params = model.params
    params[12:] = 0
    X, y = rng.normal(size=(10, 6)), np.array([0, 1] * 5)
    loss, acc = evaluate(model.with_params(params), X, y)
    assert acc == 0.5
    assert loss == pytest.approx(math.log(2), abs=1e-15)


def test_evaluate_mean_loss_is_mean_of_example_losses():
    rng = np.random.default_rng(9)
    model = random_model(rng)
    X, y = rng.normal(size=(40, 6)), rng.integers(0, 2, 40)
    singles = [loss_and_gradient(model, X[i], y[i])[0] for i in range(40)]
    assert evaluate(model, X, y)[0] == pytest.approx(np.mean(singles), abs=1e-12)
    np.testing.assert_allclose(example_losses(model, X, y), singles, rtol=0, atol=1e-14)


def test_evaluate_rejects_empty():
    model = random_model(np.random.default_rng(10))
    with pytest.raises(ValueError):
        evaluate(model, np.zeros((0, 6)), np.zeros(0, dtype=int))


@pytest.mark.parametrize("bad", [np.zeros(5), np.full(6, np.nan)])
def test_dimension_and_finiteness_checks(bad):
    model = random_model(np.random.default_rng(11))
    with pytest.raises(ValueError):
        model_forward(model, bad)


def test_label_validation():
    model = random_model(np.random.default_rng(12))
    with pytest.raises(ValueError):
        loss_and_gradient(model, np.zeros(6), 2)


def test_parameter_layout():
    model = random_model(np.random.default_rng(13))
    p = model.params
    assert p.shape == (18,)
    np.testing.assert_array_equal(p[:12], model.angles.ravel())
    np.testing.assert_array_equal(p[12:16], model.weights.ravel())
    np.testing.assert_array_equal(p[16:], model.bias)
    with pytest.raises(ValueError):
        model.with_params(np.zeros(17))


def test_reducer_frozen_during_training():
    rng = np.random.default_rng(14)
    model = random_model(rng)
    before = model.to_text().splitlines()[:5]
    X, y = rng.normal(size=(30, 6)), rng.integers(0, 2, 30)
    cfg = DpConfig(clip_norm=1.0, noise_multiplier=1.0, lot_size=10, learning_rate=0.5)
    for _ in range(20):
        model = dp_sgd_step(model, X, y, cfg, rng)
    assert model.to_text().splitlines()[:5] == before
    with pytest.raises(ValueError):
        model.projection[0, 0] = 1.0


def test_serialization_round_trip(tmp_path):
    model = random_model(np.random.default_rng(15))
    path = tmp_path / "model.txt"
    model.save(path)
    loaded = HybridModel.load(path)
    for name in ("projection", "offset", "scale", "angles", "weights", "bias"):
        np.testing.assert_array_equal(getattr(loaded, name), getattr(model, name))
    assert loaded.to_text() == model.to_text()


@pytest.mark.parametrize("text", ["", "something else\n", "qfldp-hybrid-model 1\nn_features 2\n"])
def test_malformed_model_file(text):
    with pytest.raises(ValueError):
        HybridModel.from_text(text)


class TestFeatureReducer:
    def test_pca_output_is_one_sided_with_shared_scale(self):
        rng = np.random.default_rng(16)
        X = rng.normal(size=(500, 8)) * np.arange(1, 9)
        Z = FeatureReducer().fit_transform(X)
        assert Z.shape == (500, 4)
        np.testing.assert_allclose(Z.min(axis=0), 0.0, atol=1e-12)
        spans = Z.max(axis=0) - Z.min(axis=0)
        assert spans.max() == pytest.approx(3.0)
        # the leading component is the widest one
        assert np.argmax(spans) == 0

    def test_pca_recovers_dominant_direction(self):
        rng = np.random.default_rng(17)
        u = rng.normal(size=10)
        u /= np.linalg.norm(u)
        X = rng.normal(size=(1000, 10)) + np.outer(rng.choice([-3, 3], 1000), u)
        reducer = FeatureReducer().fit(X)
        assert abs(reducer.projection_[:, 0] @ u) > 0.99

    def test_random_projection_is_seeded(self):
        X = np.random.default_rng(18).normal(size=(50, 6))
        a = FeatureReducer("random", random_state=3).fit(X).projection_
        b = FeatureReducer("random", random_state=3).fit(X).projection_
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize(
        "kwargs, X",
        [
            ({"method": "nope"}, np.ones((5, 6))),
            ({}, np.ones((5, 3))),
            ({"feature_range": (1.0, 0.0)}, np.ones((5, 6))),
        ],
    )
    def test_invalid(self, kwargs, X):
        with pytest.raises(ValueError):
            FeatureReducer(**kwargs).fit(X)

    def test_transform_checks_width(self):
        reducer = FeatureReducer().fit(np.random.default_rng(19).normal(size=(20, 6)))
        with pytest.raises(ValueError):
            reducer.transform(np.zeros((2, 5)))
