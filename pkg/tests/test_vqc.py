import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfldp import vqc
from qfldp.statevector import expectation_z, zero_state

import oracles

H = 1e-5


def finite_difference(x, angles, output_index):
    flat = np.asarray(angles, dtype=float).ravel()
    grad = np.empty(vqc.N_ANGLES)
    for j in range(vqc.N_ANGLES):
        up, down = flat.copy(), flat.copy()
        up[j] += H
        down[j] -= H
        grad[j] = (vqc.vqc_forward(x, up)[output_index] - vqc.vqc_forward(x, down)[output_index]) / (2 * H)
    return grad


def test_encode_zero_is_ground_state():
    assert vqc.encode(np.zeros(4)) == zero_state(4)


@pytest.mark.parametrize("x", [1.0, 2.0])
def test_encode_single_feature_expectation(x):
    state = vqc.encode([x, 0, 0, 0])
    assert expectation_z(state, 0) == pytest.approx(math.cos(math.atan(x)), abs=1e-15)


@pytest.mark.parametrize("x", [[1, 1, 1, 1], [0.3, -2.0, 0.7, 5.0]])
def test_encode_matches_kronecker_oracle(x):
    per_qubit = [oracles.rz(math.atan(v**2)) @ oracles.ry(math.atan(v)) @ np.array([1, 0]) for v in x]
    expected = per_qubit[0]
    for amp in per_qubit[1:]:
        expected = np.kron(expected, amp)
    np.testing.assert_allclose(vqc.encode(x).amplitudes, expected, rtol=0, atol=1e-14)


def test_forward_at_origin():
    assert vqc.vqc_forward(np.zeros(4), np.zeros((4, 3))) == (1.0, 1.0)


def test_forward_bounded():
    rng = np.random.default_rng(0)
    for _ in range(100):
        out = vqc.vqc_forward(rng.normal(scale=3, size=4), rng.uniform(-np.pi, np.pi, 12))
        assert all(-1.0 <= v <= 1.0 for v in out)


def test_forward_matches_full_unitary_oracle():
    rng = np.random.default_rng(1)
    for _ in range(10):
        x, angles = rng.normal(size=4), rng.uniform(-np.pi, np.pi, (4, 3))
        np.testing.assert_allclose(vqc.vqc_forward(x, angles), oracles.vqc_outputs(x, angles), rtol=0, atol=1e-12)


def test_batch_agrees_with_single():
    rng = np.random.default_rng(2)
    X, angles = rng.normal(size=(7, 4)), rng.uniform(-1, 1, 12)
    batch = vqc.forward_batch(X, angles)
    for row, out in zip(X, batch):
        np.testing.assert_allclose(out, vqc.vqc_forward(row, angles), rtol=0, atol=1e-15)


def test_forward_deterministic():
    rng = np.random.default_rng(3)
    x, angles = rng.normal(size=4), rng.normal(size=12)
    assert vqc.vqc_forward(x, angles) == vqc.vqc_forward(x, angles)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=4, max_size=4), st.integers(0, 2**32 - 1))
def test_circuit_is_even_in_its_input(x, seed):
    # negating x flips the sign of every RY encoding angle and nothing else;
    # the Z readouts cannot see that flip
    angles = np.random.default_rng(seed).uniform(-np.pi, np.pi, 12)
    np.testing.assert_allclose(
        vqc.vqc_forward(x, angles), vqc.vqc_forward(-np.asarray(x), angles), rtol=0, atol=1e-12
    )


def test_light_cone_gradient_at_origin():
    grad = vqc.vqc_gradient(np.zeros(4), np.zeros((4, 3)), 0)
    np.testing.assert_array_equal(grad[6:], 0.0)
    np.testing.assert_allclose(grad, finite_difference(np.zeros(4), np.zeros(12), 0), atol=1e-9)


@pytest.mark.parametrize("output_index", [0, 1])
def test_parameter_shift_matches_finite_differences(output_index):
    rng = np.random.default_rng(10 + output_index)
    for _ in range(50):
        x, angles = rng.normal(scale=2, size=4), rng.uniform(-np.pi, np.pi, (4, 3))
        np.testing.assert_allclose(
            vqc.vqc_gradient(x, angles, output_index), finite_difference(x, angles, output_index), rtol=0, atol=1e-5
        )


def test_gradient_vanishes_at_swept_extremum():
    rng = np.random.default_rng(4)
    x, angles = rng.normal(size=4), rng.uniform(-np.pi, np.pi, 12)
    j = 1  # beta_0 drives <Z_0> as a pure sinusoid a cos(t) + b sin(t) + c
    ts = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    values = []
    for t in ts:
        a = angles.copy()
        a[j] = t
        values.append(vqc.vqc_forward(x, a)[0])
    design = np.column_stack([np.ones_like(ts), np.cos(ts), np.sin(ts)])
    coef, residual, *_ = np.linalg.lstsq(design, values, rcond=None)
    assert residual[0] < 1e-20
    extremum = math.atan2(coef[2], coef[1])
    angles[j] = extremum
    assert abs(vqc.vqc_gradient(x, angles, 0)[j]) < 1e-10


def test_forward_and_jacobian_shapes():
    out, jac = vqc.forward_and_jacobian(np.ones((3, 4)), np.zeros(12))
    assert out.shape == (3, 2) and jac.shape == (3, 2, 12)


@pytest.mark.parametrize(
    "x, angles",
    [
        ([0, 0, 0], np.zeros(12)),
        ([0, 0, np.inf, 0], np.zeros(12)),
        ([0, 0, 0, 0], np.zeros(11)),
        ([0, 0, 0, 0], [np.nan] + [0] * 11),
    ],
)
def test_invalid_inputs(x, angles):
    with pytest.raises(ValueError):
        vqc.vqc_forward(x, angles)


def test_gradient_rejects_bad_output_index():
    with pytest.raises(ValueError):
        vqc.vqc_gradient(np.zeros(4), np.zeros(12), 2)
