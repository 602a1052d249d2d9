"""The 4-qubit variational classifier circuit.

Layout per qubit ``i`` (qubit 0 on top)::

    |0> - RY(arctan x_i) - RZ(arctan x_i^2) - [CNOT ring] - R(a_i, b_i, g_i) - <Z>

The CNOT ring is 0->1, 1->2, 2->3, then 3->0.  Only <Z_0> and <Z_1> are read out.
Angles are stored as a ``(4, 3)`` array, row ``i`` holding ``(a_i, b_i, g_i)``;
the flat 12-vector used for gradients is its row-major ravel.
"""

from __future__ import annotations

import numpy as np

from .statevector import (
    GateOp,
    QuantumState,
    apply_cnot,
    apply_single_qubit,
    expectation_z_amplitudes,
    rot_matrix,
    ry_matrix,
    rz_matrix,
)

N_QUBITS = 4
N_OUTPUTS = 2
N_ANGLES = 3 * N_QUBITS
CNOT_RING = ((0, 1), (1, 2), (2, 3), (3, 0))
SHIFT = np.pi / 2


def check_features(x):
    """Validate encoder input(s); returns a float array of shape ``(..., 4)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != N_QUBITS:
        raise ValueError(f"encoder input must have {N_QUBITS} features, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("encoder input contains non-finite values")
    return x


def check_angles(angles):
    """Validate variational angles; accepts ``(4, 3)`` or flat ``(12,)``."""
    a = np.asarray(angles, dtype=float)
    if a.size != N_ANGLES:
        raise ValueError(f"expected {N_ANGLES} variational angles, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise ValueError("variational angles must be finite")
    return a.reshape(N_QUBITS, 3)


def init_angles(rng, scale=0.1):
    """Near-identity start: uniform on (-scale, scale)."""
    return rng.uniform(-scale, scale, size=(N_QUBITS, 3))


def encoding_gates(x):
    x = check_features(x)
    gates = []
    for i, xi in enumerate(x):
        gates.append(GateOp.ry(i, np.arctan(xi)))
        gates.append(GateOp.rz(i, np.arctan(xi**2)))
    return gates


def circuit_gates(x, angles):
    """Full gate list, in application order."""
    angles = check_angles(angles)
    gates = encoding_gates(x)
    gates += [GateOp.cnot(c, t) for c, t in CNOT_RING]
    gates += [GateOp.rot(i, *angles[i]) for i in range(N_QUBITS)]
    return gates


def encode_amplitudes(x):
    """E(x)|0000> for a batch ``x`` of shape ``(..., 4)``."""
    x = check_features(x)
    lead = x.shape[:-1]
    amps = np.zeros(lead + (2**N_QUBITS,), dtype=complex)
    amps[..., 0] = 1.0
    for i in range(N_QUBITS):
        xi = x[..., i]
        amps = apply_single_qubit(amps, ry_matrix(np.arctan(xi)), i, N_QUBITS)
        amps = apply_single_qubit(amps, rz_matrix(np.arctan(xi**2)), i, N_QUBITS)
    return amps


def encode(x):
    """Encoded state for a single 4-feature input."""
    x = check_features(x)
    if x.ndim != 1:
        raise ValueError("encode takes a single input; use encode_amplitudes for batches")
    return QuantumState(N_QUBITS, encode_amplitudes(x))


def _entangle(amps):
    for c, t in CNOT_RING:
        amps = apply_cnot(amps, c, t, N_QUBITS)
    return amps


def _rotate(amps, angles):
    """Per-qubit general rotations; ``angles`` has shape ``(..., 4, 3)``."""
    for i in range(N_QUBITS):
        mats = rot_matrix(angles[..., i, 0], angles[..., i, 1], angles[..., i, 2])
        amps = apply_single_qubit(amps, mats, i, N_QUBITS)
    return amps


def _readout(amps):
    return np.stack(
        [expectation_z_amplitudes(amps, q, N_QUBITS) for q in range(N_OUTPUTS)], axis=-1
    )


def prepare_states(X):
    """Parameter-independent part of the circuit: encoding plus CNOT ring."""
    return _entangle(encode_amplitudes(X))


def forward_batch(X, angles, states=None):
    """(<Z_0>, <Z_1>) for each row of ``X``; returns shape ``(B, 2)``."""
    angles = check_angles(angles)
    if states is None:
        states = prepare_states(X)
    return _readout(_rotate(states, angles))


def vqc_forward(x, angles):
    """(<Z_0>, <Z_1>) for one input."""
    x = check_features(x)
    if x.ndim != 1:
        raise ValueError("vqc_forward takes a single input; use forward_batch for batches")
    z = forward_batch(x[None, :], angles)[0]
    return float(z[0]), float(z[1])


def _shifted_angle_sets(angles):
    """Base angles followed by the +shift and -shift copy of every angle: ``(25, 4, 3)``."""
    flat = angles.ravel()
    eye = np.eye(N_ANGLES) * SHIFT
    sets = np.concatenate([flat[None, :], flat + eye, flat - eye])
    return sets.reshape(-1, N_QUBITS, 3)


def forward_and_jacobian(X, angles, states=None):
    """Outputs ``(B, 2)`` and parameter-shift Jacobian ``(B, 2, 12)``.

    Every angle enters through a factor exp(-i theta P / 2) with P a Pauli, so
    ``[f(theta + pi/2) - f(theta - pi/2)] / 2`` is the exact derivative.
    """
    angles = check_angles(angles)
    if states is None:
        states = prepare_states(X)
    sets = _shifted_angle_sets(angles)
    out = _readout(_rotate(states[..., None, :], sets))  # (B, 25, 2)
    plus = out[..., 1 : 1 + N_ANGLES, :]
    minus = out[..., 1 + N_ANGLES :, :]
    jac = np.swapaxes((plus - minus) / 2.0, -1, -2)
    return out[..., 0, :], jac


def vqc_gradient(x, angles, output_index):
    """d<Z_output_index>/d angle for all 12 angles (row-major order)."""
    if output_index not in (0, 1):
        raise ValueError(f"output_index must be 0 or 1, got {output_index!r}")
    x = check_features(x)
    _, jac = forward_and_jacobian(x[None, :], angles)
    return jac[0, output_index]
