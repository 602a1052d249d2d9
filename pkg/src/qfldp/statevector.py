"""Exact statevector simulation for small qubit registers.

Qubit 0 is the most significant bit of the basis index, so ``|q0 q1 ... q{n-1}>``
reads top-to-bottom like a circuit diagram.  The array kernels
(:func:`apply_single_qubit`, :func:`apply_cnot`, :func:`expectation_z_amplitudes`)
accept arbitrary leading batch axes; the :class:`QuantumState` / :class:`GateOp`
layer on top of them is the value-semantics API.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

MAX_QUBITS = 12
NORM_TOL = 1e-12


class GateKind(enum.Enum):
    RY = "RY"
    RZ = "RZ"
    CNOT = "CNOT"
    GENERAL_ROT = "GENERAL_ROT"


_N_ANGLES = {GateKind.RY: 1, GateKind.RZ: 1, GateKind.CNOT: 0, GateKind.GENERAL_ROT: 3}


def ry_matrix(theta):
    """RY(theta) = exp(-i theta Y / 2); broadcasts over array-valued ``theta``."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def rz_matrix(theta):
    """RZ(theta) = exp(-i theta Z / 2); broadcasts over array-valued ``theta``."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-0.5j * theta)
    out[..., 1, 1] = np.exp(0.5j * theta)
    return out


def rot_matrix(alpha, beta, gamma):
    """General rotation R(alpha, beta, gamma) = RZ(alpha) RY(beta) RZ(gamma).

    RZ(gamma) acts first.  Every single-qubit unitary equals one of these up to
    a global phase, and each angle enters through a Pauli-generated factor, so
    the two-point parameter-shift rule is exact for all three.
    """
    return rz_matrix(alpha) @ ry_matrix(beta) @ rz_matrix(gamma)


def apply_single_qubit(amps, matrix, target, n_qubits):
    """Apply a 2x2 ``matrix`` to qubit ``target`` of ``amps`` (shape ``(..., 2**n)``).

    ``matrix`` may carry leading batch axes that broadcast against those of
    ``amps``.
    """
    lead = amps.shape[:-1]
    psi = amps.reshape(lead + (2**target, 2, 2 ** (n_qubits - target - 1)))
    out = matrix[..., None, :, :] @ psi
    return out.reshape(out.shape[:-3] + (2**n_qubits,))


def apply_cnot(amps, control, target, n_qubits):
    """Flip ``target`` on the basis states where ``control`` is 1."""
    lead = amps.shape[:-1]
    psi = amps.reshape(lead + (2,) * n_qubits).copy()
    c_ax = len(lead) + control
    t_ax = len(lead) + target
    sel = [slice(None)] * psi.ndim
    sel[c_ax] = 1
    sub = psi[tuple(sel)]
    # target axis shifts left by one once the control axis is indexed away
    psi[tuple(sel)] = np.flip(sub, axis=t_ax - (1 if target > control else 0))
    return psi.reshape(lead + (2**n_qubits,))


def expectation_z_amplitudes(amps, qubit, n_qubits):
    """<Z_qubit> for amplitude array(s); reduces over the last axis."""
    probs = np.abs(amps) ** 2
    psi = probs.reshape(amps.shape[:-1] + (2**qubit, 2, 2 ** (n_qubits - qubit - 1)))
    marg = psi.sum(axis=(-3, -1))
    return marg[..., 0] - marg[..., 1]


@dataclass(frozen=True)
class GateOp:
    kind: GateKind
    target: int
    control: Optional[int] = None
    angles: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if len(self.angles) != _N_ANGLES[kind]:
            raise ValueError(
                f"{kind.value} takes {_N_ANGLES[kind]} angle(s), got {len(self.angles)}"
            )
        if kind is GateKind.CNOT:
            if self.control is None:
                raise ValueError("CNOT requires a control qubit")
            if self.control == self.target:
                raise ValueError("control and target must differ")
        elif self.control is not None:
            raise ValueError(f"{kind.value} takes no control qubit")
        if not all(np.isfinite(self.angles)):
            raise ValueError("gate angles must be finite")

    @classmethod
    def ry(cls, target, theta):
        return cls(GateKind.RY, target, angles=(theta,))

    @classmethod
    def rz(cls, target, theta):
        return cls(GateKind.RZ, target, angles=(theta,))

    @classmethod
    def cnot(cls, control, target):
        return cls(GateKind.CNOT, target, control=control)

    @classmethod
    def rot(cls, target, alpha, beta, gamma):
        return cls(GateKind.GENERAL_ROT, target, angles=(alpha, beta, gamma))

    def inverse(self):
        if self.kind is GateKind.GENERAL_ROT:
            a, b, g = self.angles
            # (RZ(a) RY(b) RZ(g))^-1 = RZ(-g) RY(-b) RZ(-a)
            return GateOp.rot(self.target, -g, -b, -a)
        return GateOp(self.kind, self.target, self.control, tuple(-a for a in self.angles))

    def matrix(self):
        """2x2 unitary for single-qubit kinds."""
        if self.kind is GateKind.RY:
            return ry_matrix(self.angles[0])
        if self.kind is GateKind.RZ:
            return rz_matrix(self.angles[0])
        if self.kind is GateKind.GENERAL_ROT:
            return rot_matrix(*self.angles)
        raise ValueError("CNOT has no single-qubit matrix")


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Normalized amplitude vector of an ``n_qubits`` register."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_n_qubits(self.n_qubits)
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL * amps.size:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def __eq__(self, other):
        if not isinstance(other, QuantumState):
            return NotImplemented
        return self.n_qubits == other.n_qubits and np.array_equal(
            self.amplitudes, other.amplitudes
        )

    def norm(self):
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    @classmethod
    def basis(cls, bits):
        """Computational basis state, e.g. ``QuantumState.basis("10")``."""
        n = len(bits)
        amps = np.zeros(2**n, dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(n, amps)


def _check_n_qubits(n_qubits):
    if isinstance(n_qubits, bool) or not isinstance(n_qubits, (int, np.integer)):
        raise TypeError(f"n_qubits must be an integer, got {type(n_qubits).__name__}")
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


def _check_qubit(qubit, n_qubits, what="qubit"):
    if not 0 <= qubit < n_qubits:
        raise ValueError(f"{what} index {qubit} out of range for {n_qubits} qubits")


def zero_state(n_qubits):
    """|0...0> on ``n_qubits`` qubits."""
    _check_n_qubits(n_qubits)
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return QuantumState(n_qubits, amps)


def apply_gate(state, gate):
    """Return the image of ``state`` under ``gate`` as a new state."""
    n = state.n_qubits
    _check_qubit(gate.target, n, "target")
    if gate.kind is GateKind.CNOT:
        _check_qubit(gate.control, n, "control")
        amps = apply_cnot(state.amplitudes, gate.control, gate.target, n)
    else:
        amps = apply_single_qubit(state.amplitudes, gate.matrix(), gate.target, n)
    return QuantumState(n, amps)


def run_circuit(state, gates):
    for gate in gates:
        state = apply_gate(state, gate)
    return state


def expectation_z(state, qubit):
    """Pauli-Z expectation of one qubit, in [-1, 1]."""
    _check_qubit(qubit, state.n_qubits)
    value = float(expectation_z_amplitudes(state.amplitudes, qubit, state.n_qubits))
    return min(1.0, max(-1.0, value))
