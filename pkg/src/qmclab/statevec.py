"""Dense complex state-vector representation and gate kernels.

Amplitudes are stored little-endian: qubit 0 is the least significant bit
of the basis index, so basis index ``i`` has qubit ``k`` in state
``(i >> k) & 1``. Gate application mutates the amplitude buffer in place
and returns the same object; callers that need the previous state should
``copy()`` first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

MAX_QUBITS = 24  # 2^24 complex doubles = 256 MB, the desk-scale ceiling


class ResourceError(RuntimeError):
    """Requested state dimension exceeds the configured qubit cap."""


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True)
class Gate:
    kind: str  # RX | RY | RZ | CNOT
    target: int
    control: int | None = None
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in ("RX", "RY", "RZ", "CNOT"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "CNOT":
            if self.control is None:
                raise ValueError("CNOT requires a control qubit")
            if self.control == self.target:
                raise ValueError("CNOT control and target must differ")
        elif self.control is not None:
            raise ValueError(f"{self.kind} takes no control qubit")


def init_zero(n_qubits: int, max_qubits: int = MAX_QUBITS) -> StateVector:
    """Return |0...0> on `n_qubits` qubits."""
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    if n_qubits > max_qubits:
        raise ResourceError(
            f"{n_qubits} qubits require a dimension of 2^{n_qubits} = "
            f"{1 << n_qubits} amplitudes, above the cap of 2^{max_qubits}"
        )
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def rotation_matrix(kind: str, angle: float) -> np.ndarray:
    """2x2 matrix of RX/RY/RZ at `angle` (exp(-i*angle*P/2) convention)."""
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind == "RZ":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]], dtype=np.complex128)
    raise ValueError(f"not a rotation kind: {kind!r}")


@njit(cache=True, nogil=True)
def _apply_1q(amps, u00, u01, u10, u11, target):
    stride = 1 << target
    n = amps.shape[0]
    for base in range(0, n, stride << 1):
        for off in range(stride):
            i0 = base + off
            i1 = i0 + stride
            a0 = amps[i0]
            a1 = amps[i1]
            amps[i0] = u00 * a0 + u01 * a1
            amps[i1] = u10 * a0 + u11 * a1


@njit(cache=True, nogil=True)
def _apply_cnot(amps, control, target):
    n = amps.shape[0]
    cb = 1 << control
    tb = 1 << target
    for i in range(n):
        if (i & cb) != 0 and (i & tb) == 0:
            j = i | tb
            tmp = amps[i]
            amps[i] = amps[j]
            amps[j] = tmp


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply a gate in place and return the transformed state."""
    n = state.n_qubits
    if not 0 <= gate.target < n:
        raise ValueError(f"target {gate.target} out of range for {n} qubits")
    if gate.kind == "CNOT":
        if not 0 <= gate.control < n:
            raise ValueError(f"control {gate.control} out of range for {n} qubits")
        _apply_cnot(state.amplitudes, gate.control, gate.target)
    else:
        u = rotation_matrix(gate.kind, gate.angle)
        _apply_1q(state.amplitudes, u[0, 0], u[0, 1], u[1, 0], u[1, 1], gate.target)
    return state


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b> = sum conj(a_i) * b_i. Fidelity is |inner_product|^2."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(
            f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(inner_product(a, b)) ** 2
