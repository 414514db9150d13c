"""Observable-set model heads, loss functions, prediction rule, and metrics.

Model kinds pair an observable family with a loss:

====================  =======================  =============
kind                  observables              loss
====================  =======================  =============
PauliCE               commuting Pauli strings  cross entropy
PauliF                commuting Pauli strings  fidelity
ProjCE                basis projectors         cross entropy
ProjF                 basis projectors         fidelity
PauliNonCommuting     non-commuting Paulis     cross entropy
====================  =======================  =============
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .pauli import (
    PauliString,
    ProjectorObservable,
    commutes,
    min_locality_commuting_set,
    uniform_locality_set,
)

MODEL_KINDS = ("PauliCE", "PauliF", "ProjCE", "ProjF", "PauliNonCommuting")

KIND_PAULI_COMMUTING = "PauliCommuting"
KIND_PAULI_NONCOMMUTING = "PauliNonCommuting"
KIND_PROJECTOR = "Projector"


@dataclass(frozen=True)
class ObservableSet:
    """K observables, one per class (index k <-> class k)."""

    kind: str
    members: tuple

    def __post_init__(self):
        if len(self.members) < 1:
            raise ValueError("observable set is empty")
        if self.kind == KIND_PAULI_COMMUTING:
            self._check_paulis()
            for i, p in enumerate(self.members):
                for q in self.members[i + 1 :]:
                    if not commutes(p, q):
                        raise ValueError(f"{p} and {q} do not commute")
        elif self.kind == KIND_PAULI_NONCOMMUTING:
            self._check_paulis()
            if all(
                commutes(p, q)
                for i, p in enumerate(self.members)
                for q in self.members[i + 1 :]
            ):
                raise ValueError("all pairs commute; not a non-commuting set")
        elif self.kind == KIND_PROJECTOR:
            ms = {p.measured_qubits for p in self.members}
            if len(ms) != 1:
                raise ValueError("projectors must share measured_qubits")
            idx = [p.basis_index for p in self.members]
            if len(set(idx)) != len(idx):
                raise ValueError("projector basis indices must be distinct")
        else:
            raise ValueError(f"unknown observable-set kind {self.kind!r}")

    def _check_paulis(self):
        lengths = {p.n_qubits for p in self.members}
        if len(lengths) != 1:
            raise ValueError("Pauli strings must share one length")

    @property
    def n_classes(self) -> int:
        return len(self.members)

    def serialized(self) -> list[str]:
        return [str(m) for m in self.members]


def commuting_pauli_set(n_qubits: int, n_classes: int) -> ObservableSet:
    members = tuple(min_locality_commuting_set(n_qubits, n_classes))
    return ObservableSet(KIND_PAULI_COMMUTING, members)


def noncommuting_pauli_set(n_qubits: int, n_classes: int) -> ObservableSet:
    """First `n_classes` of {X, Y, Z} on qubit 0 (supports K <= 3)."""
    if not 2 <= n_classes <= 3:
        raise ValueError("non-commuting construction covers 2 or 3 classes")
    tail = "I" * (n_qubits - 1)
    members = tuple(PauliString(c + tail) for c in "XYZ"[:n_classes])
    return ObservableSet(KIND_PAULI_NONCOMMUTING, members)


def uniform_pauli_set(n_qubits: int, k: int) -> ObservableSet:
    """{X^k, Y^k, Z^k} as a 3-class set (commuting only for even k)."""
    members = tuple(uniform_locality_set(n_qubits, k))
    kind = KIND_PAULI_COMMUTING if k % 2 == 0 else KIND_PAULI_NONCOMMUTING
    return ObservableSet(kind, members)


def projector_set(
    n_qubits: int, n_classes: int, measured_qubits: int | None = None
) -> ObservableSet:
    """Class k -> |bin(k)><bin(k)| on the first ceil(log2 K) qubits."""
    m = measured_qubits if measured_qubits is not None else max(1, math.ceil(math.log2(n_classes)))
    if m > n_qubits:
        raise ValueError(f"projector needs {m} qubits, circuit has {n_qubits}")
    if n_classes > (1 << m):
        raise ValueError(f"{n_classes} classes exceed 2^{m} basis states")
    members = tuple(ProjectorObservable(m, k) for k in range(n_classes))
    return ObservableSet(KIND_PROJECTOR, members)


def observables_for_model(
    model_kind: str, n_qubits: int, n_classes: int, measured_qubits: int | None = None
) -> ObservableSet:
    if model_kind in ("PauliCE", "PauliF"):
        return commuting_pauli_set(n_qubits, n_classes)
    if model_kind == "PauliNonCommuting":
        return noncommuting_pauli_set(n_qubits, n_classes)
    if model_kind in ("ProjCE", "ProjF"):
        return projector_set(n_qubits, n_classes, measured_qubits)
    raise ValueError(f"unknown model kind {model_kind!r}")


@dataclass(frozen=True)
class LossConfig:
    loss: str = "CrossEntropy"  # CrossEntropy | Fidelity
    temperature: float = 0.01
    lam: float = 1.0

    def __post_init__(self):
        if self.loss not in ("CrossEntropy", "Fidelity"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")


def loss_config_for_model(model_kind: str, temperature: float = 0.01, lam: float = 1.0) -> LossConfig:
    if model_kind in ("PauliCE", "ProjCE", "PauliNonCommuting"):
        return LossConfig("CrossEntropy", temperature, lam)
    return LossConfig("Fidelity", temperature, lam)


def softmax_t(z: np.ndarray, temperature: float) -> np.ndarray:
    """Temperature softmax over classes, overflow-safe via max subtraction."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    zz = np.asarray(z, dtype=np.float64) / temperature
    zz = zz - zz.max()
    e = np.exp(zz)
    p = e / e.sum()
    # keep entries strictly positive when exp underflows at extreme z/T
    p = np.maximum(p, 1e-300)
    return p / p.sum()


def cross_entropy_loss(expvals: np.ndarray, label: int, temperature: float) -> float:
    if not 0 <= label < len(expvals):
        raise ValueError(f"label {label} out of range")
    p = softmax_t(expvals, temperature)[label]
    return float(-np.log(max(p, 1e-300)))


def fidelity_loss(fidelities: np.ndarray, label: int, lam: float) -> float:
    """1 - f_label + lam * sum of non-label entries.

    Entries are fidelities in [0, 1] for projector models; Pauli
    expectations in [-1, 1] are accepted for the PauliF pairing.
    """
    if not 0 <= label < len(fidelities):
        raise ValueError(f"label {label} out of range")
    f = np.asarray(fidelities, dtype=np.float64)
    return float(1.0 - f[label] + lam * (f.sum() - f[label]))


def loss_value(expvals: np.ndarray, label: int, config: LossConfig) -> float:
    if config.loss == "CrossEntropy":
        return cross_entropy_loss(expvals, label, config.temperature)
    return fidelity_loss(expvals, label, config.lam)


def loss_weights(expvals: np.ndarray, label: int, config: LossConfig) -> np.ndarray:
    """d(loss)/d(expvals), the chain-rule factor through the model head."""
    k = len(expvals)
    if config.loss == "CrossEntropy":
        w = softmax_t(expvals, config.temperature)
        w[label] -= 1.0
        return w / config.temperature
    w = np.full(k, config.lam)
    w[label] = -1.0
    return w


def loss_and_weights(
    expvals: np.ndarray, label: int, config: LossConfig
) -> tuple[float, np.ndarray]:
    """(loss, d(loss)/d(expvals)) sharing one softmax evaluation."""
    if config.loss == "CrossEntropy":
        p = softmax_t(expvals, config.temperature)
        value = float(-np.log(max(p[label], 1e-300)))
        w = p
        w[label] -= 1.0
        return value, w / config.temperature
    return (
        fidelity_loss(expvals, label, config.lam),
        loss_weights(expvals, label, config),
    )


def predict(expvals: np.ndarray) -> int:
    """Index of the largest expectation; ties go to the lowest index."""
    if len(expvals) < 2:
        raise ValueError("need at least two classes")
    return int(np.argmax(expvals))


def macro_f1(y_true, y_pred, n_classes: int) -> float:
    """Unweighted mean of per-class F1, with 0 substituted for empty classes."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError("label arrays differ in length")
    total = 0.0
    for c in range(n_classes):
        tp = int(np.sum((y_pred == c) & (y_true == c)))
        fp = int(np.sum((y_pred == c) & (y_true != c)))
        fn = int(np.sum((y_pred != c) & (y_true == c)))
        denom = 2 * tp + fp + fn
        total += (2 * tp / denom) if denom > 0 else 0.0
    return total / n_classes
