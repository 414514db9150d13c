"""Pauli-string algebra, projector decomposition, purity profiles, frame geometry.

Pauli strings are words over {I, X, Y, Z} with letter k acting on qubit k
(little-endian, matching :mod:`qmclab.statevec`). Projectors are
computational-basis projectors |i><i| on the lowest ``m`` qubits, extended
by identity on the rest. Serialized forms: ``"ZIIZ"`` and ``"P2:3"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .statevec import StateVector

_LETTERS = frozenset("IXYZ")


class CapacityError(ValueError):
    """More observables requested than the construction can provide."""


@dataclass(frozen=True)
class PauliString:
    letters: str

    def __post_init__(self):
        if not self.letters or not set(self.letters) <= _LETTERS:
            raise ValueError(f"invalid Pauli word {self.letters!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def locality(self) -> int:
        """Number of qubits acted on non-trivially."""
        return sum(1 for c in self.letters if c != "I")

    def masks(self) -> tuple[int, int, int]:
        """(flip_mask, zy_mask, n_y): bit k set in flip_mask for X/Y at k,
        in zy_mask for Z/Y at k; n_y counts Y letters."""
        flip = zy = n_y = 0
        for k, c in enumerate(self.letters):
            if c in "XY":
                flip |= 1 << k
            if c in "ZY":
                zy |= 1 << k
            if c == "Y":
                n_y += 1
        return flip, zy, n_y

    def __str__(self) -> str:
        return self.letters


@dataclass(frozen=True)
class ProjectorObservable:
    measured_qubits: int
    basis_index: int

    def __post_init__(self):
        if self.measured_qubits < 1:
            raise ValueError("measured_qubits must be >= 1")
        if not 0 <= self.basis_index < (1 << self.measured_qubits):
            raise ValueError(
                f"basis_index {self.basis_index} out of range for "
                f"{self.measured_qubits} measured qubits"
            )

    def __str__(self) -> str:
        return f"P{self.measured_qubits}:{self.basis_index}"


def commutes(p: PauliString, q: PauliString) -> bool:
    """Symplectic criterion: commute iff the letters differ and are both
    non-identity on an even number of positions."""
    if p.n_qubits != q.n_qubits:
        raise ValueError(
            f"length mismatch: {p.n_qubits} vs {q.n_qubits}"
        )
    anti = sum(
        1 for a, b in zip(p.letters, q.letters) if a != "I" and b != "I" and a != b
    )
    return anti % 2 == 0


@njit(cache=True, nogil=True, inline="always")
def _parity24(x):
    # parity of the low 32 bits; masks are < 2^24 here
    x ^= x >> 16
    x ^= x >> 8
    x ^= x >> 4
    x ^= x >> 2
    x ^= x >> 1
    return x & 1


@njit(cache=True, nogil=True)
def _pauli_expect(amps, flip_mask, zy_mask, n_y):
    """<psi|P|psi> as a complex number (imaginary part is roundoff)."""
    dim = amps.shape[0]
    acc = 0.0 + 0.0j
    for m in range(dim):
        b = m ^ flip_mask
        if _parity24(b & zy_mask):
            acc -= np.conj(amps[m]) * amps[b]
        else:
            acc += np.conj(amps[m]) * amps[b]
    ph = 1.0 + 0.0j
    for _ in range(n_y % 4):
        ph *= 1j
    return acc * ph


def expectation_pauli(state: StateVector, p: PauliString) -> float:
    """<psi|P|psi>, clamped to [-1, 1]."""
    if p.n_qubits != state.n_qubits:
        raise ValueError(
            f"Pauli string on {p.n_qubits} qubits vs state on {state.n_qubits}"
        )
    flip, zy, n_y = p.masks()
    val = _pauli_expect(state.amplitudes, flip, zy, n_y)
    if abs(val.imag) > 1e-9:
        raise ArithmeticError(f"non-real Pauli expectation: {val}")
    return float(min(1.0, max(-1.0, val.real)))


def expectation_projector(state: StateVector, proj: ProjectorObservable) -> float:
    """Probability of measuring `basis_index` on the low `measured_qubits`."""
    m = proj.measured_qubits
    if m > state.n_qubits:
        raise ValueError(
            f"projector on {m} qubits vs state on {state.n_qubits}"
        )
    block = np.abs(state.amplitudes.reshape(-1, 1 << m)[:, proj.basis_index]) ** 2
    return float(block.sum())


def min_locality_commuting_set(n_qubits: int, n_classes: int) -> list[PauliString]:
    """`n_classes` mutually commuting Z-type strings of minimal locality.

    Z-type strings are enumerated by their support mask and ordered by
    (locality, mask); the all-identity string is skipped.
    """
    capacity = (1 << n_qubits) - 1
    if n_classes > capacity:
        raise CapacityError(
            f"{n_classes} classes exceed the {capacity} distinct non-identity "
            f"Z-type strings on {n_qubits} qubits"
        )
    masks = sorted(range(1, 1 << n_qubits), key=lambda b: (bin(b).count("1"), b))
    out = []
    for mask in masks[:n_classes]:
        word = "".join("Z" if (mask >> k) & 1 else "I" for k in range(n_qubits))
        out.append(PauliString(word))
    return out


def uniform_locality_set(n_qubits: int, k: int) -> list[PauliString]:
    """{X^k, Y^k, Z^k} on the first k qubits, identity elsewhere."""
    if not 1 <= k <= n_qubits:
        raise ValueError(f"locality {k} out of range for {n_qubits} qubits")
    tail = "I" * (n_qubits - k)
    return [PauliString(c * k + tail) for c in "XYZ"]


def pauli_decompose_projector(
    proj: ProjectorObservable, n_qubits: int
) -> dict[PauliString, float]:
    """Coefficients of |i><i| (x) I = sum_P c_P P over Z-type strings.

    Expanding the per-qubit factors (I + (-1)^{i_k} Z_k)/2 gives one term
    per subset of the measured qubits, with c_P = +-2^{-m}.
    """
    m = proj.measured_qubits
    if m > n_qubits:
        raise ValueError(f"projector on {m} qubits vs {n_qubits} total")
    i = proj.basis_index
    coeff = 1.0 / (1 << m)
    out = {}
    for mask in range(1 << m):
        sign = -1.0 if bin(i & mask).count("1") % 2 else 1.0
        word = "".join("Z" if (mask >> k) & 1 else "I" for k in range(n_qubits))
        out[PauliString(word)] = sign * coeff
    return out


@dataclass
class LocalityProfile:
    """Purity of an operator split across fixed-locality Pauli modules.

    per_locality_purity[k] = sum over Pauli strings P of locality k of
    |Tr[P O]|^2 / 2^n (orthonormal-basis convention), so the entries sum
    to Tr[O^2]. per_locality_dim[k] = 3^k * C(n, k), the number of Pauli
    strings of locality exactly k.
    """

    n_qubits: int
    per_locality_purity: np.ndarray
    per_locality_dim: np.ndarray


def _module_dims(n_qubits: int) -> np.ndarray:
    return np.array(
        [3**k * math.comb(n_qubits, k) for k in range(n_qubits + 1)], dtype=np.int64
    )


def locality_profile(
    observable: PauliString | ProjectorObservable, n_qubits: int
) -> LocalityProfile:
    purity = np.zeros(n_qubits + 1)
    if isinstance(observable, PauliString):
        if observable.n_qubits != n_qubits:
            raise ValueError("Pauli string length does not match n_qubits")
        # Tr[P P0] = 2^n delta: a single module carries weight 2^n
        purity[observable.locality] = float(1 << n_qubits)
    else:
        m = observable.measured_qubits
        if m > n_qubits:
            raise ValueError("projector measures more qubits than available")
        # each of the C(m, k) Z-type terms has coefficient +-2^{-m}
        weight = 2.0 ** (n_qubits - 2 * m)
        for k in range(m + 1):
            purity[k] = math.comb(m, k) * weight
    return LocalityProfile(n_qubits, purity, _module_dims(n_qubits))


def initial_state_profile(n_qubits: int) -> LocalityProfile:
    """Purity profile of the initial density matrix |0...0><0...0|."""
    return locality_profile(ProjectorObservable(n_qubits, 0), n_qubits)


def theoretical_variance_proxy(
    state_profile: LocalityProfile, obs_profile: LocalityProfile
) -> float:
    """Sum over locality modules of state purity x observable purity / dim.

    A 2-design-regime predictor of loss concentration; compared only
    qualitatively with empirical scans.
    """
    if state_profile.n_qubits != obs_profile.n_qubits:
        raise ValueError("profiles computed for different qubit counts")
    total = 0.0
    for s, o, d in zip(
        state_profile.per_locality_purity,
        obs_profile.per_locality_purity,
        obs_profile.per_locality_dim,
    ):
        if d > 0:
            total += s * o / d
    return total


def coherence_and_welch(vectors: list[np.ndarray]) -> tuple[float, float]:
    """Frame coherence mu = max |<v_i, v_j>| and the Welch lower bound.

    The bound sqrt((k - D) / (D (k - 1))) applies for k > D vectors in
    dimension D; below that it is reported as 0 (an orthonormal set
    achieves mu = 0).
    """
    if len(vectors) < 2:
        raise ValueError("need at least two vectors")
    dim = len(vectors[0])
    for v in vectors:
        if len(v) != dim:
            raise ValueError("vectors must share one dimension")
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"vector norm {norm} is not 1 within 1e-9")
    k = len(vectors)
    mu = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            mu = max(mu, abs(np.vdot(vectors[i], vectors[j])))
    welch = math.sqrt((k - dim) / (dim * (k - 1))) if k > dim else 0.0
    return float(mu), welch


def haar_fidelity_stats(
    dim: int, samples: int, seed: int, bins: int = 50
) -> tuple[float, np.ndarray]:
    """Mean and histogram of |<a|b>|^2 over pairs of Haar-random states.

    States are drawn as normalized complex standard normals; the histogram
    has `bins` uniform bins on [0, 1]. The mean tends to 1/dim.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    counts = np.zeros(bins, dtype=np.int64)
    total = 0.0
    done = 0
    chunk = max(1, min(samples, (1 << 22) // dim))
    while done < samples:
        b = min(chunk, samples - done)
        a = rng.standard_normal((b, dim)) + 1j * rng.standard_normal((b, dim))
        c = rng.standard_normal((b, dim)) + 1j * rng.standard_normal((b, dim))
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        c /= np.linalg.norm(c, axis=1, keepdims=True)
        f = np.abs(np.einsum("sd,sd->s", a.conj(), c)) ** 2
        counts += np.histogram(f, bins=bins, range=(0.0, 1.0))[0]
        total += f.sum()
        done += b
    return total / samples, counts
