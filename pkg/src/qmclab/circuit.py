"""Data re-uploading ansatz: angle encoding plus strongly-entangling layers.

One re-uploading layer applies, in order:

1. encoding: RX(x_{j mod n_features}) on every qubit j,
2. variational: RZ(a) then RY(b) then RZ(g) on every qubit (three angles
   per qubit per layer), and
3. a CNOT ring, qubit q controlling qubit (q+1) mod n_qubits (skipped on
   a single qubit).

Parameter count is 3 * n_qubits * n_layers. Gradients are computed in
adjoint mode (one backward sweep per observable, or per weighted
combination of observables), exact up to floating-point roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .classifier import KIND_PROJECTOR, ObservableSet
from .pauli import _pauli_expect
from .statevec import StateVector, init_zero


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    n_layers: int
    n_features: int

    def __post_init__(self):
        if self.n_qubits < 1 or self.n_layers < 1 or self.n_features < 1:
            raise ValueError("n_qubits, n_layers, n_features must be >= 1")

    @property
    def n_params(self) -> int:
        return 3 * self.n_qubits * self.n_layers


def init_params(spec: CircuitSpec, rng: np.random.Generator) -> np.ndarray:
    """Angles drawn uniform [0, 2pi), shaped (n_layers, n_qubits, 3)."""
    return rng.uniform(0.0, 2.0 * np.pi, size=(spec.n_layers, spec.n_qubits, 3))


def _as_param_array(spec: CircuitSpec, theta) -> np.ndarray:
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    if theta.size != spec.n_params:
        raise ValueError(
            f"parameter vector has {theta.size} angles, spec needs {spec.n_params}"
        )
    return theta.reshape(spec.n_layers, spec.n_qubits, 3)


def encoding_angles(spec: CircuitSpec, x) -> np.ndarray:
    """Per-qubit encoding angles: feature j mod n_features on qubit j."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.n_features,):
        raise ValueError(f"expected {spec.n_features} features, got shape {x.shape}")
    if x.min() < -1e-9 or x.max() > np.pi + 1e-9:
        raise ValueError(
            f"features must be pre-scaled to [0, pi]; got range "
            f"[{x.min()}, {x.max()}]"
        )
    return x[np.arange(spec.n_qubits) % spec.n_features]


_RING_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _ring_permutations(n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Source-index gather maps for the CNOT ring and its inverse.

    The ring maps basis state b to r(b) via b_{q+1} ^= b_q for q = 0..n-1
    in sequence; applying it to amplitudes is dst[i] = src[r_inv(i)].
    """
    cached = _RING_CACHE.get(n_qubits)
    if cached is not None:
        return cached
    dim = 1 << n_qubits
    idx = np.arange(dim, dtype=np.int64)
    fwd = idx.copy()
    if n_qubits > 1:
        for q in range(n_qubits):
            t = (q + 1) % n_qubits
            flip = ((fwd >> q) & 1) << t
            fwd = fwd ^ flip
    # invert the permutation: fwd[b] = r(b), so src map for forward
    # application is r_inv, and for undoing it is r itself
    inv = np.empty(dim, dtype=np.int64)
    inv[fwd] = idx
    _RING_CACHE[n_qubits] = (inv, fwd)
    return inv, fwd


@njit(cache=True, nogil=True, inline="always")
def _fused_block_matrix(x, a, b, g):
    """2x2 unitary of RX(x) followed by RZ(a), RY(b), RZ(g)."""
    cx, sx = np.cos(x / 2), np.sin(x / 2)
    ea = np.exp(-0.5j * a)
    eg = np.exp(-0.5j * g)
    cb, sb = np.cos(b / 2), np.sin(b / 2)
    # M = RZ(g) @ RY(b) @ RZ(a)
    m00 = eg * cb * ea
    m01 = -eg * sb * np.conj(ea)
    m10 = np.conj(eg) * sb * ea
    m11 = np.conj(eg) * cb * np.conj(ea)
    # U = M @ RX(x)
    jsx = -1j * sx
    u00 = m00 * cx + m01 * jsx
    u01 = m00 * jsx + m01 * cx
    u10 = m10 * cx + m11 * jsx
    u11 = m10 * jsx + m11 * cx
    return u00, u01, u10, u11


@njit(cache=True, nogil=True, inline="always")
def _apply_2x2(amps, u00, u01, u10, u11, q):
    stride = 1 << q
    dim = amps.shape[0]
    for base in range(0, dim, stride << 1):
        for off in range(stride):
            i0 = base + off
            i1 = i0 + stride
            a0 = amps[i0]
            a1 = amps[i1]
            amps[i0] = u00 * a0 + u01 * a1
            amps[i1] = u10 * a0 + u11 * a1


@njit(cache=True, nogil=True)
def _gather(dst, src, perm):
    for i in range(dst.shape[0]):
        dst[i] = src[perm[i]]


@njit(cache=True, nogil=True)
def _evolve_kernel(amps, scratch, enc, theta, n_qubits, n_layers, ring_src):
    for l in range(n_layers):
        for q in range(n_qubits):
            u00, u01, u10, u11 = _fused_block_matrix(
                enc[q], theta[l, q, 0], theta[l, q, 1], theta[l, q, 2]
            )
            _apply_2x2(amps, u00, u01, u10, u11, q)
        if n_qubits > 1:
            _gather(scratch, amps, ring_src)
            amps[:] = scratch


@njit(cache=True, nogil=True)
def _adjoint_kernel(ket, bra, scratch, enc, theta, n_qubits, n_layers,
                    ring_inv_src, grad):
    """Backward sweep computing d<O_eff>/d(theta) into `grad`.

    On entry ket is the evolved state and bra is O_eff applied to it.
    Gates are undone in reverse; at each rotation the generator insertion
    Im <bra| P |ket> gives the derivative. Single-qubit blocks on distinct
    qubits commute, so they may be undone in any qubit order.
    """
    for l in range(n_layers - 1, -1, -1):
        if n_qubits > 1:
            _gather(scratch, ket, ring_inv_src)
            ket[:] = scratch
            _gather(scratch, bra, ring_inv_src)
            bra[:] = scratch
        for q in range(n_qubits):
            x = enc[q]
            a = theta[l, q, 0]
            b = theta[l, q, 1]
            g = theta[l, q, 2]
            epa = np.exp(0.5j * a)  # RZ(-a) diagonal entries (epa, conj(epa))
            epg = np.exp(0.5j * g)
            cb, sb = np.cos(b / 2), np.sin(b / 2)
            cx, sx = np.cos(x / 2), np.sin(x / 2)
            jsx = 1j * sx  # RX(-x) off-diagonal
            da = 0.0
            db = 0.0
            dg = 0.0
            stride = 1 << q
            dim = ket.shape[0]
            for base in range(0, dim, stride << 1):
                for off in range(stride):
                    i0 = base + off
                    i1 = i0 + stride
                    k0, k1 = ket[i0], ket[i1]
                    b0, b1 = bra[i0], bra[i1]
                    # d/dg: Im <bra| Z_q |ket>, state currently after RZ(g)
                    dg += (np.conj(b0) * k0 - np.conj(b1) * k1).imag
                    # undo RZ(g)
                    k0 *= epg; k1 *= np.conj(epg)
                    b0 *= epg; b1 *= np.conj(epg)
                    # d/db: Im <bra| Y_q |ket>
                    db += (np.conj(b1) * (1j * k0) - np.conj(b0) * (1j * k1)).imag
                    # undo RY(b)
                    t0 = cb * k0 + sb * k1
                    t1 = -sb * k0 + cb * k1
                    k0, k1 = t0, t1
                    t0 = cb * b0 + sb * b1
                    t1 = -sb * b0 + cb * b1
                    b0, b1 = t0, t1
                    # d/da: Im <bra| Z_q |ket>
                    da += (np.conj(b0) * k0 - np.conj(b1) * k1).imag
                    # undo RZ(a)
                    k0 *= epa; k1 *= np.conj(epa)
                    b0 *= epa; b1 *= np.conj(epa)
                    # undo RX(x), no gradient (data angle)
                    t0 = cx * k0 + jsx * k1
                    t1 = jsx * k0 + cx * k1
                    k0, k1 = t0, t1
                    t0 = cx * b0 + jsx * b1
                    t1 = jsx * b0 + cx * b1
                    b0, b1 = t0, t1
                    ket[i0], ket[i1] = k0, k1
                    bra[i0], bra[i1] = b0, b1
            base_idx = (l * n_qubits + q) * 3
            grad[base_idx] = da
            grad[base_idx + 1] = db
            grad[base_idx + 2] = dg


@njit(cache=True, nogil=True)
def _accumulate_pauli(src, dst, flip, zy, ny, w):
    """dst += w * P src for a Pauli string given as bit masks."""
    dim = src.shape[0]
    ph = 1.0 + 0.0j
    for _ in range(ny % 4):
        ph *= 1j
    wph = w * ph
    for m in range(dim):
        b = m ^ flip
        s = b & zy
        s ^= s >> 16
        s ^= s >> 8
        s ^= s >> 4
        s ^= s >> 2
        s ^= s >> 1
        if s & 1:
            dst[m] -= wph * src[b]
        else:
            dst[m] += wph * src[b]


@njit(cache=True, nogil=True)
def _accumulate_projector(src, dst, m_qubits, basis_index, w):
    dim = src.shape[0]
    block = 1 << m_qubits
    for i in range(basis_index, dim, block):
        dst[i] += w * src[i]


@njit(cache=True, nogil=True)
def _projector_expect(amps, m_qubits, basis_index):
    dim = amps.shape[0]
    block = 1 << m_qubits
    acc = 0.0
    for i in range(basis_index, dim, block):
        acc += amps[i].real ** 2 + amps[i].imag ** 2
    return acc


@njit(cache=True, nogil=True)
def _expect_all_kernel(amps, is_projector, flip, zy, ny, m_qubits, basis_index, out):
    k = out.shape[0]
    if is_projector:
        for i in range(k):
            out[i] = _projector_expect(amps, m_qubits, basis_index[i])
    else:
        for i in range(k):
            val = _pauli_expect(amps, flip[i], zy[i], ny[i])
            out[i] = min(1.0, max(-1.0, val.real))


@dataclass(frozen=True)
class _PackedObservables:
    is_projector: bool
    flip: np.ndarray
    zy: np.ndarray
    ny: np.ndarray
    m_qubits: int
    basis_index: np.ndarray


def pack_observables(observables: ObservableSet, n_qubits: int) -> _PackedObservables:
    k = observables.n_classes
    if observables.kind == KIND_PROJECTOR:
        m = observables.members[0].measured_qubits
        if m > n_qubits:
            raise ValueError("projector measures more qubits than the circuit has")
        idx = np.array([p.basis_index for p in observables.members], dtype=np.int64)
        empty = np.zeros(k, dtype=np.int64)
        return _PackedObservables(True, empty, empty, empty, m, idx)
    flip = np.zeros(k, dtype=np.int64)
    zy = np.zeros(k, dtype=np.int64)
    ny = np.zeros(k, dtype=np.int64)
    for i, p in enumerate(observables.members):
        if p.n_qubits != n_qubits:
            raise ValueError("Pauli string length does not match the circuit")
        flip[i], zy[i], ny[i] = p.masks()
    return _PackedObservables(False, flip, zy, ny, 0, np.zeros(k, dtype=np.int64))


def evolve_amplitudes(spec: CircuitSpec, x, theta) -> np.ndarray:
    """Raw amplitude vector of the evolved state."""
    enc = encoding_angles(spec, x)
    th = _as_param_array(spec, theta)
    amps = np.zeros(1 << spec.n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    scratch = np.empty_like(amps)
    ring_src, _ = _ring_permutations(spec.n_qubits)
    _evolve_kernel(amps, scratch, enc, th, spec.n_qubits, spec.n_layers, ring_src)
    return amps


def encode_and_evolve(spec: CircuitSpec, x, theta) -> StateVector:
    """Evolve |0...0> through the full re-uploading circuit."""
    state = init_zero(spec.n_qubits)
    state.amplitudes[:] = evolve_amplitudes(spec, x, theta)
    return state


def expectations_from_amplitudes(amps: np.ndarray, packed: _PackedObservables) -> np.ndarray:
    k = len(packed.basis_index) if packed.is_projector else len(packed.flip)
    z = np.empty(k)
    _expect_all_kernel(
        amps, packed.is_projector, packed.flip, packed.zy, packed.ny,
        packed.m_qubits, packed.basis_index, z,
    )
    return z


def prepare_encodings(spec: CircuitSpec, features: np.ndarray) -> np.ndarray:
    """Per-sample encoding angle matrix (validated once for a whole set)."""
    features = np.ascontiguousarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != spec.n_features:
        raise ValueError(f"expected (N, {spec.n_features}) features")
    if features.min() < -1e-9 or features.max() > np.pi + 1e-9:
        raise ValueError("features must be pre-scaled to [0, pi]")
    return np.ascontiguousarray(features[:, np.arange(spec.n_qubits) % spec.n_features])


def evolve_prepared(spec: CircuitSpec, enc: np.ndarray, theta3: np.ndarray) -> np.ndarray:
    """Evolution fast path: pre-validated encoding row and (L, n, 3) angles."""
    amps = np.zeros(1 << spec.n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    scratch = np.empty_like(amps)
    ring_src, _ = _ring_permutations(spec.n_qubits)
    _evolve_kernel(amps, scratch, enc, theta3, spec.n_qubits, spec.n_layers, ring_src)
    return amps


def gradient_prepared(
    spec: CircuitSpec,
    enc: np.ndarray,
    theta3: np.ndarray,
    packed: _PackedObservables,
    weights: np.ndarray,
    amps: np.ndarray,
) -> np.ndarray:
    """Adjoint fast path; consumes `amps` (the evolved state)."""
    _, ring_inv_src = _ring_permutations(spec.n_qubits)
    scratch = np.empty_like(amps)
    bra = np.zeros_like(amps)
    if packed.is_projector:
        for i in range(len(weights)):
            if weights[i] != 0.0:
                _accumulate_projector(
                    amps, bra, packed.m_qubits, packed.basis_index[i], weights[i]
                )
    else:
        for i in range(len(weights)):
            if weights[i] != 0.0:
                _accumulate_pauli(
                    amps, bra, packed.flip[i], packed.zy[i], packed.ny[i], weights[i]
                )
    grad = np.zeros(spec.n_params)
    _adjoint_kernel(
        amps, bra, scratch, enc, theta3, spec.n_qubits, spec.n_layers,
        ring_inv_src, grad,
    )
    return grad


def expectation_vector(spec: CircuitSpec, x, theta, observables: ObservableSet) -> np.ndarray:
    """Per-class expectation values on the evolved state."""
    packed = pack_observables(observables, spec.n_qubits)
    return expectations_from_amplitudes(evolve_amplitudes(spec, x, theta), packed)


def weighted_gradient(
    spec: CircuitSpec,
    x,
    theta,
    packed: _PackedObservables,
    weights: np.ndarray,
    amps: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient of sum_k weights[k] * <O_k> w.r.t. all circuit angles.

    `amps` may carry a previously evolved state to skip the forward pass;
    it is consumed (the sweep mutates it).
    """
    enc = encoding_angles(spec, x)
    th = _as_param_array(spec, theta)
    if amps is None:
        amps = evolve_prepared(spec, enc, th)
    return gradient_prepared(spec, enc, th, packed, weights, amps)


def gradient_expectations(
    spec: CircuitSpec, x, theta, observables: ObservableSet
) -> np.ndarray:
    """Matrix of d<O_k>/d(theta_mu), shape (K, n_params)."""
    packed = pack_observables(observables, spec.n_qubits)
    amps = evolve_amplitudes(spec, x, theta)
    k = observables.n_classes
    out = np.empty((k, spec.n_params))
    w = np.zeros(k)
    for i in range(k):
        w[:] = 0.0
        w[i] = 1.0
        out[i] = weighted_gradient(spec, x, theta, packed, w, amps=amps.copy())
    return out
