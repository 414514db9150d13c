"""Neural-collapse indicators: class centroids and intra/inter fidelities.

The centroid of a class is the principal eigenvector of its mean density
matrix (1/N_c) sum |psi><psi|, found by power iteration; averaging raw
amplitude vectors instead is available behind ``method="amplitude_mean"``
but is global-phase dependent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statevec import StateVector

_POWER_TOL = 1e-10
_POWER_MAXITER = 10_000


@dataclass
class NCIndicators:
    intra: float
    inter: float
    centroids: np.ndarray  # (K, dim)
    inter_defined: bool = True


def _as_state_matrix(states) -> np.ndarray:
    if isinstance(states, np.ndarray):
        return states
    return np.array(
        [s.amplitudes if isinstance(s, StateVector) else np.asarray(s) for s in states]
    )


def _principal_eigvec(x: np.ndarray) -> np.ndarray:
    """Top eigenvector of rho = X^H X / N via power iteration.

    Starts from the uniform vector; in a degenerate top eigenspace the
    limit is the normalized projection of that start vector, which breaks
    ties deterministically. Falls back to the first class state if the
    uniform start is orthogonal to the span.
    """
    n_c, dim = x.shape
    v = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)

    def rho_mul(u):
        # rho u = sum_s psi_s <psi_s|u>, with states as the rows of x
        return x.T @ (x.conj() @ u) / n_c

    w = rho_mul(v)
    if np.linalg.norm(w) < 1e-30:
        v = x[0] / np.linalg.norm(x[0])
        w = rho_mul(v)
    for _ in range(_POWER_MAXITER):
        v = w / np.linalg.norm(w)
        w = rho_mul(v)
        lam = np.vdot(v, w).real
        if np.linalg.norm(w - lam * v) < _POWER_TOL:
            v = w / np.linalg.norm(w)
            break
    j = int(np.argmax(np.abs(v)))
    phase = v[j] / abs(v[j])
    return v * np.conj(phase)


def class_centroids(states, labels, method: str = "eigen") -> np.ndarray:
    """One unit vector per class; phase fixed so the largest-magnitude
    amplitude is real non-negative."""
    x = _as_state_matrix(states)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    n_classes = int(labels.max()) + 1
    if len(classes) != n_classes:
        raise ValueError("every class in [0, K) needs at least one state")
    out = np.empty((n_classes, x.shape[1]), dtype=np.complex128)
    for c in range(n_classes):
        xc = x[labels == c]
        if method == "eigen":
            out[c] = _principal_eigvec(xc)
        elif method == "amplitude_mean":
            mean = xc.mean(axis=0)
            norm = np.linalg.norm(mean)
            if norm < 1e-30:
                out[c] = _principal_eigvec(xc)
                continue
            v = mean / norm
            j = int(np.argmax(np.abs(v)))
            out[c] = v * np.conj(v[j] / abs(v[j]))
        else:
            raise ValueError(f"unknown centroid method {method!r}")
    return out


def nc_indicators(states, labels, method: str = "eigen") -> NCIndicators:
    """Intra: mean fidelity of samples to their class centroid.
    Inter: mean fidelity between centroids over unordered class pairs."""
    x = _as_state_matrix(states)
    labels = np.asarray(labels)
    cents = class_centroids(x, labels, method)
    k = cents.shape[0]
    overlaps = np.abs(np.einsum("nd,nd->n", x.conj(), cents[labels])) ** 2
    intra = float(overlaps.mean())
    if k < 2:
        return NCIndicators(intra, 0.0, cents, inter_defined=False)
    pair_sum = 0.0
    n_pairs = 0
    for a in range(k):
        for b in range(a + 1, k):
            pair_sum += abs(np.vdot(cents[a], cents[b])) ** 2
            n_pairs += 1
    return NCIndicators(intra, pair_sum / n_pairs, cents)
