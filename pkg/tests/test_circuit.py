import numpy as np
import pytest

from qmclab import classifier as clf
from qmclab.circuit import (
    CircuitSpec,
    encode_and_evolve,
    encoding_angles,
    expectation_vector,
    gradient_expectations,
    init_params,
)
from qmclab.classifier import ObservableSet, loss_value, loss_weights
from qmclab.pauli import PauliString
from qmclab.statevec import Gate, apply_gate, init_zero

from oracles import central_difference, dense_evolve


def test_parameter_count_law():
    for n_q in range(1, 7):
        for n_l in range(1, 7):
            spec = CircuitSpec(n_q, n_l, n_q)
            assert spec.n_params == 3 * n_q * n_l
            theta = init_params(spec, np.random.default_rng(0))
            assert theta.size == spec.n_params


def test_param_length_validation():
    spec = CircuitSpec(2, 1, 2)
    with pytest.raises(ValueError, match="angles"):
        encode_and_evolve(spec, np.zeros(2), np.zeros(5))


def test_zero_inputs_give_exact_zero_state():
    spec = CircuitSpec(3, 2, 3)
    s = encode_and_evolve(spec, np.zeros(3), np.zeros(spec.n_params))
    want = np.zeros(8, dtype=complex)
    want[0] = 1.0
    assert np.array_equal(s.amplitudes, want)


def test_unitarity_on_random_inputs():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n_q = int(rng.integers(1, 5))
        spec = CircuitSpec(n_q, int(rng.integers(1, 4)), n_q)
        x = rng.uniform(0, np.pi, size=n_q)
        s = encode_and_evolve(spec, x, init_params(spec, rng))
        assert abs(s.norm_sq() - 1.0) < 1e-10


def test_feature_scale_validation():
    spec = CircuitSpec(2, 1, 2)
    with pytest.raises(ValueError, match="pre-scaled"):
        encoding_angles(spec, np.array([0.5, 3.5]))
    with pytest.raises(ValueError, match="features"):
        encoding_angles(spec, np.array([0.5]))


def test_cyclic_feature_tiling_matches_hand_built_circuit():
    # 4 qubits, 2 features: qubits 2 and 3 re-encode features 0 and 1
    spec = CircuitSpec(4, 1, 2)
    rng = np.random.default_rng(9)
    x = rng.uniform(0, np.pi, size=2)
    theta = init_params(spec, rng)
    got = encode_and_evolve(spec, x, theta).amplitudes

    s = init_zero(4)
    for q in range(4):
        apply_gate(s, Gate("RX", q, angle=x[q % 2]))
        apply_gate(s, Gate("RZ", q, angle=theta[0, q, 0]))
        apply_gate(s, Gate("RY", q, angle=theta[0, q, 1]))
        apply_gate(s, Gate("RZ", q, angle=theta[0, q, 2]))
    for q in range(4):
        apply_gate(s, Gate("CNOT", target=(q + 1) % 4, control=q))
    assert np.abs(got - s.amplitudes).max() < 1e-12


def test_expectation_vector_at_zero_angles():
    spec = CircuitSpec(3, 1, 3)
    zeros = np.zeros(spec.n_params)
    x = np.zeros(3)
    pauli = clf.commuting_pauli_set(3, 3)
    z = expectation_vector(spec, x, zeros, pauli)
    assert np.allclose(z, 1.0)  # Z-type strings on |0...0>
    proj = clf.projector_set(3, 3)
    z = expectation_vector(spec, x, zeros, proj)
    assert np.allclose(z, [1.0, 0.0, 0.0])


def test_expectation_vector_matches_dense_oracle():
    rng = np.random.default_rng(4)
    spec = CircuitSpec(3, 2, 3)
    x = rng.uniform(0, np.pi, size=3)
    theta = init_params(spec, rng)
    psi = dense_evolve(3, 2, 3, x, theta)
    got = encode_and_evolve(spec, x, theta).amplitudes
    assert np.abs(got - psi).max() < 1e-9


def test_determinism_bit_identical():
    spec = CircuitSpec(4, 3, 4)
    rng = np.random.default_rng(12)
    x = rng.uniform(0, np.pi, size=4)
    theta = init_params(spec, rng)
    a = encode_and_evolve(spec, x, theta).amplitudes
    b = encode_and_evolve(spec, x, theta).amplitudes
    assert np.array_equal(a, b)


def _fd_check(spec, x, theta, observables, tol=1e-5):
    got = gradient_expectations(spec, x, theta, observables)

    def f(flat):
        return expectation_vector(spec, x, flat, observables)

    fd = central_difference(f, theta.reshape(-1))
    assert np.abs(got - fd).max() < tol


def test_gradient_all_identity_observable_is_zero():
    spec = CircuitSpec(2, 2, 2)
    rng = np.random.default_rng(0)
    obs = ObservableSet(clf.KIND_PAULI_COMMUTING, (PauliString("II"), PauliString("ZI")))
    g = gradient_expectations(spec, rng.uniform(0, np.pi, 2), init_params(spec, rng), obs)
    assert np.abs(g[0]).max() < 1e-12  # <II> is constant


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(21)
    for trial in range(20):
        n_q = int(rng.integers(1, 4))
        n_l = int(rng.integers(1, 3))
        spec = CircuitSpec(n_q, n_l, n_q)
        x = rng.uniform(0, np.pi, size=n_q)
        theta = init_params(spec, rng)
        k = min(3, 2**n_q - 1) if n_q > 1 else 1
        if trial % 2 == 0 and n_q >= 2:
            obs = clf.projector_set(n_q, max(2, k))
        else:
            obs = ObservableSet(
                clf.KIND_PAULI_COMMUTING,
                tuple(clf.min_locality_commuting_set(n_q, max(1, k))),
            ) if n_q > 1 else ObservableSet(
                clf.KIND_PAULI_COMMUTING, (PauliString("Z"),)
            )
        _fd_check(spec, x, theta, obs)


def test_final_rz_gradient_vanishes_for_diagonal_observable():
    # single qubit, no entangler: the last RZ commutes with Z measurement
    spec = CircuitSpec(1, 1, 1)
    rng = np.random.default_rng(2)
    x = rng.uniform(0, np.pi, size=1)
    theta = init_params(spec, rng)
    obs = ObservableSet(clf.KIND_PAULI_COMMUTING, (PauliString("Z"),))
    g = gradient_expectations(spec, x, theta, obs)
    assert abs(g[0, 2]) < 1e-12  # gamma angle of the only Rot block
    _fd_check(spec, x, theta, obs)


def test_loss_chain_rule_matches_finite_differences_all_kinds():
    # the trainer's gradient is loss_weights . gradient_expectations
    rng = np.random.default_rng(33)
    for kind in clf.MODEL_KINDS:
        for _ in range(5):
            n_q = int(rng.integers(2, 5))
            spec = CircuitSpec(n_q, int(rng.integers(1, 3)), n_q)
            x = rng.uniform(0, np.pi, size=n_q)
            theta = init_params(spec, rng)
            k = 3
            obs = clf.observables_for_model(kind, n_q, k)
            loss_cfg = clf.loss_config_for_model(kind, temperature=0.5, lam=1.0)
            label = int(rng.integers(k))

            def full_loss(flat):
                z = expectation_vector(spec, x, flat, obs)
                return loss_value(z, label, loss_cfg)

            z = expectation_vector(spec, x, theta, obs)
            w = loss_weights(z, label, loss_cfg)
            jac = gradient_expectations(spec, x, theta, obs)
            got = w @ jac
            fd = central_difference(full_loss, theta.reshape(-1))
            assert np.abs(got - fd).max() < 1e-5, kind
