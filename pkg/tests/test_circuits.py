import numpy as np
import pytest

from tnfact import circuits as C
from tnfact import models as M
from tnfact.errors import ShapeError


def test_depth_zero_is_ground_state():
    c = C.random_circuit(4, 2, 0, seed=0)
    psi = C.simulate_dense(c).array
    assert psi.reshape(-1)[0] == 1.0
    assert np.abs(psi).sum() == 1.0
    m = C.circuit_to_mps(c)
    assert m.rank == 1
    assert M.evaluate(C.circuit_to_born(c), (0, 0, 0, 0)) == pytest.approx(1.0)


def test_generated_gates_are_unitary():
    c = C.random_circuit(5, 2, 3, seed=1)
    for layer in c.layers:
        for g in layer:
            dev = np.max(np.abs(g.matrix.conj().T @ g.matrix - np.eye(4)))
            assert dev < 1e-10


def test_random_circuit_deterministic_in_seed():
    c1 = C.random_circuit(4, 2, 2, seed=5)
    c2 = C.random_circuit(4, 2, 2, seed=5)
    for l1, l2 in zip(c1.layers, c2.layers):
        for g1, g2 in zip(l1, l2):
            assert g1.site == g2.site
            assert np.array_equal(g1.matrix, g2.matrix)


def test_single_gate_extracts_first_column(rng):
    u = C.haar_unitary(4, rng)
    c = C.LocalCircuit((2, 2), [[C.Gate(0, u)]])
    psi = C.simulate_dense(c).array.reshape(-1)
    assert np.max(np.abs(psi - u[:, 0])) < 1e-12


def test_state_norm_is_one():
    for seed in range(4):
        c = C.random_circuit(5, 2, 2, seed=seed)
        psi = C.simulate_dense(c).array
        assert abs(np.sum(np.abs(psi) ** 2) - 1.0) < 1e-12


def test_compiled_mps_matches_oracle():
    for seed in range(5):
        c = C.random_circuit(4, 2, 2, seed=40 + seed)
        m = C.circuit_to_mps(c)
        assert m.rank <= 2 ** 3
        err = np.max(np.abs(M.to_dense(m).array - C.simulate_dense(c).array))
        assert err < 1e-10


def test_bond_bound_per_layer():
    # N=6, depth 3: after each layer the compiled bond respects d**(l+1)
    c = C.random_circuit(6, 2, 3, seed=9)
    m = C.circuit_to_mps(c)
    assert m.rank <= 2 ** 4
    err = np.max(np.abs(M.to_dense(m).array - C.simulate_dense(c).array))
    assert err < 1e-10


def test_product_gates_stay_rank_one(rng):
    a, b = C.haar_unitary(2, rng), C.haar_unitary(2, rng)
    c = C.LocalCircuit((2, 2), [[C.Gate(0, np.kron(a, b))]])
    assert C.circuit_to_mps(c).rank == 1


def test_born_probabilities_match_oracle():
    for seed in range(5):
        c = C.random_circuit(4, 2, 2, seed=70 + seed)
        born = C.circuit_to_born(c)
        probs = M.to_dense(born).array.real
        ref = np.abs(C.simulate_dense(c).array) ** 2
        assert np.max(np.abs(probs - ref)) < 1e-10
        assert abs(probs.sum() - 1.0) < 1e-9
        assert abs(M.normalization(born) - 1.0) < 1e-9


def test_ancilla_circuit_marginals():
    for seed in range(5):
        c = C.random_alternating_circuit(2, 2, 2, 2, seed=seed)
        l = C.circuit_with_ancillas_to_lps(c)
        assert l.puri_dim == 2
        assert l.rank <= min(2, 2) ** 3
        psi = C.simulate_dense(c).array
        ref = (np.abs(psi) ** 2).sum(axis=(1, 3))
        assert np.max(np.abs(M.to_dense(l).array.real - ref)) < 1e-10


def test_trivial_ancilla_reduces_to_born():
    c = C.random_alternating_circuit(2, 2, 1, 2, seed=3)
    l = C.circuit_with_ancillas_to_lps(c)
    psi = C.simulate_dense(c).array
    ref = (np.abs(psi) ** 2).sum(axis=(1, 3))
    assert np.max(np.abs(M.to_dense(l).array.real - ref)) < 1e-12


def test_circuit_validation():
    with pytest.raises(ShapeError):  # not unitary
        C.LocalCircuit((2, 2), [[C.Gate(0, np.ones((4, 4)))]])
    rng = np.random.default_rng(0)
    u = C.haar_unitary(4, rng)
    with pytest.raises(ShapeError):  # overlapping gates in one layer
        C.LocalCircuit((2, 2, 2), [[C.Gate(0, u), C.Gate(1, u)]])
    with pytest.raises(ShapeError):  # mixed dims have no single phys_dim
        C.random_alternating_circuit(2, 2, 3, 1, seed=0).phys_dim
