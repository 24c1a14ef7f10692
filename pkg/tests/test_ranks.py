import numpy as np
import pytest

from tnfact import models as M
from tnfact import ranks as R
from tnfact.errors import ShapeError


def test_witness_entries_and_ordinary_ranks():
    expected = {"A": 3, "B": 2, "C": 3, "D": 3, "E": 4, "F": 3}
    for name, rank in expected.items():
        w = R.witness_matrix(name)
        assert R.matrix_rank(w.array) == rank == w.claimed_ranks["rank"]
    a = R.witness_matrix("A").array
    assert np.array_equal(a, np.array([[0, 1, 1, 0], [0, 0, 1, 1],
                                       [1, 0, 0, 1], [1, 1, 0, 0]]))
    d = R.witness_matrix("D").array
    golden = (1 + np.sqrt(5)) / 2
    assert d[0, 2] == golden and R.matrix_rank(d) == 3
    with pytest.raises(ShapeError):
        R.witness_matrix("Z")


def test_matrix_rank_identity():
    for n in (1, 3, 6):
        assert R.matrix_rank(np.eye(n)) == n
    assert R.matrix_rank(np.zeros((3, 3))) == 0


def test_complex_sqrt_witnesses():
    for name in ("B", "E"):
        w = R.complex_sqrt_witness(name).array
        target = R.witness_matrix(name).array
        assert R.verify_entrywise_square(w, target) < 1e-12
        assert R.matrix_rank(w) == 2
    g1, g2 = R.complex_sqrt_witness_factors("E")
    prod = g1.array @ g2.array
    assert R.verify_entrywise_square(prod, R.witness_matrix("E").array) < 1e-12


def test_nonneg_factor_witness_exact():
    g = R.nonneg_factor_witness("F").real_array()
    f = R.witness_matrix("F").array
    assert np.max(np.abs(g @ g.T - f)) == 0.0


def test_prime_matrix_values():
    assert R.prime_matrix(1).real_array().tolist() == [[3.0]]
    assert R.prime_matrix(2).real_array().tolist() == [[3.0, 4.0], [4.0, 5.0]]
    assert R.matrix_rank(R.prime_matrix(4)) == 2


def test_complex_sqrt_prime_witness():
    for n in (1, 6):
        w = R.complex_sqrt_prime_witness(n)
        assert R.verify_entrywise_square(w, R.prime_matrix(n)) < 1e-12
    assert R.matrix_rank(R.complex_sqrt_prime_witness(6)) == 2
    assert abs(R.complex_sqrt_prime_witness(1).array[0, 0]
               - (np.sqrt(2) + 1j)) < 1e-15


def test_euclidean_matrix_and_witness():
    m = R.euclidean_matrix(3).real_array()
    assert m.tolist() == [[0, 1, 4], [1, 0, 1], [4, 1, 0]]
    assert np.all(np.diag(R.euclidean_matrix(6).real_array()) == 0.0)
    h = R.euclidean_sqrt_witness(6).real_array()
    assert np.max(np.abs(h * h - R.euclidean_matrix(6).real_array())) == 0.0
    assert R.matrix_rank(h) == 2


def test_real_sqrt_ranks():
    assert R.real_sqrt_rank(R.witness_matrix("B").array)[0] == 3
    assert R.real_sqrt_rank(R.witness_matrix("C").array)[0] == 2
    value, cert = R.real_sqrt_rank(R.prime_matrix(4).real_array())
    assert value == 4 and cert.status == "exact"
    # the certificate's witness really is a square root
    assert np.max(np.abs(cert.witness ** 2
                         - R.prime_matrix(4).real_array())) < 1e-12


def test_real_sqrt_rank_permutation_invariant(rng):
    b = R.witness_matrix("B").array
    for _ in range(4):
        p = rng.permutation(3)
        q = rng.permutation(3)
        assert R.real_sqrt_rank(b[np.ix_(p, q)])[0] == 3


def test_real_sqrt_rank_entry_cap():
    with pytest.raises(ShapeError):
        R.real_sqrt_rank(np.ones((5, 5)), max_entries=16)


def test_nonneg_rank_search_cases():
    rank1 = np.outer([1.0, 2.0, 0.5], [0.3, 0.7])
    cert = R.nonneg_rank_search(rank1, 1, restarts=10, seed=0)
    assert cert.status == "upper-bound" and cert.residual < 1e-10

    a = R.witness_matrix("A").array
    assert R.nonneg_rank_search(a, 4, restarts=20, seed=0).status == "upper-bound"
    assert R.nonneg_rank_search(a, 3, restarts=100, seed=0).status == "inconclusive"


def test_nonneg_rank_search_rank2_matrices_succeed():
    for i in range(20):
        rng = np.random.default_rng(900 + i)
        m = rng.uniform(0.1, 1, (5, 2)) @ rng.uniform(0.1, 1, (2, 5))
        cert = R.nonneg_rank_search(m, 2, restarts=20, seed=i)
        assert cert.status == "upper-bound", (i, cert.residual)
        w, h = cert.witness
        assert np.min(w) >= 0 and np.min(h) >= 0


def test_exact_small_decides_witness_A():
    a = R.witness_matrix("A").array
    no = R.nonneg_rank_exact_small(a, 3)
    yes = R.nonneg_rank_exact_small(a, 4)
    assert no.value is False and no.status == "exact"
    assert yes.value is True


def test_exact_small_rank2_positive_matrix():
    rng = np.random.default_rng(5)
    m = rng.uniform(0.1, 1, (3, 2)) @ rng.uniform(0.1, 1, (2, 3))
    cert = R.nonneg_rank_exact_small(m, 2)
    assert cert.value is True and cert.residual < 1e-9


def test_exact_small_caps():
    with pytest.raises(ShapeError):
        R.nonneg_rank_exact_small(np.ones((5, 5)), 2)


def test_complex_sqrt_rank_search():
    b = R.witness_matrix("B").array
    cert = R.complex_sqrt_rank_search(b, 2, restarts=20, seed=1)
    assert cert.status == "upper-bound" and cert.residual < 1e-8
    e = R.witness_matrix("E").array
    cert = R.complex_sqrt_rank_search(e, 2, restarts=30, seed=1)
    assert cert.status == "upper-bound"
    # trivial branch: k = min dimension always succeeds
    rng = np.random.default_rng(2)
    m = rng.uniform(size=(3, 5))
    assert R.complex_sqrt_rank_search(m, 3).status == "upper-bound"


def test_unfold_outer_product():
    e = np.array([[1.0], [2.0]])
    f = np.array([[3.0, 4.0]])
    m = R.unfold_matrix_to_mps(e, f, M.NONNEG)
    assert m.n_sites == 4 and m.rank == 1
    bip = R.central_bipartition(M.to_dense(m)).real_array()
    target = e @ f
    # one-hot row i pairs with one-hot column j
    onehot = [2, 1]  # index of the configuration with a single 1 at site i
    for i in range(2):
        for j in range(2):
            assert abs(bip[onehot[i], onehot[j]] - target[i, j]) < 1e-12


def test_unfold_sqrt_factors_give_born_submatrix():
    b = R.witness_matrix("B").array
    value, cert = R.real_sqrt_rank(b)
    root = cert.witness  # rank-3 real square root
    m = R.unfold_matrix_to_mps(root, np.eye(3), M.REAL)
    assert m.rank == 3
    born = M.BornModel(m)
    bip = R.central_bipartition(M.to_dense(born)).real_array()
    n = 3
    onehot = [2 ** (n - 1 - i) for i in range(n)]
    for i in range(n):
        for j in range(n):
            assert abs(bip[onehot[i], onehot[j]] - b[i, j]) < 1e-10


def test_unfold_nonneg_factors_give_nonneg_dense(rng):
    e = rng.uniform(0.0, 1.0, (3, 2))
    f = rng.uniform(0.0, 1.0, (2, 3))
    m = R.unfold_matrix_to_mps(e, f, M.NONNEG)
    assert float(np.min(M.to_dense(m).array.real)) >= 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_prime_family(n):
    m = R.prime_family_mps(n)
    assert m.field == M.NONNEG
    assert all(bd == 2 for bd in m.bond_dims)
    bip = R.central_bipartition(M.to_dense(m)).real_array()
    i = np.arange(1, 2 ** n + 1, dtype=float)
    assert np.max(np.abs(bip - (i[:, None] + i[None, :]))) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_euclidean_family(n):
    bm = R.euclidean_family_bm(n)
    assert all(bd == 2 for bd in bm.amplitude.bond_dims)
    bip = R.central_bipartition(M.to_dense(bm)).real_array()
    i = np.arange(2 ** n, dtype=float)
    assert np.max(np.abs(bip - (i[None, :] - i[:, None]) ** 2)) < 1e-12


def test_prime_count_sieve():
    assert R.prime_count(16) == 6
    assert R.prime_count(2) == 1
    assert R.prime_count(1) == 0


def test_central_bipartition_props(rng):
    t = rng.standard_normal((2, 2, 2, 2))
    mat = R.central_bipartition(t).array
    assert mat.shape == (4, 4)
    assert np.array_equal(mat.reshape(2, 2, 2, 2).real, t)
    with pytest.raises(ShapeError):
        R.central_bipartition(rng.standard_normal((2, 2, 2)))


def test_bipartition_rank_bounded_by_tt_rank():
    for r in (2, 3):
        m = M.random_mps(M.REAL, 6, 2, r, seed=r)
        bip = R.central_bipartition(M.to_dense(m)).array
        assert R.matrix_rank(bip) <= r
    # Born machine: probability bipartition rank is at most rank**2
    b = M.random_born(M.COMPLEX, 6, 2, 2, seed=5)
    bip = R.central_bipartition(M.to_dense(b)).array
    assert R.matrix_rank(bip) <= 4
    # LPS: at most rank**2 as well (via the real-MPS rewriting)
    l = M.random_lps(M.COMPLEX, 6, 2, 2, 2, seed=6)
    bip = R.central_bipartition(M.to_dense(l)).array
    assert R.matrix_rank(bip) <= 4
