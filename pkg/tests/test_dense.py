import numpy as np
import pytest

from tnfact.dense import DenseTensor, contract, max_abs_diff, reshape
from tnfact.errors import ShapeError


def test_contract_identity_composition():
    eye = DenseTensor(np.eye(2))
    out = contract(eye, eye, [(1, 0)])
    assert max_abs_diff(out, np.eye(2)) == 0.0


def test_contract_dot_product():
    out = contract(DenseTensor([1, 2]), DenseTensor([3, 4]), [(0, 0)])
    assert out.shape == (1,)
    assert out[0] == 11


def test_contract_matches_triple_loop(rng):
    a = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    b = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
    out = contract(a, b, [(1, 0)]).array
    ref = np.zeros((3, 5), dtype=complex)
    for i in range(3):
        for j in range(5):
            for k in range(4):
                ref[i, j] += a[i, k] * b[k, j]
    assert np.max(np.abs(out - ref)) < 1e-12


def test_contract_agrees_with_matmul(rng):
    a = rng.uniform(-1, 1, (4, 4))
    b = rng.uniform(-1, 1, (4, 4))
    assert max_abs_diff(contract(a, b, [(1, 0)]), a @ b) < 1e-12


def test_contract_is_bilinear(rng):
    for _ in range(5):
        a = rng.standard_normal((2, 3, 2))
        b = rng.standard_normal((3, 4))
        alpha = complex(rng.standard_normal(), rng.standard_normal())
        lhs = contract(alpha * a, b, [(1, 0)]).array
        rhs = alpha * contract(a, b, [(1, 0)]).array
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_contract_errors():
    a, b = DenseTensor(np.ones((2, 3))), DenseTensor(np.ones((4, 2)))
    with pytest.raises(ShapeError):
        contract(a, b, [(1, 0)])  # 3 vs 4
    with pytest.raises(ShapeError):
        contract(a, b, [(0, 1), (0, 0)])  # duplicate axis of a
    with pytest.raises(ShapeError):
        contract(a, b, [(5, 0)])


def test_reshape_row_major():
    t = reshape(DenseTensor([1, 2, 3, 4]), (2, 2))
    assert np.array_equal(t.array, np.array([[1, 2], [3, 4]]))


def test_reshape_central_bipartition_of_order4(rng):
    arr = rng.standard_normal((2, 2, 2, 2))
    mat = reshape(arr, (4, 4)).array
    # row-major: row index = 2*x1 + x2, column = 2*x3 + x4
    for x in np.ndindex(2, 2, 2, 2):
        assert mat[2 * x[0] + x[1], 2 * x[2] + x[3]] == arr[x]


def test_reshape_round_trip(rng):
    arr = rng.standard_normal((3, 4, 2))
    back = reshape(reshape(arr, (24,)), (3, 4, 2))
    assert max_abs_diff(back, arr) == 0.0


def test_reshape_preserves_entry_multiset(rng):
    arr = rng.standard_normal((2, 6))
    out = reshape(arr, (3, 4)).array
    assert np.allclose(np.sort(out.ravel().real), np.sort(arr.ravel()))


def test_reshape_size_mismatch():
    with pytest.raises(ShapeError):
        reshape(DenseTensor([1, 2, 3]), (2, 2))


def test_max_abs_diff_examples():
    assert max_abs_diff([1, 2], [1, 2]) == 0.0
    assert max_abs_diff([1, 0], [0, 0]) == 1.0
    assert abs(max_abs_diff([1j], [1]) - np.sqrt(2)) < 1e-15
    with pytest.raises(ShapeError):
        max_abs_diff([1, 2], [1, 2, 3])


def test_non_finite_rejected():
    with pytest.raises(ShapeError):
        DenseTensor([np.nan, 1.0])
    with pytest.raises(ShapeError):
        DenseTensor([np.inf, 1.0])


def test_tensor_is_immutable():
    t = DenseTensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.array[0] = 5.0
