"""Minimal dense-tensor substrate used by every other module.

Tensors are stored as immutable complex128 arrays in row-major order (the
last index varies fastest). Real and non-negative data simply have zero
imaginary parts; which number field a model lives in is tracked at the
model level, not here.
"""

import numpy as np

from .errors import ShapeError

DEFAULT_TOL = 1e-9
DEFAULT_DENSE_CAP = 2**24


def _freeze(arr):
    arr = np.ascontiguousarray(arr, dtype=np.complex128)
    arr.flags.writeable = False
    return arr


class DenseTensor:
    """An order-N array of complex scalars with an explicit shape.

    Parameters
    ----------
    data : array_like
        Anything numpy can coerce to complex128. If ``shape`` is given the
        data may be flat and is reshaped row-major.
    shape : tuple of int, optional
        Explicit shape; defaults to ``np.asarray(data).shape``.
    """

    __slots__ = ("array",)

    def __init__(self, data, shape=None):
        arr = np.asarray(data, dtype=np.complex128)
        if shape is not None:
            shape = tuple(int(s) for s in shape)
            if any(s < 1 for s in shape):
                raise ShapeError(f"shape entries must be >= 1, got {shape}")
            if arr.size != int(np.prod(shape)):
                raise ShapeError(
                    f"data has {arr.size} entries, shape {shape} needs "
                    f"{int(np.prod(shape))}"
                )
            arr = arr.reshape(shape)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if not np.all(np.isfinite(arr)):
            raise ShapeError("tensor entries must be finite")
        object.__setattr__(self, "array", _freeze(arr))

    @property
    def shape(self):
        return self.array.shape

    @property
    def ndim(self):
        return self.array.ndim

    @property
    def size(self):
        return self.array.size

    def __getitem__(self, idx):
        return self.array[idx]

    def __repr__(self):
        return f"DenseTensor(shape={self.shape})"

    def __eq__(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.array, other.array)

    def is_real(self, tol=1e-12):
        return float(np.max(np.abs(self.array.imag))) <= tol if self.size else True

    def real_array(self):
        """The real part as a plain float array (use after is_real checks)."""
        return np.ascontiguousarray(self.array.real)


def as_array(t):
    """Accept a DenseTensor or array_like and return a complex128 ndarray."""
    if isinstance(t, DenseTensor):
        return t.array
    return np.asarray(t, dtype=np.complex128)


def contract(a, b, pairs):
    """Contract tensor ``a`` with tensor ``b`` over the given axis pairs.

    ``pairs`` is a sequence of ``(axis_of_a, axis_of_b)``. The result keeps
    the uncontracted axes of ``a`` (in order) followed by those of ``b``.
    """
    aa, bb = as_array(a), as_array(b)
    pairs = [(int(i), int(j)) for i, j in pairs]
    ax_a = [i for i, _ in pairs]
    ax_b = [j for _, j in pairs]
    if len(set(ax_a)) != len(ax_a) or len(set(ax_b)) != len(ax_b):
        raise ShapeError(f"duplicate axis in contraction pairs {pairs}")
    for i, j in pairs:
        if not (0 <= i < aa.ndim and 0 <= j < bb.ndim):
            raise ShapeError(f"axis pair ({i}, {j}) out of range for shapes "
                             f"{aa.shape} and {bb.shape}")
        if aa.shape[i] != bb.shape[j]:
            raise ShapeError(
                f"dimension mismatch on pair ({i}, {j}): "
                f"{aa.shape[i]} vs {bb.shape[j]}"
            )
    out = np.tensordot(aa, bb, axes=(ax_a, ax_b))
    return DenseTensor(out if out.ndim else out.reshape(1))


def reshape(t, shape):
    """Row-major reshape; total size must be preserved."""
    arr = as_array(t)
    shape = tuple(int(s) for s in shape)
    if arr.size != int(np.prod(shape)):
        raise ShapeError(f"cannot reshape {arr.size} entries into {shape}")
    return DenseTensor(arr.reshape(shape))


def max_abs_diff(a, b):
    """Max over entries of the complex modulus of the difference."""
    aa, bb = as_array(a), as_array(b)
    if aa.shape != bb.shape:
        raise ShapeError(f"shape mismatch: {aa.shape} vs {bb.shape}")
    return float(np.max(np.abs(aa - bb)))


def check_dense_cap(n_entries, cap=DEFAULT_DENSE_CAP):
    from .errors import DenseCapExceeded

    if cap is not None and n_entries > cap:
        raise DenseCapExceeded(n_entries, cap)
