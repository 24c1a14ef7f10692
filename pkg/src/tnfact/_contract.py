"""Cached-path einsum for the small, repeated contractions in the sweeps.

np.einsum's greedy path search costs more than the contraction itself at
desk scale; cache the path per (subscripts, shapes) signature.
"""

import numpy as np

_PATHS = {}


def ein(subscripts, *ops):
    key = (subscripts, tuple(op.shape for op in ops))
    path = _PATHS.get(key)
    if path is None:
        path, _ = np.einsum_path(subscripts, *ops, optimize="greedy")
        _PATHS[key] = path
    return np.einsum(subscripts, *ops, optimize=path)
