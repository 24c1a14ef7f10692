"""Shared brute-force oracles, kept independent of the library's sweeps."""

import itertools

import numpy as np
import pytest


def all_configs(n_sites, phys_dim):
    return np.array(list(itertools.product(range(phys_dim), repeat=n_sites)),
                    dtype=np.int64)


def mps_value_brute(cores, x):
    """Chain value by plain matrix products, cores in model layout."""
    v = cores[0][x[0]]
    for i in range(1, len(cores) - 1):
        v = v @ cores[i][x[i]]
    return v @ cores[-1][x[-1]]


def dense_mps_brute(model):
    n, d = model.n_sites, model.phys_dim
    out = np.zeros((d,) * n, dtype=complex)
    for x in itertools.product(range(d), repeat=n):
        out[x] = mps_value_brute(model.cores, x)
    return out


def dense_born_brute(model):
    return np.abs(dense_mps_brute(model.amplitude)) ** 2


def lps_value_brute(cores, x):
    c0 = cores[0][x[0]]
    r = np.einsum("ma,mc->ac", c0, c0.conj())
    for i in range(1, len(cores) - 1):
        a = cores[i][x[i]]
        r = np.einsum("mag,ac,mch->gh", a, r, a.conj())
    a = cores[-1][x[-1]]
    return float(np.einsum("ma,ac,mc->", a, r, a.conj()).real)


def dense_lps_brute(model):
    n, d = model.n_sites, model.phys_dim
    out = np.zeros((d,) * n)
    for x in itertools.product(range(d), repeat=n):
        out[x] = lps_value_brute(model.cores, x)
    return out


def dense_brute(model):
    from tnfact.models import BornModel, LpsModel

    if isinstance(model, BornModel):
        return dense_born_brute(model)
    if isinstance(model, LpsModel):
        return dense_lps_brute(model)
    return dense_mps_brute(model)


def tv_distance(p, q):
    return 0.5 * float(np.abs(np.asarray(p).ravel() - np.asarray(q).ravel()).sum())


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
