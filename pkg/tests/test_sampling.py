import numpy as np

from conftest import dense_brute, tv_distance
from tnfact import models as M


def delta_mps(x0, phys_dim=2):
    cores = []
    n = len(x0)
    for i, v in enumerate(x0):
        shape = (phys_dim, 1) if i in (0, n - 1) else (phys_dim, 1, 1)
        c = np.zeros(shape)
        c[v] = 1.0
        cores.append(c)
    return M.MpsModel(M.NONNEG, cores)


def empirical(samples, shape):
    idx = np.ravel_multi_index(samples.T, shape)
    counts = np.bincount(idx, minlength=int(np.prod(shape)))
    return counts / samples.shape[0]


def test_deterministic_model_always_returns_x0():
    x0 = (1, 0, 1, 1)
    m = delta_mps(x0)
    s = M.sample_batch(m, 200, seed=3)
    assert np.all(s == np.array(x0))
    assert M.sample(m, seed=9) == x0


def test_uniform_frequencies_within_binomial_bound():
    cores = [np.ones((2, 1)), np.ones((2, 1, 1)), np.ones((2, 1, 1)),
             np.ones((2, 1))]
    m = M.MpsModel(M.NONNEG, cores)
    n = 100_000
    freq = empirical(M.sample_batch(m, n, seed=11), (2,) * 4)
    p = 1.0 / 16.0
    sigma = np.sqrt(p * (1 - p) / n)
    assert np.all(np.abs(freq - p) < 4 * sigma)


def test_born_sampling_tv_bound():
    b = M.random_born(M.COMPLEX, 5, 2, 3, seed=21)
    p = dense_brute(b)
    p = p / p.sum()
    freq = empirical(M.sample_batch(b, 100_000, seed=5), (2,) * 5)
    assert tv_distance(freq, p) < 0.02


def test_lps_and_nonneg_sampling_agree_with_distribution():
    for make, seed in [(lambda: M.random_lps(M.COMPLEX, 4, 2, 2, 2, 31), 1),
                       (lambda: M.random_mps(M.NONNEG, 4, 2, 3, 32), 2)]:
        m = make()
        p = dense_brute(m).real
        p = p / p.sum()
        freq = empirical(M.sample_batch(m, 40_000, seed=seed), (2,) * 4)
        assert tv_distance(freq, p) < 0.03


def test_sampling_deterministic_given_seed():
    b = M.random_born(M.REAL, 5, 2, 2, seed=7)
    s1 = M.sample_batch(b, 50, seed=123)
    s2 = M.sample_batch(b, 50, seed=123)
    assert np.array_equal(s1, s2)


def test_zero_samples():
    b = M.random_born(M.REAL, 4, 2, 2, seed=7)
    assert M.sample_batch(b, 0, seed=0).shape == (0, 4)
