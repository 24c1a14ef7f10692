import itertools

import numpy as np
import pytest

from conftest import all_configs, tv_distance
from tnfact import hmm as H
from tnfact import models as M
from tnfact.errors import ShapeError


def path_sum_log_likelihood(h, x):
    """Brute-force marginalization over all hidden paths."""
    total = 0.0
    r = h.hidden_dim
    for hs in itertools.product(range(r), repeat=h.n_sites):
        p = h.initial[hs[0]] * h.emissions[0][x[0], hs[0]]
        for i in range(1, h.n_sites):
            p *= h.transitions[i - 1][hs[i], hs[i - 1]] \
                * h.emissions[i][x[i], hs[i]]
        total += p
    return np.log(total)


def hmm_probs(h):
    return np.array([np.exp(H.forward_log_likelihood(h, x))
                     for x in all_configs(h.n_sites, h.obs_dim)])


def test_forward_r1_is_product_of_emissions():
    h = H.random_hmm(5, 1, 3, seed=1)
    x = (0, 2, 1, 1, 0)
    ref = sum(np.log(h.emissions[i][x[i], 0]) for i in range(5))
    assert abs(H.forward_log_likelihood(h, x) - ref) < 1e-12


def test_forward_uniform_emissions():
    r, d, n = 3, 2, 6
    rng = np.random.default_rng(2)
    tr = rng.uniform(0.1, 1, (r, r))
    tr /= tr.sum(axis=0)
    em = np.full((d, r), 1.0 / d)
    h = H.homogeneous_hmm(n, np.full(r, 1 / r), tr, em)
    assert abs(H.forward_log_likelihood(h, (0,) * n) + n * np.log(d)) < 1e-12


def test_forward_matches_path_sum():
    h = H.random_hmm(6, 3, 2, seed=3)
    for x in all_configs(6, 2)[::7]:
        assert abs(H.forward_log_likelihood(h, x)
                   - path_sum_log_likelihood(h, x)) < 1e-10


def test_hmm_to_mps_r1():
    h = H.random_hmm(4, 1, 2, seed=4)
    m = H.hmm_to_mps(h)
    assert m.rank == 1
    for x in all_configs(4, 2):
        assert abs(M.evaluate(m, x)
                   - np.exp(H.forward_log_likelihood(h, x))) < 1e-14


def test_hmm_to_mps_random_exact():
    h = H.random_hmm(6, 3, 2, seed=5)
    m = H.hmm_to_mps(h)
    assert m.field == M.NONNEG and m.rank <= 3
    for x in all_configs(6, 2):
        assert abs(M.evaluate(m, x)
                   - np.exp(H.forward_log_likelihood(h, x))) < 1e-12
    assert abs(M.normalization(m) - 1.0) < 1e-12


def test_hmm_image_log_prob_matches_forward():
    h = H.random_hmm(7, 2, 2, seed=6)
    m = H.hmm_to_mps(h)
    for x in all_configs(7, 2)[::11]:
        assert abs(M.log_prob(m, x) - H.forward_log_likelihood(h, x)) < 1e-10


def test_mps_to_hmm_round_trip():
    h = H.random_hmm(6, 2, 2, seed=7)
    m = H.hmm_to_mps(h)
    h2, report = H.mps_to_hmm(m, seed=0)
    assert max(report.values()) < 1e-8
    assert h2.hidden_dim <= min(2 * 2, 2 * 2)
    assert tv_distance(hmm_probs(h), hmm_probs(h2)) < 1e-6


def test_mps_to_hmm_rank1_exact():
    m = H.hmm_to_mps(H.random_hmm(4, 1, 2, seed=8))
    h2, report = H.mps_to_hmm(m, seed=0)
    assert h2.hidden_dim == 1
    assert max(report.values()) < 1e-10


def test_mps_to_hmm_hidden_dim_cap():
    m = M.random_mps(M.NONNEG, 4, 2, 3, seed=9)
    h2, report = H.mps_to_hmm(m, seed=0)
    assert h2.hidden_dim <= min(2 * 3, 3 * 3)
    # residuals are reported, never silently dropped
    assert set(report) == set(range(4))


def test_baum_welch_deterministic_emissions():
    # hidden state fully determines the symbol; EM should reach the
    # generating likelihood
    r, n = 2, 5
    rng = np.random.default_rng(10)
    tr = rng.uniform(0.2, 1, (r, r))
    tr /= tr.sum(axis=0)
    em = np.eye(2)
    gen = H.homogeneous_hmm(n, np.array([0.6, 0.4]), tr, em)
    data = M.sample_batch(H.hmm_to_mps(gen), 1500, seed=11)
    fit, trace = H.baum_welch(data, r, iters=200, seed=1)
    gen_ll = H.data_log_likelihood(gen, data)
    assert H.data_log_likelihood(fit, data) >= gen_ll - 1e-6


def test_baum_welch_hidden_dim_one_is_empirical():
    data = np.random.default_rng(12).integers(0, 2, size=(400, 4))
    fit, _ = H.baum_welch(data, 1, iters=1, seed=0)
    for i in range(4):
        emp = np.bincount(data[:, i], minlength=2) / 400
        assert np.max(np.abs(fit.emissions[i][:, 0] - emp)) < 1e-6


def test_baum_welch_monotone_log_likelihood():
    for seed in range(5):
        data = M.sample_batch(
            H.hmm_to_mps(H.random_hmm(5, 3, 2, seed=100 + seed)),
            300, seed=seed)
        _, trace = H.baum_welch(data, 3, iters=100, seed=seed)
        diffs = np.diff(trace)
        assert diffs.min() > -1e-10


def test_baum_welch_rejects_empty_data():
    with pytest.raises(ShapeError):
        H.baum_welch(np.zeros((0, 4), dtype=int), 2)


def test_hmm_validation():
    with pytest.raises(ShapeError):
        H.Hmm(np.array([0.5, 0.6]),
              (np.eye(2),), (np.eye(2), np.eye(2)))
    bad = np.array([[0.5, 0.2], [0.6, 0.8]])
    with pytest.raises(ShapeError):
        H.Hmm(np.array([0.5, 0.5]), (bad,), (np.eye(2), np.eye(2)))
