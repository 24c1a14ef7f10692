"""Hidden Markov models and their bridge to non-negative MPS.

The chain is time-inhomogeneous (one transition table per step, one
emission table per site) so that it matches per-site MPS cores one to one;
a homogeneous convenience constructor ties the tables. Tables are
column-stochastic: ``transitions[i][to, from]`` and
``emissions[i][obs, hidden]`` have columns summing to one.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ShapeError
from .models import MpsModel, NONNEG
from .nmf import nonneg_cp, nonneg_matrix_factorization

_STOCH_TOL = 1e-12


def _check_stochastic(table, what):
    if np.min(table) < -_STOCH_TOL:
        raise ShapeError(f"{what} has negative entries")
    colsums = table.sum(axis=0)
    if np.max(np.abs(colsums - 1.0)) > 1e-9:
        raise ShapeError(f"{what} columns must sum to 1")


@dataclass(frozen=True)
class Hmm:
    initial: np.ndarray          # (r,)
    transitions: tuple           # N-1 tables, each (r, r), P(H_i | H_{i-1})
    emissions: tuple             # N tables, each (d, r), P(X_i | H_i)

    def __post_init__(self):
        initial = np.ascontiguousarray(self.initial, dtype=float)
        transitions = tuple(np.ascontiguousarray(t, dtype=float)
                            for t in self.transitions)
        emissions = tuple(np.ascontiguousarray(e, dtype=float)
                          for e in self.emissions)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "emissions", emissions)
        r = initial.shape[0]
        if len(emissions) != len(transitions) + 1:
            raise ShapeError("need one emission table per site and one "
                             "transition table per step")
        if abs(initial.sum() - 1.0) > 1e-9 or np.min(initial) < -_STOCH_TOL:
            raise ShapeError("initial distribution must be a probability vector")
        d = emissions[0].shape[0]
        for i, t in enumerate(transitions):
            if t.shape != (r, r):
                raise ShapeError(f"transition table {i} must be ({r}, {r})")
            _check_stochastic(t, f"transition table {i}")
        for i, e in enumerate(emissions):
            if e.shape != (d, r):
                raise ShapeError(f"emission table {i} must be ({d}, {r})")
            _check_stochastic(e, f"emission table {i}")

    @property
    def n_sites(self):
        return len(self.emissions)

    @property
    def hidden_dim(self):
        return self.initial.shape[0]

    @property
    def obs_dim(self):
        return self.emissions[0].shape[0]


def homogeneous_hmm(n_sites, initial, transition, emission):
    """Tie one transition and one emission table across all steps."""
    return Hmm(initial,
               tuple(transition for _ in range(n_sites - 1)),
               tuple(emission for _ in range(n_sites)))


def random_hmm(n_sites, hidden_dim, obs_dim, seed):
    rng = np.random.default_rng(seed)

    def stoch(shape):
        t = rng.uniform(0.05, 1.0, size=shape)
        return t / t.sum(axis=0, keepdims=True)

    initial = stoch((hidden_dim,))
    transitions = tuple(stoch((hidden_dim, hidden_dim))
                        for _ in range(n_sites - 1))
    emissions = tuple(stoch((obs_dim, hidden_dim)) for _ in range(n_sites))
    return Hmm(initial, transitions, emissions)


def forward_log_likelihood(h, x):
    """log P(x) by the scaled forward recursion.

    Kept free of any tensor-network code so it can serve as an independent
    oracle for the MPS bridge.
    """
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (h.n_sites,):
        raise ShapeError(f"observation must have length {h.n_sites}")
    if np.any(x < 0) or np.any(x >= h.obs_dim):
        raise ShapeError("observation value out of range")
    alpha = h.initial * h.emissions[0][x[0]]
    total = 0.0
    for i in range(1, h.n_sites):
        s = alpha.sum()
        if s <= 0.0:
            return float("-inf")
        total += np.log(s)
        alpha = alpha / s
        alpha = h.emissions[i][x[i]] * (h.transitions[i - 1] @ alpha)
    s = alpha.sum()
    if s <= 0.0:
        return float("-inf")
    return float(total + np.log(s))


def forward_log_likelihood_batch(h, xs):
    xs = np.asarray(xs, dtype=np.int64)
    return np.array([forward_log_likelihood(h, row) for row in xs])


def hmm_to_mps(h):
    """Non-negative MPS defining the same distribution, TT-rank <= r.

    The initial distribution is absorbed into the first core; the last
    transition and emission contract into the final core, so Z_T = 1.
    """
    n, r, d = h.n_sites, h.hidden_dim, h.obs_dim
    cores = []
    first = h.emissions[0] * h.initial[None, :]            # (d, r)
    if n == 2:
        last = np.einsum("lk,kj->lj", h.emissions[1], h.transitions[0])
        return MpsModel(NONNEG, [first, last])
    cores.append(first)
    for i in range(1, n - 1):
        # A[l, j, k] = P(H_i = k | H_{i-1} = j) P(X_i = l | H_i = k)
        core = h.transitions[i - 1].T[None, :, :] * \
            h.emissions[i].reshape(d, 1, r)
        cores.append(core)
    last = np.einsum("lk,kj->lj", h.emissions[-1], h.transitions[-1])
    cores.append(last)
    return MpsModel(NONNEG, cores)


def mps_to_hmm(m, ncp_rank_cap=None, restarts=8, iters=4000, seed=0):
    """Rewrite a non-negative MPS as an HMM via per-core non-negative CP.

    The hidden dimension is at most min(d * r, r**2). Exactness holds only
    when every core decomposes exactly; the per-core relative residuals are
    returned alongside the model and never silently dropped.

    Returns (Hmm, residual_report) where residual_report maps core index
    to the achieved relative residual.
    """
    if not isinstance(m, MpsModel) or m.field != NONNEG:
        raise ShapeError("input must be a non-negative MPS")
    n, d = m.n_sites, m.phys_dim
    r = m.rank
    cap = ncp_rank_cap if ncp_rank_cap is not None else min(d * r, r * r)
    report = {}

    # Split each core A_i[l, j, k] ~= sum_s B[j, s] C[l, s] D[s, k]; the
    # boundaries are plain NMF problems.
    cs, ms_chain = [], []
    first = m.cores[0].real                       # (d, r)
    c0, d0, resid = _nmf_increasing(first, cap, restarts, iters, seed)
    report[0] = resid
    cs.append(c0)                                  # (d, s)
    prev_d = d0                                    # (s, r)
    for i in range(1, n - 1):
        core = np.moveaxis(m.cores[i].real, 0, 1)  # (j, l, k)
        (b, c, dd), resid = _ncp_increasing(core, cap, restarts, iters,
                                            seed + i)
        report[i] = resid
        ms_chain.append(prev_d @ b)                # (s_prev, s_i)
        cs.append(c)
        prev_d = dd.T                              # (s_i, r)
    lastm = m.cores[-1].real                       # (d, r)
    cN, bN, resid = _nmf_increasing(lastm, cap, restarts, iters, seed + n)
    report[n - 1] = resid
    ms_chain.append(prev_d @ bN.T)                 # (s_prev, s_last)
    cs.append(cN)

    return _chain_to_hmm(cs, ms_chain), report


def _nmf_increasing(mat, cap, restarts, iters, seed):
    """NMF trying small inner dimensions first, growing until near-exact."""
    best = None
    for k in range(1, cap + 1):
        w, h, resid = nonneg_matrix_factorization(mat, k, iters, restarts, seed)
        if best is None or resid < best[2]:
            best = (w, h, resid)
        if resid < 1e-9:
            break
    return best


def _ncp_increasing(tensor, cap, restarts, iters, seed):
    best = None
    for k in range(1, cap + 1):
        facs, resid = nonneg_cp(tensor, k, iters, restarts, seed)
        if best is None or resid < best[1]:
            best = (facs, resid)
        if resid < 1e-9:
            break
    return best


def _pad_to(mat, rows, cols):
    out = np.zeros((rows, cols))
    out[:mat.shape[0], :mat.shape[1]] = mat
    return out


def _chain_to_hmm(cs, ms_chain):
    """Normalize an unnormalized hidden chain into proper HMM tables.

    ``cs[i]`` are (d, s_i) emission-like factors and ``ms_chain[i]`` are
    (s_i, s_{i+1}) couplers; the distribution they define is preserved.
    """
    n = len(cs)
    s = max(c.shape[1] for c in cs)
    cs = [_pad_to(c, c.shape[0], s) for c in cs]
    ms_chain = [_pad_to(mm, s, s) for mm in ms_chain]

    # normalize emissions, pushing column sums onto the chain
    ems = []
    sums = []
    for c in cs:
        e = c.sum(axis=0)
        safe = np.where(e > 0, e, 1.0)
        em = c / safe
        dead = e <= 0
        if np.any(dead):
            em[:, dead] = 1.0 / c.shape[0]
        ems.append(em)
        sums.append(e)
    pi = sums[0].copy()
    ms = [mm * sums[i + 1][None, :] for i, mm in enumerate(ms_chain)]

    # right partition vectors turn couplers into stochastic transitions
    zs = [np.ones(s)]
    for mm in reversed(ms):
        zs.insert(0, mm @ zs[0])
    total = float(pi @ zs[0])
    if total <= 0.0:
        raise NumericalError("chain normalizes to zero")
    transitions = []
    for i, mm in enumerate(ms):
        denom = np.where(zs[i] > 0, zs[i], 1.0)
        tr = (mm * zs[i + 1][None, :]) / denom[:, None]
        dead = zs[i] <= 0
        if np.any(dead):
            tr[dead, :] = 1.0 / s
        transitions.append(tr.T)  # store as (to, from), column-stochastic
    initial = pi * zs[0] / total
    initial = np.maximum(initial, 0.0)
    initial = initial / initial.sum()
    return Hmm(initial, tuple(transitions), tuple(ems))


# ---------------------------------------------------------------------------
# Baum-Welch (EM) for the inhomogeneous chain
# ---------------------------------------------------------------------------

def baum_welch(data, hidden_dim, iters=50, seed=0, pseudo_count=1e-10):
    """EM training of a per-step HMM; the data log-likelihood never
    decreases (up to a pseudo-count of 1e-10 used to avoid dead states).

    Returns (Hmm, log-likelihood trace as list, one entry per iteration).
    """
    xs = np.asarray(data, dtype=np.int64)
    if xs.ndim != 2 or xs.shape[0] == 0:
        raise ShapeError("data must be a non-empty (n, N) array")
    nb, n = xs.shape
    d = int(xs.max()) + 1
    r = int(hidden_dim)
    h = random_hmm(n, r, d, seed)
    trace = []
    for _ in range(iters):
        gammas, xis, ll = _e_step(h, xs)
        trace.append(ll)
        initial = gammas[0].mean(axis=0) + pseudo_count
        initial /= initial.sum()
        transitions = []
        for i in range(n - 1):
            t = xis[i].sum(axis=0).T + pseudo_count  # (to, from)
            transitions.append(t / t.sum(axis=0, keepdims=True))
        emissions = []
        for i in range(n):
            e = np.zeros((d, r))
            np.add.at(e, xs[:, i], gammas[i])
            e += pseudo_count
            emissions.append(e / e.sum(axis=0, keepdims=True))
        h = Hmm(initial, tuple(transitions), tuple(emissions))
    return h, trace


def _e_step(h, xs):
    nb, n = xs.shape
    r = h.hidden_dim
    alphas = np.zeros((n, nb, r))
    scales = np.zeros((n, nb))
    a = h.initial[None, :] * h.emissions[0][xs[:, 0]]
    for i in range(n):
        if i > 0:
            a = h.emissions[i][xs[:, i]] * (alphas[i - 1] @ h.transitions[i - 1].T)
        s = a.sum(axis=1)
        s = np.where(s > 0, s, 1e-300)
        alphas[i] = a / s[:, None]
        scales[i] = s
    ll = float(np.log(scales).sum() / nb)
    betas = np.zeros((n, nb, r))
    betas[-1] = 1.0
    for i in range(n - 2, -1, -1):
        b = (betas[i + 1] * h.emissions[i + 1][xs[:, i + 1]]) @ h.transitions[i]
        s = b.sum(axis=1)
        s = np.where(s > 0, s, 1e-300)
        betas[i] = b / s[:, None]
    gammas = []
    for i in range(n):
        g = alphas[i] * betas[i]
        g /= np.maximum(g.sum(axis=1, keepdims=True), 1e-300)
        gammas.append(g)
    xis = []
    for i in range(n - 1):
        # xi[b, j, k] ~ P(H_i = j, H_{i+1} = k | x_b)
        x = (alphas[i][:, :, None]
             * h.transitions[i].T[None, :, :]
             * (h.emissions[i + 1][xs[:, i + 1]] * betas[i + 1])[:, None, :])
        x /= np.maximum(x.sum(axis=(1, 2), keepdims=True), 1e-300)
        xis.append(x)
    return gammas, xis, ll


def data_log_likelihood(h, xs):
    xs = np.asarray(xs, dtype=np.int64)
    return float(np.mean(forward_log_likelihood_batch(h, xs)))
