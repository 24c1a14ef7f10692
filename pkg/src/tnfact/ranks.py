"""Witness matrices, matrix-rank oracles and rank-separation families.

Small non-negative matrices separate the ranks of the different
tensor-network representations: the ordinary rank (real MPS), the
non-negative rank (non-negative MPS), the real and complex Hadamard
square-root ranks (Born machines) and the real/complex psd-rank (LPS).
This module builds those matrices, verifies their rank claims where an
exhaustive or exact certificate is feasible, and lifts matrix
factorizations to many-variable models whose central bipartition contains
the matrix.

Lower bounds are NP-hard in general; exhaustive certificates are issued
only for sign-pattern enumeration (real square-root rank, up to 16
nonzero entries) and zero-pattern non-negative rank on matrices up to
4x4. Everything else is either an upper bound with an explicit witness,
a search reported as inconclusive, or a recorded external claim.
"""

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .dense import DenseTensor, as_array
from .errors import ShapeError
from .models import BornModel, MpsModel, NONNEG, REAL
from .nmf import nonneg_matrix_factorization

SVD_TOL = 1e-9


@dataclass
class RankCertificate:
    kind: str                  # e.g. "rank", "nonneg_rank", "real_sqrt_rank"
    value: object              # int, or None when inconclusive
    status: str                # exact | upper-bound | inconclusive | cited
    residual: float = 0.0
    witness: object = None
    detail: str = ""


@dataclass
class WitnessMatrix:
    name: str
    entries: DenseTensor
    claimed_ranks: dict = field(default_factory=dict)
    external_claims: dict = field(default_factory=dict)  # cited, not recomputed

    @property
    def array(self):
        return self.entries.real_array()


_GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0

_WITNESS_DATA = {
    "A": (
        [[0, 1, 1, 0],
         [0, 0, 1, 1],
         [1, 0, 0, 1],
         [1, 1, 0, 0]],
        {"rank": 3, "nonneg_rank": 4},
        {},
    ),
    "B": (
        [[2, 1, 1],
         [1, 0, 1],
         [1, 1, 0]],
        {"rank": 2, "nonneg_rank": 2, "real_sqrt_rank": 3,
         "complex_sqrt_rank": 2},
        {"real_psd_rank": "<= 2", "complex_psd_rank": "<= 2"},
    ),
    "C": (
        [[4, 1, 1],
         [1, 0, 1],
         [1, 1, 0]],
        {"rank": 3, "nonneg_rank": 3, "real_sqrt_rank": 2,
         "complex_sqrt_rank": 2},
        {},
    ),
    "D": (
        [[0, 1, _GOLDEN, 1, 0],
         [0, 0, 1, _GOLDEN, 1],
         [1, 0, 0, 1, _GOLDEN],
         [_GOLDEN, 1, 0, 0, 1],
         [1, _GOLDEN, 1, 0, 0]],
        {"rank": 3, "nonneg_rank": 5},
        {"real_psd_rank": 4, "complex_psd_rank": 4, "complex_sqrt_rank": ">= 4"},
    ),
    "E": (
        [[0, 1, 1, 1],
         [1, 0, 1, 1],
         [1, 1, 0, 1],
         [1, 1, 1, 0]],
        {"rank": 4, "complex_sqrt_rank": 2},
        {"real_psd_rank": 3},
    ),
    "F": (
        [[1, 0, 0, 1, 1, 0, 1],
         [0, 1, 0, 0, 1, 1, 1],
         [0, 0, 1, 1, 0, 1, 1],
         [1, 0, 1, 2, 1, 1, 2],
         [1, 1, 0, 1, 2, 1, 2],
         [0, 1, 1, 1, 1, 2, 2],
         [1, 1, 1, 2, 2, 2, 3]],
        {"rank": 3, "nonneg_rank": 3},
        {"complex_sqrt_rank": ">= 4"},
    ),
}


def witness_matrix(name):
    """One of the six named separation witnesses A..F."""
    try:
        entries, claims, external = _WITNESS_DATA[name]
    except KeyError:
        raise ShapeError(f"unknown witness name {name!r}; "
                         f"expected one of {sorted(_WITNESS_DATA)}") from None
    return WitnessMatrix(name, DenseTensor(np.array(entries, dtype=float)),
                         dict(claims), dict(external))


def complex_sqrt_witness(name):
    """A rank-2 complex matrix whose |.|^2 equals witness B or E."""
    if name == "B":
        return DenseTensor(np.array([[1 + 1j, 1, 1],
                                     [1, 0, 1],
                                     [1j, 1, 0]], dtype=complex))
    if name == "E":
        g1, g2 = complex_sqrt_witness_factors("E")
        return DenseTensor(as_array(g1) @ as_array(g2))
    raise ShapeError(f"no printed complex square-root witness for {name!r}")


def complex_sqrt_witness_factors(name):
    """The printed rank-2 factor pair behind witness E's complex root."""
    if name != "E":
        raise ShapeError(f"no printed factor pair for {name!r}")
    w = np.exp(2j * np.pi / 3.0)
    g1 = np.array([[1, 0],
                   [0, 1],
                   [1, -1],
                   [1, w]], dtype=complex)
    g2 = np.array([[0, 1, 1, 1],
                   [1, 0, 1, -np.conj(w)]], dtype=complex)
    return DenseTensor(g1), DenseTensor(g2)


def nonneg_factor_witness(name):
    """The 7x3 0/1 factor G with F = G @ G.T (exact in floats)."""
    if name != "F":
        raise ShapeError(f"no printed non-negative factor for {name!r}")
    g = np.array([[0, 0, 1],
                  [1, 0, 0],
                  [0, 1, 0],
                  [0, 1, 1],
                  [1, 0, 1],
                  [1, 1, 0],
                  [1, 1, 1]], dtype=float)
    return DenseTensor(g)


# ---------------------------------------------------------------------------
# matrix families
# ---------------------------------------------------------------------------

def _odd_primes(count):
    primes = []
    cand = 3
    while len(primes) < count:
        if all(cand % p for p in primes) and all(
                cand % q for q in range(3, int(cand**0.5) + 1, 2)):
            primes.append(cand)
        cand += 2
    return primes


def prime_matrix(n):
    """K[i, j] = n_i + n_j - 1 with 2*n_i - 1 running over the odd primes.

    Rank 2 and non-negative rank 2; the real square-root rank is full.
    The prime 2 cannot be written as 2n - 1 with integer n, so the
    sequence starts at 3 (n = 2, 3, 4, 6, ...).
    """
    if n < 1:
        raise ShapeError("n must be >= 1")
    ns = np.array([(p + 1) // 2 for p in _odd_primes(n)], dtype=float)
    return DenseTensor(ns[:, None] + ns[None, :] - 1.0)


def complex_sqrt_prime_witness(n):
    """Rank-2 complex M with |M|^2 equal to prime_matrix(n) entrywise:
    M[i, j] = sqrt(n_i) + 1j * sqrt(n_j - 1)."""
    ns = np.array([(p + 1) // 2 for p in _odd_primes(n)], dtype=float)
    return DenseTensor(np.sqrt(ns)[:, None] + 1j * np.sqrt(ns - 1.0)[None, :])


def euclidean_matrix(n):
    """Linear Euclidean distance matrix M[i, j] = (j - i)^2."""
    if n < 1:
        raise ShapeError("n must be >= 1")
    idx = np.arange(n, dtype=float)
    return DenseTensor((idx[None, :] - idx[:, None]) ** 2)


def euclidean_sqrt_witness(n):
    """H[i, j] = j - i, a rank-2 real square root of euclidean_matrix."""
    idx = np.arange(n, dtype=float)
    return DenseTensor(idx[None, :] - idx[:, None])


# ---------------------------------------------------------------------------
# rank oracles
# ---------------------------------------------------------------------------

def matrix_rank(m, tol=SVD_TOL):
    """Number of singular values above tol * sigma_max."""
    arr = as_array(m)
    if arr.size == 0:
        return 0
    s = np.linalg.svd(arr, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def nonneg_rank_search(m, k, restarts=100, iters=4000, seed=0):
    """Search for a non-negative factorization with inner dimension k.

    Returns an upper-bound certificate when the relative residual drops
    below 1e-8, otherwise an inconclusive one (search failure is evidence,
    not proof, of a lower bound).
    """
    arr = as_array(m).real
    if np.min(arr) < 0:
        raise ShapeError("matrix must be non-negative")
    t0 = time.perf_counter()
    w, h, resid = nonneg_matrix_factorization(arr, k, iters=iters,
                                              restarts=restarts, seed=seed)
    elapsed = time.perf_counter() - t0
    if resid < 1e-8:
        return RankCertificate("nonneg_rank", k, "upper-bound", resid,
                               witness=(w, h),
                               detail=f"{restarts} restarts, {elapsed:.2f}s")
    return RankCertificate("nonneg_rank", None, "inconclusive", resid,
                           detail=f"no factorization found at k={k} "
                                  f"({restarts} restarts)")


def _maximal_rectangles(supp):
    """All maximal all-True rectangles R x C inside a boolean matrix."""
    nrows = supp.shape[0]
    seen = {}
    for size in range(1, nrows + 1):
        for rows in itertools.combinations(range(nrows), size):
            cols = np.nonzero(np.all(supp[list(rows)], axis=0))[0]
            if cols.size == 0:
                continue
            rows_star = tuple(np.nonzero(
                np.all(supp[:, cols], axis=1))[0].tolist())
            seen[(rows_star, tuple(cols.tolist()))] = None
    return list(seen.keys())


def _masked_nnls_columns(basis, targets, mask):
    """Per-column nnls with rows of the solution forced to the mask."""
    import scipy.optimize

    out = np.zeros((basis.shape[1], targets.shape[1]))
    for j in range(targets.shape[1]):
        allowed = np.nonzero(mask[:, j])[0]
        if allowed.size == 0:
            continue
        sol, _ = scipy.optimize.nnls(basis[:, allowed], targets[:, j])
        out[allowed, j] = sol
    return out


def _masked_nmf(arr, rects, restarts, iters, seed):
    """Exact-fit attempt with each rank-1 term supported on one rectangle."""
    k = len(rects)
    umask = np.zeros((arr.shape[0], k))
    vmask = np.zeros((k, arr.shape[1]))
    for s, (rows, cols) in enumerate(rects):
        umask[list(rows), s] = 1.0
        vmask[s, list(cols)] = 1.0
    norm = np.linalg.norm(arr)
    eps = 1e-12
    best = np.inf
    best_wh = None
    for ss in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(ss)
        w = rng.uniform(0.1, 1.0, size=umask.shape) * umask
        h = rng.uniform(0.1, 1.0, size=vmask.shape) * vmask
        for _ in range(iters):
            h *= (w.T @ arr) / (w.T @ w @ h + eps)
            w *= (arr @ h.T) / (w @ h @ h.T + eps)
        for _ in range(20):
            h = _masked_nnls_columns(w, arr, vmask)
            w = _masked_nnls_columns(h.T, arr.T, umask.T).T
        resid = np.linalg.norm(arr - w @ h) / norm
        if resid < best:
            best, best_wh = resid, (w, h)
        if best < 1e-11:
            break
    return best, best_wh


def nonneg_rank_exact_small(m, k, restarts=40, iters=3000, seed=0):
    """Decide whether a small non-negative matrix admits an exact
    non-negative factorization of inner dimension k.

    The supports of the k rank-1 terms are combinatorial rectangles inside
    the support of m that must jointly cover it; the rectangles can be
    taken maximal without loss of generality. When no k-cover exists the
    answer False is a combinatorial certificate. When covers exist, the
    continuous fit restricted to each cover is solved by masked
    multiplicative updates; success yields an explicit factorization.
    """
    arr = as_array(m).real
    if arr.shape[0] > 4 or arr.shape[1] > 4:
        raise ShapeError("exact search supports matrices up to 4x4")
    if k > 4:
        raise ShapeError("exact search supports k <= 4")
    if np.min(arr) < 0:
        raise ShapeError("matrix must be non-negative")
    supp = arr > 0
    if not np.any(supp):
        return RankCertificate("nonneg_rank", True, "exact",
                               detail="zero matrix")
    if k >= min(arr.shape):
        nr, nc = arr.shape
        if k >= nr:
            u = np.zeros((nr, k))
            u[:, :nr] = np.eye(nr)
            v = np.zeros((k, nc))
            v[:nr] = arr
        else:
            u = np.zeros((nr, k))
            u[:, :nc] = arr
            v = np.zeros((k, nc))
            v[:nc, :nc] = np.eye(nc)
        return RankCertificate(
            "nonneg_rank", True, "exact", 0.0, witness=(u, v),
            detail="trivial: k >= min dimension")
    rects = _maximal_rectangles(supp)
    target = {(i, j) for i, j in zip(*np.nonzero(supp))}
    covers = []
    for combo in itertools.combinations_with_replacement(rects, k):
        covered = set()
        for rows, cols in combo:
            covered.update((i, j) for i in rows for j in cols)
        if covered == target:
            covers.append(combo)
    if not covers:
        return RankCertificate(
            "nonneg_rank", False, "exact",
            detail=f"no {k}-rectangle cover of the support exists "
                   f"({len(rects)} maximal rectangles)")
    best = (np.inf, None, None)
    for combo in covers:
        resid, wh = _masked_nmf(arr, combo, restarts, iters, seed)
        if resid < best[0]:
            best = (resid, wh, combo)
        if resid < 1e-9:
            return RankCertificate(
                "nonneg_rank", True, "exact", resid, witness=wh,
                detail=f"cover of {len(combo)} rectangles fits exactly")
    return RankCertificate(
        "nonneg_rank", False, "inconclusive", best[0],
        detail=f"all {len(covers)} support covers failed the continuous "
               f"fit (best residual {best[0]:.2e})")


def real_sqrt_rank(m, max_entries=16, tol=SVD_TOL):
    """Minimal rank over all real entrywise square roots of m, by
    exhausting the sign choices on the nonzero entries (exact: any real
    square root differs from the principal one only by signs)."""
    arr = as_array(m).real
    if np.min(arr) < 0:
        raise ShapeError("matrix must be non-negative")
    root = np.sqrt(arr)
    nz = np.argwhere(arr > 0)
    cnt = len(nz)
    if cnt > max_entries:
        raise ShapeError(f"{cnt} nonzero entries exceed the cap {max_entries}")
    n_pat = 1 << cnt
    stack = np.broadcast_to(root, (n_pat,) + root.shape).copy()
    for bit, (i, j) in enumerate(nz):
        flip = (np.arange(n_pat) >> bit) & 1
        stack[flip == 1, i, j] *= -1.0
    svals = np.linalg.svd(stack, compute_uv=False)
    tops = svals[:, 0]
    ranks = np.count_nonzero(svals > tol * tops[:, None], axis=1)
    ranks[tops == 0.0] = 0
    best = int(ranks.min())
    pattern = int(np.argmin(ranks))
    cert = RankCertificate("real_sqrt_rank", best, "exact",
                           witness=stack[pattern],
                           detail=f"exhausted {n_pat} sign patterns")
    return best, cert


def complex_sqrt_rank_search(m, k, restarts=20, iters=400, seed=0):
    """Upper-bound search for the complex Hadamard square-root rank:
    alternate projecting sqrt(m) * exp(i theta) onto rank-k matrices and
    re-fitting the entry phases."""
    arr = as_array(m).real
    if np.min(arr) < 0:
        raise ShapeError("matrix must be non-negative")
    root = np.sqrt(arr)
    norm = np.linalg.norm(root)
    if norm == 0.0:
        return RankCertificate("complex_sqrt_rank", 0, "exact")
    if k >= min(arr.shape):
        return RankCertificate("complex_sqrt_rank", k, "upper-bound", 0.0,
                               witness=root.astype(complex),
                               detail="trivial: k >= min dimension")
    best = (np.inf, None)
    for ss in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(ss)
        theta = rng.uniform(0.0, 2 * np.pi, size=arr.shape)
        x = root * np.exp(1j * theta)
        for _ in range(iters):
            u, s, vt = np.linalg.svd(x, full_matrices=False)
            y = (u[:, :k] * s[:k]) @ vt[:k]
            phase = np.where(np.abs(y) > 0, y / np.maximum(np.abs(y), 1e-300),
                             np.exp(1j * theta))
            x = root * phase
        resid = np.linalg.norm(x - y) / norm
        if resid < best[0]:
            best = (resid, x)
        if best[0] < 1e-10:
            break
    if best[0] < 1e-8:
        return RankCertificate("complex_sqrt_rank", k, "upper-bound",
                               best[0], witness=best[1])
    return RankCertificate("complex_sqrt_rank", None, "inconclusive", best[0],
                           detail=f"no rank-{k} phase pattern found")


def verify_entrywise_square(witness, target, tol=1e-12):
    """Max |witness|^2 - target deviation; the basic |.|^2 consistency check."""
    w = as_array(witness)
    t = as_array(target).real
    return float(np.max(np.abs(np.abs(w) ** 2 - t)))


# ---------------------------------------------------------------------------
# unfolding matrices into chains
# ---------------------------------------------------------------------------

def unfold_matrix_to_mps(e, f, fld=REAL):
    """MPS over 2n binary sites embedding the factorization M = E @ F.

    Site j (0-based, j < n) carries row j of E on its one-index; site
    n + j carries column j of F. For one-hot configurations with single
    ones at positions i and n + j, the tensor value is M[i, j], so M is a
    submatrix of the central bipartition.
    """
    e = as_array(e)
    f = as_array(f)
    if e.ndim != 2 or f.ndim != 2 or e.shape[1] != f.shape[0]:
        raise ShapeError("factors must be (n, r) and (r, n)")
    n, r = e.shape
    if f.shape[1] != n:
        raise ShapeError("factors must produce a square matrix")
    if n < 2:
        raise ShapeError("need n >= 2 for a 2n-site chain")
    eye = np.eye(r, dtype=complex)
    cores = [np.stack([np.ones(r, dtype=complex), e[0]])]
    for i in range(1, n):
        cores.append(np.stack([eye, np.diag(e[i])]))
    for j in range(n - 1):
        cores.append(np.stack([eye, np.diag(f[:, j])]))
    cores.append(np.stack([np.ones(r, dtype=complex), f[:, n - 1]]))
    return MpsModel(fld, cores)


def _counter_chain(n, first_row, bulk_sign, last_rows):
    """2n-site chain over a 2-dimensional virtual index that accumulates
    site-weighted binary encodings with weights 2**(n - 1 - position)
    (most significant site first, matching the row-major bipartition).

    The left half carries the row encoding in the virtual state (1, c);
    one-bits add bulk_sign * weight to c. The right half accumulates the
    column encoding into the first component of the boundary column.
    """
    w0 = 2.0 ** (n - 1)
    cores = [np.array([first_row, [first_row[0], first_row[1] + bulk_sign * w0]])]
    for pos in range(1, n):
        w = 2.0 ** (n - 1 - pos)
        cores.append(np.stack([np.eye(2),
                               np.array([[1.0, bulk_sign * w], [0.0, 1.0]])]))
    for pos in range(n - 1):
        w = 2.0 ** (n - 1 - pos)
        cores.append(np.stack([np.eye(2),
                               np.array([[1.0, w], [0.0, 1.0]])]))
    cores.append(np.array(last_rows))
    return [c.astype(complex) for c in cores]


def prime_family_mps(n):
    """Non-negative MPS over 2n binary sites whose central bipartition is
    the full 2^n x 2^n matrix M[i, j] = i + j (1-based encodings), with
    every bond dimension equal to 2."""
    if n < 1:
        raise ShapeError("n must be >= 1")
    cores = _counter_chain(n, first_row=[1.0, 1.0], bulk_sign=1.0,
                           last_rows=[[1.0, 1.0], [2.0, 1.0]])
    return MpsModel(NONNEG, cores)


def euclidean_family_bm(n):
    """Real Born machine over 2n binary sites whose probability tensor has
    central bipartition (j - i)^2 on 0-based encodings; the amplitude MPS
    has every bond dimension equal to 2."""
    if n < 1:
        raise ShapeError("n must be >= 1")
    cores = _counter_chain(n, first_row=[1.0, 0.0], bulk_sign=-1.0,
                           last_rows=[[0.0, 1.0], [1.0, 1.0]])
    return BornModel(MpsModel(REAL, cores))


def central_bipartition(t):
    """Reshape a tensor over 2n d-dimensional sites into a d^n x d^n
    matrix splitting the first n sites from the last n (row-major)."""
    arr = as_array(t)
    if arr.ndim % 2 != 0:
        raise ShapeError("central bipartition needs an even site count")
    d = arr.shape[0]
    if any(s != d for s in arr.shape):
        raise ShapeError("sites must share one dimension")
    half = d ** (arr.ndim // 2)
    return DenseTensor(arr.reshape(half, half))


def prime_count(x):
    """pi(x): the number of primes <= x."""
    if x < 2:
        return 0
    sieve = np.ones(int(x) + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(np.sqrt(x)) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return int(np.count_nonzero(sieve))
