"""Non-negative matrix and CP factorizations.

Used both for the MPS-to-HMM core splitting and the non-negative-rank
search certificates. The workhorse is the standard Frobenius-loss
multiplicative update with seeded random restarts; because exact
factorizations often live on the boundary of the feasible set (factor
entries exactly zero) where multiplicative updates converge only at rate
O(1/iter), each restart is finished with a few alternating non-negative
least-squares sweeps, which land on exact zeros in finitely many steps.
"""

import numpy as np
import scipy.optimize

from .errors import ShapeError

_EPS = 1e-12


def _khatri_rao(a, b):
    # column-wise Kronecker product: (I, R) x (J, R) -> (I*J, R)
    return (a[:, None, :] * b[None, :, :]).reshape(-1, a.shape[1])


def _nnls_columns(basis, targets):
    """Per-column nnls solve of basis @ X ~= targets."""
    out = np.zeros((basis.shape[1], targets.shape[1]))
    for j in range(targets.shape[1]):
        out[:, j], _ = scipy.optimize.nnls(basis, targets[:, j])
    return out


def _anls_polish(m, w, h, sweeps=30, tol=1e-13):
    norm = np.linalg.norm(m)
    prev = np.inf
    for _ in range(sweeps):
        h = _nnls_columns(w, m)
        w = _nnls_columns(h.T, m.T).T
        resid = np.linalg.norm(m - w @ h) / norm
        if resid < tol or prev - resid < 1e-15:
            break
        prev = resid
    return w, h, np.linalg.norm(m - w @ h) / norm


def nonneg_matrix_factorization(m, rank, iters=2000, restarts=8, seed=0):
    """Multiplicative-update NMF with an alternating-nnls finish.

    Returns (W, H, relative residual) with m ~= W @ H entrywise >= 0.
    """
    m = np.ascontiguousarray(m, dtype=float)
    norm = np.linalg.norm(m)
    if norm == 0.0:
        return (np.zeros((m.shape[0], rank)), np.zeros((rank, m.shape[1])), 0.0)
    best = (np.inf, None)
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    for ss in seeds:
        rng = np.random.default_rng(ss)
        w = rng.uniform(0.1, 1.0, size=(m.shape[0], rank))
        h = rng.uniform(0.1, 1.0, size=(rank, m.shape[1]))
        for it in range(iters):
            h *= (w.T @ m) / (w.T @ w @ h + _EPS)
            w *= (m @ h.T) / (w @ h @ h.T + _EPS)
            if it % 50 == 49 and np.linalg.norm(m - w @ h) / norm < 1e-12:
                break
        w, h, resid = _anls_polish(m, w, h)
        if resid < best[0]:
            best = (resid, (w.copy(), h.copy()))
        if best[0] < 1e-11:
            break
    w, h = best[1]
    return w, h, float(best[0])


def nonneg_cp(tensor, rank, iters=2000, restarts=8, seed=0, tol=1e-12):
    """Non-negative CP of an order-3 tensor.

    Returns (factors (B, C, D), relative residual). tensor[j, l, k] is
    approximated by sum_s B[j, s] C[l, s] D[k, s].
    """
    t = np.ascontiguousarray(tensor, dtype=float)
    if t.ndim != 3:
        raise ShapeError("nonneg_cp expects an order-3 tensor")
    norm = np.linalg.norm(t)
    if norm == 0.0:
        z = [np.zeros((s, rank)) for s in t.shape]
        return tuple(z), 0.0
    unf = [np.reshape(np.moveaxis(t, m, 0), (t.shape[m], -1)) for m in range(3)]
    best = (np.inf, None)
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    for ss in seeds:
        rng = np.random.default_rng(ss)
        facs = [rng.uniform(0.1, 1.0, size=(s, rank)) for s in t.shape]
        prev = np.inf
        for it in range(iters):
            for m in range(3):
                others = [facs[i] for i in range(3) if i != m]
                kr = _khatri_rao(others[0], others[1])
                num = unf[m] @ kr
                den = facs[m] @ (others[0].T @ others[0] *
                                 (others[1].T @ others[1])) + _EPS
                facs[m] *= num / den
            if it % 50 == 49:
                resid = _cp_residual(unf[0], facs) / norm
                if resid < 1e-12 or prev - resid < tol:
                    break
                prev = resid
        facs = _cp_polish(unf, facs)
        resid = _cp_residual(unf[0], facs) / norm
        if resid < best[0]:
            best = (resid, [f.copy() for f in facs])
        if best[0] < 1e-11:
            break
    return tuple(best[1]), float(best[0])


def _cp_polish(unf, facs, sweeps=15):
    for _ in range(sweeps):
        for m in range(3):
            others = [facs[i] for i in range(3) if i != m]
            kr = _khatri_rao(others[0], others[1])
            facs[m] = _nnls_columns(kr, unf[m].T).T
    return facs


def _cp_residual(unf0, facs):
    approx = facs[0] @ _khatri_rao(facs[1], facs[2]).T
    return np.linalg.norm(unf0 - approx)
