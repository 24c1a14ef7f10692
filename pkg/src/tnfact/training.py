"""Maximum-likelihood training and KL-divergence factorization.

Gradients are computed with cached left/right environments in one sweep
per batch. For complex cores the returned gradient is twice the Wirtinger
derivative with respect to the conjugated entries, packed so that its real
and imaginary parts are the plain gradients with respect to the real and
imaginary parts of the parameters. For real cores this reduces to the
ordinary gradient, so the same learning rate means the same thing on every
field. Non-negative MPS use the squared parameterization A = B * B; their
gradients are taken with respect to B.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .dense import DEFAULT_DENSE_CAP, as_array
from .errors import ShapeError, ZeroProbabilitySample
from .models import (
    BornModel,
    COMPLEX,
    LpsModel,
    MpsModel,
    NONNEG,
    REAL,
    _check_batch,
    _layers,
    _rescale_rows,
    log_prob_batch,
    random_born,
    random_lps,
    random_mps,
    to_dense,
)

KINDS = ("mps-nonneg", "mps-real", "born-real", "born-complex",
         "lps-real", "lps-complex")


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    batch_size: int = 20
    epochs: int = 10
    seed: int = 0
    optimizer: str = "sgd"  # "sgd" or "lbfgs"
    penalty_weight: float = 10.0
    lbfgs_memory: int = 10
    restarts: int = 20
    lbfgs_maxiter: int = 5000
    lbfgs_gtol: float = 1e-8
    lbfgs_ftol: float = 1e-14
    deterministic: bool = True

    def validate(self, n_rows=None):
        if self.learning_rate < 0:
            raise ShapeError("learning_rate must be >= 0")
        if self.batch_size < 1 or self.epochs < 0:
            raise ShapeError("batch_size must be >= 1 and epochs >= 0")
        if n_rows is not None and self.batch_size > max(n_rows, 1):
            raise ShapeError(
                f"batch_size {self.batch_size} exceeds dataset size {n_rows}"
            )


@dataclass
class TrainReport:
    history: list = field(default_factory=list)  # (epoch, split, nll, wall_ms)
    model: object = None  # best model seen
    final_model: object = None
    diverged: bool = False
    wall_s: float = 0.0
    aborted_steps: list = field(default_factory=list)  # (epoch, sample index)
    valid_model: object = None  # best model by validation NLL, when tracked

    def best(self, split="train"):
        vals = [v for _, s, v, _ in self.history if s == split and np.isfinite(v)]
        return min(vals) if vals else float("nan")

    def csv_rows(self, deterministic=False):
        yield "epoch,split,nll,wall_ms"
        for epoch, split, nll, wall_ms in self.history:
            ms = 0 if deterministic else int(round(wall_ms))
            yield f"{epoch},{split},{nll!r},{ms}"

    def write_csv(self, path, deterministic=False):
        with open(path, "w") as fh:
            for row in self.csv_rows(deterministic):
                fh.write(row + "\n")


# ---------------------------------------------------------------------------
# environments and gradients of log T and log Z
# ---------------------------------------------------------------------------

def _sl_envs(cores3, xs):
    # Scale factors cancel in every jet/denominator ratio, so rescaling is
    # only overflow protection and can run every few sites.
    nb = xs.shape[0]
    es = [np.ones((nb, 1), dtype=np.complex128)]
    for i, c in enumerate(cores3):
        e = np.matmul(es[-1][:, None], c[xs[:, i]])[:, 0]
        if i % 8 == 7:
            e, _ = _rescale_rows(e, np.zeros(nb))
        es.append(e)
    fs = [np.ones((nb, 1), dtype=np.complex128)]
    for i in range(len(cores3) - 1, -1, -1):
        f = np.matmul(cores3[i][xs[:, i]], fs[0][:, :, None])[:, :, 0]
        if i % 8 == 7:
            f, _ = _rescale_rows(f, np.zeros(nb))
        fs.insert(0, f)
    return es, fs


def _sl_log_grads(cores3, xs, weights, d):
    """Per-core sum_b w_b * d log T_b / d A_i, for rows with T_b != 0."""
    es, fs = _sl_envs(cores3, xs)
    grads = []
    for i, c in enumerate(cores3):
        ax = c[xs[:, i]]
        t = np.matmul(es[i][:, None], ax)[:, 0]
        denom = (t * fs[i + 1]).sum(axis=1)
        if np.any(denom == 0):
            raise ZeroProbabilitySample(int(np.nonzero(denom == 0)[0][0]))
        scaled = (weights / denom)[:, None] * es[i]
        jet = scaled[:, :, None] * fs[i + 1][:, None, :]
        g = np.zeros((d,) + c.shape[1:], dtype=np.complex128)
        np.add.at(g, xs[:, i], jet)
        grads.append(g)
    return grads


def _sl_norm_log_grads(cores3, d):
    es = [np.ones(1, dtype=np.complex128)]
    for c in cores3:
        e = es[-1] @ c.sum(axis=0)
        s = np.max(np.abs(e))
        es.append(e / s if s > 0 else e)
    fs = [np.ones(1, dtype=np.complex128)]
    for c in reversed(cores3):
        f = c.sum(axis=0) @ fs[0]
        s = np.max(np.abs(f))
        fs.insert(0, f / s if s > 0 else f)
    grads = []
    for i, c in enumerate(cores3):
        denom = es[i] @ c.sum(axis=0) @ fs[i + 1]
        jet = np.outer(es[i], fs[i + 1]) / denom
        grads.append(np.broadcast_to(jet, (d,) + jet.shape).copy())
    return grads


def _dl_envs(cores4, xs):
    nb = xs.shape[0]
    es = [np.ones((nb, 1, 1), dtype=np.complex128)]
    for i, c in enumerate(cores4):
        a = c[xs[:, i]]
        # e'[b,g,G] = sum_{m,a,A} a[b,m,a,g] e[b,a,A] conj(a[b,m,A,G])
        t = np.matmul(a.transpose(0, 1, 3, 2), es[-1][:, None])
        e = np.matmul(t, a.conj()).sum(axis=1)
        if i % 8 == 7:
            e, _ = _rescale_rows(e, np.zeros(nb))
        es.append(e)
    fs = [np.ones((nb, 1, 1), dtype=np.complex128)]
    for i in range(len(cores4) - 1, -1, -1):
        a = cores4[i][xs[:, i]]
        # f'[b,a,A] = sum_{m,g,G} a[b,m,a,g] f[b,g,G] conj(a[b,m,A,G])
        t = np.matmul(a, fs[0][:, None])
        f = np.matmul(t, a.conj().transpose(0, 1, 3, 2)).sum(axis=1)
        if i % 8 == 7:
            f, _ = _rescale_rows(f, np.zeros(nb))
        fs.insert(0, f)
    return es, fs


def _dl_log_grads(cores4, xs, weights, d):
    """Per-core sum_b w_b * d log T_b / d conj(A_i)."""
    es, fs = _dl_envs(cores4, xs)
    grads = []
    for i, c in enumerate(cores4):
        ax = c[xs[:, i]]
        # jet[b,m,A,G] = sum_{a,g} e[b,a,A] ax[b,m,a,g] f[b,g,G]
        t = np.matmul(es[i].transpose(0, 2, 1)[:, None], ax)
        jet = np.matmul(t, fs[i + 1][:, None])
        denom = (jet * ax.conj()).sum(axis=(1, 2, 3)).real
        if np.any(denom == 0):
            raise ZeroProbabilitySample(int(np.nonzero(denom == 0)[0][0]))
        jet *= (weights / denom)[:, None, None, None]
        g = np.zeros((d,) + c.shape[1:], dtype=np.complex128)
        np.add.at(g, xs[:, i], jet)
        grads.append(g)
    return grads


def _dl_norm_log_grads(cores4, d):
    es = [np.ones((1, 1), dtype=np.complex128)]
    for c in cores4:
        t = np.matmul(c.transpose(0, 1, 3, 2), es[-1][None, None])
        e = np.matmul(t, c.conj()).sum(axis=(0, 1))
        s = np.max(np.abs(e))
        es.append(e / s if s > 0 else e)
    fs = [np.ones((1, 1), dtype=np.complex128)]
    for c in reversed(cores4):
        t = np.matmul(c, fs[0][None, None])
        f = np.matmul(t, c.conj().transpose(0, 1, 3, 2)).sum(axis=(0, 1))
        s = np.max(np.abs(f))
        fs.insert(0, f / s if s > 0 else f)
    grads = []
    for i, c in enumerate(cores4):
        t = np.matmul(es[i].T[None, None], c)
        jet = np.matmul(t, fs[i + 1][None, None])
        denom = (jet * c.conj()).sum().real
        grads.append(jet / denom)
    return grads


def _unpad(grads, model):
    """Drop the dummy boundary bonds (and, for Born machines, the dummy
    purification axis) that the engine added."""
    out = list(grads)
    out[0] = out[0][..., 0, :]
    out[-1] = out[-1][..., :, 0]
    if isinstance(model, BornModel):
        out = [g[:, 0] for g in out]
    return out


def log_value_gradients(model, xs, weights=None):
    """sum_b w_b * grad log T_{x_b}, with core shapes matching the model.

    For double-layer models the gradient is with respect to the conjugated
    cores (the Wirtinger convention); single layers are analytic in their
    cores so the plain derivative is returned.
    """
    xs = _check_batch(model, xs)
    w = np.ones(xs.shape[0]) if weights is None else np.asarray(weights, float)
    kind, cores = _layers(model)
    d = model.phys_dim
    if kind == "single":
        return _unpad(_sl_log_grads(cores, xs, w.astype(np.complex128), d), model)
    return _unpad(_dl_log_grads(cores, xs, w.astype(np.complex128), d), model)


def log_norm_gradients(model):
    """grad log Z_T with core shapes matching the model (same convention)."""
    kind, cores = _layers(model)
    d = model.phys_dim
    if kind == "single":
        return _unpad(_sl_norm_log_grads(cores, d), model)
    return _unpad(_dl_norm_log_grads(cores, d), model)


# ---------------------------------------------------------------------------
# model parameterization
# ---------------------------------------------------------------------------

def model_kind(model):
    if isinstance(model, MpsModel):
        return "mps-" + model.field
    if isinstance(model, BornModel):
        return "born-" + model.field
    if isinstance(model, LpsModel):
        return "lps-" + model.field
    raise ShapeError(f"unknown model type {type(model)!r}")


def _param_cores(model):
    """The arrays actually parameterizing the model (amplitude for BM,
    square roots for a non-negative MPS)."""
    if isinstance(model, BornModel):
        return [c.copy() for c in model.amplitude.cores]
    if isinstance(model, MpsModel) and model.field == NONNEG:
        return [np.sqrt(np.maximum(c.real, 0.0)).astype(np.complex128)
                for c in model.cores]
    return [c.copy() for c in model.cores]


def _rebuild(model, param_cores):
    if isinstance(model, BornModel):
        return BornModel(MpsModel(model.field, param_cores))
    if isinstance(model, LpsModel):
        return LpsModel(model.field, param_cores)
    if model.field == NONNEG:
        return MpsModel(NONNEG, [c.real.astype(np.complex128) ** 2
                                 for c in param_cores])
    return MpsModel(model.field, param_cores)


def gradients_to_model_convention(model, dlog, param_cores=None):
    """Turn raw (conjugate-)derivatives of an objective into the gradient
    with respect to the model's free parameters.

    For the squared parameterization the chain rule needs the signed B
    tensors; optimizer loops that let B cross zero must pass their current
    ``param_cores`` (the default positive square roots are only correct at
    freshly built models).
    """
    if isinstance(model, (BornModel, LpsModel)):
        if model.field == COMPLEX:
            return [2.0 * g for g in dlog]
        return [2.0 * g.real for g in dlog]
    if model.field == NONNEG:
        if param_cores is None:
            param_cores = [np.sqrt(np.maximum(c.real, 0.0))
                           for c in model.cores]
        return [2.0 * g.real * b.real for g, b in zip(dlog, param_cores)]
    return [g.real for g in dlog]


def apply_step(model, grads, lr):
    """One plain gradient step, returning a new model."""
    params = _param_cores(model)
    stepped = []
    for p, g in zip(params, grads):
        g = np.asarray(g)
        if model.field == COMPLEX:
            stepped.append(p - lr * g.astype(np.complex128))
        else:
            stepped.append((p.real - lr * np.real(g)).astype(np.complex128))
    return _rebuild(model, stepped)


def pack(model):
    """Flatten the free real parameters into one vector."""
    parts = []
    for p in _param_cores(model):
        if model.field == COMPLEX:
            parts.append(p.real.ravel())
            parts.append(p.imag.ravel())
        else:
            parts.append(p.real.ravel())
    return np.concatenate(parts)


def unpack_params(theta, template):
    """The signed parameter cores encoded in a flat vector."""
    cores = []
    k = 0
    for p in _param_cores(template):
        n = p.size
        if template.field == COMPLEX:
            re = theta[k:k + n].reshape(p.shape)
            im = theta[k + n:k + 2 * n].reshape(p.shape)
            cores.append(re + 1j * im)
            k += 2 * n
        else:
            cores.append(theta[k:k + n].reshape(p.shape).astype(np.complex128))
            k += n
    return cores


def unpack(theta, template):
    return _rebuild(template, unpack_params(theta, template))


def pack_gradient(model, grads):
    parts = []
    for g in grads:
        g = np.asarray(g)
        if model.field == COMPLEX:
            parts.append(np.real(g).ravel())
            parts.append(np.imag(g).ravel())
        else:
            parts.append(np.real(g).ravel())
    return np.concatenate(parts)


def n_real_params(model):
    return pack(model).size


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------

def nll(model, data):
    """Mean negative log-likelihood per sample, -(1/n) sum log(T_x / Z)."""
    xs = _check_batch(model, np.asarray(data))
    lp = log_prob_batch(model, xs)
    bad = np.nonzero(~np.isfinite(lp))[0]
    if bad.size:
        raise ZeroProbabilitySample(int(bad[0]))
    return float(-np.mean(lp))


def nll_gradient(model, batch):
    """Gradient of the per-sample mean NLL over ``batch``."""
    xs = _check_batch(model, np.asarray(batch))
    nb = xs.shape[0]
    dt = log_value_gradients(model, xs, np.full(nb, 1.0 / nb))
    dz = log_norm_gradients(model)
    dlog = [z - t for t, z in zip(dt, dz)]
    return gradients_to_model_convention(model, dlog)


def z_gradient(model):
    """Gradient of the normalization Z_T itself (not its log)."""
    from .models import normalization

    z = normalization(model)
    dz = log_norm_gradients(model)
    return gradients_to_model_convention(model, [z * g for g in dz])


def kl_divergence(p, model, dense_cap=DEFAULT_DENSE_CAP):
    """D(p || T/Z) with the 0 log 0 = 0 convention; +inf when the model
    misses support of p."""
    parr = as_array(p).real
    if np.min(parr) < -1e-12 or abs(parr.sum() - 1.0) > 1e-8:
        raise ShapeError("p must be entrywise non-negative and sum to 1")
    tarr = to_dense(model, dense_cap).array.real
    if tarr.shape != parr.shape:
        raise ShapeError(f"shape mismatch: {parr.shape} vs {tarr.shape}")
    z = tarr.sum()
    if z <= 0.0:
        return float("inf")
    mask = parr > 0.0
    if np.any(tarr[mask] <= 0.0):
        return float("inf")
    return float(np.sum(parr[mask] * (np.log(parr[mask])
                                      - np.log(tarr[mask]) + np.log(z))))


def _negativity_penalty(tarr):
    neg = np.minimum(tarr, 0.0)
    return float(np.sum(neg * neg))


def _kl_objective(model, parr, penalty_weight, dense_cap, floor=1e-300,
                  param_cores=None):
    """(value, gradient-in-model-convention) of KL(+penalty) against parr."""
    tarr = to_dense(model, dense_cap).array.real
    z = tarr.sum()
    value = 0.0
    mask = parr > 0.0
    tclip = np.maximum(tarr, floor)
    if z <= 0.0:
        value = 1e30
    else:
        value = float(np.sum(parr[mask] * (np.log(parr[mask])
                                           - np.log(tclip[mask]) + np.log(z))))
    penalty = 0.0
    if penalty_weight > 0.0:
        penalty = penalty_weight * _negativity_penalty(tarr)

    shape = tarr.shape
    d, n = shape[0], len(shape)
    xs = np.stack(np.unravel_index(np.arange(tarr.size), shape)).T
    flat_t = tarr.ravel()
    flat_p = parr.ravel()

    # -sum_x P_x dlog T_x, restricted to configs where the log gradient exists
    wmask = (flat_p > 0.0) & (flat_t > floor)
    dlog = None
    if np.any(wmask):
        dlog = log_value_gradients(model, xs[wmask], -flat_p[wmask])
    if penalty_weight > 0.0:
        nmask = flat_t < 0.0
        if np.any(nmask):
            wneg = 2.0 * penalty_weight * flat_t[nmask] ** 2
            dneg = log_value_gradients(model, xs[nmask], wneg)
            dlog = dneg if dlog is None else [a + b for a, b in zip(dlog, dneg)]
    dz = log_norm_gradients(model)
    if dlog is None:
        dlog = [np.zeros_like(g) for g in dz]
    if z > 0.0:
        dlog = [a + b for a, b in zip(dlog, dz)]
    grads = gradients_to_model_convention(model, dlog, param_cores)
    return value + penalty, grads


def make_model(kind, n_sites, phys_dim, rank, puri_dim=2, seed=0):
    """Random model of one of the six trainable kinds."""
    if kind == "mps-nonneg":
        return random_mps(NONNEG, n_sites, phys_dim, rank, seed)
    if kind == "mps-real":
        return random_mps(REAL, n_sites, phys_dim, rank, seed, positive=True)
    if kind == "born-real":
        return random_born(REAL, n_sites, phys_dim, rank, seed)
    if kind == "born-complex":
        return random_born(COMPLEX, n_sites, phys_dim, rank, seed)
    if kind == "lps-real":
        return random_lps(REAL, n_sites, phys_dim, rank, puri_dim, seed)
    if kind == "lps-complex":
        return random_lps(COMPLEX, n_sites, phys_dim, rank, puri_dim, seed)
    raise ShapeError(f"unknown model kind {kind!r}; expected one of {KINDS}")


# ---------------------------------------------------------------------------
# stochastic gradient training
# ---------------------------------------------------------------------------

def sgd_train(model, data, config, valid_data=None):
    """Mini-batch SGD on the NLL; deterministic given config.seed.

    Returns the best-NLL model seen (evaluated on the training set after
    each epoch). Divergence is flagged and the best finite model is still
    returned.
    """
    data = _check_batch(model, np.asarray(data))
    config.validate(n_rows=data.shape[0])
    rng = np.random.default_rng(config.seed)
    t0 = time.perf_counter()
    report = TrainReport()

    def record(epoch, current):
        now = (time.perf_counter() - t0) * 1000.0
        try:
            train_nll = nll(current, data)
        except ZeroProbabilitySample:
            train_nll = float("inf")
        report.history.append((epoch, "train", train_nll, now))
        if valid_data is not None:
            try:
                v = nll(current, valid_data)
            except ZeroProbabilitySample:
                v = float("inf")
            report.history.append((epoch, "valid", v, now))
        return train_nll

    best_nll = record(0, model)
    best = model
    current = model
    best_valid = (report.history[-1][2] if valid_data is not None else None,
                  model)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(data.shape[0])
        for start in range(0, data.shape[0], config.batch_size):
            batch = data[order[start:start + config.batch_size]]
            try:
                grads = nll_gradient(current, batch)
            except ZeroProbabilitySample as exc:
                # abort this step, report the sample, keep training
                report.aborted_steps.append(
                    (epoch, int(order[start + exc.index]))
                )
                continue
            if not all(np.all(np.isfinite(g)) for g in grads):
                report.diverged = True
                break
            try:
                current = apply_step(current, grads, config.learning_rate)
            except ShapeError:
                report.diverged = True
                break
        if report.diverged:
            break
        train_nll = record(epoch, current)
        if valid_data is not None:
            v = report.history[-1][2]
            if np.isfinite(v) and v < best_valid[0]:
                best_valid = (v, current)
        if not np.isfinite(train_nll):
            report.diverged = True
            break
        if train_nll < best_nll:
            best_nll, best = train_nll, current
    report.model = best
    report.final_model = current
    report.valid_model = best_valid[1] if valid_data is not None else best
    report.wall_s = time.perf_counter() - t0
    return report


def learning_rate_grid():
    """Powers of 10 from 1e-5 to 1e5."""
    return [10.0**k for k in range(-5, 6)]


def sgd_train_grid(make_initial, data, config, lrs=None, valid_data=None):
    """Run sgd_train over a learning-rate grid; best training NLL wins."""
    import dataclasses

    best = None
    for lr in (lrs if lrs is not None else learning_rate_grid()):
        cfg = dataclasses.replace(config, learning_rate=lr)
        rep = sgd_train(make_initial(), data, cfg, valid_data=valid_data)
        if best is None or rep.best("train") < best[1].best("train"):
            best = (lr, rep)
    return best


# ---------------------------------------------------------------------------
# dense-tensor factorization
# ---------------------------------------------------------------------------

def fit_dense(p, kind, rank, puri_dim=2, config=None,
              dense_cap=DEFAULT_DENSE_CAP):
    """Fit a tensor-network model to a dense probability tensor by
    minimizing the KL divergence with L-BFGS from random restarts.

    Real MPS additionally carry penalty_weight * sum max(0, -T_x)^2 to push
    the contracted tensor non-negative; the weight doubles for the next
    restart whenever a fitted model still has a negative entry. The
    report's history has one ("restart", kl) row per restart; the best
    run's model is returned.
    """
    config = config or TrainConfig(optimizer="lbfgs")
    parr = as_array(p).real
    if np.min(parr) < -1e-12 or abs(parr.sum() - 1.0) > 1e-8:
        raise ShapeError("p must be entrywise non-negative and sum to 1")
    shape = parr.shape
    n_sites, phys_dim = len(shape), shape[0]
    if any(s != phys_dim for s in shape):
        raise ShapeError("target tensor must have uniform dimensions")
    penalty = config.penalty_weight if kind == "mps-real" else 0.0

    seeds = np.random.SeedSequence(config.seed).spawn(max(config.restarts, 1))
    t0 = time.perf_counter()
    report = TrainReport()
    best = (float("inf"), None)
    for i, ss in enumerate(seeds):
        template = make_model(kind, n_sites, phys_dim, rank, puri_dim,
                              seed=np.random.default_rng(ss))
        theta0 = pack(template)

        def fun(theta):
            params = unpack_params(theta, template)
            m = _rebuild(template, params)
            val, grads = _kl_objective(m, parr, penalty, dense_cap,
                                       param_cores=params)
            return val, pack_gradient(m, grads)

        res = scipy.optimize.minimize(
            fun, theta0, jac=True, method="L-BFGS-B",
            options={"maxcor": config.lbfgs_memory,
                     "maxiter": config.lbfgs_maxiter,
                     "gtol": config.lbfgs_gtol,
                     "ftol": config.lbfgs_ftol},
        )
        fitted = unpack(res.x, template)
        if penalty > 0.0 and                 float(np.min(to_dense(fitted, dense_cap).array.real)) < -1e-12:
            penalty *= 2.0
        kl = kl_divergence(parr, fitted, dense_cap)
        report.history.append((i, "restart", kl,
                               (time.perf_counter() - t0) * 1000.0))
        if kl < best[0]:
            best = (kl, fitted)
    report.model = best[1]
    report.final_model = best[1]
    report.wall_s = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# finite-difference verification harness
# ---------------------------------------------------------------------------

def finite_difference_check(model, objective, data=None, p=None,
                            n_params=200, step=1e-5, seed=0,
                            penalty_weight=0.0,
                            gradient_transform=None):
    """Max relative error between analytic and central-difference gradients.

    ``objective`` is one of "nll" (against ``data``), "z" (the
    normalization itself) or "kl" (against dense tensor ``p``, optionally
    with the real-MPS negativity penalty). At least ``n_params`` randomly
    chosen parameters are probed (all of them when the model is smaller).
    ``gradient_transform`` lets tests corrupt the analytic gradient to
    verify that the harness itself catches wrong gradients.
    """
    if objective == "nll":
        if data is None:
            raise ShapeError("objective 'nll' needs data")
        xs = _check_batch(model, np.asarray(data))

        def value(m):
            return nll(m, xs)

        def grad(m):
            return nll_gradient(m, xs)
    elif objective == "z":
        from .models import normalization

        def value(m):
            return normalization(m)

        def grad(m):
            return z_gradient(m)
    elif objective == "kl":
        if p is None:
            raise ShapeError("objective 'kl' needs a dense target p")
        parr = as_array(p).real

        def value(m):
            tarr = to_dense(m).array.real
            z = tarr.sum()
            if z <= 0.0:
                return 1e30
            mask = parr > 0.0
            base = np.sum(parr[mask] * (np.log(parr[mask])
                                        - np.log(np.maximum(tarr[mask], 1e-300))
                                        + np.log(z)))
            return float(base + penalty_weight * _negativity_penalty(tarr))

        def grad(m):
            return _kl_objective(m, parr, penalty_weight, None)[1]
    else:
        raise ShapeError(f"unknown objective {objective!r}")

    theta = pack(model)
    g = pack_gradient(model, grad(model))
    if gradient_transform is not None:
        g = gradient_transform(g)
    rng = np.random.default_rng(seed)
    idx = (np.arange(theta.size) if theta.size <= n_params
           else rng.choice(theta.size, size=n_params, replace=False))
    worst = 0.0
    for k in idx:
        plus, minus = theta.copy(), theta.copy()
        plus[k] += step
        minus[k] -= step
        fd = (value(unpack(plus, model)) - value(unpack(minus, model))) / (2 * step)
        denom = max(abs(g[k]), 1e-8)
        worst = max(worst, abs(g[k] - fd) / denom)
    return worst
