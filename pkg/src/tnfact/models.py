"""Tensor-network models of discrete probability distributions.

Three families over N categorical variables of cardinality d:

* ``MpsModel`` -- a chain of cores contracted over bond indices. With
  non-negative entries the chain itself is an (unnormalized) probability
  table; with real or complex entries it is used as the amplitude of a
  Born machine or as a signed factorization.
* ``BornModel`` -- the element-wise squared modulus of an amplitude chain.
* ``LpsModel`` -- a double-layer chain contracting each core against its
  conjugate over bond indices and a per-site purification index of
  dimension mu; non-negative by construction.

Core layout (row-major, 0-based configurations):

* MPS: site 0 has shape (d, r1), bulk sites (d, r_left, r_right), site N-1
  has shape (d, r_last).
* LPS: same with an extra purification axis after the physical one,
  (d, mu, ...).

All cores are stored as immutable complex128 arrays; the number field is a
model attribute. Sweeps carry per-site scale factors in log space, so
evaluation and normalization stay finite for chains of thousands of sites.
"""

import numpy as np

from ._contract import ein
from .dense import DenseTensor, DEFAULT_DENSE_CAP, check_dense_cap
from .errors import (
    NumericalError,
    ShapeError,
    ZeroNormalizationError,
)

NONNEG = "nonneg"
REAL = "real"
COMPLEX = "complex"

FIELDS = (NONNEG, REAL, COMPLEX)

_NONNEG_TOL = 1e-12


def _freeze(arr):
    arr = np.ascontiguousarray(arr, dtype=np.complex128)
    arr.flags.writeable = False
    return arr


def _check_field_entries(field, cores, what="core"):
    for i, c in enumerate(cores):
        if not np.all(np.isfinite(c)):
            raise ShapeError(f"{what} {i} has non-finite entries")
        if field in (NONNEG, REAL) and np.max(np.abs(c.imag), initial=0.0) > _NONNEG_TOL:
            raise ShapeError(f"{what} {i} has imaginary entries but field is {field}")
        if field == NONNEG and np.min(c.real, initial=0.0) < -_NONNEG_TOL:
            raise ShapeError(f"{what} {i} has negative entries but field is {NONNEG}")


class MpsModel:
    """Matrix-product / tensor-train factorization of an order-N tensor."""

    __slots__ = ("field", "cores")

    def __init__(self, field, cores):
        if field not in FIELDS:
            raise ShapeError(f"unknown field {field!r}")
        cores = tuple(_freeze(np.asarray(c)) for c in cores)
        if len(cores) < 2:
            raise ShapeError("an MPS needs at least 2 sites")
        d = cores[0].shape[0]
        if cores[0].ndim != 2 or cores[-1].ndim != 2:
            raise ShapeError("boundary cores must be (d, r) matrices")
        prev = cores[0].shape[1]
        for i, c in enumerate(cores[1:-1], start=1):
            if c.ndim != 3 or c.shape[0] != d:
                raise ShapeError(f"bulk core {i} must have shape (d, r, r')")
            if c.shape[1] != prev:
                raise ShapeError(f"bond mismatch entering core {i}: "
                                 f"{c.shape[1]} vs {prev}")
            prev = c.shape[2]
        if cores[-1].shape[0] != d or cores[-1].shape[1] != prev:
            raise ShapeError("last core does not match the previous bond")
        _check_field_entries(field, cores)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "cores", cores)

    def __setattr__(self, *a):
        raise AttributeError("MpsModel is immutable")

    @property
    def n_sites(self):
        return len(self.cores)

    @property
    def phys_dim(self):
        return self.cores[0].shape[0]

    @property
    def bond_dims(self):
        return tuple(c.shape[-1] for c in self.cores[:-1])

    @property
    def rank(self):
        """Reported rank: the maximum bond dimension."""
        return max(self.bond_dims)

    def __repr__(self):
        return (f"MpsModel(field={self.field!r}, n_sites={self.n_sites}, "
                f"phys_dim={self.phys_dim}, bond_dims={self.bond_dims})")


class BornModel:
    """Probability model |amplitude|^2 over a real or complex MPS."""

    __slots__ = ("amplitude",)

    def __init__(self, amplitude):
        if not isinstance(amplitude, MpsModel):
            raise ShapeError("BornModel wraps an MpsModel amplitude")
        if amplitude.field == NONNEG:
            raise ShapeError("Born amplitudes live over the real or complex field")
        object.__setattr__(self, "amplitude", amplitude)

    def __setattr__(self, *a):
        raise AttributeError("BornModel is immutable")

    @property
    def field(self):
        return self.amplitude.field

    @property
    def n_sites(self):
        return self.amplitude.n_sites

    @property
    def phys_dim(self):
        return self.amplitude.phys_dim

    @property
    def bond_dims(self):
        return self.amplitude.bond_dims

    @property
    def rank(self):
        return self.amplitude.rank

    def __repr__(self):
        return (f"BornModel(field={self.field!r}, n_sites={self.n_sites}, "
                f"phys_dim={self.phys_dim}, bond_dims={self.bond_dims})")


class LpsModel:
    """Locally purified state: double-layer chain, non-negative by construction."""

    __slots__ = ("field", "cores")

    def __init__(self, field, cores):
        if field not in (REAL, COMPLEX):
            raise ShapeError("LPS cores live over the real or complex field")
        cores = tuple(_freeze(np.asarray(c)) for c in cores)
        if len(cores) < 2:
            raise ShapeError("an LPS needs at least 2 sites")
        d, mu = cores[0].shape[0], cores[0].shape[1]
        if cores[0].ndim != 3 or cores[-1].ndim != 3:
            raise ShapeError("boundary LPS cores must have shape (d, mu, r)")
        prev = cores[0].shape[2]
        for i, c in enumerate(cores[1:-1], start=1):
            if c.ndim != 4 or c.shape[0] != d or c.shape[1] != mu:
                raise ShapeError(f"bulk LPS core {i} must have shape (d, mu, r, r')")
            if c.shape[2] != prev:
                raise ShapeError(f"bond mismatch entering core {i}")
            prev = c.shape[3]
        if cores[-1].shape[:2] != (d, mu) or cores[-1].shape[2] != prev:
            raise ShapeError("last LPS core does not match the previous bond")
        _check_field_entries(field, cores)
        r = max(c.shape[-1] for c in cores[:-1])
        if mu > r * d * d:
            raise ShapeError(
                f"purification dimension {mu} exceeds the supported bound "
                f"rank*d^2 = {r * d * d}"
            )
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "cores", cores)

    def __setattr__(self, *a):
        raise AttributeError("LpsModel is immutable")

    @property
    def n_sites(self):
        return len(self.cores)

    @property
    def phys_dim(self):
        return self.cores[0].shape[0]

    @property
    def puri_dim(self):
        return self.cores[0].shape[1]

    @property
    def bond_dims(self):
        return tuple(c.shape[-1] for c in self.cores[:-1])

    @property
    def rank(self):
        return max(self.bond_dims)

    def __repr__(self):
        return (f"LpsModel(field={self.field!r}, n_sites={self.n_sites}, "
                f"phys_dim={self.phys_dim}, puri_dim={self.puri_dim}, "
                f"bond_dims={self.bond_dims})")


Model = (MpsModel, BornModel, LpsModel)


# ---------------------------------------------------------------------------
# random initialization
# ---------------------------------------------------------------------------

def _mps_shapes(n_sites, phys_dim, rank):
    shapes = [(phys_dim, rank)]
    shapes += [(phys_dim, rank, rank)] * (n_sites - 2)
    shapes += [(phys_dim, rank)]
    return shapes


def _gaussian(rng, shape, scale, complex_entries):
    if complex_entries:
        return scale / np.sqrt(2.0) * (
            rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        )
    return scale * rng.standard_normal(shape).astype(np.complex128)


def random_mps(field, n_sites, phys_dim, rank, seed, positive=False):
    """Random MPS with Gaussian cores of standard deviation 1/sqrt(rank).

    For the non-negative field the cores are squares of Gaussian tensors,
    matching the squared parameterization used in training. ``positive``
    additionally takes absolute values for REAL cores (useful to start
    penalized real-MPS fits in the T > 0 region).
    """
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(rank)
    cores = []
    for shape in _mps_shapes(n_sites, phys_dim, rank):
        c = _gaussian(rng, shape, scale, field == COMPLEX)
        if field == NONNEG:
            c = c**2
        elif positive:
            c = np.abs(c).astype(np.complex128)
        cores.append(c)
    return MpsModel(field, cores)


def random_born(field, n_sites, phys_dim, rank, seed):
    return BornModel(random_mps(field, n_sites, phys_dim, rank, seed))


def random_lps(field, n_sites, phys_dim, rank, puri_dim, seed):
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(rank)
    shapes = [(phys_dim, puri_dim, rank)]
    shapes += [(phys_dim, puri_dim, rank, rank)] * (n_sites - 2)
    shapes += [(phys_dim, puri_dim, rank)]
    cores = [_gaussian(rng, s, scale, field == COMPLEX) for s in shapes]
    return LpsModel(field, cores)


# ---------------------------------------------------------------------------
# internal padded-core views
# ---------------------------------------------------------------------------
#
# The engine works on uniform core lists: single-layer cores of shape
# (d, r_left, r_right) and double-layer cores of shape (d, mu, r_left,
# r_right), with dummy bonds of size 1 at the boundaries.

def _padded_single(mps):
    cores = list(mps.cores)
    out = [cores[0][:, None, :]]
    out += cores[1:-1]
    out.append(cores[-1][:, :, None])
    return out


def _padded_double(model):
    """(cores4, is_double) with cores4 of shape (d, mu, rl, rr)."""
    if isinstance(model, LpsModel):
        cores = list(model.cores)
        out = [cores[0][:, :, None, :]]
        out += cores[1:-1]
        out.append(cores[-1][:, :, :, None])
        return out
    if isinstance(model, BornModel):
        return [c[:, None] for c in _padded_single(model.amplitude)]
    raise ShapeError(f"not a double-layer model: {model!r}")


def _layers(model):
    """Return ('single', cores3) or ('double', cores4) for the engine."""
    if isinstance(model, MpsModel):
        return "single", _padded_single(model)
    return "double", _padded_double(model)


def check_configuration(model, x):
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (model.n_sites,):
        raise ShapeError(f"configuration must have length {model.n_sites}")
    if np.any(x < 0) or np.any(x >= model.phys_dim):
        raise ShapeError(f"configuration values must lie in [0, {model.phys_dim})")
    return x


def _check_batch(model, xs):
    xs = np.asarray(xs, dtype=np.int64)
    if xs.ndim == 1:
        xs = xs[None, :]
    if xs.shape[1] != model.n_sites:
        raise ShapeError(f"configurations must have length {model.n_sites}")
    if xs.size and (xs.min() < 0 or xs.max() >= model.phys_dim):
        raise ShapeError(f"configuration values must lie in [0, {model.phys_dim})")
    return xs


# ---------------------------------------------------------------------------
# scaled sweeps
# ---------------------------------------------------------------------------

def _dl_step(r, a):
    """r'[b,g,h] = sum_{m,al,c} a[b,m,al,g] r[b,al,c] conj(a[b,m,c,h])."""
    t = np.matmul(a.transpose(0, 1, 3, 2), r[:, None])
    return np.matmul(t, a.conj()).sum(axis=1)


def _dl_step_site(r, a):
    """Same with a site core (x, m, al, g) and a shared (al, c) matrix;
    sums the physical index: returns (g, h)."""
    t = np.matmul(a.transpose(0, 1, 3, 2), r[None, None])
    return np.matmul(t, a.conj()).sum(axis=(0, 1))


def _rescale_rows(v, logs):
    """Scale each batch row to unit max-abs, accumulating log scales."""
    s = np.max(np.abs(v).reshape(v.shape[0], -1), axis=1)
    nz = s > 0.0
    v = v.copy()
    v[nz] = v[nz] / s[nz].reshape((-1,) + (1,) * (v.ndim - 1))
    logs = logs + np.where(nz, np.log(s, where=nz, out=np.zeros_like(s)), 0.0)
    return v, logs


def _sl_values(cores3, xs):
    """Single-layer chain values; returns (mantissa, log_scale) per row."""
    nb = xs.shape[0]
    v = np.ones((nb, 1), dtype=np.complex128)
    logs = np.zeros(nb)
    for i, c in enumerate(cores3):
        v = np.matmul(v[:, None], c[xs[:, i]])[:, 0]
        v, logs = _rescale_rows(v, logs)
    return v[:, 0], logs


def _sl_norm_value(cores3):
    v = np.ones((1, 1), dtype=np.complex128)
    logs = np.zeros(1)
    for c in cores3:
        v = v @ c.sum(axis=0)
        v, logs = _rescale_rows(v, logs)
    return complex(v[0, 0]), float(logs[0])


def _dl_values(cores4, xs):
    """Double-layer chain values (real, >= 0); (mantissa, log_scale)."""
    nb = xs.shape[0]
    r = np.ones((nb, 1, 1), dtype=np.complex128)
    logs = np.zeros(nb)
    for i, c in enumerate(cores4):
        r = _dl_step(r, c[xs[:, i]])
        r, logs = _rescale_rows(r, logs)
    return r[:, 0, 0].real, logs


def _dl_norm_value(cores4):
    r = np.ones((1, 1), dtype=np.complex128)
    logs = 0.0
    for c in cores4:
        r = _dl_step_site(r, c)
        s = np.max(np.abs(r))
        if s > 0.0:
            r = r / s
            logs += np.log(s)
    return float(r[0, 0].real), logs


def _mixed_value(model, fixed):
    """Sum of T over all sites not fixed by ``fixed`` (dict site -> value)."""
    kind, cores = _layers(model)
    if kind == "single":
        v = np.ones((1, 1), dtype=np.complex128)
        logs = np.zeros(1)
        for i, c in enumerate(cores):
            t = c[fixed[i]] if i in fixed else c.sum(axis=0)
            v = v @ t
            v, logs = _rescale_rows(v, logs)
        return complex(v[0, 0]), float(logs[0])
    r = np.ones((1, 1), dtype=np.complex128)
    logs = 0.0
    for i, c in enumerate(cores):
        a = c[fixed[i]][None] if i in fixed else c
        r = _dl_step_site(r, a)
        s = np.max(np.abs(r))
        if s > 0.0:
            r = r / s
            logs += np.log(s)
    return complex(r[0, 0]), logs


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def evaluate(model, x):
    """Value T_x of the model's tensor at one configuration.

    Complex for a COMPLEX-field MPS, real otherwise (non-negative for
    Born machines, LPS and non-negative MPS).
    """
    x = check_configuration(model, x)
    kind, cores = _layers(model)
    if kind == "single":
        mant, logs = _sl_values(cores, x[None, :])
        val = complex(mant[0]) * np.exp(logs[0])
        return val if model.field == COMPLEX else float(val.real)
    mant, logs = _dl_values(cores, x[None, :])
    return float(max(mant[0], 0.0) * np.exp(logs[0]))


def evaluate_batch(model, xs):
    """Vectorized ``evaluate`` over an (n, N) array of configurations."""
    xs = _check_batch(model, xs)
    kind, cores = _layers(model)
    if kind == "single":
        mant, logs = _sl_values(cores, xs)
        vals = mant * np.exp(logs)
        return vals if model.field == COMPLEX else vals.real
    mant, logs = _dl_values(cores, xs)
    return np.maximum(mant, 0.0) * np.exp(logs)


def _log_norm_parts(model):
    kind, cores = _layers(model)
    if kind == "single":
        mant, logs = _sl_norm_value(cores)
        return mant.real, logs
    return _dl_norm_value(cores)


def normalization(model):
    """Z_T = sum of T over all configurations, by a transfer sweep.

    Returns 0.0 for an identically-zero model. May overflow to inf for
    extremely long chains; ``log_normalization`` stays finite.
    """
    mant, logs = _log_norm_parts(model)
    return float(mant * np.exp(logs))


def log_normalization(model):
    """log Z_T; raises ZeroNormalizationError when Z_T <= 0."""
    mant, logs = _log_norm_parts(model)
    if mant <= 0.0:
        raise ZeroNormalizationError(
            f"normalization mantissa {mant} is not positive"
        )
    return float(np.log(mant) + logs)


def log_prob(model, x):
    """log(T_x / Z_T); returns -inf when T_x = 0 (explicit marker)."""
    return float(log_prob_batch(model, np.asarray(x)[None, :])[0])


def log_prob_batch(model, xs):
    xs = _check_batch(model, xs)
    logz = log_normalization(model)
    kind, cores = _layers(model)
    if kind == "single":
        mant, logs = _sl_values(cores, xs)
        vals = mant.real
    else:
        vals, logs = _dl_values(cores, xs)
    out = np.full(xs.shape[0], -np.inf)
    pos = vals > 0.0
    out[pos] = np.log(vals[pos]) + logs[pos] - logz
    return out


def marginal(model, partial):
    """Probability that the sites in ``partial`` (a map site -> value) take
    the given values, all other sites summed out."""
    pairs = partial.items() if isinstance(partial, dict) else partial
    fixed = {}
    for site, val in pairs:
        site, val = int(site), int(val)
        if not 0 <= site < model.n_sites:
            raise ShapeError(f"site {site} out of range")
        if not 0 <= val < model.phys_dim:
            raise ShapeError(f"value {val} out of range for site {site}")
        if site in fixed:
            raise ShapeError(f"site {site} assigned twice")
        fixed[site] = val
    num_mant, num_logs = _mixed_value(model, fixed)
    den_mant, den_logs = _mixed_value(model, {})
    if den_mant.real <= 0.0:
        raise ZeroNormalizationError("marginal of a model with Z_T <= 0")
    ratio = (num_mant.real / den_mant.real) * np.exp(num_logs - den_logs)
    return float(ratio)


def to_dense(model, dense_cap=DEFAULT_DENSE_CAP):
    """Materialize the full tensor of values T_x as a DenseTensor."""
    n, d = model.n_sites, model.phys_dim
    check_dense_cap(d**n, dense_cap)
    kind, cores = _layers(model)
    if kind == "single":
        acc = np.ones((1, 1), dtype=np.complex128)
        for c in cores:
            acc = ein("Pj,xjk->Pxk", acc, c).reshape(-1, c.shape[-1])
        arr = acc[:, 0].reshape((d,) * n)
        if model.field != COMPLEX:
            arr = arr.real.astype(np.complex128)
        return DenseTensor(arr)
    acc = np.ones((1, 1, 1), dtype=np.complex128)
    for c in cores:
        x, mu, rl, rr = c.shape
        # t[P, x*mu, c', g] = sum_a acc[P, a, c'] c[x*mu, a, g]
        t = np.matmul(acc.transpose(0, 2, 1)[:, None],
                      c.reshape(x * mu, rl, rr))
        t = t.reshape(-1, x, mu, rl, rr).transpose(0, 1, 2, 4, 3)
        acc = np.matmul(t, c.conj().reshape(1, x, mu, rl, rr)).sum(axis=2)
        acc = acc.reshape(-1, rr, rr)
    arr = acc[:, 0, 0].real.reshape((d,) * n)
    return DenseTensor(arr)


# ---------------------------------------------------------------------------
# exact ancestral sampling
# ---------------------------------------------------------------------------

def _suffix_transfers(model):
    """Right environments of the fully summed chain, one per site boundary,
    each normalized to unit max-abs (scales are irrelevant to conditionals)."""
    kind, cores = _layers(model)
    if kind == "single":
        fs = [np.ones((1,), dtype=np.complex128)]
        for c in reversed(cores):
            f = c.sum(axis=0) @ fs[0]
            s = np.max(np.abs(f))
            fs.insert(0, f / s if s > 0 else f)
        return kind, cores, fs
    fs = [np.ones((1, 1), dtype=np.complex128)]
    for c in reversed(cores):
        f = ein("xmag,xmch,gh->ac", c, c.conj(), fs[0])
        s = np.max(np.abs(f))
        fs.insert(0, f / s if s > 0 else f)
    return kind, cores, fs


def _categorical_rows(weights, rng):
    """Draw one index per row from unnormalized non-negative weights."""
    totals = weights.sum(axis=1, keepdims=True)
    cdf = np.cumsum(weights, axis=1)
    u = rng.uniform(size=(weights.shape[0], 1)) * totals
    return np.argmax(cdf > u, axis=1), totals[:, 0]


def sample_batch(model, n_samples, seed, max_retries=16):
    """Draw ``n_samples`` exact ancestral samples; deterministic in seed."""
    rng = np.random.default_rng(seed)
    if n_samples == 0:
        return np.zeros((0, model.n_sites), dtype=np.int64)
    log_normalization(model)  # raises when Z_T <= 0
    kind, cores, fs = _suffix_transfers(model)
    nb, n = int(n_samples), model.n_sites
    out = np.zeros((nb, n), dtype=np.int64)
    for attempt in range(max_retries):
        ok = _sample_into(kind, cores, fs, out, rng)
        if ok:
            return out
    raise NumericalError(
        f"sampling hit zero-probability prefixes {max_retries} times"
    )


def _sample_into(kind, cores, fs, out, rng):
    nb = out.shape[0]
    if kind == "single":
        u = np.ones((nb, 1), dtype=np.complex128)
        for i, c in enumerate(cores):
            site = np.matmul(c, fs[i + 1])            # (x, rl)
            w = (u @ site.T).real
            w = np.clip(w, 0.0, None)
            if np.any(w.sum(axis=1) <= 0.0):
                return False
            choice, _ = _categorical_rows(w, rng)
            out[:, i] = choice
            u = np.matmul(u[:, None], c[choice])[:, 0]
            u, _ = _rescale_rows(u, np.zeros(nb))
        return True
    r = np.ones((nb, 1, 1), dtype=np.complex128)
    for i, c in enumerate(cores):
        t = np.matmul(c, fs[i + 1][None, None])
        site = np.matmul(t, c.conj().transpose(0, 1, 3, 2)).sum(axis=1)
        w = (r.reshape(nb, -1) @ site.reshape(site.shape[0], -1).T).real
        w = np.clip(w, 0.0, None)
        if np.any(w.sum(axis=1) <= 0.0):
            return False
        choice, _ = _categorical_rows(w, rng)
        out[:, i] = choice
        r = _dl_step(r, c[choice])
        r, _ = _rescale_rows(r, np.zeros(nb))
    return True


def sample(model, seed):
    """One exact sample as a tuple of ints."""
    return tuple(int(v) for v in sample_batch(model, 1, seed)[0])


# ---------------------------------------------------------------------------
# constructive conversions
# ---------------------------------------------------------------------------

def born_to_lps(born):
    """View a Born machine as an LPS with purification dimension 1."""
    if not isinstance(born, BornModel):
        raise ShapeError("expected a BornModel")
    cores = [c[:, None] for c in born.amplitude.cores]
    return LpsModel(born.field, cores)


def mps_nonneg_to_lps_real(m):
    """Rewrite a non-negative MPS as a real LPS with the same tensor.

    Each core entry is split into a square root paired with a delta on the
    purification index, so the double layer collapses back to the original
    chain. The output has puri_dim = rank**2 and puri-rank equal to the
    input's TT-rank.
    """
    if not isinstance(m, MpsModel) or m.field != NONNEG:
        raise ShapeError("input must be a non-negative MPS")
    for i, c in enumerate(m.cores):
        if np.min(c.real) < -_NONNEG_TOL:
            raise ShapeError(f"core {i} has a negative entry")
    r = m.rank
    d = m.phys_dim
    if r > d * d:
        raise ShapeError(
            "conversion needs puri_dim rank**2 > rank*d**2; unsupported here"
        )
    mu = r * r
    roots = [np.sqrt(np.maximum(c.real, 0.0)) for c in m.cores]
    cores = []
    first = np.zeros((d, mu, m.cores[0].shape[1]))
    for g in range(m.cores[0].shape[1]):
        first[:, g, g] = roots[0][:, g]
    cores.append(first)
    for c in roots[1:-1]:
        _, rl, rr = c.shape
        bulk = np.zeros((d, mu, rl, rr))
        for a in range(rl):
            for g in range(rr):
                bulk[:, a * rr + g, a, g] = c[:, a, g]
        cores.append(bulk)
    last = np.zeros((d, mu, m.cores[-1].shape[1]))
    for a in range(m.cores[-1].shape[1]):
        last[:, a, a] = roots[-1][:, a]
    cores.append(last)
    return LpsModel(REAL, cores)


def _hermitian_basis(r):
    """Orthonormal basis of r x r Hermitian matrices, stacked (r*r, r, r)."""
    basis = np.zeros((r * r, r, r), dtype=np.complex128)
    k = 0
    for a in range(r):
        basis[k, a, a] = 1.0
        k += 1
    inv = 1.0 / np.sqrt(2.0)
    for a in range(r):
        for b in range(a + 1, r):
            basis[k, a, b] = inv
            basis[k, b, a] = inv
            k += 1
            basis[k, a, b] = -1j * inv
            basis[k, b, a] = 1j * inv
            k += 1
    return basis


def lps_to_mps_real(l):
    """Collapse an LPS double layer into a real MPS with rank = rank**2.

    The doubled bond (layer x conjugate layer) carries a Hermitian
    structure; rotating every bond into an orthonormal Hermitian-matrix
    basis makes the cores exactly real while preserving the tensor.
    """
    if not isinstance(l, LpsModel):
        raise ShapeError("input must be an LPS")
    cores = l.cores
    vs = [_hermitian_basis(c.shape[-1]).reshape(c.shape[-1] ** 2, -1).T
          for c in cores[:-1]]
    # vs[i][(alpha, alpha'), k] = G_k[alpha, alpha'] on bond i
    out = []
    c0 = cores[0]
    v1 = ein("xma,xmc->xac", c0, c0.conj())
    v1 = v1.reshape(c0.shape[0], -1)
    out.append(v1 @ vs[0].conj())
    for i, c in enumerate(cores[1:-1], start=1):
        m = ein("xmag,xmch->xacgh", c, c.conj())
        rl, rr = c.shape[2], c.shape[3]
        m = m.reshape(c.shape[0], rl * rl, rr * rr)
        m = ein("ak,xab,bl->xkl", vs[i - 1], m, vs[i].conj())
        out.append(m)
    cn = cores[-1]
    vn = ein("xma,xmc->xac", cn, cn.conj())
    vn = vn.reshape(cn.shape[0], -1)
    out.append(vn @ vs[-1])
    worst = max(float(np.max(np.abs(c.imag))) for c in out)
    scale = max(float(np.max(np.abs(c))) for c in out)
    if worst > 1e-10 * max(scale, 1.0):
        raise NumericalError(f"imaginary residue {worst} in realified cores")
    return MpsModel(REAL, [c.real.astype(np.complex128) for c in out])


def lps_complex_to_real(l):
    """Real LPS with puri_dim 2*mu and bonds 2*r equal to a complex LPS.

    Real and imaginary parts are embedded in 2x2 blocks over the doubled
    bonds; both boundary purifications are doubled as well, with the first
    site scaled by 1/sqrt(2) so the unnormalized tensor is preserved
    exactly, not just the distribution.
    """
    if not isinstance(l, LpsModel):
        raise ShapeError("input must be an LPS")
    cores = l.cores
    d, mu = l.phys_dim, l.puri_dim

    def blocks(re, im, sign):
        # [[re, sign*im], [-sign*im, re]] over a doubled (row, col) pair
        top = np.concatenate([re, sign * im], axis=-1)
        bot = np.concatenate([-sign * im, re], axis=-1)
        return np.concatenate([top, bot], axis=-2)

    out = []
    c0 = cores[0]  # (d, mu, r)
    r0 = c0.shape[2]
    first = np.zeros((d, 2 * mu, 2 * r0))
    # purification block j pairs with bond block j: [[Re, -Im], [Im, Re]]
    first[:, :mu, :r0] = c0.real
    first[:, :mu, r0:] = -c0.imag
    first[:, mu:, :r0] = c0.imag
    first[:, mu:, r0:] = c0.real
    out.append(first / np.sqrt(2.0))
    for c in cores[1:-1]:
        rl, rr = c.shape[2], c.shape[3]
        bulk = np.zeros((d, 2 * mu, 2 * rl, 2 * rr))
        bulk[:, :mu] = blocks(c.real, c.imag, -1.0)
        out.append(bulk)
    cn = cores[-1]
    rn = cn.shape[2]
    last = np.zeros((d, 2 * mu, 2 * rn))
    last[:, :mu, :rn] = cn.real
    last[:, :mu, rn:] = cn.imag
    last[:, mu:, :rn] = -cn.imag
    last[:, mu:, rn:] = cn.real
    out.append(last)
    return LpsModel(REAL, out)
