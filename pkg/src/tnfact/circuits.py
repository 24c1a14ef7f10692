"""2-local quantum circuits on a line and their tensor-network views.

A circuit is a sequence of layers of unitary gates acting on adjacent
qudit pairs. Compiling applies gates to a product-state MPS one by one
with exact SVD splitting (no truncation beyond a relative 1e-14 cutoff),
so amplitudes agree with the dense state vector literally, not merely up
to a global phase. Measuring every qudit gives a Born machine; declaring
every second qudit an ancilla and summing it out gives a locally purified
state.
"""

from dataclasses import dataclass

import numpy as np

from ._contract import ein
from .dense import DEFAULT_DENSE_CAP, DenseTensor, check_dense_cap
from .errors import ShapeError
from .models import BornModel, COMPLEX, LpsModel, MpsModel

_UNITARY_TOL = 1e-10
_SVD_CUTOFF = 1e-14


@dataclass(frozen=True)
class Gate:
    site: int                 # acts on (site, site + 1)
    matrix: np.ndarray        # (a*b, a*b), row = output (site, site+1) pair


class LocalCircuit:
    """Layered 2-local circuit on qudits with per-site dimensions."""

    __slots__ = ("site_dims", "layers")

    def __init__(self, site_dims, layers):
        site_dims = tuple(int(d) for d in site_dims)
        if len(site_dims) < 2 or any(d < 1 for d in site_dims):
            raise ShapeError("need at least 2 qudits of dimension >= 1")
        checked = []
        for li, layer in enumerate(layers):
            used = set()
            row = []
            for g in layer:
                site = int(g.site)
                if not 0 <= site < len(site_dims) - 1:
                    raise ShapeError(f"gate site {site} out of range")
                if site in used or site + 1 in used:
                    raise ShapeError(
                        f"layer {li} has overlapping gates at site {site}")
                used.update((site, site + 1))
                dim = site_dims[site] * site_dims[site + 1]
                mat = np.ascontiguousarray(g.matrix, dtype=np.complex128)
                if mat.shape != (dim, dim):
                    raise ShapeError(
                        f"gate at site {site} must be {dim}x{dim}")
                if np.max(np.abs(mat.conj().T @ mat - np.eye(dim))) > _UNITARY_TOL:
                    raise ShapeError(f"gate at site {site} is not unitary")
                mat.flags.writeable = False
                row.append(Gate(site, mat))
            checked.append(tuple(sorted(row, key=lambda g: g.site)))
        object.__setattr__(self, "site_dims", site_dims)
        object.__setattr__(self, "layers", tuple(checked))

    def __setattr__(self, *a):
        raise AttributeError("LocalCircuit is immutable")

    @property
    def n_qudits(self):
        return len(self.site_dims)

    @property
    def phys_dim(self):
        d = self.site_dims[0]
        if any(s != d for s in self.site_dims):
            raise ShapeError("circuit has mixed qudit dimensions")
        return d

    @property
    def depth(self):
        return len(self.layers)

    def __repr__(self):
        return (f"LocalCircuit(n_qudits={self.n_qudits}, "
                f"site_dims={self.site_dims}, depth={self.depth})")


def haar_unitary(dim, rng):
    """Haar-distributed unitary via QR with phase fixing."""
    z = (rng.standard_normal((dim, dim))
         + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


def _brick_wall_sites(n_qudits, layer):
    start = 0 if layer % 2 == 0 else 1
    return list(range(start, n_qudits - 1, 2))


def random_circuit(n_qudits, phys_dim, depth, seed):
    """Brick-wall circuit of Haar-random gates (odd pairs, then even)."""
    rng = np.random.default_rng(seed)
    dims = (phys_dim,) * n_qudits
    layers = []
    for layer in range(depth):
        gates = [Gate(s, haar_unitary(phys_dim * phys_dim, rng))
                 for s in _brick_wall_sites(n_qudits, layer)]
        layers.append(gates)
    return LocalCircuit(dims, layers)


def random_alternating_circuit(n_systems, system_dim, ancilla_dim, depth, seed):
    """Brick-wall circuit over 2*n_systems qudits with dims (d, mu, d, mu, ...)."""
    rng = np.random.default_rng(seed)
    dims = (system_dim, ancilla_dim) * n_systems
    layers = []
    for layer in range(depth):
        gates = []
        for s in _brick_wall_sites(len(dims), layer):
            gates.append(Gate(s, haar_unitary(dims[s] * dims[s + 1], rng)))
        layers.append(gates)
    return LocalCircuit(dims, layers)


def simulate_dense(circuit, dense_cap=DEFAULT_DENSE_CAP):
    """Exact state vector from |0...0>; the oracle for all compilations."""
    dims = circuit.site_dims
    size = int(np.prod(dims))
    check_dense_cap(size, dense_cap)
    psi = np.zeros(size, dtype=np.complex128)
    psi[0] = 1.0
    psi = psi.reshape(dims)
    n = len(dims)
    for layer in circuit.layers:
        for g in layer:
            a, b = dims[g.site], dims[g.site + 1]
            u = g.matrix.reshape(a, b, a, b)
            psi = np.moveaxis(psi, (g.site, g.site + 1), (0, 1))
            psi = np.tensordot(u, psi, axes=([2, 3], [0, 1]))
            psi = np.moveaxis(psi, (0, 1), (g.site, g.site + 1))
    return DenseTensor(psi)


def _product_state_cores(dims):
    cores = []
    for d in dims:
        c = np.zeros((d, 1, 1), dtype=np.complex128)
        c[0, 0, 0] = 1.0
        cores.append(c)
    return cores


def _apply_gate(cores, gate, dims):
    i = gate.site
    a, b = dims[i], dims[i + 1]
    left, right = cores[i], cores[i + 1]
    theta = ein("ajm,bmk->abjk", left, right)
    u = gate.matrix.reshape(a, b, a, b)
    theta = ein("abcd,cdjk->abjk", u, theta)
    rl, rr = theta.shape[2], theta.shape[3]
    mat = theta.transpose(2, 0, 1, 3).reshape(rl * a, b * rr)
    uu, ss, vt = np.linalg.svd(mat, full_matrices=False)
    keep = ss >= _SVD_CUTOFF * ss[0] if ss[0] > 0 else ss > -1
    k = max(int(np.count_nonzero(keep)), 1)
    cores[i] = uu[:, :k].reshape(rl, a, k).transpose(1, 0, 2)
    cores[i + 1] = (ss[:k, None] * vt[:k]).reshape(k, b, rr).transpose(1, 0, 2)


def _compile_cores(circuit):
    """Apply all gates to a |0...0> MPS; returns padded cores (d, rl, rr)."""
    dims = circuit.site_dims
    cores = _product_state_cores(dims)
    for li, layer in enumerate(circuit.layers):
        for g in layer:
            _apply_gate(cores, g, dims)
        bound = max(min(d for d in dims) ** (li + 2), 1)
        worst = max(c.shape[2] for c in cores[:-1])
        if worst > bound:
            raise ShapeError(
                f"bond {worst} exceeds the light-cone bound {bound} "
                f"after layer {li}")
    return cores


def circuit_to_mps(circuit):
    """Complex MPS whose entries equal the output amplitudes exactly.

    The max bond dimension obeys the light-cone bound d**(depth + 1).
    """
    d = circuit.phys_dim
    cores = _compile_cores(circuit)
    out = [cores[0][:, 0, :]] + cores[1:-1] + [cores[-1][:, :, 0]]
    return MpsModel(COMPLEX, out)


def circuit_to_born(circuit):
    """Born machine of the measured circuit; Z_T = 1 by unitarity."""
    return BornModel(circuit_to_mps(circuit))


def circuit_with_ancillas_to_lps(circuit):
    """LPS over the system qudits of an alternating system/ancilla circuit.

    Qudits at even positions (0-based) are systems, odd ones ancillas; the
    ancilla dimensions must all match and become the purification index.
    The probabilities equal the ancilla-marginalized Born probabilities,
    and the puri-rank obeys min(d, mu)**(depth + 1).
    """
    dims = circuit.site_dims
    if len(dims) % 2 != 0:
        raise ShapeError("alternating circuit needs an even qudit count")
    d = dims[0]
    mu = dims[1]
    if any(dims[i] != (d if i % 2 == 0 else mu) for i in range(len(dims))):
        raise ShapeError("qudit dimensions must alternate (d, mu, d, mu, ...)")
    cores = _compile_cores(circuit)
    lps_cores = []
    for j in range(0, len(dims), 2):
        sys_c, anc_c = cores[j], cores[j + 1]
        merged = ein("xlm,ymk->xylk", sys_c, anc_c)  # (d, mu, rl, rr)
        lps_cores.append(merged)
    out = [lps_cores[0][:, :, 0, :]] + lps_cores[1:-1] + [lps_cores[-1][..., 0]]
    return LpsModel(COMPLEX, out)
