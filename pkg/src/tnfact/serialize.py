"""JSON persistence for models, HMMs and circuits.

One structured-text format for everything: a ``kind`` field selects the
schema, complex arrays are nested lists of [re, im] pairs in row-major
order. Python's float repr round-trips every finite double, so save/load
is bit-faithful.
"""

import json

import numpy as np

from .circuits import Gate, LocalCircuit
from .errors import ShapeError
from .hmm import Hmm
from .models import BornModel, LpsModel, MpsModel


def _arr_to_json(arr):
    arr = np.asarray(arr, dtype=np.complex128)
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


def _arr_from_json(data):
    stacked = np.asarray(data, dtype=float)
    if stacked.shape[-1] != 2:
        raise ShapeError("expected [re, im] pairs")
    return stacked[..., 0] + 1j * stacked[..., 1]


def model_to_dict(model):
    if isinstance(model, MpsModel):
        return {
            "kind": "mps",
            "field": model.field,
            "n_sites": model.n_sites,
            "phys_dim": model.phys_dim,
            "bond_dims": list(model.bond_dims),
            "cores": [_arr_to_json(c) for c in model.cores],
        }
    if isinstance(model, BornModel):
        d = model_to_dict(model.amplitude)
        d["kind"] = "born"
        return d
    if isinstance(model, LpsModel):
        return {
            "kind": "lps",
            "field": model.field,
            "n_sites": model.n_sites,
            "phys_dim": model.phys_dim,
            "puri_dim": model.puri_dim,
            "bond_dims": list(model.bond_dims),
            "cores": [_arr_to_json(c) for c in model.cores],
        }
    if isinstance(model, Hmm):
        return {
            "kind": "hmm",
            "n_sites": model.n_sites,
            "hidden_dim": model.hidden_dim,
            "obs_dim": model.obs_dim,
            "initial": model.initial.tolist(),
            "transitions": [t.tolist() for t in model.transitions],
            "emissions": [e.tolist() for e in model.emissions],
        }
    raise ShapeError(f"cannot serialize {type(model)!r}")


def model_from_dict(d):
    kind = d.get("kind")
    if kind == "mps":
        return MpsModel(d["field"], [_arr_from_json(c) for c in d["cores"]])
    if kind == "born":
        return BornModel(MpsModel(d["field"],
                                  [_arr_from_json(c) for c in d["cores"]]))
    if kind == "lps":
        return LpsModel(d["field"], [_arr_from_json(c) for c in d["cores"]])
    if kind == "hmm":
        return Hmm(np.asarray(d["initial"], dtype=float),
                   tuple(np.asarray(t, dtype=float) for t in d["transitions"]),
                   tuple(np.asarray(e, dtype=float) for e in d["emissions"]))
    if kind == "circuit":
        return circuit_from_dict(d)
    raise ShapeError(f"unknown document kind {kind!r}")


def circuit_to_dict(circuit):
    return {
        "kind": "circuit",
        "n_qudits": circuit.n_qudits,
        "site_dims": list(circuit.site_dims),
        "layers": [
            [[g.site, _arr_to_json(g.matrix)] for g in layer]
            for layer in circuit.layers
        ],
    }


def circuit_from_dict(d):
    if d.get("kind") != "circuit":
        raise ShapeError("not a circuit document")
    layers = [
        [Gate(int(site), _arr_from_json(mat)) for site, mat in layer]
        for layer in d["layers"]
    ]
    return LocalCircuit(d["site_dims"], layers)


def save(obj, path):
    if isinstance(obj, LocalCircuit):
        doc = circuit_to_dict(obj)
    else:
        doc = model_to_dict(obj)
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
