import json

import numpy as np
import pytest

from tnfact import circuits as C
from tnfact import hmm as H
from tnfact import models as M
from tnfact import serialize as ser
from tnfact.errors import ShapeError


def roundtrip(obj, tmp_path, name):
    path = tmp_path / f"{name}.json"
    ser.save(obj, path)
    return ser.load(path)


def test_mps_roundtrip_bit_faithful(tmp_path):
    m = M.random_mps(M.COMPLEX, 5, 2, 3, seed=1)
    back = roundtrip(m, tmp_path, "mps")
    assert back.field == m.field
    for c0, c1 in zip(m.cores, back.cores):
        assert np.array_equal(c0, c1)  # exact doubles, not just close


def test_born_and_lps_roundtrip(tmp_path):
    b = M.random_born(M.REAL, 4, 2, 2, seed=2)
    back = roundtrip(b, tmp_path, "born")
    assert isinstance(back, M.BornModel)
    for c0, c1 in zip(b.amplitude.cores, back.amplitude.cores):
        assert np.array_equal(c0, c1)

    l = M.random_lps(M.COMPLEX, 4, 2, 2, 3, seed=3)
    back = roundtrip(l, tmp_path, "lps")
    assert isinstance(back, M.LpsModel)
    assert back.puri_dim == 3
    for c0, c1 in zip(l.cores, back.cores):
        assert np.array_equal(c0, c1)


def test_awkward_doubles_survive(tmp_path):
    vals = np.array([[np.pi, 1e-308], [3.0 + 1e-16, 2.0 ** -52]])
    m = M.MpsModel(M.REAL, [vals, vals.copy()])
    back = roundtrip(m, tmp_path, "awkward")
    for c0, c1 in zip(m.cores, back.cores):
        assert np.array_equal(c0, c1)


def test_hmm_roundtrip(tmp_path):
    h = H.random_hmm(5, 3, 2, seed=4)
    back = roundtrip(h, tmp_path, "hmm")
    assert isinstance(back, H.Hmm)
    assert np.array_equal(back.initial, h.initial)
    for t0, t1 in zip(h.transitions, back.transitions):
        assert np.array_equal(t0, t1)
    for e0, e1 in zip(h.emissions, back.emissions):
        assert np.array_equal(e0, e1)


def test_circuit_roundtrip(tmp_path):
    c = C.random_circuit(4, 2, 2, seed=5)
    back = roundtrip(c, tmp_path, "circuit")
    assert back.site_dims == c.site_dims
    for l0, l1 in zip(c.layers, back.layers):
        for g0, g1 in zip(l0, l1):
            assert g0.site == g1.site
            assert np.array_equal(g0.matrix, g1.matrix)


def test_unknown_kind_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"kind": "mystery"}))
    with pytest.raises(ShapeError):
        ser.load(path)
