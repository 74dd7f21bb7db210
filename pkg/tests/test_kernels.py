"""Numba kernels against their numpy fallbacks."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixmom import _accel, kernels
from mixmom.moments import Dataset
from mixmom.tensor import unfold

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def both(fn, *args):
    saved = _accel.backend()
    try:
        _accel.set_backend("numpy")
        a = fn(*args)
        _accel.set_backend("numba")
        b = fn(*args)
    finally:
        _accel.set_backend(saved)
    return a, b


def dense_oracle(ra, va, rb, vb, da, db, rc=None, vc=None, dc=None):
    def dense(r, v, d):
        X = np.zeros((r.shape[0], d))
        for a in range(r.shape[1]):
            np.add.at(X, (np.arange(r.shape[0]), r[:, a]), v[:, a])
        return X

    Xa, Xb = dense(ra, va, da), dense(rb, vb, db)
    if rc is None:
        return Xa.T @ Xb
    return np.einsum("ia,ib,ic->abc", Xa, Xb, dense(rc, vc, dc))


@st.composite
def encodings(draw):
    n = draw(st.integers(1, 40))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    cats = [int(c) for c in rng.integers(1, 5, size=6)]
    values = np.column_stack([
        rng.normal(size=n) if d == 1 else rng.integers(0, d, n) for d in cats
    ])
    data = Dataset(values, cats)
    return [data.encoding(s) for s in ([0, 1], [2, 3], [4, 5])]


@needs_numba
@settings(max_examples=40, deadline=None)
@given(encodings())
def test_pair_sums_parity(enc):
    (ra, va, da), (rb, vb, db), _ = enc
    a, b = both(kernels.pair_sums, ra, va, rb, vb, da, db)
    oracle = dense_oracle(ra, va, rb, vb, da, db)
    assert np.allclose(a, oracle, atol=1e-12) and np.allclose(b, oracle, atol=1e-12)


@needs_numba
@settings(max_examples=40, deadline=None)
@given(encodings())
def test_triple_sums_parity(enc):
    (ra, va, da), (rb, vb, db), (rc, vc, dc) = enc
    a, b = both(kernels.triple_sums, ra, va, rb, vb, rc, vc, da, db, dc)
    oracle = dense_oracle(ra, va, rb, vb, da, db, rc, vc, dc)
    assert np.allclose(a, oracle, atol=1e-12) and np.allclose(b, oracle, atol=1e-12)


@needs_numba
@pytest.mark.parametrize("seed", range(3))
def test_pqp_sweeps_parity(seed):
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((5, 4, 6))
    T /= np.abs(T).max()
    init = [rng.random((d, 3)) for d in T.shape]
    a, b = both(kernels.pqp_sweeps, unfold(T, 1), unfold(T, 2), unfold(T, 3), *init, 300, 1e-8, 1e-10)
    for x, y in zip(a[:4], b[:4]):
        assert np.allclose(x, y, rtol=1e-9, atol=1e-13)
    assert a[4] == b[4] and a[5] == b[5]


def test_env_flag_forces_numpy():
    env = dict(os.environ, MIXMOM_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "import mixmom; print(mixmom.backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        _accel.set_backend("cuda")
