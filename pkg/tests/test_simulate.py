import numpy as np
import pytest

from mixmom.exceptions import ArgumentError, UnsupportedError
from mixmom.matching import apply_permutation
from mixmom.moments import ModelParams
from mixmom.simulate import (
    SimConfig,
    align_to,
    contaminate,
    rmse_aligned,
    sample_model,
    simulate_dataset,
)


def test_sample_model_contract():
    for seed in range(1000):
        m = sample_model(SimConfig(p=3, k=2, d=3, seed=seed))
        assert isinstance(m, ModelParams) and m.categories == (3, 3, 3)


def test_sample_model_concentrated_prior():
    m = sample_model(SimConfig(p=5, k=3, d=4, theta_prior=(1e6 / 4,) * 4, seed=1))
    assert np.allclose(m.stacked(), 0.25, atol=1e-2)


def test_sample_model_deterministic():
    cfg = SimConfig(seed=9)
    a, b = sample_model(cfg), sample_model(cfg)
    assert all(np.array_equal(x, y) for x, y in zip(a.thetas, b.thetas))


def test_degenerate_emission():
    theta = np.zeros((4, 3))
    theta[2] = 1
    m = ModelParams([theta, theta], alpha=[0.1, 0.1, 0.1])
    data = simulate_dataset(m, SimConfig(p=2, k=3, n=100))
    assert np.all(data.values == 2)


def test_marginal_frequencies_match_mean():
    cfg = SimConfig(p=2, k=3, d=4, alpha_h=0.4, n=50_000, seed=2)
    truth = sample_model(cfg)
    data = simulate_dataset(truth, cfg)
    for j in range(2):
        prob = truth.thetas[j] @ (truth.alpha / truth.alpha0)
        freq = np.bincount(data.values[:, j], minlength=4) / cfg.n
        # memberships add variance beyond the binomial; 3 sigma is still generous here
        sigma = np.sqrt(prob * (1 - prob) / cfg.n)
        assert np.all(np.abs(freq - prob) < 3 * sigma + 1e-2)


def test_simulate_deterministic_and_scope():
    cfg = SimConfig(p=4, n=30, seed=5)
    truth = sample_model(cfg)
    assert np.array_equal(simulate_dataset(truth, cfg).values, simulate_dataset(truth, cfg).values)
    scalar = ModelParams([np.ones((1, 3))], alpha=[1, 1, 1])
    with pytest.raises(UnsupportedError):
        simulate_dataset(scalar, cfg)


def test_contaminate():
    cfg = SimConfig(p=25, n=1000, seed=0)
    data = simulate_dataset(sample_model(cfg), cfg)
    assert np.array_equal(contaminate(data, 0.0, 1).values, data.values)
    noisy = contaminate(data, 0.1, 1)
    # replaced cells keep their category with probability 1/4
    changed = np.count_nonzero(noisy.values != data.values)
    assert 2500 * 0.6 < changed <= 2500
    rows = contaminate(data, 0.1, 1, mode="rows")
    assert np.count_nonzero(np.any(rows.values != data.values, axis=1)) <= 100
    with pytest.raises(ArgumentError):
        contaminate(data, 1.5, 1)


def test_contaminate_count_exact():
    from mixmom import _rng

    cfg = SimConfig(p=25, n=1000, seed=0)
    data = simulate_dataset(sample_model(cfg), cfg)
    noisy = contaminate(data, 0.1, 3)
    # replay the cell choice from the same named stream
    cells = _rng.generator(3, "contaminate").choice(25_000, size=2500, replace=False)
    assert np.unique(cells).size == 2500
    untouched = np.ones(25_000, dtype=bool)
    untouched[cells] = False
    assert np.array_equal(noisy.values.ravel()[untouched], data.values.ravel()[untouched])


def test_contaminate_full_is_uniform():
    cfg = SimConfig(p=3, n=50_000, seed=0, alpha_h=0.05)
    data = simulate_dataset(sample_model(cfg), cfg)
    noisy = contaminate(data, 1.0, 2)
    for j in range(3):
        freq = np.bincount(noisy.values[:, j], minlength=4) / cfg.n
        assert np.all(np.abs(freq - 0.25) < 3 * np.sqrt(0.25 * 0.75 / cfg.n))


def test_rmse_aligned():
    truth = sample_model(SimConfig(p=5, k=4, seed=3))
    assert rmse_aligned(truth, truth) == 0
    psi = np.array([2, 0, 3, 1])
    perm = ModelParams([apply_permutation(psi, t) for t in truth.thetas])
    assert rmse_aligned(perm, truth) == 0
    with pytest.raises(ArgumentError):
        rmse_aligned(ModelParams(truth.thetas[:4]), truth)


def test_rmse_aligned_matches_exhaustive_oracle():
    from itertools import permutations

    rng = np.random.default_rng(4)
    truth = sample_model(SimConfig(p=6, k=3, seed=4))
    noisy = []
    for t in truth.thetas:
        x = t + rng.uniform(0, 0.05, t.shape)
        noisy.append(x / x.sum(axis=0))
    est = ModelParams([apply_permutation([1, 2, 0], t) for t in noisy])
    E, T = est.stacked(), truth.stacked()
    oracle = min(np.sqrt(np.mean((E[:, list(c)] - T) ** 2)) for c in permutations(range(3)))
    assert rmse_aligned(est, truth) == pytest.approx(oracle, rel=1e-12)
    assert np.array_equal(align_to(est, truth), [2, 0, 1])
