"""Synthetic mixed membership data and parameter-recovery error."""

from dataclasses import dataclass
from itertools import permutations
from math import floor

import numpy as np

from . import _rng
from .exceptions import ArgumentError, UnsupportedError
from .matching import MAX_BRUTE_FORCE_K, match_procrustes
from .moments import Dataset, ModelParams


@dataclass
class SimConfig:
    p: int = 25
    k: int = 3
    d: int = 4
    alpha_h: float = 0.1
    theta_prior: tuple = None
    n: int = 1000
    delta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.p, self.k, self.d, self.n) < 1:
            raise ArgumentError("p, k, d and n must be positive")
        if not self.alpha_h > 0:
            raise ArgumentError("alpha_h must be positive")
        if not 0.0 <= self.delta <= 1.0:
            raise ArgumentError("delta must lie in [0, 1]")
        if self.theta_prior is None:
            self.theta_prior = (0.5,) * self.d
        self.theta_prior = tuple(float(a) for a in self.theta_prior)
        if len(self.theta_prior) != self.d or min(self.theta_prior) <= 0:
            raise ArgumentError(f"theta_prior must hold {self.d} positive values")

    @property
    def alpha(self):
        return np.full(self.k, float(self.alpha_h))


def sample_model(cfg):
    """Draw every parameter column independently from the Dirichlet prior."""
    rng = _rng.generator(cfg.seed, "model")
    draws = rng.dirichlet(cfg.theta_prior, size=(cfg.p, cfg.k))
    # renormalize away the last-ulp drift of the sampler
    draws /= draws.sum(axis=2, keepdims=True)
    return ModelParams([draws[j].T for j in range(cfg.p)], alpha=cfg.alpha)


def _categorical(rng, probs):
    """One draw per row of ``probs`` by inverse CDF."""
    cum = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[:-1]) * cum[..., -1]
    idx = np.sum(u[..., None] >= cum, axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1)


def simulate_dataset(params, cfg):
    """Sample ``cfg.n`` observations from the mixed membership model.

    Per sample: memberships ``x ~ Dir(alpha)``; per variable: a component
    ``h ~ Cat(x)`` and then a category from that component's column.
    """
    if params.alpha is None:
        raise ArgumentError("simulation needs the full alpha vector")
    if any(d < 2 for d in params.categories):
        raise UnsupportedError("only categorical variables can be simulated")
    rng = _rng.generator(cfg.seed, "simulate")
    n, p = cfg.n, params.p
    x = rng.dirichlet(params.alpha, size=n)
    comp = _categorical(rng, np.broadcast_to(x[:, None, :], (n, p, params.k)))
    values = np.empty((n, p), dtype=np.int64)
    for j, theta in enumerate(params.thetas):
        values[:, j] = _categorical(rng, theta.T[comp[:, j]])
    return Dataset(values, params.categories)


def contaminate(data, delta, seed, mode="cells"):
    """Replace a fraction ``delta`` of entries by uniform category draws.

    ``mode="cells"`` replaces ``floor(delta * n * p)`` individual cells chosen
    without replacement; ``mode="rows"`` replaces ``floor(delta * n)`` whole
    observations.
    """
    if not 0.0 <= delta <= 1.0:
        raise ArgumentError("delta must lie in [0, 1]")
    if any(d < 2 for d in data.categories):
        raise UnsupportedError("contamination is defined for categorical variables only")
    n, p = data.n, data.p
    values = data.values.copy()
    rng = _rng.generator(seed, "contaminate")
    dims = np.asarray(data.categories)
    if mode == "cells":
        m = floor(delta * n * p + 1e-9)
        cells = rng.choice(n * p, size=m, replace=False)
        cols = cells % p
        values.ravel()[cells] = rng.integers(0, dims[cols])
    elif mode == "rows":
        m = floor(delta * n + 1e-9)
        rows = rng.choice(n, size=m, replace=False)
        values[rows] = rng.integers(0, dims, size=(m, p))
    else:
        raise ArgumentError(f"unknown contamination mode {mode!r}")
    return Dataset(values, data.categories)


def align_to(est, truth):
    """Permutation of ``est``'s columns that best matches ``truth``.

    Exhaustive over all column orders for ``k <= 8``, Procrustes matching
    beyond that.
    """
    E = est.stacked()
    T = truth.stacked()
    if est.k > MAX_BRUTE_FORCE_K:
        return match_procrustes(T, None, E).permutation
    # cost[s, t]: squared error of putting estimate column t at position s
    cost = ((E[:, None, :] - T[:, :, None]) ** 2).sum(axis=0)
    best, best_psi = np.inf, None
    for cand in permutations(range(est.k)):
        val = cost[np.arange(est.k), cand].sum()
        if val < best:
            best, best_psi = val, cand
    return np.array(best_psi, dtype=np.intp)


def rmse_aligned(est, truth):
    """Root-mean-square parameter error after the best global column permutation."""
    if est.categories != truth.categories or est.k != truth.k:
        raise ArgumentError("estimate and truth differ in shape")
    psi = align_to(est, truth)
    diff = est.stacked()[:, psi] - truth.stacked()
    return float(np.sqrt(np.mean(diff**2)))
