"""Dirichlet moments and method-of-moments estimators.

Categorical observations are encoded as indicator vectors; a variable with a
single "category" is treated as a scalar and encoded as its raw value.
All empirical estimators take the Dirichlet concentration sum ``alpha0`` as a
known input.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .exceptions import ArgumentError, ValidationError
from .tensor import KruskalFactors, kruskal_to_dense, outer3


@dataclass
class ModelParams:
    """Per-variable parameter matrices and Dirichlet concentration.

    ``thetas[j]`` has shape ``(d_j, k)`` with nonnegative, unit-sum columns.
    ``alpha`` may be ``None`` for fitted models, where only ``alpha0`` (or
    nothing) is known.
    """

    thetas: list
    alpha: np.ndarray = None
    alpha0: float = None

    def __post_init__(self):
        self.thetas = [np.atleast_2d(np.asarray(t, dtype=np.float64)) for t in self.thetas]
        if not self.thetas:
            raise ValidationError("model needs at least one variable")
        k = self.thetas[0].shape[1]
        for j, th in enumerate(self.thetas):
            if th.shape[1] != k:
                raise ValidationError(
                    f"variable {j}: expected {k} columns, got {th.shape[1]}"
                )
            if not np.all(np.isfinite(th)):
                raise ValidationError(f"variable {j}: non-finite parameter")
            if np.any(th < 0):
                raise ValidationError(f"variable {j}: negative parameter entry")
            sums = th.sum(axis=0)
            bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-9)
            if bad.size:
                raise ValidationError(
                    f"variable {j}, column {bad[0]}: column sums to {sums[bad[0]]!r}, not 1"
                )
        if self.alpha is not None:
            self.alpha = np.asarray(self.alpha, dtype=np.float64).reshape(-1)
            if self.alpha.shape != (k,) or np.any(self.alpha <= 0):
                raise ValidationError(f"alpha must be {k} positive values")
            total = float(self.alpha.sum())
            if self.alpha0 is None:
                self.alpha0 = total
            elif abs(self.alpha0 - total) > 1e-12 * max(1.0, total):
                raise ValidationError("alpha0 does not equal sum(alpha)")
        if self.alpha0 is not None:
            self.alpha0 = float(self.alpha0)
            if not self.alpha0 > 0:
                raise ValidationError("alpha0 must be positive")

    @property
    def p(self):
        return len(self.thetas)

    @property
    def k(self):
        return self.thetas[0].shape[1]

    @property
    def categories(self):
        return tuple(th.shape[0] for th in self.thetas)

    def stacked(self, variables=None):
        """Vertically stacked parameters of ``variables`` (default: all)."""
        if variables is None:
            variables = range(self.p)
        return np.vstack([self.thetas[j] for j in variables])


@dataclass
class Dataset:
    """``n x p`` observation matrix with per-variable category counts."""

    values: np.ndarray
    categories: tuple = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValidationError(f"values must be a non-empty n x p array, got {values.shape}")
        n, p = values.shape
        if self.categories is None:
            self.categories = tuple(int(values[:, j].max()) + 1 for j in range(p))
        self.categories = tuple(int(d) for d in self.categories)
        if len(self.categories) != p:
            raise ValidationError(f"{len(self.categories)} category counts for {p} variables")
        if any(d < 1 for d in self.categories):
            raise ValidationError("category counts must be positive")
        if all(d >= 2 for d in self.categories):
            if not np.issubdtype(values.dtype, np.integer):
                if not np.all(values == np.round(values)):
                    raise ValidationError("categorical values must be integers")
                values = values.astype(np.int64)
        else:
            values = values.astype(np.float64)
        if not np.all(np.isfinite(values)):
            raise ValidationError("values must be finite")
        for j, d in enumerate(self.categories):
            if d == 1:
                continue
            col = values[:, j]
            bad = np.flatnonzero((col < 0) | (col >= d) | (col != np.round(col)))
            if bad.size:
                raise ValidationError(
                    f"row {bad[0]}, variable {j}: value {col[bad[0]]!r} outside [0, {d})"
                )
        self.values = values

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def encoding(self, variables):
        """Stacked sparse encoding of ``variables``.

        Returns ``(rows, vals, dim)``: for each sample and listed variable the
        active row of the stacked indicator vector and the value stored there.
        """
        variables = list(variables)
        dims = [self.categories[j] for j in variables]
        offsets = np.concatenate([[0], np.cumsum(dims)[:-1]]).astype(np.int64)
        sub = self.values[:, variables]
        rows = np.empty(sub.shape, dtype=np.int64)
        vals = np.ones(sub.shape, dtype=np.float64)
        for a, d in enumerate(dims):
            if d == 1:
                rows[:, a] = offsets[a]
                vals[:, a] = sub[:, a]
            else:
                rows[:, a] = offsets[a] + sub[:, a].astype(np.int64)
        return rows, vals, int(sum(dims))


def encode_observation(y, d):
    """Indicator encoding of category ``y`` out of ``d`` (raw value if ``d == 1``)."""
    if d == 1:
        return np.array([float(y)])
    if int(y) != y or not 0 <= y < d:
        raise ArgumentError(f"category {y!r} outside [0, {d})")
    out = np.zeros(d)
    out[int(y)] = 1.0
    return out


def _check_alpha(alpha):
    alpha = np.asarray(alpha, dtype=np.float64).reshape(-1)
    if alpha.size < 1 or np.any(~np.isfinite(alpha)) or np.any(alpha <= 0):
        raise ArgumentError("alpha must be a non-empty vector of positive values")
    return alpha


def dirichlet_moments(alpha):
    """Exact ``E[x]``, ``E[x x]`` and ``E[x x x]`` of ``x ~ Dir(alpha)``."""
    alpha = _check_alpha(alpha)
    a0 = alpha.sum()
    k = alpha.size
    mean = alpha / a0
    second = (np.outer(alpha, alpha) + np.diag(alpha)) / (a0 * (a0 + 1))

    third = outer3(alpha, alpha, alpha)
    idx = np.arange(k)
    # sum_i alpha_i (alpha x e_i x e_i), and the two mode rotations
    third[:, idx, idx] += alpha[None, :] * alpha[:, None]
    third[idx, :, idx] += alpha[:, None] * alpha[None, :]
    third[idx, idx, :] += alpha[:, None] * alpha[None, :]
    third[idx, idx, idx] += 2 * alpha
    third /= a0 * (a0 + 1) * (a0 + 2)
    return mean, second, third


def _check_thetas(alpha, *thetas):
    alpha = _check_alpha(alpha)
    out = []
    for th in thetas:
        th = np.atleast_2d(np.asarray(th, dtype=np.float64))
        if th.shape[1] != alpha.size:
            raise ArgumentError(
                f"parameter matrix has {th.shape[1]} columns, alpha has {alpha.size}"
            )
        out.append(th)
    return alpha, out


def population_pair(theta_j, theta_s, alpha):
    """Exact second-order estimator target ``sum_h a_h/(a0(a0+1)) th_jh x th_sh``."""
    alpha, (tj, ts) = _check_thetas(alpha, theta_j, theta_s)
    a0 = alpha.sum()
    return (tj * (alpha / (a0 * (a0 + 1)))) @ ts.T


def population_triple_cp(theta_j, theta_s, theta_t, alpha):
    """Exact third-order estimator target via its CP form."""
    alpha, (tj, ts, tt) = _check_thetas(alpha, theta_j, theta_s, theta_t)
    a0 = alpha.sum()
    w = 2 * alpha / (a0 * (a0 + 1) * (a0 + 2))
    return kruskal_to_dense(KruskalFactors(tj, ts, tt, w))


def population_triple_via_moments(theta_j, theta_s, theta_t, alpha):
    """Exact third-order estimator target assembled from observation moments.

    Evaluates the three-term estimator with the sample averages replaced by
    exact expectations under the model; agrees with
    :func:`population_triple_cp` when the Dirichlet algebra is right.
    """
    alpha, (tj, ts, tt) = _check_thetas(alpha, theta_j, theta_s, theta_t)
    a0 = alpha.sum()
    mean, second, third = dirichlet_moments(alpha)
    mj, ms, mt = tj @ mean, ts @ mean, tt @ mean
    raw3 = np.einsum("abc,ia,jb,lc->ijl", third, tj, ts, tt)
    p_st = ts @ second @ tt.T
    p_jt = tj @ second @ tt.T
    p_js = tj @ second @ ts.T
    return _combine(raw3, mj, ms, mt, p_js, p_jt, p_st, a0)


def _combine(raw3, mj, ms, mt, p_js, p_jt, p_st, alpha0):
    c1 = 2 * alpha0**2 / ((alpha0 + 1) * (alpha0 + 2))
    c2 = alpha0 / (alpha0 + 2)
    corr = (
        mj[:, None, None] * p_st[None, :, :]
        + ms[None, :, None] * p_jt[:, None, :]
        + mt[None, None, :] * p_js[:, :, None]
    )
    return raw3 + c1 * outer3(mj, ms, mt) - c2 * corr


def _check_alpha0(alpha0):
    if not np.isfinite(alpha0) or alpha0 <= 0:
        raise ArgumentError(f"alpha0 must be positive, got {alpha0!r}")
    return float(alpha0)


def _check_sets(data_p, *sets):
    out = []
    seen = set()
    for s in sets:
        s = tuple(int(v) for v in np.atleast_1d(s))
        if not s:
            raise ArgumentError("index sets must be non-empty")
        for v in s:
            if not 0 <= v < data_p:
                raise ArgumentError(f"variable index {v} outside [0, {data_p})")
            if v in seen:
                raise ArgumentError(f"variable {v} appears in more than one index set")
            seen.add(v)
        out.append(s)
    return out


def _means(rows, vals, dim, n):
    return np.bincount(rows.ravel(), weights=vals.ravel(), minlength=dim) / n


def empirical_pair(data, j, s, alpha0):
    """Sample second-order estimator for distinct variables ``j`` and ``s``."""
    alpha0 = _check_alpha0(alpha0)
    if j == s:
        raise ArgumentError("the pairwise estimator needs distinct variables")
    (j,), (s,) = _check_sets(data.p, j, s)
    ra, va, da = data.encoding([j])
    rb, vb, db = data.encoding([s])
    n = data.n
    m_a, m_b = _means(ra, va, da, n), _means(rb, vb, db, n)
    return kernels.pair_sums(ra, va, rb, vb, da, db) / n - alpha0 / (alpha0 + 1) * np.outer(m_a, m_b)


def block_tensor(data, pi_j, pi_s, pi_t, alpha0):
    """Sample third-order block estimator over three disjoint ordered variable sets.

    Block ``(u, v, w)`` of the result is the three-variable estimator for
    ``(pi_j[u], pi_s[v], pi_t[w])``; rows of each mode are the stacked
    category indicators in the order given.
    """
    alpha0 = _check_alpha0(alpha0)
    pi_j, pi_s, pi_t = _check_sets(data.p, pi_j, pi_s, pi_t)
    n = data.n
    ra, va, da = data.encoding(pi_j)
    rb, vb, db = data.encoding(pi_s)
    rc, vc, dc = data.encoding(pi_t)
    # counts stay integral until the final division, which keeps the result
    # independent of sample order for categorical data
    raw3 = kernels.triple_sums(ra, va, rb, vb, rc, vc, da, db, dc) / n
    p_js = kernels.pair_sums(ra, va, rb, vb, da, db) / n
    p_jt = kernels.pair_sums(ra, va, rc, vc, da, dc) / n
    p_st = kernels.pair_sums(rb, vb, rc, vc, db, dc) / n
    mj, ms, mt = _means(ra, va, da, n), _means(rb, vb, db, n), _means(rc, vc, dc, n)
    return _combine(raw3, mj, ms, mt, p_js, p_jt, p_st, alpha0)


def empirical_triple(data, j, s, t, alpha0):
    """Sample third-order estimator for three distinct variables."""
    if len({j, s, t}) != 3:
        raise ArgumentError("the third-order estimator needs three distinct variables")
    return block_tensor(data, [j], [s], [t], alpha0)


def population_block_tensor(params, pi_j, pi_s, pi_t):
    """Exact block estimator target: CP form with stacked parameter factors."""
    if params.alpha is None:
        raise ArgumentError("population moments need the full alpha vector")
    pi_j, pi_s, pi_t = _check_sets(params.p, pi_j, pi_s, pi_t)
    return population_triple_cp(
        params.stacked(pi_j), params.stacked(pi_s), params.stacked(pi_t), params.alpha
    )


def negative_fraction(T):
    """Fraction of strictly negative entries."""
    T = np.asarray(T)
    return float(np.count_nonzero(T < 0)) / T.size
