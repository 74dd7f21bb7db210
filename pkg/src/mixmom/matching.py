"""Column matching between factorizations of overlapping variable sets.

A permutation ``psi`` is a length-k integer array; applying it to a matrix
reorders columns so that column ``h`` of the result is column ``psi[h]`` of
the input. The matchers return ``psi_new`` such that column ``h`` of
``apply_permutation(psi_new, theta_new)`` and of
``apply_permutation(psi_ref, theta_ref)`` describe the same hidden component.
"""

from dataclasses import dataclass
from itertools import permutations
from math import log, sqrt

import numpy as np

from .exceptions import ArgumentError

MAX_BRUTE_FORCE_K = 8


@dataclass
class MatchReport:
    permutation: np.ndarray = None
    valid: bool = False
    repaired: bool = False
    score: float = float("nan")


@dataclass
class BoundCheck:
    """Result of a sufficient-condition check; truthy when the bound holds."""

    holds: bool
    singular: bool = False

    def __bool__(self):
        return self.holds


def as_permutation(psi, k=None):
    psi = np.asarray(psi)
    if psi.ndim != 1 or not np.issubdtype(psi.dtype, np.integer):
        raise ArgumentError("permutation must be a 1-D integer array")
    if k is not None and psi.size != k:
        raise ArgumentError(f"permutation has length {psi.size}, expected {k}")
    if not np.array_equal(np.sort(psi), np.arange(psi.size)):
        raise ArgumentError(f"{psi.tolist()} is not a permutation")
    return psi.astype(np.intp)


def identity_permutation(k):
    return np.arange(k, dtype=np.intp)


def invert_permutation(psi):
    psi = as_permutation(psi)
    inv = np.empty_like(psi)
    inv[psi] = np.arange(psi.size)
    return inv


def apply_permutation(psi, M):
    M = np.atleast_2d(np.asarray(M))
    psi = as_permutation(psi, M.shape[1])
    return M[:, psi]


def normalize_columns(M):
    """Scale each column to unit Euclidean norm."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    norms = np.linalg.norm(M, axis=0)
    if np.any(norms == 0):
        raise ArgumentError(f"zero column(s) {np.flatnonzero(norms == 0).tolist()}")
    return M / norms


def _argmax_columns(S):
    """``psi[s] = argmax_t S[t, s]``; ties go to the lowest index."""
    return np.argmax(S, axis=0).astype(np.intp)


def _greedy_assign(S):
    """Assign columns of ``S`` to rows by repeatedly taking the largest free entry."""
    k = S.shape[0]
    work = np.array(S, dtype=np.float64)
    psi = np.empty(k, dtype=np.intp)
    for _ in range(k):
        t, s = np.unravel_index(np.argmax(work), work.shape)
        psi[s] = t
        work[t, :] = -np.inf
        work[:, s] = -np.inf
    return psi


def _resolve(S):
    psi = _argmax_columns(S)
    if np.unique(psi).size == psi.size:
        return psi, True, False
    return _greedy_assign(S), False, True


def _prepare(theta_ref, psi_ref, theta_new):
    theta_ref = np.atleast_2d(np.asarray(theta_ref, dtype=np.float64))
    theta_new = np.atleast_2d(np.asarray(theta_new, dtype=np.float64))
    if theta_ref.shape != theta_new.shape:
        raise ArgumentError(f"shape mismatch: {theta_ref.shape} vs {theta_new.shape}")
    k = theta_ref.shape[1]
    psi_ref = identity_permutation(k) if psi_ref is None else as_permutation(psi_ref, k)
    ref = normalize_columns(apply_permutation(psi_ref, theta_ref))
    return ref, normalize_columns(theta_new)


def match_smallest_angle(theta_ref, psi_ref, theta_new):
    """Pair each reference column with the new column at the smallest angle."""
    ref, new = _prepare(theta_ref, psi_ref, theta_new)
    S = new.T @ ref
    psi, valid, repaired = _resolve(S)
    score = float(np.mean(S[psi, np.arange(psi.size)]))
    return MatchReport(psi, valid, repaired, score)


def match_procrustes(theta_ref, psi_ref, theta_new, rank_tol=1e-12):
    """Match through the polar factor of the normalized cross-product.

    The orthogonal Procrustes solution ``U V'`` of ``new' ref = U S V'`` is
    rounded to a permutation by a column-wise argmax. A rank-deficient
    cross-product yields an invalid report without a permutation.
    """
    ref, new = _prepare(theta_ref, psi_ref, theta_new)
    U, sv, Vt = np.linalg.svd(new.T @ ref)
    if sv[-1] <= rank_tol * max(sv[0], np.finfo(float).tiny):
        return MatchReport(None, False, False, float("nan"))
    psi, valid, repaired = _resolve(U @ Vt)
    score = float(np.trace(new[:, psi].T @ ref))
    return MatchReport(psi, valid, repaired, score)


def match_objective(psi, theta_ref, theta_new):
    """``|psi new_bar - ref_bar|_F^2`` on column-normalized inputs."""
    ref = normalize_columns(theta_ref)
    new = normalize_columns(theta_new)
    return float(np.sum((apply_permutation(psi, new) - ref) ** 2))


def brute_force_match(theta_ref, theta_new):
    """Exhaustive search for the permutation minimizing :func:`match_objective`."""
    ref = normalize_columns(theta_ref)
    new = normalize_columns(theta_new)
    k = ref.shape[1]
    if k > MAX_BRUTE_FORCE_K:
        raise ArgumentError(f"brute force limited to k <= {MAX_BRUTE_FORCE_K}, got {k}")
    best, best_psi = np.inf, None
    for cand in permutations(range(k)):
        val = np.sum((new[:, cand] - ref) ** 2)
        if val < best:
            best, best_psi = val, cand
    return np.array(best_psi, dtype=np.intp)


def sam_bound(theta_truth):
    """Largest relative column error the smallest-angle rule tolerates."""
    bar = normalize_columns(theta_truth)
    k = bar.shape[1]
    if k < 2:
        return 1.0
    G = bar.T @ bar
    max_cos = float(np.max(G[np.triu_indices(k, 1)]))
    max_cos = min(max(max_cos, -1.0), 1.0)
    return 1.0 - sqrt(0.5 + sqrt((1.0 + max_cos) / 8.0))


def check_sam_bound(theta_truth, theta_hat):
    """Sufficient condition for smallest-angle matching to be consistent."""
    theta_truth = np.atleast_2d(np.asarray(theta_truth, dtype=np.float64))
    theta_hat = np.atleast_2d(np.asarray(theta_hat, dtype=np.float64))
    if theta_truth.shape != theta_hat.shape:
        raise ArgumentError("shape mismatch")
    norms = np.linalg.norm(theta_truth, axis=0)
    rel = np.linalg.norm(theta_truth - theta_hat, axis=0) / norms
    return BoundCheck(bool(np.all(rel < sam_bound(theta_truth))))


def check_procrustes_bound(theta, theta_prime, psi, normalize=True):
    """Sufficient condition for Procrustes matching to recover ``psi``.

    ``theta_prime`` is expected to be close to ``apply_permutation(psi,
    theta)``. Columns are normalized first (as the matcher does) unless
    ``normalize=False``.
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=np.float64))
    theta_prime = np.atleast_2d(np.asarray(theta_prime, dtype=np.float64))
    if normalize:
        theta, theta_prime = normalize_columns(theta), normalize_columns(theta_prime)
    P = apply_permutation(psi, theta)
    k = P.shape[1]
    gram_sv = np.linalg.svd(theta.T @ theta, compute_uv=False)
    if gram_sv[-1] <= 1e-12 * max(gram_sv[0], np.finfo(float).tiny):
        return BoundCheck(False, singular=True)
    E = P.T @ (theta_prime - P)
    e_sv = np.linalg.svd(E, compute_uv=False)
    e_norm = e_sv[0]
    if e_norm >= gram_sv[-1]:
        return BoundCheck(False)
    if e_norm == 0.0:
        return BoundCheck(True)
    rho = e_sv[0] + (e_sv[1] if k > 1 else 0.0)
    nu = gram_sv[-1] + (gram_sv[-2] if k > 1 else 0.0)
    if rho >= nu:
        return BoundCheck(False)
    return BoundCheck(bool(-(e_norm / rho) * log(1.0 - rho / nu) < (2.0 - sqrt(2.0)) / 4.0))
