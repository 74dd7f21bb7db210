"""Partitioned factorization around shared anchor variables.

Non-anchor variables are dealt into ``r`` partitions; every partition also
contains the anchor variables in each of its three modes, so the anchors'
parameter estimates can be used to put all partitions on a common labeling
of the hidden components.
"""

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import ceil

import numpy as np

from . import _rng
from .exceptions import ArgumentError, PlanError, StitchError
from .matching import (
    MatchReport,
    apply_permutation,
    check_procrustes_bound,
    identity_permutation,
    match_procrustes,
    match_smallest_angle,
    normalize_columns,
)
from .moments import Dataset, ModelParams, block_tensor, population_block_tensor
from .pqp import FactorizeOptions, factorize, with_seed

log = logging.getLogger(__name__)

MATCHERS = {"procrustes": match_procrustes, "smallest-angle": match_smallest_angle}


@dataclass
class PartitionPlan:
    p: int
    anchors: tuple
    partitions: list

    def __post_init__(self):
        self.anchors = tuple(tuple(int(v) for v in s) for s in self.anchors)
        self.partitions = [tuple(tuple(int(v) for v in s) for s in part) for part in self.partitions]
        if len(self.anchors) != 3 or not self.partitions:
            raise PlanError("a plan needs three anchor sets and at least one partition")
        seen = set()
        for i, part in enumerate(self.partitions):
            if len(part) != 3:
                raise PlanError(f"partition {i} must have three index sets")
            flat = [v for s in part for v in s]
            if len(flat) != len(set(flat)):
                raise PlanError(f"partition {i}: index sets overlap")
            for anchor, s in zip(self.anchors, part):
                if not set(anchor) <= set(s):
                    raise PlanError(f"partition {i} does not contain its anchor set {anchor}")
            seen.update(flat)
        if seen != set(range(self.p)):
            missing = sorted(set(range(self.p)) - seen)
            raise PlanError(f"plan does not cover variables {missing[:10]}")

    @property
    def r(self):
        return len(self.partitions)

    @property
    def anchor_variables(self):
        return tuple(v for s in self.anchors for v in s)


@dataclass
class FitResult:
    params: ModelParams
    reports: list
    converged: list
    anchor_matrix: np.ndarray
    permutations: list = field(default_factory=list)
    weights: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    bound_checks: list = field(default_factory=list)


def default_anchor_sets(k, categories):
    """First ``ceil(k / d_min)`` variables per mode, taken in index order."""
    d_min = min(categories)
    a = max(1, ceil(k / d_min))
    if 3 * a > len(categories):
        raise PlanError(f"need {3 * a} anchor variables but only {len(categories)} exist")
    return tuple(tuple(range(m * a, (m + 1) * a)) for m in range(3))


def default_partition_count(p, k, categories, anchors):
    rest = p - sum(len(s) for s in anchors)
    per_mode = max(1, ceil(k / min(categories)))
    return max(1, round(rest / (3 * per_mode)))


def build_partition_plan(p, k, categories, anchor_sets=None, r=None, seed=0):
    """Anchor sets plus ``r`` partitions dealing the other variables round-robin.

    Non-anchor variables are shuffled by ``seed``; the ``q``-th one goes to
    partition ``q % r`` in mode ``(q // r) % 3``, which keeps partition sizes
    within one of each other.
    """
    categories = tuple(int(d) for d in categories)
    if len(categories) != p:
        raise ArgumentError(f"{len(categories)} category counts for p={p}")
    if anchor_sets is None:
        anchor_sets = default_anchor_sets(k, categories)
    anchors = tuple(tuple(int(v) for v in s) for s in anchor_sets)
    flat = [v for s in anchors for v in s]
    if len(anchors) != 3 or any(not s for s in anchors):
        raise ArgumentError("need three non-empty anchor sets")
    if len(flat) != len(set(flat)):
        raise ArgumentError("anchor sets must be pairwise disjoint")
    if any(not 0 <= v < p for v in flat):
        raise ArgumentError("anchor index out of range")
    for m, s in enumerate(anchors):
        rows = sum(categories[v] for v in s)
        if rows < k:
            raise PlanError(
                f"anchor set {m} has {rows} category rows, fewer than k={k}"
            )
    rest = [v for v in range(p) if v not in set(flat)]
    if r is None:
        r = default_partition_count(p, k, categories, anchors)
    if r < 1:
        raise ArgumentError("partition count must be at least 1")
    order = _rng.generator(seed, "partition-plan").permutation(len(rest))
    slots = [[list(a) for a in anchors] for _ in range(r)]
    for q, idx in enumerate(order):
        slots[q % r][(q // r) % 3].append(rest[idx])
    return PartitionPlan(p, anchors, [tuple(tuple(s) for s in part) for part in slots])


def _partition_key(part):
    return zlib.crc32(repr(part).encode("ascii"))


def _block(source, part, alpha0):
    if isinstance(source, Dataset):
        return block_tensor(source, *part, alpha0)
    if isinstance(source, ModelParams):
        return population_block_tensor(source, *part)
    raise ArgumentError("source must be a Dataset or a ModelParams with alpha")


def _split(X, variables, categories):
    out = {}
    row = 0
    for v in variables:
        d = categories[v]
        block = X[row:row + d]
        row += d
        s = block.sum(axis=0)
        theta = np.where(s > 0, block / np.where(s > 0, s, 1.0), 1.0 / d)
        out[v] = theta
    return out


def factorize_partition(source, part, k, alpha0, opts, restarts=3):
    """Factorize one partition's block tensor, best of ``restarts`` random starts.

    Returns ``(thetas, weights, objective, converged)`` where ``thetas`` maps
    each variable of the partition to its ``d_v x k`` column-stochastic slice.
    """
    T = _block(source, part, alpha0)
    key = _partition_key(part)
    best = None
    for rep in range(restarts):
        run_opts = with_seed(opts, _rng.derive_seed(opts.seed, "partition", key, rep))
        res = factorize(T, k, run_opts)
        if best is None or res.final_objective < best.final_objective:
            best = res
    categories = source.categories
    F = best.factors
    thetas = {}
    for X, s in zip((F.A, F.B, F.C), part):
        thetas.update(_split(X, s, categories))
    return thetas, F.weights, best.final_objective, best.converged


def anchor_matrix(thetas, anchors):
    return normalize_columns(np.vstack([thetas[v] for s in anchors for v in s]))


def stitch_details(partition_thetas, anchors, matcher="procrustes"):
    """Label-align partitions against partition 0 using the anchor matrix.

    Returns ``(thetas, permutations, reports)``; ``thetas`` maps every
    variable to its aligned parameters, with anchors averaged over all
    partitions after alignment.
    """
    try:
        match = MATCHERS[matcher]
    except KeyError:
        raise ArgumentError(f"unknown matcher {matcher!r}") from None
    if not partition_thetas:
        raise ArgumentError("nothing to stitch")
    anchor_vars = [v for s in anchors for v in s]
    for i, th in enumerate(partition_thetas):
        if any(v not in th for v in anchor_vars):
            raise StitchError(f"partition {i} lacks anchor variables")
    k = next(iter(partition_thetas[0].values())).shape[1]
    ref = anchor_matrix(partition_thetas[0], anchors)
    psis = [identity_permutation(k)]
    reports = [MatchReport(identity_permutation(k), True, False, float(k))]
    for i, th in enumerate(partition_thetas[1:], start=1):
        rep = match(ref, None, anchor_matrix(th, anchors))
        if rep.permutation is None:
            raise StitchError(f"matching failed for partition {i}")
        if rep.repaired:
            log.warning("partition %d: duplicate matches repaired greedily", i)
        psis.append(rep.permutation)
        reports.append(rep)

    merged = {}
    anchor_sum = {v: 0.0 for v in anchor_vars}
    for th, psi in zip(partition_thetas, psis):
        for v, theta in th.items():
            aligned = apply_permutation(psi, theta)
            if v in anchor_sum:
                anchor_sum[v] = anchor_sum[v] + aligned
            elif v in merged:
                raise StitchError(f"variable {v} estimated by more than one partition")
            else:
                merged[v] = aligned
    for v in anchor_vars:
        # a mean of column-stochastic matrices is column-stochastic already
        merged[v] = anchor_sum[v] / len(partition_thetas)
    return merged, psis, reports


def stitch(partition_thetas, anchors, matcher="procrustes", alpha0=None):
    """Aligned parameters for every variable as a :class:`ModelParams`."""
    merged, _, _ = stitch_details(partition_thetas, anchors, matcher)
    return ModelParams([merged[v] for v in sorted(merged)], alpha0=alpha0)


def fit_partitioned(source, k, alpha0, plan, opts=None, matcher="procrustes",
                    restarts=3, workers=None):
    """Estimate all parameter matrices by partitioned factorization.

    ``source`` is a :class:`Dataset` (empirical block estimators) or a
    :class:`ModelParams` with ``alpha`` (exact population block tensors).
    Partitions are factorized concurrently on up to ``workers`` threads;
    results do not depend on the worker count.
    """
    opts = opts or FactorizeOptions()
    if source.p != plan.p:
        raise ArgumentError(f"plan is for p={plan.p}, data has p={source.p}")
    categories = source.categories
    for m, s in enumerate(plan.anchors):
        if sum(categories[v] for v in s) < k:
            raise PlanError(f"anchor set {m} has fewer than k={k} category rows")

    def run(part):
        return factorize_partition(source, part, k, alpha0, opts, restarts)

    if workers == 1 or plan.r == 1:
        outputs = [run(part) for part in plan.partitions]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(run, plan.partitions))

    part_thetas = [o[0] for o in outputs]
    merged, psis, reports = stitch_details(part_thetas, plan.anchors, matcher)

    ref = anchor_matrix(part_thetas[0], plan.anchors)
    sv = np.linalg.svd(ref, compute_uv=False)
    if sv[-1] <= 1e-6:
        log.warning("anchor matrix is close to rank deficient (sigma_k=%.3g)", sv[-1])
    checks = [True]
    for i in range(1, plan.r):
        ok = check_procrustes_bound(anchor_matrix(part_thetas[i], plan.anchors), ref, psis[i])
        if not ok:
            log.info("partition %d: Procrustes sufficient condition not met", i)
        checks.append(bool(ok))

    params = ModelParams([merged[v] for v in range(plan.p)], alpha0=alpha0)
    weights = [o[1][psi] for o, psi in zip(outputs, psis)]
    return FitResult(
        params=params,
        reports=reports,
        converged=[bool(o[3]) for o in outputs],
        anchor_matrix=ref,
        permutations=psis,
        weights=weights,
        objectives=[float(o[2]) for o in outputs],
        bound_checks=checks,
    )
