"""Multiplicative-update solvers under nonnegativity constraints.

The core is the parallel quadratic programming (PQP) update for

    minimize 1/2 x'Qx + z'x   subject to x >= 0,

whose row-wise application to CP factor matrices gives a nonnegative
factorization that tolerates negative entries in the target tensor.
Weighted NMF (and Lee-Seung NMF as the all-ones mask case) is included both
as a baseline and because it is a special case of PQP.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import _rng, kernels
from .exceptions import ArgumentError, SolverError
from .tensor import KruskalFactors, as_tensor3, khatri_rao, kruskal_to_dense, unfold


@dataclass
class QuadProgram:
    """Nonnegative QP data with PQP splitting arguments ``gamma`` and ``phi``."""

    Q: np.ndarray
    z: np.ndarray
    gamma: np.ndarray = None
    phi: np.ndarray = None

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=np.float64))
        self.z = np.asarray(self.z, dtype=np.float64).reshape(-1)
        m = self.z.size
        if self.Q.shape != (m, m):
            raise ArgumentError(f"Q must be {m} x {m}, got {self.Q.shape}")
        if not np.allclose(self.Q, self.Q.T, rtol=0, atol=1e-10):
            raise ArgumentError("Q must be symmetric")
        if self.gamma is None:
            self.gamma = np.maximum(-self.Q, 0).sum(axis=1)
        self.gamma = np.broadcast_to(np.asarray(self.gamma, dtype=np.float64), (m,)).copy()
        if np.any(self.gamma < 0):
            raise ArgumentError("gamma must be nonnegative")
        if self.phi is None:
            self.phi = pqp_phi(self.Q, self.z[None, :])[0]
        self.phi = np.broadcast_to(np.asarray(self.phi, dtype=np.float64), (m,)).copy()
        if np.any(self.phi <= 0):
            raise ArgumentError("phi must be strictly positive")

    def objective(self, x):
        return float(0.5 * x @ self.Q @ x + self.z @ x)


@dataclass
class FactorizeOptions:
    max_iters: int = 500
    rel_tol: float = 1e-6
    epsilon: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ArgumentError("max_iters must be positive")
        if not self.rel_tol > 0 or not self.epsilon > 0:
            raise ArgumentError("rel_tol and epsilon must be positive")


@dataclass
class NQPResult:
    x: np.ndarray
    converged: bool
    n_iters: int
    objective: list = field(default_factory=list)


@dataclass
class FactorizeResult:
    """Outcome of :func:`factorize`.

    ``factors`` have unit column sums; the scale removed from each column
    (including the tensor pre-scaling) is in ``factors.weights``.
    ``objective`` holds the Frobenius residual, in the units of the input
    tensor, at the initial factors and after every sweep.
    """

    factors: KruskalFactors
    converged: bool
    n_iters: int
    objective: np.ndarray

    @property
    def final_objective(self):
        return float(self.objective[-1])


def pqp_step(x, qp):
    """One PQP multiplicative update ``x * (Q-x + z-) / (Q+x + z+)``."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ArgumentError("PQP iterate must be nonnegative")
    diag = np.diag(qp.gamma)
    q_pos = np.maximum(qp.Q, 0) + diag
    q_neg = np.maximum(-qp.Q, 0) + diag
    z_pos = np.maximum(qp.z, 0) + qp.phi
    z_neg = np.maximum(-qp.z, 0) + qp.phi
    den = q_pos @ x + z_pos
    if np.any(den <= 0):
        raise SolverError("zero denominator in PQP update")
    return x * (q_neg @ x + z_neg) / den


def _regularized(Q):
    k = Q.shape[0]
    tr = np.trace(Q)
    lam = np.linalg.eigvalsh(Q)[0]
    if lam <= 1e-12 * tr / k:
        Q = Q + (1e-10 * tr / k) * np.eye(k)
        lam = np.linalg.eigvalsh(Q)[0]
    if not lam > 0:
        raise SolverError("Q is singular after regularization")
    return Q, lam


def pqp_phi(Q, Z, eps=1e-10):
    """Per-entry ``phi`` satisfying the linear-convergence condition.

    ``Z`` holds one linear term per row; the result has the shape of ``Z``
    and is strictly positive. A nearly singular ``Q`` is ridge-regularized
    before inversion.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if Z.shape[1] != Q.shape[0]:
        raise ArgumentError("Z must have one column per row of Q")
    if not np.any(Z):
        return np.full(Z.shape, eps)
    Qr, lam = _regularized(Q)
    quad = np.maximum(np.einsum("ij,ji->i", Z, np.linalg.solve(Qr, Z.T)), 0.0)
    phi = np.outer(np.sqrt(quad / lam), np.diag(Q))
    return np.maximum(phi - np.abs(Z), 0.0) / 2 + eps


def solve_nqp(qp, opts=None, x0=None):
    """Iterate :func:`pqp_step` from a positive start until the iterate settles.

    Stops when the largest coordinate change relative to the largest
    coordinate falls below ``opts.rel_tol``; otherwise returns the last
    iterate with ``converged=False``.
    """
    opts = opts or FactorizeOptions()
    m = qp.z.size
    x = np.ones(m) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    if np.any(x <= 0):
        raise ArgumentError("starting point must be strictly positive")
    history = [qp.objective(x)]
    for it in range(1, opts.max_iters + 1):
        xn = pqp_step(x, qp)
        history.append(qp.objective(xn))
        scale = max(np.max(np.abs(xn)), np.finfo(float).tiny)
        done = np.max(np.abs(xn - x)) <= opts.rel_tol * scale
        x = xn
        if done:
            return NQPResult(x, True, it, history)
    return NQPResult(x, False, opts.max_iters, history)


def wnmf_step(W, H, Y, Omega, eps):
    """One weighted-NMF sweep: update ``W`` then ``H`` (using the new ``W``).

    Entries with ``Omega == 0`` are ignored. With ``Omega`` masking every
    negative entry of ``Y`` the masked objective is non-increasing and the
    factors stay nonnegative; ``Omega`` of all ones gives Lee-Seung updates.
    """
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    Om = np.asarray(Omega, dtype=np.float64)
    Yw = Om * np.asarray(Y, dtype=np.float64)
    W = W * (Yw @ H.T + eps) / ((Om * (W @ H)) @ H.T + eps)
    H = H * (W.T @ Yw + eps) / (W.T @ (Om * (W @ H)) + eps)
    return W, H


def wnmf_objective(W, H, Y, Omega):
    return float(np.sum((np.asarray(Omega) * (np.asarray(Y) - W @ H)) ** 2))


def _pqp_rows(X, Qs, Zs, phi):
    out = np.empty_like(X)
    for u in range(X.shape[0]):
        qp = QuadProgram(Qs[u], Zs[u], gamma=0.0, phi=phi[u])
        out[u] = pqp_step(X[u], qp)
    return out


def pqp_wnmf_sweep(W, H, Y, Omega, phi_w, phi_h):
    """Weighted-NMF sweep computed as independent per-row/column PQP problems."""
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    lam = np.asarray(Omega, dtype=np.float64) ** 2
    # row u of W: minimize |lam_u * (y_u - w_u H)|^2
    Qs = [H @ (lam[u][:, None] * H.T) for u in range(W.shape[0])]
    Zs = [-(H @ (lam[u] * Y[u])) for u in range(W.shape[0])]
    W = _pqp_rows(W, Qs, Zs, np.broadcast_to(phi_w, W.shape))
    # column v of H: minimize |lam_v * (y_v - W h_v)|^2
    Qs = [W.T @ (lam[:, v][:, None] * W) for v in range(H.shape[1])]
    Zs = [-(W.T @ (lam[:, v] * Y[:, v])) for v in range(H.shape[1])]
    Ht = _pqp_rows(H.T, Qs, Zs, np.broadcast_to(phi_h, H.T.shape))
    return W, Ht.T.copy()


def pqp_matches_wnmf(W, H, Y, Omega, eps, phi=None, atol=1e-12):
    """Whether a PQP sweep with ``gamma = 0`` reproduces :func:`wnmf_step`.

    ``phi`` defaults to ``eps`` everywhere, the setting under which the two
    coincide; pass anything else as a negative control.
    """
    phi = eps if phi is None else phi
    Wa, Ha = wnmf_step(W, H, Y, Omega, eps)
    Wb, Hb = pqp_wnmf_sweep(W, H, Y, Omega, phi, phi)
    scale = max(1.0, np.max(np.abs(Wa)), np.max(np.abs(Ha)))
    return bool(
        np.allclose(Wa, Wb, rtol=0, atol=atol * scale)
        and np.allclose(Ha, Hb, rtol=0, atol=atol * scale)
    )


def tensor_objective(T, F):
    """Frobenius residual ``|T - [[A, B, C]]|``."""
    T = np.asarray(T, dtype=np.float64)
    if T.shape != F.shape:
        raise ArgumentError(f"tensor shape {T.shape} does not match factors {F.shape}")
    return float(np.linalg.norm((T - kruskal_to_dense(F)).ravel()))


def tensor_pqp_update(M, X, Y1, Y2, mode, eps):
    """Single PQP update of one factor matrix with the other two fixed.

    ``mode`` selects the unfolding: for mode 1 ``X = A`` and ``(Y1, Y2) =
    (C, B)``; mode 2 ``X = B``, ``(C, A)``; mode 3 ``X = C``, ``(B, A)``.
    """
    Q = (Y1.T @ Y1) * (Y2.T @ Y2)
    Z = -unfold(M, mode) @ khatri_rao(Y1, Y2)
    phi = pqp_phi(Q, Z, eps)
    return X * (np.maximum(-Z, 0) + phi) / (X @ Q + np.maximum(Z, 0) + phi)


def factorize(T, k, opts=None, init=None):
    """Nonnegative rank-``k`` CP approximation of a possibly signed tensor.

    The tensor is divided by its largest absolute entry, factors start
    uniform on (0, 1) (or from ``init``), and the three factor matrices are
    updated in turn by row-wise PQP until the largest relative factor change
    in a sweep drops below ``opts.rel_tol``. Columns are then rescaled to
    sum to one.
    """
    T = as_tensor3(T)
    if int(k) != k or k < 1:
        raise ArgumentError(f"rank must be a positive integer, got {k!r}")
    k = int(k)
    opts = opts or FactorizeOptions()
    d1, d2, d3 = T.shape

    if init is None:
        rng = _rng.generator(opts.seed, "factorize-init")
        A, B, C = (rng.random((d, k)) for d in (d1, d2, d3))
    else:
        A, B, C = (np.array(M, dtype=np.float64) for M in (init.A, init.B, init.C))
        if np.any(A <= 0) or np.any(B <= 0) or np.any(C <= 0):
            raise ArgumentError("initial factors must be strictly positive")

    scale = float(np.max(np.abs(T)))
    if scale == 0.0:
        zeros = KruskalFactors(np.full((d1, k), 1 / d1), np.full((d2, k), 1 / d2),
                               np.full((d3, k), 1 / d3), np.zeros(k))
        return FactorizeResult(zeros, True, 0, np.zeros(1))
    M = T / scale

    A, B, C, trace, n_iters, converged = kernels.pqp_sweeps(
        unfold(M, 1), unfold(M, 2), unfold(M, 3), A, B, C,
        opts.max_iters, opts.rel_tol, opts.epsilon,
    )

    weights = np.full(k, scale)
    normed = []
    for X in (A, B, C):
        s = X.sum(axis=0)
        dead = s <= 0
        s = np.where(dead, 1.0, s)
        X = X / s
        X[:, dead] = 1.0 / X.shape[0]
        weights = weights * np.where(dead, 0.0, s)
        normed.append(X)
    factors = KruskalFactors(*normed, weights=weights)
    return FactorizeResult(factors, bool(converged), int(n_iters), np.asarray(trace) * scale)


def with_seed(opts, seed):
    return replace(opts, seed=int(seed))
