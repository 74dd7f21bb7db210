"""Dense third-order tensor algebra.

Tensors are plain ``float64`` numpy arrays of shape ``(d1, d2, d3)``. The
mode-``m`` unfolding places the mode-``m`` index on the rows; the remaining two
indices are serialized in ascending mode order with the earlier one varying
fastest, so that for a Kruskal tensor

    unfold(T, 1) == A @ khatri_rao(C, B).T
    unfold(T, 2) == B @ khatri_rao(C, A).T
    unfold(T, 3) == C @ khatri_rao(B, A).T
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ArgumentError

# axis order used to bring the unfolded mode first followed by the
# slow-varying then fast-varying remaining modes
_UNFOLD_AXES = {1: (0, 2, 1), 2: (1, 2, 0), 3: (2, 1, 0)}


def as_tensor3(T):
    """Validate and convert to a finite ``float64`` 3-way array."""
    T = np.asarray(T, dtype=np.float64)
    if T.ndim != 3:
        raise ArgumentError(f"expected a 3-way array, got ndim={T.ndim}")
    if min(T.shape) < 1:
        raise ArgumentError(f"tensor dimensions must be positive, got {T.shape}")
    if not np.all(np.isfinite(T)):
        raise ArgumentError("tensor contains NaN or Inf")
    return T


@dataclass
class KruskalFactors:
    """CP factors ``A`` (d1 x r), ``B`` (d2 x r), ``C`` (d3 x r) with weights."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=np.float64))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=np.float64))
        r = self.A.shape[1]
        if r < 1 or self.B.shape[1] != r or self.C.shape[1] != r:
            raise ArgumentError(
                "factor matrices must share a positive column count, got "
                f"{self.A.shape[1]}, {self.B.shape[1]}, {self.C.shape[1]}"
            )
        if self.weights is None:
            self.weights = np.ones(r)
        else:
            self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
            if self.weights.shape != (r,):
                raise ArgumentError(f"weights must have length {r}")

    @property
    def rank(self):
        return self.A.shape[1]

    @property
    def shape(self):
        return (self.A.shape[0], self.B.shape[0], self.C.shape[0])


def outer3(u, v, w):
    """Three-way outer product ``u x v x w``."""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    return u[:, None, None] * v[None, :, None] * w[None, None, :]


def _check_mode(mode):
    if mode not in (1, 2, 3):
        raise ArgumentError(f"mode must be 1, 2 or 3, got {mode!r}")


def unfold(T, mode):
    """Mode-``mode`` matricization (modes are 1-based)."""
    _check_mode(mode)
    T = np.asarray(T, dtype=np.float64)
    if T.ndim != 3:
        raise ArgumentError(f"expected a 3-way array, got ndim={T.ndim}")
    P = T.transpose(_UNFOLD_AXES[mode])
    return np.ascontiguousarray(P).reshape(P.shape[0], -1)


def fold(M, mode, dims):
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    _check_mode(mode)
    M = np.asarray(M, dtype=np.float64)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ArgumentError(f"dims must have three entries, got {dims}")
    axes = _UNFOLD_AXES[mode]
    permuted = tuple(dims[a] for a in axes)
    if M.ndim != 2 or M.shape != (permuted[0], permuted[1] * permuted[2]):
        raise ArgumentError(
            f"matrix of shape {M.shape} cannot fold to {dims} along mode {mode}"
        )
    return M.reshape(permuted).transpose(np.argsort(axes)).copy()


def khatri_rao(X, Y):
    """Column-wise Kronecker product; ``Y``'s row index varies fastest."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Y.shape[1]:
        raise ArgumentError(
            f"column counts differ: {X.shape[1]} vs {Y.shape[1]}"
        )
    return (X[:, None, :] * Y[None, :, :]).reshape(-1, X.shape[1])


def kruskal_to_dense(F):
    """Dense tensor ``sum_h w_h A_h x B_h x C_h``."""
    return np.einsum("h,ih,jh,lh->ijl", F.weights, F.A, F.B, F.C)


def frobenius_distance(T1, T2):
    T1 = np.asarray(T1, dtype=np.float64)
    T2 = np.asarray(T2, dtype=np.float64)
    if T1.shape != T2.shape:
        raise ArgumentError(f"shape mismatch: {T1.shape} vs {T2.shape}")
    return float(np.linalg.norm((T1 - T2).ravel()))
