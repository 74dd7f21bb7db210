"""Hot numeric loops.

Each kernel exists twice: a numba-compiled version and a pure-numpy version.
The public wrappers dispatch on :func:`mixmom._accel.backend`. The numpy
versions are the reference; the compiled ones must agree with them to
floating-point round-off (exactly, for count accumulation).
"""

import numpy as np

from . import _accel
from ._accel import njit

# --------------------------------------------------------------------------
# Moment accumulation
#
# An observation block is described per mode by two (n, m) arrays: ``rows``
# holds the row of the stacked encoding that is active for each of the m
# variables, ``vals`` the value written there (1.0 for a category indicator,
# the raw value for a scalar variable).
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _pair_sums_nb(ra, va, rb, vb, da, db):
    out = np.zeros((da, db))
    for i in range(ra.shape[0]):
        for a in range(ra.shape[1]):
            ia = ra[i, a]
            xa = va[i, a]
            for b in range(rb.shape[1]):
                out[ia, rb[i, b]] += xa * vb[i, b]
    return out


@njit(cache=True, nogil=True)
def _triple_sums_nb(ra, va, rb, vb, rc, vc, da, db, dc):
    out = np.zeros((da, db, dc))
    for i in range(ra.shape[0]):
        for a in range(ra.shape[1]):
            ia = ra[i, a]
            xa = va[i, a]
            for b in range(rb.shape[1]):
                ib = rb[i, b]
                xab = xa * vb[i, b]
                for c in range(rc.shape[1]):
                    out[ia, ib, rc[i, c]] += xab * vc[i, c]
    return out


def _design(rows, vals, dim):
    n = rows.shape[0]
    out = np.zeros((n, dim))
    r = np.repeat(np.arange(n), rows.shape[1])
    # variables in one mode never share a row, so plain assignment suffices
    out[r, rows.ravel()] = vals.ravel()
    return out


def _pair_sums_np(ra, va, rb, vb, da, db):
    return _design(ra, va, da).T @ _design(rb, vb, db)


def _triple_sums_np(ra, va, rb, vb, rc, vc, da, db, dc, chunk=4096):
    out = np.zeros((da, db * dc))
    for lo in range(0, ra.shape[0], chunk):
        sl = slice(lo, lo + chunk)
        xa = _design(ra[sl], va[sl], da)
        xb = _design(rb[sl], vb[sl], db)
        xc = _design(rc[sl], vc[sl], dc)
        # row-wise Kronecker with the later mode varying slowest
        kr = (xc[:, :, None] * xb[:, None, :]).reshape(xa.shape[0], dc * db)
        out += xa.T @ kr
    return out.reshape(da, dc, db).transpose(0, 2, 1).copy()


def pair_sums(ra, va, rb, vb, da, db):
    """Sum over samples of the outer product of two stacked encodings."""
    if _accel.backend() == "numba":
        return _pair_sums_nb(ra, va, rb, vb, da, db)
    return _pair_sums_np(ra, va, rb, vb, da, db)


def triple_sums(ra, va, rb, vb, rc, vc, da, db, dc):
    """Sum over samples of the three-way outer product of stacked encodings."""
    if _accel.backend() == "numba":
        return _triple_sums_nb(ra, va, rb, vb, rc, vc, da, db, dc)
    return _triple_sums_np(ra, va, rb, vb, rc, vc, da, db, dc)


# --------------------------------------------------------------------------
# Alternating PQP sweeps for the nonnegative CP factorization
# --------------------------------------------------------------------------


def _pqp_sweeps(M1, M2, M3, A, B, C, max_iters, rel_tol, eps):
    k = A.shape[1]
    trace = np.empty(max_iters + 1)
    kr = (C[:, None, :] * B[None, :, :]).reshape(C.shape[0] * B.shape[0], k)
    trace[0] = np.sqrt(np.sum((M1 - A @ kr.T) ** 2))
    converged = False
    n_iters = 0
    eye = np.eye(k)
    for it in range(max_iters):
        change = 0.0
        for mode in range(3):
            if mode == 0:
                X, Y1, Y2, M = A, C, B, M1
            elif mode == 1:
                X, Y1, Y2, M = B, C, A, M2
            else:
                X, Y1, Y2, M = C, B, A, M3
            Q = (Y1.T @ Y1) * (Y2.T @ Y2)
            kr = (Y1[:, None, :] * Y2[None, :, :]).reshape(Y1.shape[0] * Y2.shape[0], k)
            Z = -(M @ kr)

            tr = np.trace(Q)
            if tr > 0.0:
                lam = np.linalg.eigvalsh(Q)[0]
                Qr = Q
                if lam <= 1e-12 * tr / k:
                    Qr = Q + (1e-10 * tr / k) * eye
                    lam = np.linalg.eigvalsh(Qr)[0]
                sol = np.linalg.solve(Qr, np.ascontiguousarray(Z.T))
                quad = np.maximum(np.sum(Z * sol.T, axis=1), 0.0)
                phi = np.outer(np.sqrt(quad / lam), np.diag(Q).copy())
                phi = np.maximum(phi - np.abs(Z), 0.0) / 2.0 + eps
            else:
                phi = np.full(Z.shape, eps)

            Xn = X * (np.maximum(-Z, 0.0) + phi) / (X @ Q + np.maximum(Z, 0.0) + phi)
            nrm = np.sqrt(np.sum(Xn**2))
            if nrm > 0.0:
                change = max(change, np.sqrt(np.sum((Xn - X) ** 2)) / nrm)
            if mode == 0:
                A = Xn
            elif mode == 1:
                B = Xn
            else:
                C = Xn

        kr = (C[:, None, :] * B[None, :, :]).reshape(C.shape[0] * B.shape[0], k)
        trace[it + 1] = np.sqrt(np.sum((M1 - A @ kr.T) ** 2))
        n_iters = it + 1
        if change < rel_tol:
            converged = True
            break
    return A, B, C, trace[: n_iters + 1].copy(), n_iters, converged


_pqp_sweeps_nb = njit(cache=True, nogil=True)(_pqp_sweeps)


def pqp_sweeps(M1, M2, M3, A, B, C, max_iters, rel_tol, eps):
    """Run alternating PQP factor updates on pre-unfolded, pre-scaled data.

    Returns ``(A, B, C, trace, n_iters, converged)`` where ``trace[0]`` is the
    objective at the initial factors and ``trace[i]`` after sweep ``i``.
    """
    args = (
        np.ascontiguousarray(M1, dtype=np.float64),
        np.ascontiguousarray(M2, dtype=np.float64),
        np.ascontiguousarray(M3, dtype=np.float64),
        np.ascontiguousarray(A, dtype=np.float64),
        np.ascontiguousarray(B, dtype=np.float64),
        np.ascontiguousarray(C, dtype=np.float64),
        int(max_iters),
        float(rel_tol),
        float(eps),
    )
    if _accel.backend() == "numba":
        return _pqp_sweeps_nb(*args)
    return _pqp_sweeps(*args)
