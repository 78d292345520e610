"""Pure NumPy implementation of the hot QR kernels.

Every function here has a twin with the same signature in the compiled
``_ckernels`` extension; ``lhdm._backend`` picks one at import time.
All 2-D arrays are Fortran-ordered float64 and are modified in place.
"""
import math

import numpy as np
from scipy.linalg import solve_triangular

NAME = "python"


def householder_panel(P, V, betas, tol):
    """Triangularize the panel ``P`` with Householder reflectors.

    ``P`` (rows x k) is overwritten by its R factor, ``V`` receives the
    reflector vectors (unit leading entry) and ``betas`` the scalars.
    Returns the position of the first column whose diagonal magnitude is
    ``<= tol`` (work stops there), or -1 when all columns are safe.
    """
    rows, k = P.shape
    for i in range(k):
        if i >= rows:
            return i
        x = P[i:, i]
        alpha = x[0]
        sigma = float(x[1:] @ x[1:])
        v = V[i:, i]
        v[0] = 1.0
        if sigma == 0.0:
            beta = 0.0
            v[1:] = 0.0
            diag = alpha
        else:
            norm = math.sqrt(alpha * alpha + sigma)
            diag = -norm if alpha >= 0.0 else norm
            v0 = alpha - diag
            v[1:] = x[1:] / v0
            beta = -v0 / diag
        if abs(diag) <= tol:
            return i
        betas[i] = beta
        if beta != 0.0 and i + 1 < k:
            rest = P[i:, i + 1:]
            rest -= np.outer(v, beta * (v @ rest))
        P[i, i] = diag
        P[i + 1:, i] = 0.0
    return -1


def _wy_factor(V, betas):
    k = betas.shape[0]
    T = np.zeros((k, k), order="F")
    for i in range(k):
        T[i, i] = betas[i]
        if i:
            T[:i, i] = -betas[i] * (T[:i, :i] @ (V[:, :i].T @ V[:, i]))
    return T


def apply_block_reflectors(V, betas, W, b, row0, col0):
    """Apply ``H_k ... H_1`` to ``W[row0:, col0:]`` and ``b[row0:]``."""
    if betas.shape[0] == 0:
        return
    T = _wy_factor(V, betas)
    if col0 < W.shape[1]:
        C = W[row0:, col0:]
        C -= V @ (T.T @ (V.T @ C))
    rhs = b[row0:]
    rhs -= V @ (T.T @ (V.T @ rhs))


def downdate_sweep(W, b, nkeep, sub, rot_rows, rot_c, rot_s):
    """Restore triangular form after deleting columns, column by column.

    Column ``j < nkeep`` carries ``sub[j]`` nonzero subdiagonal entries;
    they are annihilated bottom-up with rotations on adjacent rows, which
    are applied to every column from ``j`` on and to ``b``. Rotation ``t``
    acts on rows ``(rot_rows[t], rot_rows[t] + 1)``. Returns the count.
    """
    t = 0
    for j in range(nkeep):
        for r in range(j + sub[j], j, -1):
            a = W[r - 1, j]
            z = W[r, j]
            rho = math.hypot(a, z)
            if rho == 0.0:
                c, s = 1.0, 0.0
            else:
                c, s = a / rho, z / rho
            top = W[r - 1, j + 1:].copy()
            bot = W[r, j + 1:]
            W[r - 1, j + 1:] = c * top + s * bot
            W[r, j + 1:] = c * bot - s * top
            W[r - 1, j] = rho
            W[r, j] = 0.0
            bt = b[r - 1]
            bb = b[r]
            b[r - 1] = c * bt + s * bb
            b[r] = c * bb - s * bt
            rot_rows[t] = r - 1
            rot_c[t] = c
            rot_s[t] = s
            t += 1
    return t


def back_substitute(W, rhs, ns, out):
    if ns:
        out[:ns] = solve_triangular(W[:ns, :ns], rhs[:ns], lower=False,
                                    check_finite=False)


def sq_column_norms(W, row0, col0, out):
    C = W[row0:, col0:]
    out[:] = np.einsum("ij,ij->j", C, C)
