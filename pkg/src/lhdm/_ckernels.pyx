# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled QR kernels; same contracts as ``lhdm._kernels``."""
from libc.math cimport sqrt, fabs, hypot
from scipy.linalg.cython_blas cimport dgemm, dgemv, dtrmm, dtrmv, drot, ddot

import numpy as np

NAME = "compiled"


def householder_panel(double[::1, :] P, double[::1, :] V, double[::1] betas,
                      double tol):
    cdef int rows = P.shape[0], k = P.shape[1]
    cdef int i, j, r, ld = rows
    cdef double alpha, sigma, nrm, diag, v0, beta, dot
    for i in range(k):
        if i >= rows:
            return i
        alpha = P[i, i]
        sigma = 0.0
        for r in range(i + 1, rows):
            sigma += P[r, i] * P[r, i]
        V[i, i] = 1.0
        if sigma == 0.0:
            beta = 0.0
            for r in range(i + 1, rows):
                V[r, i] = 0.0
            diag = alpha
        else:
            nrm = sqrt(alpha * alpha + sigma)
            diag = -nrm if alpha >= 0.0 else nrm
            v0 = alpha - diag
            for r in range(i + 1, rows):
                V[r, i] = P[r, i] / v0
            beta = -v0 / diag
        if fabs(diag) <= tol:
            return i
        betas[i] = beta
        if beta != 0.0:
            for j in range(i + 1, k):
                dot = P[i, j]
                for r in range(i + 1, rows):
                    dot += V[r, i] * P[r, j]
                dot *= beta
                P[i, j] -= dot
                for r in range(i + 1, rows):
                    P[r, j] -= dot * V[r, i]
        P[i, i] = diag
        for r in range(i + 1, rows):
            P[r, i] = 0.0
    return -1


def apply_block_reflectors(double[::1, :] V, double[::1] betas,
                           double[::1, :] W, double[::1] b,
                           int row0, int col0):
    cdef int rows = V.shape[0], k = betas.shape[0]
    cdef int ldv = rows, ldw = W.shape[0]
    cdef int p = W.shape[1] - col0
    cdef int i, j, one = 1
    cdef double d_one = 1.0, d_zero = 0.0, d_mone = -1.0, nb
    if k == 0:
        return
    cdef double[::1, :] T = np.zeros((k, k), order="F")
    cdef double[::1] tmp = np.zeros(k)
    # T[:i, i] = -beta_i * T[:i, :i] @ (V[:, :i]^T v_i)
    for i in range(k):
        T[i, i] = betas[i]
        if i:
            dgemv(b"T", &rows, &i, &d_one, &V[0, 0], &ldv, &V[0, i], &one,
                  &d_zero, &T[0, i], &one)
            dtrmv(b"U", b"N", b"N", &i, &T[0, 0], &k, &T[0, i], &one)
            nb = -betas[i]
            for j in range(i):
                T[j, i] *= nb
    cdef double[::1, :] Y
    if p > 0:
        Y = np.empty((k, p), order="F")
        dgemm(b"T", b"N", &k, &p, &rows, &d_one, &V[0, 0], &ldv,
              &W[row0, col0], &ldw, &d_zero, &Y[0, 0], &k)
        dtrmm(b"L", b"U", b"T", b"N", &k, &p, &d_one, &T[0, 0], &k,
              &Y[0, 0], &k)
        dgemm(b"N", b"N", &rows, &p, &k, &d_mone, &V[0, 0], &ldv,
              &Y[0, 0], &k, &d_one, &W[row0, col0], &ldw)
    dgemv(b"T", &rows, &k, &d_one, &V[0, 0], &ldv, &b[row0], &one,
          &d_zero, &tmp[0], &one)
    dtrmv(b"U", b"T", b"N", &k, &T[0, 0], &k, &tmp[0], &one)
    dgemv(b"N", &rows, &k, &d_mone, &V[0, 0], &ldv, &tmp[0], &one,
          &d_one, &b[row0], &one)


def downdate_sweep(double[::1, :] W, double[::1] b, int nkeep,
                   long[::1] sub, long[::1] rot_rows, double[::1] rot_c,
                   double[::1] rot_s):
    cdef int ncols = W.shape[1], ld = W.shape[0]
    cdef int j, r, t = 0, cnt
    cdef double a, z, rho, c, s, bt, bb
    for j in range(nkeep):
        r = j + <int>sub[j]
        while r > j:
            a = W[r - 1, j]
            z = W[r, j]
            rho = hypot(a, z)
            if rho == 0.0:
                c = 1.0
                s = 0.0
            else:
                c = a / rho
                s = z / rho
            cnt = ncols - j - 1
            if cnt > 0:
                drot(&cnt, &W[r - 1, j + 1], &ld, &W[r, j + 1], &ld, &c, &s)
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
            r -= 1
    return t


def back_substitute(double[::1, :] W, double[::1] rhs, int ns,
                    double[::1] out):
    cdef int i, j
    cdef double acc
    for i in range(ns - 1, -1, -1):
        acc = rhs[i]
        for j in range(i + 1, ns):
            acc -= W[i, j] * out[j]
        out[i] = acc / W[i, i]


def sq_column_norms(double[::1, :] W, int row0, int col0, double[::1] out):
    cdef int rows = W.shape[0] - row0, one = 1
    cdef int j
    for j in range(col0, W.shape[1]):
        out[j - col0] = ddot(&rows, &W[row0, j], &one, &W[row0, j], &one)
