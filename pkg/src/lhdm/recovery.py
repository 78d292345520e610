"""Sparse recovery on top of the NNLS solvers.

Signed solutions come from the positivity trick (NNLS on ``(A, -A)``);
the squared-l1 regularized problem is recast as one NNLS on an augmented
matrix.  Coherence and the exact recovery condition certify when the
planted sparse solution is the one a solver should return.  OMP is the
greedy baseline.
"""
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_triangular

from .dense import DenseMatrix, as_dense, as_vector, positivity_trick
from .dm import cosine_matrix
from .errors import NonpositiveLambda, RankDeficientSupport, SingularUpdate
from .qr import QRWorkspace
from .solvers import SolverConfig, lh_solve, lhdm_solve

DEFAULT_LAMBDAS = (1e1, 1e2, 1e3, 1e4)


@dataclass
class SignedSolveResult:
    x_signed: np.ndarray
    support: list
    nnls_report: object = None
    iterations: int = 0
    residual_norm: float = 0.0


@dataclass(frozen=True)
class RecoveryDiagnostics:
    coherence: float
    erc_value: float
    erc_holds: bool
    coherence_uniqueness_bound: float

    @property
    def coherence_certified(self):
        return self.coherence < self.coherence_uniqueness_bound

    @property
    def certified_unique(self):
        return self.erc_holds and self.coherence_certified


def support_of(x, support_tolerance=None):
    x = np.asarray(x, dtype=float)
    if support_tolerance is None:
        support_tolerance = 1e-8 * float(np.max(np.abs(x))) if x.size else 0.0
    return [int(i) for i in np.flatnonzero(np.abs(x) > support_tolerance)]


def _split(x_pt, n):
    return x_pt[:n] - x_pt[n:]


def positivity_trick_solve(A, b, cfg=None, method="lhdm", sign_flip=True,
                           support_tolerance=None):
    """Signed least squares through NNLS on the doubled matrix ``(A, -A)``."""
    A = as_dense(A)
    b = as_vector(b, A.m)
    cfg = replace(cfg or SolverConfig(), sign_flip_enabled=sign_flip)
    solve = {"lhdm": lhdm_solve, "lh": lh_solve}[method]
    report = solve(positivity_trick(A), b, cfg)
    x = _split(report.x_star, A.n)
    return SignedSolveResult(x, support_of(x, support_tolerance), report,
                             report.outer_iterations, report.residual_norm)


def l1_nnls_assemble(A, b, lam):
    """Augmented NNLS data for ``min ||x||_1^2 + lam^2 ||Ax - b||^2``.

    Returns the ``(m + 1) x 2n`` matrix ``[[1 ... 1], [lam A, -lam A]]``
    and the right-hand side ``(0, lam b)``.
    """
    if not lam > 0:
        raise NonpositiveLambda(f"lambda must be positive, got {lam}")
    A = as_dense(A).array
    b = as_vector(b, A.shape[0])
    n = A.shape[1]
    M = np.empty((A.shape[0] + 1, 2 * n), order="F")
    M[0, :] = 1.0
    M[1:, :n] = lam * A
    M[1:, n:] = -lam * A
    rhs = np.concatenate(([0.0], lam * b))
    return DenseMatrix(M), rhs


def l1_nnls_solve(A, b, lam, cfg=None, support_tolerance=None):
    M, rhs = l1_nnls_assemble(A, b, lam)
    report = lhdm_solve(M, rhs, cfg)
    x = _split(report.x_star, as_dense(A).n)
    return SignedSolveResult(x, support_of(x, support_tolerance), report,
                             report.outer_iterations, report.residual_norm)


def is_m_plus_witness(M, h):
    """True when ``M^T h > 0`` componentwise."""
    return bool(np.all(np.asarray(M, dtype=float).T @ np.asarray(h, dtype=float) > 0))


def mutual_coherence(A):
    """Largest |cosine| between two distinct columns of ``A``."""
    theta = cosine_matrix(np.asarray(A, dtype=float))
    if theta.shape[0] < 2:
        return 0.0
    off = np.abs(theta[~np.eye(theta.shape[0], dtype=bool)])
    return float(off.max())


def erc_value(A, S):
    """``max_{i not in S} ||pinv(A_S) a_i||_1`` through a QR of ``A_S``."""
    A = as_dense(A)
    S = [int(i) for i in S]
    ws = QRWorkspace(A, np.zeros(A.m))
    try:
        ws.append(S)
    except SingularUpdate as exc:
        raise RankDeficientSupport(f"A_S is rank deficient at column {exc.index}") from None
    if ws.ns == A.n:
        return 0.0
    coef = solve_triangular(ws.R, ws.B, lower=False, check_finite=False)
    return float(np.abs(coef).sum(axis=0).max())


def erc_check(A, S):
    value = erc_value(A, S)
    return value, value < 1.0


def coherence_uniqueness(mu, s):
    """Whether coherence ``mu`` certifies uniqueness of an ``s``-sparse solution."""
    if s < 1:
        raise ValueError("sparsity must be >= 1")
    return mu < 1.0 / (2 * s - 1)


def max_certified_sparsity(mu):
    """Largest ``s`` with ``mu < 1 / (2s - 1)`` (0 if none)."""
    if mu <= 0:
        return np.inf
    s = int(np.floor((1.0 / mu + 1.0) / 2.0))
    while s >= 1 and not coherence_uniqueness(mu, s):
        s -= 1
    return s


def diagnose(A, S):
    mu = mutual_coherence(A)
    value, holds = erc_check(A, S)
    s = max(len(S), 1)
    return RecoveryDiagnostics(mu, value, holds, 1.0 / (2 * s - 1))


def omp_solve(A, b, max_support=None, residual_tolerance=None, support_tolerance=None):
    """Orthogonal matching pursuit.

    Each step adds the column most correlated with the residual (after
    normalization) and re-solves least squares on the support through the
    incremental QR.  Stops when ``||r|| <= residual_tolerance`` (default
    ``1e-10 ||b||``), the support reaches ``max_support`` (default ``m``)
    or the next column is numerically dependent.
    """
    A = as_dense(A)
    b = as_vector(b, A.m)
    Aa = A.array
    m, n = A.shape
    if max_support is None:
        max_support = min(m, n)
    if residual_tolerance is None:
        residual_tolerance = 1e-10 * float(np.linalg.norm(b))
    norms = np.linalg.norm(Aa, axis=0)
    x = np.zeros(n)
    r = b.copy()
    ws = QRWorkspace(A, b)
    iterations = 0
    while ws.ns < max_support and np.linalg.norm(r) > residual_tolerance:
        score = np.abs(Aa.T @ r) / np.where(norms > 0, norms, np.inf)
        score[ws.passive] = -1.0
        j = int(np.argmax(score))
        if score[j] <= 0:
            break
        try:
            ws.append([j])
        except SingularUpdate:
            break
        iterations += 1
        x[:] = 0.0
        x[ws.passive] = ws.solve()
        r = b - Aa @ x
    return SignedSolveResult(x, support_of(x, support_tolerance), None, iterations,
                             float(np.linalg.norm(r)))
