"""Active-set NNLS solvers: Lawson-Hanson and its Deviation Maximization variant.

Both solvers share one driver.  They differ only in how columns are
chosen to leave the active set: the standard rule takes the single
largest dual entry, the blocked rule asks :func:`lhdm.dm.dm_select` for a
block of nearly orthogonal columns with large dual values.
"""
import enum
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .dense import EPS, as_dense, as_vector, default_singularity_tolerance
from .dm import DMParams, dm_select
from .errors import (InfeasiblePoint, NoBlockingIndex, NotPositivityTrick,
                     SingularUpdate)
from .qr import QRWorkspace


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    ITERATION_CAP = "IterationCapReached"


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and switches shared by :func:`lh_solve` and :func:`lhdm_solve`.

    ``None`` selects a default scaled to the problem:
    ``dual_tolerance = 10 eps ||A||_F ||b||``,
    ``singularity_tolerance = max(m, n) eps ||A||_F`` and
    ``max_outer_iterations = 10 n``.
    """

    dm: DMParams = field(default_factory=DMParams)
    dual_tolerance: float | None = None
    feasibility_tolerance: float = 0.0
    max_outer_iterations: int | None = None
    sign_flip_enabled: bool = False
    singularity_tolerance: float | None = None
    record_trajectory: bool = False
    backend: str | None = None

    def __post_init__(self):
        if self.dual_tolerance is not None and self.dual_tolerance <= 0:
            raise ValueError("dual_tolerance must be positive")
        if self.feasibility_tolerance < 0:
            raise ValueError("feasibility_tolerance must be nonnegative")
        if self.singularity_tolerance is not None and self.singularity_tolerance <= 0:
            raise ValueError("singularity_tolerance must be positive")
        if self.max_outer_iterations is not None and self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")


@dataclass
class ActiveSetState:
    """Iterates of an active-set solve; ``P`` is in factorization order."""

    P: list
    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    s: int = 0

    @property
    def Z(self):
        passive = set(self.P)
        return [i for i in range(self.x.shape[0]) if i not in passive]


@dataclass
class SolveReport:
    x_star: np.ndarray
    w_star: np.ndarray
    P_star: list
    Z_star: list
    residual_norm: float
    objective_history: list
    outer_iterations: int = 0
    inner_iterations: int = 0
    feasibility_drops: int = 0
    sign_flips: int = 0
    givens_rotations: int = 0
    status: Status = Status.CONVERGED
    wall_time: float = 0.0
    solver: str = ""
    trajectory: list = field(default_factory=list)
    inner_steps: list = field(default_factory=list)

    @property
    def objective(self):
        return self.residual_norm ** 2

    @property
    def converged(self):
        return self.status is Status.CONVERGED


@dataclass(frozen=True)
class KKTReport:
    is_optimal: bool
    max_dual_violation: float
    max_complementarity_violation: float
    w: np.ndarray


def default_dual_tolerance(A, b):
    return 10.0 * EPS * float(np.linalg.norm(A)) * float(np.linalg.norm(b))


def step_length(x_prev, y, P=None, feasibility_tolerance=0.0):
    """Largest step from ``x_prev`` towards ``y`` that stays feasible.

    Only indices in ``P`` (all, when omitted) with ``y_i <= tolerance``
    block the step.  Raises :class:`NoBlockingIndex` when none does.
    """
    return _step(np.asarray(x_prev, dtype=float), np.asarray(y, dtype=float),
                 P, feasibility_tolerance)[0]


def _step(x_prev, y, P, tol):
    if P is not None:
        x_prev = x_prev[P]
        y = y[P]
    blocking = np.flatnonzero(y <= tol)
    if blocking.size == 0:
        raise NoBlockingIndex("no component of y is at or below the tolerance")
    xb = x_prev[blocking]
    ratios = xb / (xb - y[blocking])
    t = int(np.argmin(ratios))
    alpha = float(min(max(ratios[t], 0.0), 1.0))
    return alpha, int(blocking[t])


def feasibility_shrink(ws, J, y=None, feasibility_tolerance=0.0):
    """Drop trailing members of ``J`` until the block's LS coefficients are positive.

    ``J`` must be the block most recently appended to ``ws``, so each drop
    removes the last column of ``R`` and costs no rotation.  The first
    member is never dropped.  Returns ``(J, ws, y)`` with ``y`` in passive
    order.
    """
    J = list(J)
    if y is None:
        y = ws.solve()
    while len(J) > 1 and y[ws.ns - len(J):].min() <= feasibility_tolerance:
        ws.remove([J.pop()])
        y = ws.solve()
    return J, ws, y


def kkt_check(A, b, x, tol):
    """Check the NNLS optimality conditions at ``x``.

    ``x`` is optimal when every dual entry ``w = A^T (b - A x)`` is at most
    ``tol`` and every product ``x_i |w_i|`` is at most ``tol``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.size and x.min() < -tol:
        raise InfeasiblePoint(f"min(x) = {x.min():.3e} < -{tol:.3e}")
    w = A.T @ (b - A @ x)
    dual = float(max(w.max(), 0.0)) if w.size else 0.0
    comp = float(np.max(np.abs(x) * np.abs(w))) if w.size else 0.0
    return KKTReport(dual <= tol and comp <= tol, dual, comp, w)


# -- column selection rules ----------------------------------------------------

def _select_lh(ws, w, candidates):
    vals = w[candidates]
    return [int(candidates[vals == vals.max()].min())]


def _make_dm_selector(params):
    def select(ws, w, candidates):
        u2 = ws.trailing_norms()
        return dm_select(ws.W[ws.ns:], w, u2, params, candidates=candidates,
                         column_of=ws.position)
    return select


# -- shared driver -------------------------------------------------------------

def _active_set_solve(A, b, cfg, select, name):
    t0 = time.perf_counter()
    A = as_dense(A)
    b = as_vector(b, A.m)
    Aa = A.array
    m, n = A.shape
    dual_tol = cfg.dual_tolerance or default_dual_tolerance(Aa, b)
    feas_tol = cfg.feasibility_tolerance
    max_outer = cfg.max_outer_iterations or 10 * n
    sing_tol = cfg.singularity_tolerance or default_singularity_tolerance(Aa)
    flips_on = bool(cfg.sign_flip_enabled and A.twin_offset)

    x = np.zeros(n)
    report = SolveReport(x_star=x, w_star=np.zeros(n), P_star=[], Z_star=list(range(n)),
                         residual_norm=float(np.linalg.norm(b)), objective_history=[],
                         solver=name)
    if not np.any(b):
        report.wall_time = time.perf_counter() - t0
        return report

    ws = QRWorkspace(A, b, singularity_tolerance=sing_tol, backend=cfg.backend)
    w = Aa.T @ b
    rejected = np.zeros(n, dtype=bool)

    while True:
        active = ws.active
        candidates = active[~rejected[active]]
        if candidates.size == 0 or w[candidates].max() <= dual_tol:
            break
        if report.outer_iterations >= max_outer:
            report.status = Status.ITERATION_CAP
            break
        candidates = candidates[w[candidates] > dual_tol]
        J = select(ws, w, candidates)
        try:
            ws.append(J)
        except SingularUpdate as exc:
            if exc.position == 0:
                rejected[J[0]] = True
                continue
            J = J[:exc.position]
            ws.append(J)
        y = ws.solve()
        before = len(J)
        J, ws, y = feasibility_shrink(ws, J, y, feas_tol)
        report.feasibility_drops += before - len(J)
        if y[ws.ns - 1] <= feas_tol:
            # the leader alone does not give a descent step: round-off territory
            ws.remove(J)
            rejected[J[0]] = True
            continue
        report.outer_iterations += 1

        passes = 0
        while y.size and y.min() <= feas_tol:
            report.inner_iterations += 1
            passes += 1
            P = ws.passive.copy()
            blocking = np.flatnonzero(y <= feas_tol)
            if flips_on and all(y[k] < 0.0 and -y[k] > feas_tol
                                and not ws.is_passive(ws.twin(int(P[k])))
                                for k in blocking):
                for k in blocking:
                    ws.sign_flip(int(k))
                    y[k] = -y[k]
                report.sign_flips += blocking.size
                report.inner_steps.append(("flip", 0))
                continue
            xP = x[P]
            alpha, arg = _step(xP, y, None, feas_tol)
            xP = xP + alpha * (y - xP)
            xP[arg] = 0.0
            drop = xP <= 0.0
            x[P] = np.where(drop, 0.0, xP)
            ws.remove(P[drop])
            report.givens_rotations += ws.last_rotations
            report.inner_steps.append(("givens", ws.last_rotations))
            y = ws.solve()

        P = ws.passive.copy()
        x = np.zeros(n)
        x[P] = y
        r = b - Aa[:, P] @ y
        w = Aa.T @ r
        report.objective_history.append(float(r @ r))
        rejected[:] = False
        if cfg.record_trajectory:
            report.trajectory.append(tuple(int(j) for j in P))

    P = ws.passive.copy()
    r = b - Aa[:, P] @ x[P]
    report.x_star = x
    report.w_star = Aa.T @ r
    report.P_star = [int(j) for j in P]
    report.Z_star = sorted(int(j) for j in ws.active)
    report.residual_norm = float(np.linalg.norm(r))
    report.wall_time = time.perf_counter() - t0
    return report


def lh_solve(A, b, cfg=None):
    """Lawson-Hanson NNLS: one column enters the passive set per outer iteration."""
    cfg = cfg or SolverConfig()
    return _active_set_solve(A, b, cfg, _select_lh, "lh")


def lhdm_solve(A, b, cfg=None):
    """Lawson-Hanson with Deviation Maximization block pivoting."""
    cfg = cfg or SolverConfig()
    return _active_set_solve(A, b, cfg, _make_dm_selector(cfg.dm), "lhdm")


def lhdm_solve_signed(A_pt, b, cfg=None):
    """LHDM on a positivity-trick matrix with the sign-flip inner step enabled."""
    if not getattr(A_pt, "twin_offset", None):
        raise NotPositivityTrick("expected a matrix built by lhdm.dense.positivity_trick")
    cfg = replace(cfg or SolverConfig(), sign_flip_enabled=True)
    report = _active_set_solve(A_pt, b, cfg, _make_dm_selector(cfg.dm), "lhdm")
    return report
