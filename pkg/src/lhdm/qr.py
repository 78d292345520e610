"""Partial QR factorization with column updating, downdating and sign flips.

The workspace holds ``Q^T A Pi`` for the current column order ``Pi``::

    [[R, B],
     [0, C]]

where ``R`` (order ``ns``) factors the passive columns.  ``Q`` is never
formed: every reflector and rotation is applied on the spot to the whole
working copy of ``A`` and to the right-hand side, and optionally recorded
in ``transform_log``.  The caller's ``A`` is never permuted; only the
private working copy is.
"""
import numpy as np

from . import _backend
from .dense import (GivensRotation, HouseholderReflector, as_dense, as_vector,
                    default_singularity_tolerance)
from .errors import (DimensionMismatch, IndexAlreadyPassive, IndexNotPassive,
                     NotPositivityTrick, SingularUpdate, TwinAlreadyPassive)


class QRWorkspace:
    """Mutable partial QR state for one matrix and one right-hand side."""

    def __init__(self, A, b, singularity_tolerance=None, record_transforms=False,
                 backend=None):
        A = as_dense(A)
        b = as_vector(b)
        if b.shape[0] != A.m:
            raise DimensionMismatch(f"A has {A.m} rows but b has length {b.shape[0]}")
        self.A = A
        self.kernels = _backend.get(backend)
        self.W = np.array(A.array, order="F", copy=True)
        self.b_transformed = b.copy()
        self.column_map = np.arange(A.n)
        self.position = np.arange(A.n)
        self.ns = 0
        if singularity_tolerance is None:
            singularity_tolerance = default_singularity_tolerance(A.array)
        self.singularity_tolerance = float(singularity_tolerance)
        self.transform_log = [] if record_transforms else None
        self.reflector_count = 0
        self.rotation_count = 0
        self.flops = {"update": 0.0, "downdate": 0.0}
        self.last_rotations = 0

    # -- views ---------------------------------------------------------------
    @property
    def m(self):
        return self.W.shape[0]

    @property
    def n(self):
        return self.W.shape[1]

    @property
    def R(self):
        return self.W[:self.ns, :self.ns]

    @property
    def B(self):
        return self.W[:self.ns, self.ns:]

    @property
    def C(self):
        return self.W[self.ns:, self.ns:]

    @property
    def passive(self):
        """Passive column indices in factorization order."""
        return self.column_map[:self.ns]

    @property
    def active(self):
        return self.column_map[self.ns:]

    @property
    def twin_offset(self):
        return self.A.twin_offset

    def is_passive(self, j):
        return self.position[j] < self.ns

    def twin(self, j):
        off = self.twin_offset
        if not off:
            raise NotPositivityTrick("matrix carries no positivity-trick metadata")
        return j + off if j < off else j - off

    # -- mutations -----------------------------------------------------------
    def _swap_positions(self, p, q):
        if p == q:
            return
        self.W[:, [p, q]] = self.W[:, [q, p]]
        jp, jq = self.column_map[p], self.column_map[q]
        self.column_map[p], self.column_map[q] = jq, jp
        self.position[jq], self.position[jp] = p, q

    def append(self, J):
        """Append the columns ``J`` (original indices, in order) to ``R``.

        The block is first triangularized on a copy; if a new diagonal
        falls below the singularity tolerance :class:`SingularUpdate` is
        raised and the factorization is left mathematically unchanged.
        """
        J = [int(j) for j in J]
        if len(set(J)) != len(J):
            raise ValueError("duplicate indices in appended block")
        for j in J:
            if not 0 <= j < self.n:
                raise IndexError(j)
            if self.is_passive(j):
                raise IndexAlreadyPassive(j)
        k = len(J)
        if k == 0:
            return self
        ns = self.ns
        for t, j in enumerate(J):
            self._swap_positions(ns + t, self.position[j])
        rows = self.m - ns
        panel = np.array(self.W[ns:, ns:ns + k], order="F")
        V = np.zeros((rows, k), order="F")
        betas = np.zeros(k)
        bad = self.kernels.householder_panel(panel, V, betas, self.singularity_tolerance)
        if bad >= 0:
            diag = float(np.linalg.norm(panel[bad:, bad])) if bad < rows else 0.0
            raise SingularUpdate(bad, J[bad], diag)
        self.W[ns:, ns:ns + k] = panel
        self.kernels.apply_block_reflectors(V, betas, self.W, self.b_transformed,
                                            ns, ns + k)
        if self.transform_log is not None:
            for i in range(k):
                self.transform_log.append(
                    HouseholderReflector(V[i:, i].copy(), float(betas[i]), ns + i))
        self.reflector_count += k
        trailing = self.n - ns - k
        self.flops["update"] += 2.0 * k * k * (rows - k / 3.0) + 4.0 * k * rows * trailing
        self.ns = ns + k
        return self

    def remove(self, Q):
        """Delete passive columns ``Q`` and retriangularize with rotations.

        Kept columns preserve their relative order; removed columns move
        to the head of the active block in their former order.
        """
        Q = {int(j) for j in Q}
        for j in Q:
            if not 0 <= j < self.n or not self.is_passive(j):
                raise IndexNotPassive(j)
        if not Q:
            return self
        ns = self.ns
        removed_pos = sorted(int(self.position[j]) for j in Q)
        removed_set = set(removed_pos)
        keep_pos = [p for p in range(ns) if p not in removed_set]
        order = np.array(keep_pos + removed_pos)
        sub = np.searchsorted(np.array(removed_pos), np.array(keep_pos, dtype=np.int64)).astype(np.int64)
        self.W[:ns, :ns] = self.W[:ns, order]
        self.column_map[:ns] = self.column_map[order]
        self.position[self.column_map[:ns]] = np.arange(ns)
        total = int(sub.sum())
        rot_rows = np.zeros(total, dtype=np.int64)
        rot_c = np.zeros(total)
        rot_s = np.zeros(total)
        nkeep = len(keep_pos)
        if total:
            done = self.kernels.downdate_sweep(self.W, self.b_transformed, nkeep, sub,
                                               rot_rows, rot_c, rot_s)
            assert done == total
            if self.transform_log is not None:
                for r, c, s in zip(rot_rows, rot_c, rot_s):
                    self.transform_log.append(GivensRotation(float(c), float(s), int(r), int(r) + 1))
            self.rotation_count += total
            self.flops["downdate"] += 6.0 * float(np.sum(sub * (self.n - np.arange(nkeep))))
        self.ns = nkeep
        self.last_rotations = total
        return self

    def sign_flip(self, k):
        """Replace the passive column at position ``k`` by its negated twin.

        Both the passive column and the twin's column are negated and the
        map entries are swapped, so applying the flip twice is a bit-exact
        identity on the whole workspace.
        """
        if not 0 <= k < self.ns:
            raise IndexNotPassive(k)
        j = int(self.column_map[k])
        jt = self.twin(j)
        q = int(self.position[jt])
        if q < self.ns:
            raise TwinAlreadyPassive(f"columns {j} and {jt} are both passive")
        self.W[:, k] = -self.W[:, k]
        self.W[:, q] = -self.W[:, q]
        self.column_map[k], self.column_map[q] = jt, j
        self.position[jt], self.position[j] = k, q
        return self

    # -- queries -------------------------------------------------------------
    def solve(self):
        """Least-squares coefficients of the passive columns, in P order."""
        y = np.zeros(self.ns)
        self.kernels.back_substitute(self.W, self.b_transformed, self.ns, y)
        return y

    def solution(self):
        """Full-length LS solution with zeros on the active set."""
        x = np.zeros(self.n)
        x[self.passive] = self.solve()
        return x

    def trailing_norms(self):
        """Euclidean norms of the ``C`` columns, indexed by original column."""
        sq = np.empty(self.n - self.ns)
        self.kernels.sq_column_norms(self.W, self.ns, self.ns, sq)
        out = np.zeros(self.n)
        out[self.active] = np.sqrt(sq)
        return out

    def ls_residual_norm(self):
        return float(np.linalg.norm(self.b_transformed[self.ns:]))


def qr_initialize(A, b, **kwargs):
    return QRWorkspace(A, b, **kwargs)


def qr_append_columns(ws, J):
    return ws.append(J)


def qr_remove_columns(ws, Q):
    return ws.remove(Q)


def qr_sign_flip(ws, k):
    return ws.sign_flip(k)
