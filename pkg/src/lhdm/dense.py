"""Dense column-major matrices, elementary orthogonal transforms and I/O."""
import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (DimensionMismatch, MatrixFormatError, NonFiniteEntry,
                     SingularDiagonal)

EPS = np.finfo(float).eps

DMAT_MAGIC = b"DMAT"
_DMAT_HEADER = struct.Struct("<4sQQ")


class DenseMatrix:
    """Immutable real matrix stored in column-major (Fortran) order.

    ``twin_offset`` is set only for matrices built by
    :func:`positivity_trick`; it records that column ``j`` and column
    ``j + twin_offset`` are exact negations of each other.
    """

    __slots__ = ("_data", "twin_offset")

    def __init__(self, data, twin_offset=None):
        arr = np.array(data, dtype=float, order="F", copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1, order="F")
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise DimensionMismatch(f"expected a nonempty 2-D matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteEntry("matrix entries must be finite")
        arr.flags.writeable = False
        self._data = arr
        self.twin_offset = twin_offset

    @classmethod
    def from_column_major(cls, m, n, entries):
        entries = np.asarray(entries, dtype=float)
        if entries.size != m * n:
            raise DimensionMismatch(f"{entries.size} entries for a {m}x{n} matrix")
        return cls(entries.reshape((m, n), order="F"))

    @property
    def array(self):
        """Read-only Fortran-ordered view of the entries."""
        return self._data

    @property
    def shape(self):
        return self._data.shape

    @property
    def m(self):
        return self._data.shape[0]

    @property
    def n(self):
        return self._data.shape[1]

    def column_major(self):
        return self._data.ravel(order="F")

    def frobenius_norm(self):
        return float(np.linalg.norm(self._data))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __repr__(self):
        extra = f", twin_offset={self.twin_offset}" if self.twin_offset else ""
        return f"DenseMatrix({self.m}x{self.n}{extra})"


def as_dense(A):
    if isinstance(A, DenseMatrix):
        return A
    return DenseMatrix(A)


def as_vector(b, m=None):
    v = np.array(b, dtype=float).ravel()
    if m is not None and v.shape[0] != m:
        raise DimensionMismatch(f"right-hand side has length {v.shape[0]}, expected {m}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteEntry("vector entries must be finite")
    return v


def positivity_trick(A):
    """Return the doubled matrix ``(A, -A)`` tagged with its twin structure."""
    base = as_dense(A).array
    return DenseMatrix(np.hstack([base, -base]), twin_offset=base.shape[1])


@dataclass(frozen=True)
class HouseholderReflector:
    """``H = I - beta v v^T`` acting on rows ``offset:`` (``v[0] == 1``)."""

    v: np.ndarray
    beta: float
    offset: int

    @classmethod
    def from_vector(cls, x, offset=0):
        x = np.asarray(x, dtype=float)
        alpha = x[0]
        sigma = float(x[1:] @ x[1:])
        v = np.empty_like(x)
        v[0] = 1.0
        if sigma == 0.0:
            v[1:] = 0.0
            return cls(v, 0.0, offset)
        norm = math.sqrt(alpha * alpha + sigma)
        diag = -norm if alpha >= 0.0 else norm
        v0 = alpha - diag
        v[1:] = x[1:] / v0
        return cls(v, -v0 / diag, offset)

    def apply(self, y):
        """Return ``H y`` for a vector or matrix ``y`` with ``m`` rows."""
        out = np.array(y, dtype=float, copy=True)
        seg = out[self.offset:self.offset + self.v.shape[0]]
        if seg.ndim == 1:
            seg -= self.beta * (self.v @ seg) * self.v
        else:
            seg -= np.outer(self.v, self.beta * (self.v @ seg))
        return out


@dataclass(frozen=True)
class GivensRotation:
    """Plane rotation on rows ``(i, j)`` with ``j == i + 1``."""

    c: float
    s: float
    i: int
    j: int

    @classmethod
    def zeroing(cls, a, b, i):
        rho = math.hypot(a, b)
        if rho == 0.0:
            return cls(1.0, 0.0, i, i + 1)
        return cls(a / rho, b / rho, i, i + 1)

    def apply(self, y):
        out = np.array(y, dtype=float, copy=True)
        top = out[self.i].copy()
        bot = out[self.j].copy()
        out[self.i] = self.c * top + self.s * bot
        out[self.j] = self.c * bot - self.s * top
        return out


def solve_upper_triangular(R, rhs, tol=0.0):
    """Back substitution for ``R y = rhs``.

    Raises :class:`SingularDiagonal` when a diagonal magnitude is ``<= tol``
    (``tol = 0`` rejects exact zeros only).
    """
    R = np.asarray(R, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = R.shape[0]
    if R.shape != (n, n) or rhs.shape[0] != n:
        raise DimensionMismatch("R must be square and match the right-hand side")
    diag = np.abs(np.diag(R))
    if n and diag.min() <= tol:
        k = int(np.argmin(diag))
        raise SingularDiagonal(f"|R[{k},{k}]| = {diag[k]:.3e} <= {tol:.3e}")
    y = np.zeros(n)
    for i in range(n - 1, -1, -1):
        y[i] = (rhs[i] - R[i, i + 1:] @ y[i + 1:]) / R[i, i]
    return y


def column_norms(C):
    C = np.asarray(C, dtype=float)
    return np.sqrt(np.einsum("ij,ij->j", C, C))


def default_singularity_tolerance(A):
    A = np.asarray(A)
    return max(A.shape) * EPS * float(np.linalg.norm(A))


# --- file formats -----------------------------------------------------------

def read_csv_matrix(path):
    rows = []
    with open(path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), 1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise MatrixFormatError(f"{path}:{line_no}: {exc}") from None
    if not rows:
        raise MatrixFormatError(f"{path}: empty matrix file")
    if len({len(r) for r in rows}) != 1:
        raise MatrixFormatError(f"{path}: ragged rows")
    return np.array(rows, dtype=float)


def write_csv_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in M:
            writer.writerow([repr(float(v)) for v in row])


def read_dmat(path):
    """Read the raw binary format: ``b"DMAT"``, u64 rows, u64 cols, then
    ``rows*cols`` little-endian f64 values in column-major order."""
    raw = Path(path).read_bytes()
    if len(raw) < _DMAT_HEADER.size:
        raise MatrixFormatError(f"{path}: truncated header")
    magic, m, n = _DMAT_HEADER.unpack_from(raw)
    if magic != DMAT_MAGIC:
        raise MatrixFormatError(f"{path}: bad magic {magic!r}")
    payload = raw[_DMAT_HEADER.size:]
    if len(payload) != 8 * m * n:
        raise MatrixFormatError(f"{path}: expected {m * n} values, found {len(payload) // 8}")
    values = np.frombuffer(payload, dtype="<f8")
    return values.reshape((m, n), order="F").astype(float)


def write_dmat(path, M):
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    with open(path, "wb") as fh:
        fh.write(_DMAT_HEADER.pack(DMAT_MAGIC, M.shape[0], M.shape[1]))
        fh.write(np.asfortranarray(M).astype("<f8").tobytes(order="F"))


def load_matrix(path):
    """Load a matrix from CSV or DMAT, chosen by magic bytes."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == DMAT_MAGIC:
        return read_dmat(path)
    return read_csv_matrix(path)


def save_matrix(path, M):
    if str(path).endswith((".dmat", ".bin")):
        write_dmat(path, M)
    else:
        write_csv_matrix(path, M)
