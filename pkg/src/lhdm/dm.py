"""Deviation Maximization: block column selection for active-set solvers."""
from dataclasses import dataclass

import numpy as np

from .errors import ZeroColumn


@dataclass(frozen=True)
class DMParams:
    """Thresholds for :func:`dm_select`.

    ``tau1`` scales the dual-value filter, ``tau2`` the trailing-norm
    filter, ``delta`` bounds pairwise |cosine| among selected columns and
    ``k_max`` caps the block size.
    """

    tau1: float = 0.6
    tau2: float = 0.15
    delta: float = 0.9
    k_max: int = 32

    def __post_init__(self):
        if not 0.0 < self.tau1 <= 1.0:
            raise ValueError(f"tau1 must lie in (0, 1], got {self.tau1}")
        if not 0.0 < self.tau2 < 1.0:
            raise ValueError(f"tau2 must lie in (0, 1), got {self.tau2}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if int(self.k_max) != self.k_max or self.k_max < 2:
            raise ValueError(f"k_max must be an integer >= 2, got {self.k_max}")

    @classmethod
    def strict(cls, tau1=0.6, tau2=0.15, k_max=32):
        """Parameters with ``delta`` set to :func:`delta_bound`."""
        return cls(tau1=tau1, tau2=tau2, delta=delta_bound(tau2, k_max), k_max=k_max)


def delta_bound(tau2, k_max):
    """Largest cosine bound compatible with the nonsingularity estimate."""
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    return tau2 / (k_max - 1)


def cosine_matrix(C, tol=0.0):
    """Cosines of the angles between the columns of ``C``.

    Entries are clamped to [-1, 1]; the diagonal is exactly one.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    norms = np.sqrt(np.einsum("ij,ij->j", C, C))
    if np.any(norms <= tol) or np.any(norms == 0.0):
        raise ZeroColumn(f"column {int(np.argmin(norms))} has norm {norms.min():.3e}")
    U = C / norms
    theta = U.T @ U
    theta = 0.5 * (theta + theta.T)
    np.clip(theta, -1.0, 1.0, out=theta)
    np.fill_diagonal(theta, 1.0)
    return theta


def _by_value_then_index(idx, values):
    # descending value, ascending index on ties
    return idx[np.lexsort((idx, -values[idx]))]


def dm_select(C, u1, u2, params, candidates=None, column_of=None):
    """Choose a block of columns for one outer iteration.

    Parameters
    ----------
    C : ndarray, shape (rows, n)
        Trailing block, addressed by the same column labels as ``u1``/``u2``.
    u1 : ndarray, shape (n,)
        Dual values; only labels in ``candidates`` (default: all) compete.
    u2 : ndarray, shape (n,)
        Trailing column norms.
    params : DMParams
    candidates : array of int, optional
        Labels allowed to enter (the active set).
    column_of : array of int, optional
        Maps a label to its column in ``C``; identity by default.

    Returns
    -------
    list of int
        The selected labels.  The first is the lowest-index argmax of ``u1``;
        the rest follow in descending ``u1`` order.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if candidates is None:
        candidates = np.arange(u1.shape[0])
    candidates = np.asarray(candidates, dtype=np.int64)
    vals = u1[candidates]
    top = vals.max()
    leader = int(candidates[vals == top].min())
    J = [leader]
    if u2[leader] <= 0.0:
        return J
    u2max = u2.max()
    mask = ((u1[candidates] >= params.tau1 * top)
            & (u2[candidates] >= params.tau2 * u2max)
            & (u2[candidates] > 0.0)
            & (candidates != leader))
    pool = candidates[mask]
    if pool.size == 0:
        return J
    pool = _by_value_then_index(pool, u1)[:params.k_max]
    cols = np.concatenate(([leader], pool))
    where = cols if column_of is None else np.asarray(column_of)[cols]
    theta = np.abs(cosine_matrix(np.asarray(C)[:, where]))
    chosen = [0]
    for t in range(1, cols.shape[0]):
        if len(chosen) >= params.k_max:
            break
        if np.all(theta[t, chosen] < params.delta):
            chosen.append(t)
    return [int(cols[t]) for t in chosen]
