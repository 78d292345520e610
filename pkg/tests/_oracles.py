"""Independent reference computations used by the tests."""
import itertools

import numpy as np


def brute_force_nnls(A, b):
    """Minimum NNLS objective by enumerating every passive subset."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    best = float(b @ b)
    for k in range(1, n + 1):
        for S in itertools.combinations(range(n), k):
            cols = list(S)
            y = np.linalg.lstsq(A[:, cols], b, rcond=None)[0]
            if np.all(y >= 0):
                r = A[:, cols] @ y - b
                best = min(best, float(r @ r))
    return best


def pinv_normal_equations(AS, B):
    """``(A_S^T A_S)^{-1} A_S^T B`` without any QR."""
    return np.linalg.solve(AS.T @ AS, AS.T @ B)


def random_nnls_instance(rng, m, n):
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    return A, b
