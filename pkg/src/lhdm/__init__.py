"""Dense NNLS solvers (Lawson-Hanson and the Deviation Maximization variant)
with incremental QR and sparse-recovery tools."""
from ._backend import available as available_backends
from .dense import DenseMatrix, load_matrix, positivity_trick, save_matrix
from .dm import DMParams, cosine_matrix, dm_select
from .errors import *  # noqa: F401,F403
from .qr import QRWorkspace
from .recovery import (diagnose, erc_check, l1_nnls_solve, mutual_coherence,
                       omp_solve, positivity_trick_solve)
from .solvers import (SolverConfig, SolveReport, Status, kkt_check, lh_solve,
                      lhdm_solve, lhdm_solve_signed)

__version__ = "0.1.0"
