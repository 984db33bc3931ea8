"""Spectral-element Poisson preconditioners on Kershaw meshes.

p-multigrid with Chebyshev-accelerated Schwarz and Jacobi smoothers, a
low-order (SEMFEM) preconditioner with an aggregation AMG, restarted GMRES
and a timing-based auto-tuner.
"""
from .autotune import TuneProblem, TuneRecord, autotune
from .bench import RunSpec, ResultRow, build_rhs, run_suite
from .chebyshev import ChebyParams, ChebyshevSmoother, JacobiSmoother, cheby_smooth, estimate_lambda_max
from .krylov import GmresConfig, GmresStats, ProjectionBasis, gmres_solve
from .mesh import HexMesh, KershawParams, MeshMetrics, box_mesh, compute_metrics, generate_kershaw
from .pmg import PMGPreconditioner
from .precond import PreconditionerConfig, default_schedule, make_preconditioner, parse_config, tune_space
from .schwarz import SchwarzSmoother, fdm_setup, fdm_solve
from .sem import SemOperator, gll
from .semfem import SemfemPreconditioner, assemble_semfem

__version__ = "0.1.0"
