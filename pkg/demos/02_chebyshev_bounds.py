"""Chebyshev smoothing: damping curves and sensitivity to the eigenvalue bounds."""
import numpy as np

from semprecond import ChebyParams, KershawParams, SemOperator, generate_kershaw
from semprecond.bench import build_rhs
from semprecond.chebyshev import residual_polynomial
from semprecond.krylov import GmresConfig, gmres_solve
from semprecond.precond import make_preconditioner, parse_config

# error factor as a function of the eigenvalue of S A (lambda_tilde = 1)
lam = np.linspace(0.0, 1.2, 13)
for eta in (1, 2, 3):
    p = residual_polynomial(lam, ChebyParams(eta, 0.1, 1.1, lambda_tilde=1.0))
    print(f"eta={eta}: " + " ".join(f"{v:+.2f}" for v in p))

# underestimating lambda_max hurts far more than a loose lambda_min
op = SemOperator(generate_kershaw(KershawParams(0.3, 4)), 7)
b = build_rhs(op, seed=0)
for bounds in [(0.1, 1.1), (0.05, 1.1), (0.25, 1.1), (0.1, 0.4)]:
    M, _ = make_preconditioner(op, parse_config("Cheby-ASM(2),(7,3,1)", 7, lambda_bounds=bounds))
    _, stats = gmres_solve(op.apply, M, b, config=GmresConfig())
    print(f"bounds {bounds}: {stats.iterations} iterations")
