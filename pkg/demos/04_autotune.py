"""Let the auto-tuner pick a preconditioner for a strongly deformed mesh."""
from semprecond import KershawParams, SemOperator, generate_kershaw
from semprecond.autotune import TuneProblem, autotune
from semprecond.bench import build_rhs
from semprecond.krylov import GmresConfig
from semprecond.precond import tune_space

op = SemOperator(generate_kershaw(KershawParams(0.05, 4)), 7)
problem = TuneProblem(op, build_rhs(op, seed=0), GmresConfig(tol=1e-8))
chosen, records = autotune(problem, tune_space(7), trials=3, log=print)
print(f"\nchosen: {chosen.label}")
for r in records:
    print(f"  {r.config.label:24s} setup {r.setup_time:6.2f}s  solve {r.solve_time:6.2f}s  "
          f"iters {r.iterations:4d}  {'ok' if r.converged else 'FAILED'}")
