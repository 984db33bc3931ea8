"""Iteration counts of every preconditioner across the Kershaw family.

Pass the number of elements per axis as the first argument (default 4).
"""
import sys

from semprecond.bench import RunSpec, format_rows, run_suite

E = int(sys.argv[1]) if len(sys.argv) > 1 else 4
spec = RunSpec(eps=[1.0, 0.3, 0.05], elems=E, orders=[7],
               precond=["Cheby-ASM(2)", "Cheby-RAS(2)", "Cheby-Jac(2)", "SEMFEM"])
rows = run_suite(spec, log=print)
print()
print(format_rows(rows))
