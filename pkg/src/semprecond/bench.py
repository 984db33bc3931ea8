"""Kershaw benchmark driver: epsilon and order sweeps, CSV and JSON output.

Usage::

    python3 -m semprecond.bench --eps 1.0 --eps 0.05 --elems 6 --order 7 \\
        --precond "Cheby-ASM(2)" --precond SEMFEM --out results.csv
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .amg import REFERENCE_AMG_SETTINGS
from .autotune import TuneProblem, autotune
from .krylov import GmresConfig, gmres_solve
from .mesh import KershawParams, compute_metrics, generate_kershaw
from .precond import make_preconditioner, parse_config, tune_space
from .sem import SemOperator
from .semfem import assemble_semfem, dump_matrix

CSV_FIELDS = ("eps", "E", "p", "n", "precond", "iters", "t_setup_s", "t_solve_s", "rel_res",
              "converged")


@dataclass
class RunSpec:
    eps: list[float] = field(default_factory=lambda: [1.0, 0.3, 0.05])
    elems: int = 6
    orders: list[int] = field(default_factory=lambda: [7])
    precond: list[str] = field(default_factory=lambda: ["auto"])
    tol: float = 1e-8
    restart: int = 20
    max_iters: int = 500
    seed: int = 0
    out: str | None = None
    dump_matrix: str | None = None
    coarse: str = "direct"
    semfem_inner: str = "amg"
    cheb_order: int = 2
    lambda_bounds: tuple[float, float] = (0.1, 1.1)
    tune_trials: int = 3

    def __post_init__(self):
        if not self.eps or not self.orders or not self.precond:
            raise ValueError("eps, orders and precond lists must be non-empty")
        for e in self.eps:
            KershawParams(e, self.elems)
        if any(p < 1 for p in self.orders):
            raise ValueError("orders must be >= 1")

    def config_options(self) -> dict:
        return dict(coarse=self.coarse, semfem_inner=self.semfem_inner,
                    cheb_order=self.cheb_order, lambda_bounds=tuple(self.lambda_bounds))


@dataclass
class ResultRow:
    eps: float
    E: int
    p: int
    n: int
    precond: str
    iters: int
    t_setup_s: float
    t_solve_s: float
    rel_res: float
    converged: bool
    phase: str = "solve"
    metrics: dict | None = None

    def csv_fields(self) -> list[str]:
        return [repr(float(self.eps)), str(self.E), str(self.p), str(self.n), self.precond,
                str(self.iters), repr(float(self.t_setup_s)), repr(float(self.t_solve_s)),
                repr(float(self.rel_res)), "1" if self.converged else "0"]


def format_rows(rows, phase_column: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS + (("phase",) if phase_column else ()))
    for row in rows:
        w.writerow(row.csv_fields() + ([row.phase] if phase_column else []))
    return buf.getvalue()


def parse_rows(text: str) -> list[ResultRow]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(ResultRow(
            eps=float(rec["eps"]), E=int(rec["E"]), p=int(rec["p"]), n=int(rec["n"]),
            precond=rec["precond"], iters=int(rec["iters"]), t_setup_s=float(rec["t_setup_s"]),
            t_solve_s=float(rec["t_solve_s"]), rel_res=float(rec["rel_res"]),
            converged=rec["converged"] == "1", phase=rec.get("phase") or "solve"))
    return rows


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def build_rhs(op: SemOperator, seed: int = 0, noise: bool = True, aligned: bool = False) -> np.ndarray:
    """Mass-weighted, masked load vector ``B f``.

    ``f = 3 pi^2 sin(pi x) sin(pi y) sin(pi z) + g`` on the GLL lattice, with
    ``g`` seeded uniform(-1, 1) noise times a bubble ``2 dist(x, boundary)``
    that vanishes on the cube surface. ``aligned=True`` shifts the sines by
    1/2 so that ``u = prod sin(pi (x + 1/2))`` solves the noise-free problem.
    """
    x = op.mesh.lattice_coords(op.p)
    shift = 0.5 if aligned else 0.0
    f = 3.0 * np.pi ** 2 * np.prod(np.sin(np.pi * (x + shift)), axis=1)
    if noise:
        rng = np.random.default_rng(seed)
        bubble = 2.0 * np.min(0.5 - np.abs(x), axis=1)
        bubble[~op.mask.astype(bool)] = 0.0
        f = f + rng.uniform(-1.0, 1.0, f.size) * bubble
    return op.mass * f * op.mask


def _metrics_dict(mesh, p):
    m = compute_metrics(mesh, p)
    return {"scaled_jacobian": m.scaled_jacobian, "aspect_ratio": m.aspect_ratio,
            "gll_spacing": m.gll_spacing}


def run_suite(spec: RunSpec, log=None) -> list[ResultRow]:
    """Run every (eps, p, preconditioner) combination; writes CSV/JSON if ``spec.out``."""
    gcfg = GmresConfig(restart=spec.restart, tol=spec.tol, max_iters=spec.max_iters)
    opts = spec.config_options()
    rows = []
    meta = {"spec": dataclasses.asdict(spec), "amg_reference": REFERENCE_AMG_SETTINGS, "meshes": []}
    for p in spec.orders:
        for eps in spec.eps:
            mesh = generate_kershaw(KershawParams(eps, spec.elems), p)
            op = SemOperator(mesh, p)
            b = build_rhs(op, spec.seed)
            metrics = _metrics_dict(mesh, p)
            meta["meshes"].append({"eps": eps, "E": spec.elems, "p": p, "n": op.n_free, **metrics})
            if spec.dump_matrix:
                base = Path(spec.dump_matrix)
                dump_matrix(assemble_semfem(op),
                            base.with_name(f"{base.stem}_eps{eps:g}_p{p}{base.suffix or '.mtx'}"))
            configs = []
            for label in spec.precond:
                if label.lower() == "auto":
                    chosen, recs = autotune(TuneProblem(op, b, gcfg, spec.seed),
                                            tune_space(p, **opts), trials=spec.tune_trials, log=log)
                    for r in recs:
                        rows.append(ResultRow(eps, spec.elems, p, op.n_free, r.config.label,
                                              r.iterations, r.setup_time, r.solve_time, r.rel_res,
                                              r.converged, phase="autotune", metrics=metrics))
                    configs.append(chosen)
                else:
                    configs.append(parse_config(label, p, **opts))
            for cfg in configs:
                M, t_setup = make_preconditioner(op, cfg, seed=spec.seed)
                t0 = time.perf_counter()
                _, st = gmres_solve(op.apply, M, b, None, gcfg)
                t_solve = time.perf_counter() - t0
                row = ResultRow(eps, spec.elems, p, op.n_free, cfg.label, st.iterations, t_setup,
                                t_solve, st.rel_res, st.converged, metrics=metrics)
                rows.append(row)
                if log:
                    log(f"eps={eps:g} p={p} {cfg.label}: {st.iterations} iters, "
                        f"rel_res {st.rel_res:.2e}, setup {t_setup:.2f}s solve {t_solve:.2f}s")
    if spec.out:
        out = Path(spec.out)
        has_tune = any(r.phase != "solve" for r in rows)
        _atomic_write(out, format_rows(rows, phase_column=has_tune))
        meta["results"] = [dataclasses.asdict(r) for r in rows]
        _atomic_write(out.with_suffix(".json"), json.dumps(meta, indent=2, default=str))
    return rows


def _bounds(text: str) -> tuple[float, float]:
    lo, hi = (float(v) for v in text.split(","))
    if not 0.0 < lo < hi:
        raise argparse.ArgumentTypeError("need 0 < min < max")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semprecond-bench",
                                 description="Kershaw Poisson preconditioner benchmark")
    ap.add_argument("--eps", type=float, action="append", help="anisotropy (repeatable)")
    ap.add_argument("--elems", type=int, default=6, help="elements per axis")
    ap.add_argument("--order", type=int, action="append", help="polynomial order (repeatable)")
    ap.add_argument("--precond", action="append",
                    help="preconditioner label, e.g. 'Cheby-RAS(2),(7,3,1)', SEMFEM or auto")
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--restart", type=int, default=20)
    ap.add_argument("--max-iters", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results.csv")
    ap.add_argument("--dump-matrix", metavar="PATH", help="write A_F in coordinate text format")
    ap.add_argument("--coarse", choices=("direct", "amg"), default="direct")
    ap.add_argument("--semfem-inner", choices=("amg", "direct"), default="amg")
    ap.add_argument("--cheb-order", type=int, default=2)
    ap.add_argument("--lambda-bounds", type=_bounds, default=(0.1, 1.1), metavar="MIN,MAX")
    ap.add_argument("--trials", type=int, default=3, help="auto-tuner timing trials")
    ap.add_argument("-q", "--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = RunSpec(eps=args.eps or [1.0, 0.3, 0.05], elems=args.elems, orders=args.order or [7],
                       precond=args.precond or ["auto"], tol=args.tol, restart=args.restart,
                       max_iters=args.max_iters, seed=args.seed, out=args.out,
                       dump_matrix=args.dump_matrix, coarse=args.coarse,
                       semfem_inner=args.semfem_inner, cheb_order=args.cheb_order,
                       lambda_bounds=args.lambda_bounds, tune_trials=args.trials)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    log = None if args.quiet else (lambda s: print(s, file=sys.stderr, flush=True))
    rows = run_suite(spec, log=log)
    sys.stdout.write(format_rows([r for r in rows if r.phase == "solve"]))
    return 0 if all(r.converged for r in rows if r.phase == "solve") else 1


if __name__ == "__main__":
    sys.exit(main())
