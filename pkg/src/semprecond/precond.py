"""Preconditioner descriptions, default schedules and the factory.

Labels follow the ``Cheby-XXX(eta),(p,...,1)`` convention, e.g.
``Cheby-ASM(2),(7,3,1)``, ``RAS,(7,3,1)`` or ``SEMFEM``.
"""
from __future__ import annotations

import re
import time
from dataclasses import dataclass, replace

from .pmg import PMGPreconditioner, validate_schedule
from .semfem import SemfemPreconditioner

_SCHWARZ_SCHEDULES = {7: (7, 3, 1), 9: (9, 5, 1)}
_JACOBI_SCHEDULES = {7: (7, 5, 3, 1), 9: (9, 7, 5, 1)}


def default_schedule(p: int, smoother: str) -> tuple[int, ...]:
    """Paper schedules at p = 7 and 9; otherwise a similar pattern.

    Schwarz smoothers drop roughly by half, Jacobi by two orders at a time.
    """
    if p < 2:
        raise ValueError("p-multigrid needs p >= 2")
    if smoother == "jac":
        if p in _JACOBI_SCHEDULES:
            return _JACOBI_SCHEDULES[p]
        orders = list(range(p, 1, -2))
        return tuple(orders) + (1,)
    if p in _SCHWARZ_SCHEDULES:
        return _SCHWARZ_SCHEDULES[p]
    mid = (p + 1) // 2
    if p <= 3 or mid < 2:
        return (p, 1)
    return (p, mid, 1)


@dataclass(frozen=True)
class PreconditionerConfig:
    kind: str = "pmg"  # "pmg" | "semfem"
    smoother: str = "asm"  # asm | ras | jac
    chebyshev: bool = True
    cheb_order: int = 2
    schedule: tuple[int, ...] = ()
    lambda_bounds: tuple[float, float] = (0.1, 1.1)
    coarse: str = "direct"
    semfem_inner: str = "amg"

    @property
    def label(self) -> str:
        if self.kind == "semfem":
            return "SEMFEM"
        name = self.smoother.upper()
        if self.chebyshev:
            name = f"Cheby-{name}({self.cheb_order})"
        return f"{name},({','.join(str(q) for q in self.schedule)})"

    def with_order(self, p: int) -> "PreconditionerConfig":
        if self.kind != "pmg" or (self.schedule and self.schedule[0] == p):
            return self
        return replace(self, schedule=default_schedule(p, self.smoother))


_LABEL = re.compile(
    r"^(?P<cheb>cheby-)?(?P<sm>asm|ras|jac)(?:\((?P<order>\d+)\))?"
    r"(?:\s*,\s*\((?P<sched>[\d,\s]+)\))?$",
    re.IGNORECASE,
)


def parse_config(label: str, p: int, **options) -> PreconditionerConfig:
    """Parse a label such as ``Cheby-RAS(2),(7,3,1)``, ``cheby-jac`` or ``semfem``.

    Missing schedules are filled with :func:`default_schedule`; ``options``
    override the remaining fields (coarse, semfem_inner, lambda_bounds,
    cheb_order).
    """
    text = label.strip()
    if text.lower() == "semfem":
        opts = {k: v for k, v in options.items() if k == "semfem_inner"}
        return PreconditionerConfig(kind="semfem", **opts)
    m = _LABEL.match(text.replace(" ", ""))
    if not m:
        raise ValueError(f"cannot parse preconditioner label {label!r}")
    smoother = m["sm"].lower()
    cheb = m["cheb"] is not None
    order = int(m["order"]) if m["order"] else options.pop("cheb_order", 2)
    options.pop("cheb_order", None)
    options.pop("semfem_inner", None)
    if m["sched"]:
        schedule = validate_schedule([int(v) for v in m["sched"].split(",") if v], p)
    else:
        schedule = default_schedule(p, smoother)
    return PreconditionerConfig(kind="pmg", smoother=smoother, chebyshev=cheb, cheb_order=order,
                                schedule=schedule, **options)


def tune_space(p: int, **options) -> list[PreconditionerConfig]:
    """Default auto-tuner candidates (three Chebyshev pMG variants plus SEMFEM)."""
    return [
        parse_config("Cheby-ASM(2)", p, **options),
        parse_config("Cheby-RAS(2)", p, **options),
        parse_config("Cheby-Jac(2)", p, **options),
        parse_config("SEMFEM", p, **options),
    ]


def make_preconditioner(op, config: PreconditionerConfig, seed: int = 0):
    """Set up the preconditioner; returns ``(callable, setup_seconds)``."""
    t0 = time.perf_counter()
    if config.kind == "semfem":
        M = SemfemPreconditioner(op, inner=config.semfem_inner)
    elif config.kind == "pmg":
        M = PMGPreconditioner(op, config.schedule, smoother=config.smoother,
                              chebyshev=config.chebyshev, cheb_order=config.cheb_order,
                              lambda_bounds=config.lambda_bounds, coarse=config.coarse, seed=seed)
    else:
        raise ValueError(f"unknown preconditioner kind {config.kind!r}")
    return M, time.perf_counter() - t0
