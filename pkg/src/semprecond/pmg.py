"""p-multigrid V-cycle preconditioner on a fixed mesh."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse.linalg as spla

from .amg import amg_setup, amg_vcycle
from .chebyshev import ChebyParams, ChebyshevSmoother, JacobiSmoother
from .schwarz import SchwarzSmoother
from .sem import SemOperator, gll, interp_matrix, tensor_apply

SMOOTHERS = ("asm", "ras", "jac", "none")


def validate_schedule(schedule, p: int | None = None) -> tuple[int, ...]:
    s = tuple(int(v) for v in schedule)
    if len(s) < 2:
        raise ValueError(f"schedule needs at least two levels, got {s}")
    if p is not None and s[0] != p:
        raise ValueError(f"schedule {s} must start at the problem order {p}")
    if s[-1] != 1:
        raise ValueError(f"schedule {s} must end at order 1")
    if any(a <= b for a, b in zip(s, s[1:])):
        raise ValueError(f"schedule {s} must be strictly decreasing")
    return s


class Transfer:
    """Interpolation between two orders on the same mesh.

    ``prolong`` interpolates element-wise, averages shared nodes and masks;
    ``restrict`` is its exact transpose.
    """

    def __init__(self, fine: SemOperator, coarse: SemOperator):
        self.fine = fine
        self.coarse = coarse
        self.J = interp_matrix(gll(coarse.p).nodes, gll(fine.p).nodes)
        self._inv_mult_local = 1.0 / fine.mult[fine.loc2glob]

    def prolong(self, uc: np.ndarray) -> np.ndarray:
        c, f = self.coarse, self.fine
        uL = tensor_apply(self.J, self.J, self.J, c.scatter(uc * c.mask))
        return f.gather(uL * self._inv_mult_local) * f.mask

    def restrict(self, rf: np.ndarray) -> np.ndarray:
        c, f = self.coarse, self.fine
        JT = self.J.T
        rL = f.scatter(rf * f.mask) * self._inv_mult_local
        return c.gather(tensor_apply(JT, JT, JT, rL)) * c.mask


class CoarseSolver:
    """Coarse-grid solve: sparse LU (``"direct"``) or one AMG V-cycle (``"amg"``).

    Works on the free dofs. Neumann operators pin one dof and return a
    zero-mean correction.
    """

    def __init__(self, op: SemOperator, method: str = "direct"):
        if method not in ("direct", "amg"):
            raise ValueError(f"unknown coarse solver {method!r}")
        self.op = op
        self.method = method
        self.matrix = op.assemble()
        free = np.flatnonzero(op.mask)
        if op.neumann:
            free = free[1:]
        self.free = free
        Af = self.matrix[free][:, free]
        if method == "direct":
            try:
                self._lu = spla.splu(Af.tocsc())
            except RuntimeError as exc:
                raise np.linalg.LinAlgError(f"singular coarse matrix: {exc}") from exc
        else:
            self.hierarchy = amg_setup(Af.tocsr())

    def __call__(self, r: np.ndarray) -> np.ndarray:
        if self.op.neumann:
            r = r - r.mean()
        rf = r[self.free]
        if self.method == "direct":
            zf = self._lu.solve(rf)
        else:
            zf = amg_vcycle(self.hierarchy, rf)
        z = np.zeros_like(r)
        z[self.free] = zf
        if self.op.neumann:
            z -= z.mean()
        return z


@dataclass
class MgLevel:
    order: int
    op: SemOperator
    surrogate: Callable | None = None  # S: Schwarz or Jacobi
    chebyshev: ChebyshevSmoother | None = None
    transfer: Transfer | None = None  # to the next coarser level

    def smooth(self, b: np.ndarray, x: np.ndarray | None) -> np.ndarray:
        if self.chebyshev is not None:
            return self.chebyshev(b, x)
        if self.surrogate is None:
            return np.zeros_like(b) if x is None else x
        if x is None:
            return self.surrogate(b)
        return x + self.surrogate(b - self.op.apply(x))


def build_hierarchy(op: SemOperator, schedule, smoother: str = "asm", chebyshev: bool = True,
                    cheb_order: int = 2, lambda_bounds=(0.1, 1.1), seed: int = 0) -> list[MgLevel]:
    """Levels for ``schedule``; the last (order 1) level carries no smoother."""
    schedule = validate_schedule(schedule, op.p)
    if smoother not in SMOOTHERS:
        raise ValueError(f"unknown smoother {smoother!r}")
    ops = [op] + [SemOperator(op.mesh, q, neumann=op.neumann) for q in schedule[1:]]
    levels = []
    for i, (q, lop) in enumerate(zip(schedule, ops)):
        lv = MgLevel(order=q, op=lop)
        if i < len(ops) - 1:
            lv.transfer = Transfer(lop, ops[i + 1])
            if smoother in ("asm", "ras"):
                lv.surrogate = SchwarzSmoother(lop, smoother)
            elif smoother == "jac":
                lv.surrogate = JacobiSmoother(lop)
            if chebyshev and lv.surrogate is not None:
                params = ChebyParams(cheb_order, lambda_bounds[0], lambda_bounds[1])
                lv.chebyshev = ChebyshevSmoother(lv.surrogate, lop.apply, lop.n_global, params,
                                                 mask=lop.mask, seed=seed)
        levels.append(lv)
    return levels


class PMGPreconditioner:
    """Single V-cycle p-multigrid preconditioner, ``z = M b`` from ``x0 = 0``.

    ``mode="standard"`` pre-smooths, corrects from the coarser level and
    post-smooths. ``mode="additive"`` smooths every level on its restricted
    residual and sums the prolongated corrections (no post-smoothing); it is
    the default for plain (non-Chebyshev) Schwarz smoothers.
    """

    def __init__(self, op: SemOperator, schedule, smoother: str = "asm", chebyshev: bool = True,
                 cheb_order: int = 2, lambda_bounds=(0.1, 1.1), coarse: str = "direct",
                 mode: str | None = None, seed: int = 0):
        if mode is None:
            mode = "additive" if (smoother in ("asm", "ras") and not chebyshev) else "standard"
        if mode not in ("standard", "additive"):
            raise ValueError(f"unknown cycle mode {mode!r}")
        self.mode = mode
        self.levels = build_hierarchy(op, schedule, smoother, chebyshev, cheb_order,
                                      lambda_bounds, seed)
        self.coarse = CoarseSolver(self.levels[-1].op, coarse)

    @property
    def schedule(self) -> tuple[int, ...]:
        return tuple(lv.order for lv in self.levels)

    def lambda_tildes(self) -> list[float]:
        return [lv.chebyshev.params.lambda_tilde for lv in self.levels if lv.chebyshev is not None]

    def vcycle(self, b: np.ndarray, mode: str | None = None) -> np.ndarray:
        mode = mode or self.mode
        z = self._standard(0, b) if mode == "standard" else self._additive(0, b)
        if self.levels[0].op.neumann:
            z -= z.mean()
        return z

    __call__ = vcycle

    def _standard(self, i: int, b: np.ndarray) -> np.ndarray:
        if i == len(self.levels) - 1:
            return self.coarse(b)
        lv = self.levels[i]
        x = lv.smooth(b, None)
        r = b - lv.op.apply(x)
        x = x + lv.transfer.prolong(self._standard(i + 1, lv.transfer.restrict(r)))
        return lv.smooth(b, x)

    def _additive(self, i: int, r: np.ndarray) -> np.ndarray:
        if i == len(self.levels) - 1:
            return self.coarse(r)
        lv = self.levels[i]
        z = lv.smooth(r, None)
        return z + lv.transfer.prolong(self._additive(i + 1, lv.transfer.restrict(r)))
