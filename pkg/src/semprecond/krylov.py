"""Restarted right-preconditioned GMRES and projection onto prior solutions."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Operator = Callable[[np.ndarray], np.ndarray]


def _identity(v):
    return v


@dataclass
class GmresConfig:
    restart: int = 20
    tol: float = 1e-8
    max_iters: int = 500
    abs_tol: float | None = None

    def __post_init__(self):
        if self.restart < 1:
            raise ValueError("restart must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class GmresStats:
    iterations: int = 0
    converged: bool = False
    rel_res: float = np.nan
    abs_res: float = np.nan
    wall_time: float = 0.0
    restarts: int = 0
    history: list = field(default_factory=list)  # least-squares residual per iteration


def gmres_solve(A: Operator, M: Operator | None, b: np.ndarray, x0: np.ndarray | None = None,
                config: GmresConfig | None = None) -> tuple[np.ndarray, GmresStats]:
    """Solve ``A x = b`` with GMRES(m), right preconditioned by ``M``.

    Convergence is tested on the unpreconditioned residual:
    ``||b - A x|| <= tol ||b - A x0||``, or ``<= abs_tol`` when that is set.
    A starting guess whose residual is already below ``tol ||b||`` returns
    immediately with zero iterations.
    """
    cfg = config or GmresConfig()
    M = M or _identity
    t0 = time.perf_counter()
    stats = GmresStats()
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - A(x) if x0 is not None else b.copy()
    beta = np.linalg.norm(r)
    ref = beta
    bnorm = np.linalg.norm(b)
    target = cfg.abs_tol if cfg.abs_tol is not None else cfg.tol * ref

    if beta == 0.0 or beta <= cfg.tol * bnorm or (cfg.abs_tol is not None and beta <= cfg.abs_tol):
        stats.converged = True
        stats.abs_res = beta
        stats.rel_res = 0.0 if ref == 0.0 else 1.0
        stats.wall_time = time.perf_counter() - t0
        return x, stats

    m = cfg.restart
    n = b.size
    while True:
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k = 0
        stop = False
        for j in range(m):
            w = A(M(V[j]))
            # classical Gram-Schmidt, two passes
            h = V[:j + 1] @ w
            w = w - V[:j + 1].T @ h
            h2 = V[:j + 1] @ w
            w = w - V[:j + 1].T @ h2
            H[:j + 1, j] = h + h2
            hn = np.linalg.norm(w)
            H[j + 1, j] = hn
            for i in range(j):
                a, c = H[i, j], H[i + 1, j]
                H[i, j] = cs[i] * a + sn[i] * c
                H[i + 1, j] = -sn[i] * a + cs[i] * c
            denom = np.hypot(H[j, j], H[j + 1, j])
            cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            stats.iterations += 1
            res = abs(g[j + 1])
            stats.history.append(res)
            breakdown = hn <= 1e-14 * np.abs(H[:j + 1, j]).max()
            if res <= target or stats.iterations >= cfg.max_iters or breakdown:
                stop = True
                break
            V[j + 1] = w / hn
        y = _back_substitute(H[:k, :k], g[:k])
        x = x + M(V[:k].T @ y)
        r = b - A(x)
        beta = np.linalg.norm(r)
        if beta <= target or stats.iterations >= cfg.max_iters or (stop and res > target):
            # the last condition: breakdown; nothing more to gain from restarting
            break
        stats.restarts += 1

    stats.abs_res = beta
    stats.rel_res = beta / ref
    stats.converged = bool(beta <= target * (1.0 + 1e-8))
    stats.wall_time = time.perf_counter() - t0
    return x, stats


def _back_substitute(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    k = g.size
    y = np.zeros(k)
    for i in range(k - 1, -1, -1):
        y[i] = (g[i] - R[i, i + 1:] @ y[i + 1:]) / R[i, i]
    return y


class ProjectionBasis:
    """Up to ``max_vectors`` prior solutions kept A-orthonormal.

    ``A @ x`` for every stored vector is cached so projection costs no
    operator applications.
    """

    def __init__(self, A: Operator, max_vectors: int = 10):
        self.A = A
        self.max_vectors = max_vectors
        self.X: list[np.ndarray] = []
        self.AX: list[np.ndarray] = []

    def __len__(self):
        return len(self.X)

    def project(self, b: np.ndarray) -> np.ndarray:
        """Best approximation to ``A^{-1} b`` in the span, in the A-norm."""
        xbar = np.zeros_like(b)
        for xt in self.X:
            xbar += (xt @ b) * xt
        return xbar

    def update(self, x_new: np.ndarray) -> bool:
        """A-orthonormalize ``x_new`` into the basis; returns False if skipped."""
        x = np.array(x_new, dtype=float)
        Ax = self.A(x)
        norm0 = np.sqrt(abs(x @ Ax))
        if norm0 == 0.0:
            return False
        for _ in range(2):
            for xt, axt in zip(self.X, self.AX):
                c = xt @ Ax
                x -= c * xt
                Ax -= c * axt
        norm = np.sqrt(abs(x @ Ax))
        if norm <= 1e-10 * norm0:
            return False
        if len(self.X) >= self.max_vectors:
            # evict the oldest; the rest stay A-orthonormal
            self.X.pop(0)
            self.AX.pop(0)
        self.X.append(x / norm)
        self.AX.append(Ax / norm)
        return True


def project_initial_guess(basis: ProjectionBasis, b: np.ndarray) -> np.ndarray:
    return basis.project(b)


def update_basis(basis: ProjectionBasis, x_new: np.ndarray) -> bool:
    return basis.update(x_new)


def solve_projected(A: Operator, M: Operator | None, b: np.ndarray, basis: ProjectionBasis,
                    config: GmresConfig | None = None) -> tuple[np.ndarray, GmresStats]:
    """Projected initial guess, GMRES, then add the new solution to the basis."""
    x0 = basis.project(b)
    x, stats = gmres_solve(A, M, b, x0 if len(basis) else None, config)
    basis.update(x)
    return x, stats
