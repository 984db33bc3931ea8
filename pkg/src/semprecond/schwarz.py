"""Overlapping Schwarz smoothers with fast-diagonalization local solves.

Each element is approximated by a box whose side lengths are the mean
parametric edge arc lengths. The box is extended by one GLL node into each
face neighbor, giving a separable local operator of size ``(p + 3)^3`` that
is inverted exactly by the fast diagonalization method (FDM).

Dofs that drop out of a local problem (Dirichlet boundary nodes, and the
missing extension beyond the physical boundary) are kept in the tensor box
as decoupled unit rows, so every element has the same ``(p + 3)^3`` shape.
They receive zero data and their output is discarded, which is equivalent to
removing them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sem import SemOperator, gll

# extension kinds per side
NEIGHBOR, DIRICHLET, GHOST = 0, 1, 2


@dataclass
class BoxApprox1D:
    """Extended 1D stiffness/mass pairs, ``A[e, d]`` and ``B[e, d]``."""

    p: int
    lengths: np.ndarray  # (E, 3) box dimensions
    side_lengths: np.ndarray  # (E, 3, 2) lengths used for the -/+ extension
    side_kind: np.ndarray  # (E, 3, 2)
    A: np.ndarray  # (E, 3, pb, pb)
    B: np.ndarray

    @property
    def pbar(self) -> int:
        return self.p + 3


@dataclass
class FdmFactors:
    S: np.ndarray  # (E, 3, pb, pb), columns are generalized eigenvectors
    lam: np.ndarray  # (E, 3, pb)
    D: np.ndarray  # (E, pb, pb, pb) indexed [e, k, j, i]


def edge_lengths(coords: np.ndarray, p: int) -> np.ndarray:
    """Arc lengths of the 12 parametric edges, ``(E, 3, 4)``, by GLL quadrature."""
    rule = gll(p)
    D, w = rule.diff, rule.weights
    ends = (0, p)
    out = np.empty(coords.shape[:1] + (3, 4))
    c = 0
    for a in ends:
        for b in ends:
            # x-direction edges: vary i at fixed (j, k) = (a, b)
            ex = coords[:, b, a, :, :]
            ey = coords[:, b, :, a, :]
            ez = coords[:, :, b, a, :]
            for d, edge in enumerate((ex, ey, ez)):
                speed = np.linalg.norm(np.einsum("im,ema->eia", D, edge), axis=-1)
                out[:, d, c] = speed @ w
            c += 1
    return out


def _line_matrices(rule, L):
    """1D GLL stiffness and mass on an interval of length ``L`` (batched)."""
    Ahat = rule.stiffness()
    L = np.asarray(L, dtype=float)[..., None, None]
    return (2.0 / L) * Ahat, (0.5 * L) * np.diag(rule.weights)


def build_box_approx(op: SemOperator) -> BoxApprox1D:
    """Extended box approximations for every element at the operator's order."""
    if op.p < 2:
        raise ValueError("box approximation needs order >= 2 (one interior node to extend into)")
    p = op.p
    rule = op.rule
    mesh = op.mesh
    E = op.n_elements
    lengths = edge_lengths(op.coords, p).mean(axis=-1)
    if np.any(lengths <= 0.0):
        bad = int(np.argwhere(lengths <= 0.0)[0, 0])
        raise ValueError(f"degenerate element {bad}: zero box length")

    nb = mesh.neighbors
    side_len = np.empty((E, 3, 2))
    kind = np.empty((E, 3, 2), dtype=np.int64)
    for d in range(3):
        for s in range(2):
            n = nb[:, 2 * d + s]
            has = n >= 0
            side_len[:, d, s] = np.where(has, lengths[np.where(has, n, 0), d], lengths[:, d])
            kind[:, d, s] = np.where(has, NEIGHBOR, GHOST if op.neumann else DIRICHLET)

    pb = p + 3
    A = np.zeros((E, 3, pb, pb))
    B = np.zeros((E, 3, pb, pb))
    Ao, Bo = _line_matrices(rule, lengths)
    Al, Bl = _line_matrices(rule, side_len[..., 0])
    Ar, Br = _line_matrices(rule, side_len[..., 1])
    A[..., 1:p + 2, 1:p + 2] += Ao
    B[..., 1:p + 2, 1:p + 2] += Bo
    # left neighbor contributes its last two nodes, right neighbor its first two
    A[..., 0:2, 0:2] += Al[..., p - 1:, p - 1:]
    B[..., 0:2, 0:2] += Bl[..., p - 1:, p - 1:]
    A[..., p + 1:, p + 1:] += Ar[..., :2, :2]
    B[..., p + 1:, p + 1:] += Br[..., :2, :2]

    for s, drop in ((0, (0, 1)), (1, (p + 1, p + 2))):
        e_idx, d_idx = np.nonzero(kind[..., s] == DIRICHLET)
        for q in drop:
            A[e_idx, d_idx, q, :] = 0.0
            A[e_idx, d_idx, :, q] = 0.0
            B[e_idx, d_idx, q, :] = 0.0
            B[e_idx, d_idx, :, q] = 0.0
            A[e_idx, d_idx, q, q] = 1.0
            B[e_idx, d_idx, q, q] = 1.0
    return BoxApprox1D(p, lengths, side_len, kind, A, B)


def fdm_setup(A: np.ndarray, B: np.ndarray) -> FdmFactors:
    """Generalized eigendecomposition ``A s = lam B s`` per element/direction.

    ``A``, ``B`` have shape ``(E, 3, pb, pb)``; ``B`` must be SPD. Returns
    ``S`` with ``S^T B S = I`` and ``S^T A S = diag(lam)``.
    """
    E = A.shape[0]
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        for e in range(E):
            for d in range(3):
                try:
                    np.linalg.cholesky(B[e, d])
                except np.linalg.LinAlgError:
                    raise np.linalg.LinAlgError(
                        f"FDM setup failed: mass matrix not SPD in element {e}, direction {d}"
                    ) from None
        raise
    Linv = np.linalg.inv(L)
    C = Linv @ A @ np.swapaxes(Linv, -1, -2)
    C = 0.5 * (C + np.swapaxes(C, -1, -2))
    lam, V = np.linalg.eigh(C)
    S = np.swapaxes(Linv, -1, -2) @ V
    D = lam[:, 2, :, None, None] + lam[:, 1, None, :, None] + lam[:, 0, None, None, :]
    return FdmFactors(S=S, lam=lam, D=D)


def fdm_solve(f: FdmFactors, r: np.ndarray) -> np.ndarray:
    """Apply ``(Sz x Sy x Sx) D^{-1} (Sz x Sy x Sx)^T`` to ``r[e, k, j, i]``."""
    if np.any(f.D == 0.0):
        bad = int(np.argwhere(f.D == 0.0)[0, 0])
        raise ZeroDivisionError(f"zero FDM eigenvalue sum in element {bad}")
    Sx, Sy, Sz = f.S[:, 0], f.S[:, 1], f.S[:, 2]
    u = np.einsum("eia,ekji->ekja", Sx, r)
    u = np.einsum("ejb,ekji->ekbi", Sy, u)
    u = np.einsum("ekc,ekji->ecji", Sz, u)
    u /= f.D
    u = np.einsum("eia,ekja->ekji", Sx, u)
    u = np.einsum("ejb,ekbi->ekji", Sy, u)
    return np.einsum("ekc,ecji->ekji", Sz, u)


def kron_operator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Dense ``Bz(x)By(x)Ax + Bz(x)Ay(x)Bx + Az(x)By(x)Bx`` for one element."""
    Ax, Ay, Az = A
    Bx, By, Bz = B
    return np.kron(Bz, np.kron(By, Ax)) + np.kron(Bz, np.kron(Ay, Bx)) + np.kron(Az, np.kron(By, Bx))


def extended_indices(op: SemOperator) -> np.ndarray:
    """Global dof of every extended-box node, ``(E, pb, pb, pb)``; -1 if absent.

    Only face overlap is used: nodes lying in the extension layer of more
    than one direction (edge/vertex neighbors) are absent, as are nodes
    outside the domain.
    """
    p = op.p
    mesh = op.mesh
    Nx, Ny, Nz = mesh.lattice_shape(p)
    E = op.n_elements
    off = np.array([mesh.element_index(e) for e in range(E)]) * p - 1
    a = np.arange(p + 3)
    gx = off[:, 0, None, None, None] + a[None, None, None, :]
    gy = off[:, 1, None, None, None] + a[None, None, :, None]
    gz = off[:, 2, None, None, None] + a[None, :, None, None]
    ext = lambda i: (i == 0) | (i == p + 2)  # noqa: E731
    n_ext = (
        ext(a)[None, None, None, :].astype(int)
        + ext(a)[None, None, :, None].astype(int)
        + ext(a)[None, :, None, None].astype(int)
    )
    inside = (gx >= 0) & (gx < Nx) & (gy >= 0) & (gy < Ny) & (gz >= 0) & (gz < Nz)
    valid = inside & (n_ext <= 1)
    g = gx + Nx * (gy + Ny * gz)
    return np.where(valid, g, -1)


class SchwarzSmoother:
    """ASM or RAS smoother ``s = sum_e W_e R_e^T Abar_e^{-1} R_e r``.

    ``mode="asm"`` sums overlapping results and post-multiplies by the
    inverse subdomain count; ``mode="ras"`` keeps each global dof only from
    its owning element (interior nodes: the element itself, shared element
    boundary nodes: the lowest element id).
    """

    def __init__(self, op: SemOperator, mode: str = "asm"):
        if mode not in ("asm", "ras"):
            raise ValueError(f"unknown Schwarz mode {mode!r}")
        self.op = op
        self.mode = mode
        self.box = build_box_approx(op)
        self.factors = fdm_setup(self.box.A, self.box.B)
        idx = extended_indices(op)
        self.ext_index = idx
        self._valid = idx >= 0
        self._gather_idx = np.where(self._valid, idx, op.n_global)
        self._scatter_idx = idx[self._valid]
        counts = np.bincount(self._scatter_idx, minlength=op.n_global).astype(float)
        self.counts = counts
        if mode == "asm":
            self.weights = 1.0 / np.maximum(counts, 1.0)
            self._owned = None
        else:
            E = op.n_elements
            owner = np.full(op.n_global, E, dtype=np.int64)
            np.minimum.at(owner, op.loc2glob.ravel(),
                          np.repeat(np.arange(E), op.loc2glob[0].size))
            own = np.zeros(idx.shape, dtype=bool)
            p = op.p
            inner = own[:, 1:p + 2, 1:p + 2, 1:p + 2]
            inner[...] = owner[op.loc2glob] == np.arange(E)[:, None, None, None]
            self._owned = own[self._valid].astype(float)
            self.weights = None

    def restrict(self, r: np.ndarray) -> np.ndarray:
        """``R_e r`` for all elements, zero at absent nodes."""
        return np.append(r, 0.0)[self._gather_idx]

    def apply(self, r: np.ndarray) -> np.ndarray:
        op = self.op
        y = fdm_solve(self.factors, self.restrict(r * op.mask))
        vals = y[self._valid]
        if self.mode == "asm":
            s = np.bincount(self._scatter_idx, weights=vals, minlength=op.n_global)
            s *= self.weights
        else:
            s = np.bincount(self._scatter_idx, weights=vals * self._owned, minlength=op.n_global)
        return s * op.mask

    __call__ = apply

    def ownership_count(self) -> np.ndarray:
        """Number of subdomains owning each global dof (RAS: exactly 1)."""
        if self.mode != "ras":
            raise ValueError("ownership is only defined for RAS")
        return np.bincount(self._scatter_idx, weights=self._owned, minlength=self.op.n_global)
