"""Low-order (SEMFEM) preconditioning on the GLL lattice.

Every GLL sub-volume of every spectral element is covered by eight linear
tetrahedra, one per sub-cell vertex (the vertex plus its three edge-adjacent
vertices). Each corner tet holds 1/6 of the sub-cell volume, so the eight
together cover it 4/3 times and their stiffness is summed with weight 3/4;
on axis-aligned bricks this reproduces the vertex-quadrature trilinear
stiffness exactly. The resulting sparse ``A_F`` lives on exactly the
same global dofs as the spectral operator and is applied inverted, without
mass scaling (the "weak" preconditioner).
"""
from __future__ import annotations

import itertools

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .amg import amg_setup, amg_vcycle
from .sem import SemOperator, dirichlet_eliminate

TET_WEIGHT = 0.75
_CORNERS = list(itertools.product((0, 1), repeat=3))  # (dz, dy, dx)


def _corner_tets():
    """Sub-cell vertex offsets for the 8 corner tets, each (4, 3) as (dx, dy, dz)."""
    tets = []
    for dz, dy, dx in _CORNERS:
        v = (dx, dy, dz)
        flips = [(1 - dx, dy, dz), (dx, 1 - dy, dz), (dx, dy, 1 - dz)]
        tets.append([v] + flips)
    return np.array(tets)


def tet_stiffness(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linear-tet stiffness matrices for vertices ``X[..., 4, 3]``.

    Returns ``(K[..., 4, 4], signed_volume[...])``.
    """
    T = np.swapaxes(X[..., 1:, :] - X[..., :1, :], -1, -2)  # columns are edges
    det = np.linalg.det(T)
    Tinv = np.linalg.inv(T)  # rows are grad(lambda_1..3)
    grads = np.concatenate([-Tinv.sum(axis=-2, keepdims=True), Tinv], axis=-2)
    vol = np.abs(det) / 6.0
    K = vol[..., None, None] * (grads @ np.swapaxes(grads, -1, -2))
    return K, det / 6.0


def assemble_semfem(op: SemOperator, masked: bool = True) -> sp.csr_matrix:
    """Sparse low-order stiffness ``A_F`` on the operator's GLL lattice."""
    p = op.p
    x = op.coords
    l2g = op.loc2glob
    tets = _corner_tets()
    vals, rows, cols = [], [], []
    for t, verts in enumerate(tets):
        sign = (-1) ** int(verts[0].sum())
        Xs, ids = [], []
        for dx, dy, dz in verts:
            sl = (slice(None), slice(dz, dz + p), slice(dy, dy + p), slice(dx, dx + p))
            Xs.append(x[sl])
            ids.append(l2g[sl])
        X = np.stack(Xs, axis=-2)  # (E, p, p, p, 4, 3)
        ids = np.stack(ids, axis=-1)  # (E, p, p, p, 4)
        K, vol = tet_stiffness(X)
        if np.any(sign * vol <= 0.0):
            e, k, j, i = np.argwhere(sign * vol <= 0.0)[0]
            raise ValueError(f"inverted tetrahedron {t} in element {e}, sub-cell (i={i}, j={j}, k={k})")
        vals.append(TET_WEIGHT * K.reshape(-1, 16))
        rows.append(np.repeat(ids.reshape(-1, 4), 4, axis=1))
        cols.append(np.tile(ids.reshape(-1, 4), (1, 4)))
    n = op.n_global
    AF = sp.coo_matrix(
        (np.concatenate(vals).ravel(), (np.concatenate(rows).ravel(), np.concatenate(cols).ravel())),
        shape=(n, n),
    ).tocsr()
    AF.sum_duplicates()
    if masked and not op.neumann:
        AF = dirichlet_eliminate(AF, op.mask)
    return AF


class SemfemPreconditioner:
    """``z = A_F^{-1} r`` via one AMG V-cycle (``inner="amg"``) or exactly.

    The inner solver works on the free dofs only; in Neumann mode one dof
    is pinned and the constant mode is projected out of the result.
    """

    def __init__(self, op: SemOperator, inner: str = "amg", **amg_options):
        if inner not in ("amg", "direct"):
            raise ValueError(f"unknown SEMFEM inner solver {inner!r}")
        self.op = op
        self.inner = inner
        self.AF = assemble_semfem(op)
        free = np.flatnonzero(op.mask)
        if op.neumann:
            free = free[1:]
        self.free = free
        Afree = self.AF[free][:, free].tocsc()
        if inner == "direct":
            self._lu = spla.splu(Afree)
            self.hierarchy = None
        else:
            self._lu = None
            self.hierarchy = amg_setup(Afree.tocsr(), **amg_options)

    def apply(self, r: np.ndarray) -> np.ndarray:
        op = self.op
        if op.neumann:
            r = r - r.mean()
        rf = r[self.free]
        if self._lu is not None:
            zf = self._lu.solve(rf)
        else:
            zf = amg_vcycle(self.hierarchy, rf)
        z = np.zeros(op.n_global)
        z[self.free] = zf
        if op.neumann:
            z -= z.mean()
        return z

    __call__ = apply


def dump_matrix(A: sp.spmatrix, path) -> None:
    """Coordinate text format: one ``row col value`` line per stored entry."""
    A = sp.coo_matrix(A)
    with open(path, "w") as fh:
        fh.write(f"% {A.shape[0]} {A.shape[1]} {A.nnz}\n")
        np.savetxt(fh, np.column_stack([A.row, A.col, A.data]), fmt=["%d", "%d", "%.17g"])


def load_matrix(path) -> sp.csr_matrix:
    with open(path) as fh:
        n, m, _ = (int(v) for v in fh.readline().lstrip("% ").split())
        data = np.loadtxt(fh, ndmin=2)
    return sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(n, m))
