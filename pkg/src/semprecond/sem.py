"""Spectral element core: GLL machinery, geometric factors and the
matrix-free Poisson operator ``A = Q^T A_L Q`` on hexahedral meshes.

Local arrays are laid out as ``u[e, k, j, i]`` (i is the x/r index and runs
fastest), so ``u.reshape(E, -1)`` is lexicographic per element.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import legendre as npleg


@dataclass(frozen=True)
class Gll1D:
    """Gauss-Lobatto-Legendre nodes, weights and nodal derivative matrix."""

    p: int
    nodes: np.ndarray
    weights: np.ndarray
    diff: np.ndarray

    @property
    def n(self) -> int:
        return self.p + 1

    def stiffness(self) -> np.ndarray:
        """Reference 1D stiffness ``D^T W D`` on [-1, 1]."""
        return self.diff.T @ (self.weights[:, None] * self.diff)


def _legendre(p: int, x: np.ndarray) -> np.ndarray:
    c = np.zeros(p + 1)
    c[p] = 1.0
    return npleg.legval(x, c)


@lru_cache(maxsize=None)
def gll(p: int) -> Gll1D:
    """GLL rule of order ``p`` (p + 1 points)."""
    if not 1 <= p <= 16:
        raise ValueError(f"GLL order must be in [1, 16], got {p}")
    n = p + 1
    # Newton on (1 - x^2) P_p'(x), Chebyshev-Gauss-Lobatto start
    x = -np.cos(np.pi * np.arange(n) / p)
    c = np.zeros(p + 1)
    c[p] = 1.0
    dc = npleg.legder(c)
    d2c = npleg.legder(dc)
    inner = x[1:-1].copy()
    for _ in range(100):
        f = npleg.legval(inner, dc)
        fp = npleg.legval(inner, d2c)
        step = f / fp
        inner -= step
        if np.max(np.abs(step), initial=0.0) < 1e-16:
            break
    x[1:-1] = inner
    x[0], x[-1] = -1.0, 1.0
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    if n % 2:
        x[p // 2] = 0.0

    lp = _legendre(p, x)
    w = 2.0 / (p * (p + 1) * lp**2)

    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = lp[i] / (lp[j] * (x[i] - x[j]))
    D[np.diag_indices(n)] = 0.0
    D[np.diag_indices(n)] = -D.sum(axis=1)
    for a in (x, w, D):
        a.flags.writeable = False
    return Gll1D(p=p, nodes=x, weights=w, diff=D)


def interp_matrix(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Lagrange interpolation from nodal values on ``src`` to points ``dst``.

    Barycentric form; rows for points that coincide with a source node are
    exact unit rows.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    diff = src[:, None] - src[None, :]
    np.fill_diagonal(diff, 1.0)
    bw = 1.0 / diff.prod(axis=1)
    delta = dst[:, None] - src[None, :]
    exact = np.isclose(delta, 0.0, rtol=0.0, atol=1e-15)
    delta[exact] = 1.0
    terms = bw[None, :] / delta
    J = terms / terms.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    J[rows] = exact[rows].astype(float)
    return J


def tensor_apply(Mx, My, Mz, u: np.ndarray) -> np.ndarray:
    """Apply ``Mz (x) My (x) Mx`` to a batch ``u[..., k, j, i]``.

    Matrices may be shared (2D) or per-batch (3D, leading batch axis).
    """
    def along(M, u, axis):
        if M.ndim == 2:
            return np.moveaxis(np.tensordot(M, u, axes=([1], [axis])), 0, axis)
        # per-element matrices: M[e, a, b], u[e, ...]
        u = np.moveaxis(u, axis, -1)
        out = np.einsum("e...b,eab->e...a", u, M)
        return np.moveaxis(out, -1, axis)

    u = along(Mx, u, u.ndim - 1)
    u = along(My, u, u.ndim - 2)
    return along(Mz, u, u.ndim - 3)


def jacobian(coords: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Nodal Jacobians of an isoparametric map.

    ``coords[e, k, j, i, a]`` are nodal positions; the result has shape
    ``(E, n, n, n, 3, 3)`` with ``jac[..., b, a] = d x_a / d r_b`` so each
    row is a parametric tangent vector.
    """
    dr = np.einsum("im,ekjma->ekjia", D, coords)
    ds = np.einsum("jm,ekmia->ekjia", D, coords)
    dt = np.einsum("km,emjia->ekjia", D, coords)
    return np.stack([dr, ds, dt], axis=-2)


class SemOperator:
    """Assembled SE Poisson operator at one polynomial order on a mesh.

    Global vectors have one entry per distinct GLL node of the mesh lattice;
    Dirichlet nodes stay in the vector and are held at zero by the mask.
    With ``neumann=True`` nothing is masked and the constant mode is
    projected out of every operator application.
    """

    def __init__(self, mesh, p: int, neumann: bool = False):
        self.mesh = mesh
        self.p = p
        self.neumann = neumann
        self.rule = gll(p)
        self.coords = mesh.nodal_coords(p)  # (E, n, n, n, 3)
        self.loc2glob = mesh.local_to_global(p)
        self.n_global = int(self.loc2glob.max()) + 1
        self.mult = np.bincount(self.loc2glob.ravel(), minlength=self.n_global).astype(float)
        if neumann:
            self.mask = np.ones(self.n_global)
        else:
            self.mask = mesh.dirichlet_mask(p)
        self._geometry()
        self._mass = self.gather(self.mass_local)

    @property
    def n_elements(self) -> int:
        return self.loc2glob.shape[0]

    @property
    def n_free(self) -> int:
        return int(self.mask.sum())

    # -- geometry -----------------------------------------------------------

    def _geometry(self):
        w = self.rule.weights
        jac = jacobian(self.coords, self.rule.diff)
        det = np.linalg.det(jac)
        if np.any(det <= 0.0):
            bad = int(np.argwhere(det <= 0.0)[0, 0])
            raise ValueError(f"non-positive Jacobian in element {bad}")
        w3 = w[:, None, None] * w[None, :, None] * w[None, None, :]  # (k,j,i)
        # grad_r u = jac @ grad_x u
        inv = np.linalg.inv(jac)
        G = np.einsum("...ab,...ac->...bc", inv, inv) * (det * w3)[..., None, None]
        self.jac = jac
        self.detj = det
        self.G = G
        self.mass_local = det * w3

    # -- gather/scatter ---------------------------------------------------------

    def scatter(self, u: np.ndarray) -> np.ndarray:
        """``Q u``: global -> local copies."""
        return u[self.loc2glob]

    def gather(self, uL: np.ndarray) -> np.ndarray:
        """``Q^T u_L``: sum local copies into global dofs (fixed order)."""
        return np.bincount(self.loc2glob.ravel(), weights=uL.ravel(), minlength=self.n_global)

    def gather_scatter(self, uL: np.ndarray) -> np.ndarray:
        """``Q Q^T u_L``."""
        return self.scatter(self.gather(uL))

    def boolean_q(self) -> sp.csr_matrix:
        """Explicit Boolean ``Q`` (rows: local nodes, cols: global dofs)."""
        cols = self.loc2glob.ravel()
        rows = np.arange(cols.size)
        return sp.csr_matrix((np.ones(cols.size), (rows, cols)), shape=(cols.size, self.n_global))

    # -- operators --------------------------------------------------------------

    def apply_local(self, uL: np.ndarray) -> np.ndarray:
        """Element stiffness action ``A^e u^e`` for every element.

        Sum factorization: three 1D derivative contractions, a pointwise 3x3
        metric multiply, and the transposed contractions. Work per element is
        O(p^4); ``A^e`` is never formed.
        """
        D = self.rule.diff
        ur = uL @ D.T
        us = np.einsum("jm,ekmi->ekji", D, uL)
        ut = np.einsum("km,emji->ekji", D, uL)
        G = self.G
        wr = G[..., 0, 0] * ur + G[..., 0, 1] * us + G[..., 0, 2] * ut
        ws = G[..., 1, 0] * ur + G[..., 1, 1] * us + G[..., 1, 2] * ut
        wt = G[..., 2, 0] * ur + G[..., 2, 1] * us + G[..., 2, 2] * ut
        out = wr @ D
        out += np.einsum("mj,ekmi->ekji", D, ws)
        out += np.einsum("mk,emji->ekji", D, wt)
        return out

    def _project_constant(self, u):
        return u - u.mean()

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Masked assembled matvec ``mask Q^T A_L Q mask u``."""
        if self.neumann:
            u = self._project_constant(u)
        out = self.gather(self.apply_local(self.scatter(u * self.mask)))
        out *= self.mask
        if self.neumann:
            out = self._project_constant(out)
        return out

    __call__ = apply

    def apply_mass(self, u: np.ndarray) -> np.ndarray:
        return self._mass * u

    @property
    def mass(self) -> np.ndarray:
        """Assembled (unmasked) diagonal mass matrix."""
        return self._mass

    def local_diagonal(self) -> np.ndarray:
        """Diagonal of each ``A^e``, shape ``(E, n, n, n)``."""
        D = self.rule.diff
        G = self.G
        D2 = D**2
        d = np.einsum("li,ekjl->ekji", D2, G[..., 0, 0])
        d += np.einsum("lj,ekli->ekji", D2, G[..., 1, 1])
        d += np.einsum("lk,elji->ekji", D2, G[..., 2, 2])
        dd = np.diag(D)
        di = dd[None, None, None, :]
        dj = dd[None, None, :, None]
        dk = dd[None, :, None, None]
        d += 2.0 * (G[..., 0, 1] * di * dj + G[..., 0, 2] * di * dk + G[..., 1, 2] * dj * dk)
        return d

    def diagonal(self) -> np.ndarray:
        """Assembled diagonal of the masked operator (ones at masked dofs)."""
        d = self.gather(self.local_diagonal())
        return np.where(self.mask > 0, d, 1.0)

    def element_matrices(self) -> np.ndarray:
        """Dense ``A^e`` for all elements by probing with unit vectors.

        Intended for low orders (coarse grid, tests).
        """
        n = self.rule.n
        m = n**3
        E = self.n_elements
        out = np.empty((E, m, m))
        for c in range(m):
            uL = np.zeros((E, m))
            uL[:, c] = 1.0
            out[:, :, c] = self.apply_local(uL.reshape(E, n, n, n)).reshape(E, m)
        return out

    def assemble(self, masked: bool = True) -> sp.csr_matrix:
        """Explicit sparse assembled matrix.

        Masked rows/columns are eliminated symmetrically (unit diagonal).
        """
        Ae = self.element_matrices()
        E, m, _ = Ae.shape
        l2g = self.loc2glob.reshape(E, m)
        rows = np.repeat(l2g, m, axis=1).ravel()
        cols = np.tile(l2g, (1, m)).ravel()
        A = sp.coo_matrix((Ae.ravel(), (rows, cols)), shape=(self.n_global,) * 2).tocsr()
        A.sum_duplicates()
        if masked and not self.neumann:
            A = dirichlet_eliminate(A, self.mask)
        return A


def dirichlet_eliminate(A: sp.spmatrix, mask: np.ndarray) -> sp.csr_matrix:
    """Zero masked rows/cols and put 1 on their diagonal."""
    Mk = sp.diags(mask)
    A = (Mk @ A @ Mk).tocsr()
    A = A + sp.diags(1.0 - mask)
    A.eliminate_zeros()
    return A.tocsr()
