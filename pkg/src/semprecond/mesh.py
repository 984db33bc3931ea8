"""Kershaw-family hexahedral meshes on [-1/2, 1/2]^3 and mesh-quality metrics.

Meshes are logically structured ``Ex x Ey x Ez`` boxes pushed through a
coordinate map. Elements are numbered lexicographically (x fastest); local
faces are ordered -x, +x, -y, +y, -z, +z.

Kershaw profile
---------------
The map is the CEED benchmark construction on the unit cube (applied after
shifting by +1/2). ``x`` is left unchanged. Along x the cube is cut into six
layers; in each layer the y and z coordinates follow one of two piecewise
linear profiles with a kink at 1/2::

    right(eps, t) = (2 - eps) t          for t <= 1/2
                  = 1 + eps (t - 1)      otherwise
    left(eps, t)  = 1 - right(eps, 1 - t)

Layer 0 uses ``left``, layer 5 uses ``right``; layers 1 and 4 blend
left -> right, layers 2-3 blend right -> left over two layers. Blending uses
the cubic smoothstep ``3s^2 - 2s^3``. ``eps = 1`` gives the identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .sem import gll, jacobian

FACES = ("-x", "+x", "-y", "+y", "-z", "+z")


@dataclass(frozen=True)
class KershawParams:
    eps: float
    elements_per_axis: int

    def __post_init__(self):
        if not (0.0 < self.eps <= 1.0):
            raise ValueError(f"Kershaw eps must lie in (0, 1], got {self.eps}")
        n = self.elements_per_axis
        if n < 2 or n % 2:
            raise ValueError(f"elements_per_axis must be even and >= 2, got {n}")


@dataclass(frozen=True)
class HexElement:
    id: int
    index: tuple[int, int, int]
    neighbors: tuple[int, ...]  # per face, -1 on the physical boundary


@dataclass(frozen=True)
class MeshMetrics:
    scaled_jacobian: tuple[float, float, float]
    aspect_ratio: tuple[float, float, float]
    gll_spacing: tuple[float, float]


# -- Kershaw map -------------------------------------------------------------


def _right(eps, t):
    return np.where(t <= 0.5, (2.0 - eps) * t, 1.0 + eps * (t - 1.0))


def _left(eps, t):
    return 1.0 - _right(eps, 1.0 - t)


def _step(a, b, s):
    s = np.clip(s, 0.0, 1.0)
    return a + (b - a) * (s * s * (3.0 - 2.0 * s))


def kershaw_map(eps_y: float, eps_z: float, xyz: np.ndarray) -> np.ndarray:
    """Kershaw map on the unit cube (points in the last axis)."""
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    layer = np.clip(np.floor(6.0 * x), 0, 5).astype(int)
    lam = 6.0 * x - layer

    out = np.empty_like(xyz)
    out[..., 0] = x
    for k, (t, eps) in enumerate(((y, eps_y), (z, eps_z)), start=1):
        L, R = _left(eps, t), _right(eps, t)
        v = np.select(
            [layer == 0, (layer == 1) | (layer == 4), layer == 2, layer == 3],
            [L, _step(L, R, lam), _step(R, L, lam / 2.0), _step(R, L, (1.0 + lam) / 2.0)],
            default=R,
        )
        out[..., k] = v
    return out


# -- mesh --------------------------------------------------------------------


@dataclass
class HexMesh:
    """Structured hexahedral mesh of the box ``[lo, hi]`` mapped by ``transform``.

    ``transform`` acts on physical box coordinates (points in the last axis);
    ``None`` means identity.
    """

    shape: tuple[int, int, int]
    lo: tuple[float, float, float] = (-0.5, -0.5, -0.5)
    hi: tuple[float, float, float] = (0.5, 0.5, 0.5)
    transform: Callable[[np.ndarray], np.ndarray] | None = None
    eps: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_elements(self) -> int:
        Ex, Ey, Ez = self.shape
        return Ex * Ey * Ez

    def element_index(self, e: int) -> tuple[int, int, int]:
        Ex, Ey, _ = self.shape
        return e % Ex, (e // Ex) % Ey, e // (Ex * Ey)

    @cached_property
    def neighbors(self) -> np.ndarray:
        """``(E, 6)`` face-neighbor element ids, -1 on the boundary."""
        Ex, Ey, Ez = self.shape
        e = np.arange(self.n_elements)
        ix, iy, iz = e % Ex, (e // Ex) % Ey, e // (Ex * Ey)
        nb = np.full((self.n_elements, 6), -1, dtype=np.int64)
        nb[:, 0] = np.where(ix > 0, e - 1, -1)
        nb[:, 1] = np.where(ix < Ex - 1, e + 1, -1)
        nb[:, 2] = np.where(iy > 0, e - Ex, -1)
        nb[:, 3] = np.where(iy < Ey - 1, e + Ex, -1)
        nb[:, 4] = np.where(iz > 0, e - Ex * Ey, -1)
        nb[:, 5] = np.where(iz < Ez - 1, e + Ex * Ey, -1)
        return nb

    @property
    def elements(self) -> list[HexElement]:
        return [
            HexElement(e, self.element_index(e), tuple(int(v) for v in self.neighbors[e]))
            for e in range(self.n_elements)
        ]

    @property
    def boundary_faces(self) -> set[tuple[int, int]]:
        e, f = np.nonzero(self.neighbors < 0)
        return {(int(a), int(b)) for a, b in zip(e, f)}

    @property
    def corner_coords(self) -> np.ndarray:
        """``(E, 8, 3)`` element vertices, lexicographic (x fastest)."""
        c = self.nodal_coords(1)
        return c.reshape(self.n_elements, 8, 3)

    def lattice_shape(self, p: int) -> tuple[int, int, int]:
        return tuple(s * p + 1 for s in self.shape)

    def lattice_index(self, p: int) -> np.ndarray:
        """Per-element global lattice coordinates ``(E, n, n, n, 3)`` (ix, iy, iz)."""
        key = ("lattice", p)
        if key not in self._cache:
            n = p + 1
            E = self.n_elements
            idx = np.array([self.element_index(e) for e in range(E)]) * p  # (E,3)
            a = np.arange(n)
            out = np.empty((E, n, n, n, 3), dtype=np.int64)
            out[..., 0] = idx[:, 0, None, None, None] + a[None, None, None, :]
            out[..., 1] = idx[:, 1, None, None, None] + a[None, None, :, None]
            out[..., 2] = idx[:, 2, None, None, None] + a[None, :, None, None]
            self._cache[key] = out
        return self._cache[key]

    def local_to_global(self, p: int) -> np.ndarray:
        """Global dof id of every local node, shape ``(E, n, n, n)``."""
        Nx, Ny, _ = self.lattice_shape(p)
        li = self.lattice_index(p)
        return li[..., 0] + Nx * (li[..., 1] + Ny * li[..., 2])

    def dirichlet_mask(self, p: int) -> np.ndarray:
        """1 on interior lattice nodes, 0 on the domain boundary."""
        Nx, Ny, Nz = self.lattice_shape(p)
        m = np.zeros((Nz, Ny, Nx))
        m[1:-1, 1:-1, 1:-1] = 1.0
        return m.ravel()

    def lattice_coords(self, p: int) -> np.ndarray:
        """Physical coordinates of the global lattice, ``(N, 3)``, lexicographic."""
        key = ("coords", p)
        if key not in self._cache:
            xi = gll(p).nodes
            axes = []
            for s, lo, hi in zip(self.shape, self.lo, self.hi):
                h = (hi - lo) / s
                t = np.empty(s * p + 1)
                for e in range(s):
                    t[e * p:(e + 1) * p + 1] = lo + h * e + 0.5 * h * (xi + 1.0)
                t[0], t[-1] = lo, hi
                axes.append(t)
            Z, Y, X = np.meshgrid(axes[2], axes[1], axes[0], indexing="ij")
            pts = np.stack([X, Y, Z], axis=-1).reshape(-1, 3)
            if self.transform is not None:
                pts = self.transform(pts)
            self._cache[key] = pts
        return self._cache[key]

    def nodal_coords(self, p: int) -> np.ndarray:
        """Element nodal coordinates at order ``p``, ``(E, n, n, n, 3)``.

        Gathered from one global lattice so shared nodes are bitwise equal.
        """
        return self.lattice_coords(p)[self.local_to_global(p)]


def box_mesh(shape, lo=(-0.5, -0.5, -0.5), hi=(0.5, 0.5, 0.5), transform=None) -> HexMesh:
    return HexMesh(tuple(shape), tuple(lo), tuple(hi), transform)


def generate_kershaw(params: KershawParams, p: int | None = None) -> HexMesh:
    """Kershaw mesh with ``elements_per_axis^3`` elements on [-1/2, 1/2]^3.

    If ``p`` is given, the order-``p`` geometry is built and checked for
    positive Jacobians immediately.
    """
    eps = params.eps
    n = params.elements_per_axis

    def transform(pts):
        return kershaw_map(eps, eps, pts + 0.5) - 0.5

    mesh = HexMesh((n, n, n), transform=None if eps == 1.0 else transform, eps=eps)
    if p is not None:
        jac = jacobian(mesh.nodal_coords(p), gll(p).diff)
        det = np.linalg.det(jac)
        if np.any(det <= 0.0):
            bad = int(np.argwhere(det <= 0.0)[0, 0])
            raise RuntimeError(f"Kershaw map produced a non-positive Jacobian in element {bad}")
    return mesh


def compute_metrics(mesh: HexMesh, p: int) -> MeshMetrics:
    """Scaled Jacobian, aspect ratio and GLL spacing over all GLL points."""
    rule = gll(p)
    x = mesh.nodal_coords(p)
    jac = jacobian(x, rule.diff)
    det = np.linalg.det(jac)
    if np.any(det <= 0.0):
        bad = int(np.argwhere(det <= 0.0)[0, 0])
        raise ValueError(f"non-positive Jacobian in element {bad}")
    rownorm = np.linalg.norm(jac, axis=-1).prod(axis=-1)
    sj = np.minimum(det / rownorm, 1.0)  # Hadamard bound; clip rounding
    sv = np.linalg.svd(jac, compute_uv=False)
    ar = sv[..., 0] / sv[..., -1]

    gaps = [
        np.linalg.norm(np.diff(x, axis=ax), axis=-1).ravel() for ax in (1, 2, 3)
    ]
    gaps = np.concatenate(gaps)

    def red(a):
        return float(a.min()), float(a.max()), float(a.mean())

    return MeshMetrics(red(sj), red(ar), (float(gaps.min()), float(gaps.max())))


def dump_mesh(mesh: HexMesh, p: int, path) -> None:
    """Plain-text dump: ``E p`` then one ``x y z`` line per node, per element."""
    x = mesh.nodal_coords(p).reshape(mesh.n_elements, -1, 3)
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_elements} {p}\n")
        for e in range(mesh.n_elements):
            np.savetxt(fh, x[e], fmt="%.17g")


def load_mesh_dump(path) -> tuple[int, np.ndarray]:
    """Read a :func:`dump_mesh` file back as ``(p, coords[E, n, n, n, 3])``."""
    with open(path) as fh:
        E, p = (int(v) for v in fh.readline().split())
        data = np.loadtxt(fh).reshape(E, p + 1, p + 1, p + 1, 3)
    return p, data
