import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semprecond.mesh import (KershawParams, box_mesh, compute_metrics, dump_mesh, generate_kershaw,
                             kershaw_map, load_mesh_dump)


def test_params_validation():
    for eps in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            KershawParams(eps, 4)
    for n in (0, 1, 3):
        with pytest.raises(ValueError):
            KershawParams(0.5, n)


def test_uniform_mesh_is_cartesian():
    mesh = generate_kershaw(KershawParams(1.0, 4), p=2)
    c = mesh.corner_coords
    side = c.max(axis=1) - c.min(axis=1)
    np.testing.assert_allclose(side, 0.25, atol=1e-15)
    m = compute_metrics(mesh, 2)
    np.testing.assert_allclose(m.scaled_jacobian, 1.0, atol=1e-14)
    np.testing.assert_allclose(m.aspect_ratio, 1.0, atol=1e-14)


@pytest.mark.parametrize("eps", [1.0, 0.3, 0.05])
def test_mesh_covers_unit_cube(eps):
    mesh = generate_kershaw(KershawParams(eps, 6), p=3)
    x = mesh.lattice_coords(3)
    assert x.min() == -0.5 and x.max() == 0.5
    # boundary lattice nodes stay on their faces
    Nx = mesh.lattice_shape(3)[0]
    g = x.reshape(Nx, Nx, Nx, 3)
    np.testing.assert_array_equal(g[:, :, 0, 0], -0.5)
    np.testing.assert_array_equal(g[:, :, -1, 0], 0.5)
    np.testing.assert_allclose(g[:, 0, :, 1], -0.5, atol=1e-15)
    np.testing.assert_allclose(g[-1, :, :, 2], 0.5, atol=1e-15)


def test_connectivity_invariants():
    mesh = generate_kershaw(KershawParams(0.3, 4))
    nb = mesh.neighbors
    assert mesh.n_elements == 64
    assert len(mesh.boundary_faces) == 6 * 16
    opposite = [1, 0, 3, 2, 5, 4]
    for e in range(mesh.n_elements):
        for f in range(6):
            o = nb[e, f]
            if o >= 0:
                assert nb[o, opposite[f]] == e


def test_shared_face_nodes_bitwise_equal():
    mesh = generate_kershaw(KershawParams(0.05, 4))
    p = 5
    x = mesh.nodal_coords(p)
    nb = mesh.neighbors
    for e in range(mesh.n_elements):
        o = nb[e, 1]  # +x
        if o >= 0:
            assert np.array_equal(x[e, :, :, -1], x[o, :, :, 0])
        o = nb[e, 5]  # +z
        if o >= 0:
            assert np.array_equal(x[e, -1], x[o, 0])


def test_aspect_ratio_grows_as_eps_shrinks():
    ar = [compute_metrics(generate_kershaw(KershawParams(eps, 12)), 1).aspect_ratio[1]
          for eps in (1.0, 0.3, 0.05)]
    assert ar[0] < ar[1] < ar[2]


def _corner_scaled_jacobian(mesh):
    """Scaled Jacobian at trilinear element corners from edge vectors."""
    c = mesh.corner_coords.reshape(-1, 2, 2, 2, 3)
    out = []
    for dz in (0, 1):
        for dy in (0, 1):
            for dx in (0, 1):
                v0 = c[:, dz, dy, dx]
                ex = (c[:, dz, dy, 1 - dx] - v0) * (1 - 2 * dx)
                ey = (c[:, dz, 1 - dy, dx] - v0) * (1 - 2 * dy)
                ez = (c[:, 1 - dz, dy, dx] - v0) * (1 - 2 * dz)
                J = np.stack([ex, ey, ez], axis=1)
                out.append(np.linalg.det(J) / np.prod(np.linalg.norm(J, axis=2), axis=1))
    return np.array(out)


def test_min_scaled_jacobian_eps03():
    mesh = generate_kershaw(KershawParams(0.3, 6))
    m = compute_metrics(mesh, 1)
    oracle = _corner_scaled_jacobian(mesh).min()
    assert m.scaled_jacobian[0] == pytest.approx(oracle, rel=1e-12)
    assert m.scaled_jacobian[0] == pytest.approx(0.16602227504272973, rel=1e-10)


@pytest.mark.parametrize("eps", [1.0, 0.3, 0.05])
def test_metric_invariants(eps):
    m = compute_metrics(generate_kershaw(KershawParams(eps, 6)), 3)
    lo, hi, avg = m.scaled_jacobian
    assert 0 < lo <= avg <= hi <= 1
    assert m.aspect_ratio[0] >= 1.0 - 1e-12
    assert 0 < m.gll_spacing[0] <= m.gll_spacing[1]


def test_metrics_rotation_invariant():
    base = generate_kershaw(KershawParams(0.3, 6))
    a = 0.7
    R = np.array([[np.cos(a), -np.sin(a), 0], [np.sin(a), np.cos(a), 0], [0, 0, 1]])
    rotated = box_mesh((6, 6, 6), transform=lambda X: base.transform(X) @ R.T)
    m0, m1 = compute_metrics(base, 2), compute_metrics(rotated, 2)
    np.testing.assert_allclose(m0.scaled_jacobian, m1.scaled_jacobian, rtol=1e-10)
    np.testing.assert_allclose(m0.aspect_ratio, m1.aspect_ratio, rtol=1e-10)
    np.testing.assert_allclose(m0.gll_spacing, m1.gll_spacing, rtol=1e-10)


def test_metrics_report_inverted_element():
    flip = box_mesh((2, 2, 2), transform=lambda X: X * np.array([-1.0, 1.0, 1.0]))
    with pytest.raises(ValueError, match="element"):
        compute_metrics(flip, 1)


@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0))
@settings(max_examples=40, deadline=None)
def test_kershaw_map_fixes_cube_and_is_orientation_preserving(ey, ez):
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 1, (200, 3))
    out = kershaw_map(ey, ez, pts)
    assert out.min() >= 0.0 and out.max() <= 1.0
    np.testing.assert_array_equal(out[:, 0], pts[:, 0])
    # monotone in y and z for fixed x
    h = 1e-7
    for k in (1, 2):
        d = np.zeros(3)
        d[k] = h
        assert np.all(kershaw_map(ey, ez, pts + d)[:, k] > out[:, k])


def test_dump_round_trip(tmp_path):
    mesh = generate_kershaw(KershawParams(0.3, 2))
    dump_mesh(mesh, 3, tmp_path / "m.txt")
    p, x = load_mesh_dump(tmp_path / "m.txt")
    assert p == 3
    np.testing.assert_array_equal(x, mesh.nodal_coords(3))
