from pathlib import Path

import numpy as np
import pytest

from viscoplast.mesh import build_rectangle, refine_uniform
from viscoplast.postprocess import (
    FieldSnapshot,
    PointLocationError,
    cell_strain_norms,
    cell_to_vertex,
    error_h1_velocity,
    error_l2_pressure,
    error_l2_velocity,
    plug_mask,
    sample_line,
    snapshot_of,
    stream_function,
    write_vtk,
)
from viscoplast.spaces import QUAD_DEGREE4, State, all_element_data

GOLDEN = Path(__file__).parent / "data" / "golden_square.vtk"


@pytest.fixture
def mesh16():
    return build_rectangle((0, 0), (1, 1), 16, 16)


def test_l2_error_zero_for_identical_interpolant(mesh16):
    state = State(mesh16)
    state.velocity[:, 0] = 1.0 + 2.0 * mesh16.vertices[:, 0] - mesh16.vertices[:, 1]
    state.velocity[:, 1] = 0.5 * mesh16.vertices[:, 1]

    def exact(x, y):
        return np.stack([1.0 + 2.0 * x - y, 0.5 * y], axis=-1)

    assert error_l2_velocity(state, exact) <= 1e-14


def test_l2_error_of_zero_state_is_exact_norm(mesh16):
    # || 0 - u_e || must equal the quadrature norm of u_e itself
    state = State(mesh16)

    def exact(x, y):
        return np.stack([np.sin(x), np.cos(y)], axis=-1)

    got = error_l2_velocity(state, exact)
    areas, _ = all_element_data(mesh16)
    bary, w = QUAD_DEGREE4
    corners = mesh16.corners()
    total = 0.0
    for q in range(len(w)):
        pts = np.einsum("i,tid->td", bary[q], corners)
        u = exact(pts[:, 0], pts[:, 1])
        total += w[q] * np.sum(areas * (u**2).sum(axis=1))
    assert got == pytest.approx(np.sqrt(total), rel=1e-13)


def test_h1_error_zero_for_linear_field(mesh16):
    state = State(mesh16)
    state.velocity[:, 0] = mesh16.vertices[:, 0] + 3.0 * mesh16.vertices[:, 1]
    state.velocity[:, 1] = -mesh16.vertices[:, 0]

    def exact_grad(x, y):
        g = np.zeros(np.shape(x) + (2, 2))
        g[..., 0, 0] = 1.0
        g[..., 0, 1] = 3.0
        g[..., 1, 0] = -1.0
        return g

    assert error_h1_velocity(state, exact_grad) <= 1e-13


def test_pressure_error_uses_zero_mean(mesh16):
    state = State(mesh16)
    state.pressure[:] = mesh16.vertices[:, 0]  # mean 1/2 on the unit square
    # the exact field differs by a constant only, so the error vanishes
    assert error_l2_pressure(state, lambda x, y: np.asarray(x) + 42.0) <= 1e-12


def test_plug_mask_rigid_rotation(mesh16):
    state = State(mesh16)
    state.velocity[:, 0] = -mesh16.vertices[:, 1]
    state.velocity[:, 1] = mesh16.vertices[:, 0]
    assert plug_mask(state, 1e-12).all()
    assert plug_mask(state, 1e3).all()


def test_plug_mask_zero_threshold(mesh16, rng):
    state = State(mesh16)
    state.velocity[:] = rng.normal(size=state.velocity.shape)
    assert not plug_mask(state, 0.0).any()


def test_cell_to_vertex_constant_field(mesh16):
    vals = cell_to_vertex(mesh16, np.full(mesh16.num_triangles, 3.25))
    assert np.allclose(vals, 3.25)


def test_stream_function_recovers_potential():
    # u = curl(psi) for psi = sin(pi x) sin(pi y); the solver must recover
    # psi up to discretisation error
    mesh = build_rectangle((0, 0), (1, 1), 32, 32)
    state = State(mesh)
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    state.velocity[:, 0] = np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)
    state.velocity[:, 1] = -np.pi * np.cos(np.pi * x) * np.sin(np.pi * y)
    psi, psi_max, y_c = stream_function(state)
    assert psi_max == pytest.approx(1.0, rel=5e-3)
    assert y_c == pytest.approx(0.5, abs=0.05)
    exact = np.sin(np.pi * x) * np.sin(np.pi * y)
    scale = np.sign(psi[np.argmax(np.abs(psi))])
    assert np.abs(scale * psi - exact).max() < 0.01


def test_vtk_golden_file(tmp_path):
    mesh = build_rectangle((0, 0), (1, 1), 1, 1)
    snap = FieldSnapshot(
        mesh,
        point_data={"pressure": np.array([0.0, 0.25, 0.5, 1.0])},
        cell_data={"stress_norm": np.array([1.0 / 3.0, 2.0 / 3.0])},
    )
    out = tmp_path / "square.vtk"
    write_vtk(snap, out)
    assert out.read_bytes() == GOLDEN.read_bytes()


def test_vtk_geometry_only(tmp_path):
    mesh = build_rectangle((0, 0), (2, 1), 3, 2)
    out = tmp_path / "geom.vtk"
    write_vtk(FieldSnapshot(mesh), out)
    text = out.read_text()
    assert "POINT_DATA" not in text
    assert text.count("\n3 ") == mesh.num_triangles
    assert [l for l in text.splitlines() if l == "5"] == ["5"] * mesh.num_triangles


def test_vtk_bit_identical_across_runs(tmp_path, rng):
    mesh = refine_uniform(build_rectangle((0, 0), (1, 1), 2, 2))
    state = State(mesh)
    state.coeffs[:] = rng.normal(size=state.coeffs.shape)
    snap = snapshot_of(state)
    a, b = tmp_path / "a.vtk", tmp_path / "b.vtk"
    write_vtk(snap, a)
    write_vtk(snap, b)
    assert a.read_bytes() == b.read_bytes()


def test_vtk_vector_field_written_as_vectors(tmp_path, rng):
    mesh = build_rectangle((0, 0), (1, 1), 2, 2)
    state = State(mesh)
    state.velocity[:] = rng.normal(size=state.velocity.shape)
    out = tmp_path / "v.vtk"
    write_vtk(snapshot_of(state), out)
    assert "VECTORS velocity double" in out.read_text()


def test_sample_line_constant_field(mesh16):
    snap = FieldSnapshot(mesh16, point_data={"c": np.full(mesh16.num_vertices, 7.0)})
    header, rows = sample_line(snap, (0.1, 0.2), (0.9, 0.8), 17)
    assert header == ["t", "x", "y", "c"]
    assert len(rows) == 17
    assert all(r[3] == pytest.approx(7.0) for r in rows)


def test_sample_line_linear_field_exact(mesh16):
    p = 2.0 * mesh16.vertices[:, 0] - 3.0 * mesh16.vertices[:, 1] + 0.5
    snap = FieldSnapshot(mesh16, point_data={"p": p})
    _, rows = sample_line(snap, (0.05, 0.5), (0.95, 0.5), 33)
    for r in rows:
        assert r[3] == pytest.approx(2.0 * r[1] - 3.0 * r[2] + 0.5, abs=1e-12)


def test_sample_line_outside_domain(mesh16):
    snap = FieldSnapshot(mesh16, point_data={"p": np.zeros(mesh16.num_vertices)})
    with pytest.raises(PointLocationError) as err:
        sample_line(snap, (0.5, 0.5), (1.5, 0.5), 11)
    assert err.value.index > 0


def test_sample_line_cell_fields(mesh16, rng):
    state = State(mesh16)
    state.velocity[:] = rng.normal(size=state.velocity.shape)
    snap = FieldSnapshot(mesh16, cell_data={"dn": cell_strain_norms(state)})
    header, rows = sample_line(snap, (0.01, 0.01), (0.99, 0.99), 5)
    assert header[-1] == "dn"
    assert all(np.isfinite(r[-1]) for r in rows)


def test_snapshot_field_length_validation(mesh16):
    with pytest.raises(ValueError):
        FieldSnapshot(mesh16, point_data={"bad": np.zeros(3)})
    with pytest.raises(ValueError):
        FieldSnapshot(mesh16, cell_data={"bad": np.zeros(3)})
