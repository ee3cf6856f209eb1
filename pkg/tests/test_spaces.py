import numpy as np
import pytest

from viscoplast.mesh import build_rectangle, refine_uniform
from viscoplast.problems import plates_velocity
from viscoplast.spaces import (
    QUAD_DEGREE4,
    QUAD_MIDPOINT,
    DofLayout,
    State,
    all_element_data,
    interpolate_velocity,
    p1_element_data,
    sym_gradient,
)


def test_layout_offsets(square_4x4):
    lay = DofLayout.of(square_4x4)
    assert lay.n_stress == 3 * 32
    assert lay.n_velocity == 2 * 25
    assert lay.n_pressure == 25
    assert lay.offset_velocity == lay.n_stress
    assert lay.offset_pressure == lay.n_stress + lay.n_velocity
    assert lay.total == lay.n_stress + lay.n_velocity + lay.n_pressure + 1


def test_state_views_are_views(square_4x4):
    state = State(square_4x4)
    state.stress[3, 1] = 7.0
    state.velocity[2, 0] = -1.0
    state.pressure[4] = 2.5
    assert state.coeffs[3 * 3 + 1] == 7.0
    lay = state.layout
    assert state.coeffs[lay.offset_velocity + 4] == -1.0
    assert state.coeffs[lay.offset_pressure + 4] == 2.5


def test_state_rejects_wrong_length(square_4x4):
    with pytest.raises(ValueError):
        State(square_4x4, np.zeros(7))


def test_unit_right_triangle_gradients():
    mesh = build_rectangle((0, 0), (1, 1), 1, 1)
    # triangle 0 is (0,0), (1,0), (1,1); find the one owning (0,0),(1,0)
    for k in range(mesh.num_triangles):
        area, grads = p1_element_data(mesh, k)
        assert area == pytest.approx(0.5)
        assert grads.sum(axis=0) == pytest.approx([0.0, 0.0], abs=1e-14)


def test_explicit_reference_triangle_gradients():
    import viscoplast.mesh as vmesh

    mesh = vmesh.Mesh(
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        np.array([[0, 1, 2]]),
        np.array([[0, 1], [1, 2], [2, 0]]),
        np.array([2, 2, 2]),
    )
    area, grads = p1_element_data(mesh, 0)
    assert area == pytest.approx(0.5)
    assert np.allclose(grads, [[-1, -1], [1, 0], [0, 1]])


def test_gradients_sum_to_zero_random(rng):
    verts = rng.normal(size=(3, 2))
    # enforce positive orientation
    e1, e2 = verts[1] - verts[0], verts[2] - verts[0]
    if e1[0] * e2[1] - e1[1] * e2[0] < 0:
        verts[[1, 2]] = verts[[2, 1]]
    import viscoplast.mesh as vmesh

    for _ in range(100):
        mesh = vmesh.Mesh(
            verts + rng.normal(size=(3, 2)) * 0.1,
            np.array([[0, 1, 2]]),
            np.array([[0, 1], [1, 2], [2, 0]]),
            np.array([2, 2, 2]),
        )
        if mesh.signed_areas()[0] <= 0:
            continue
        _, grads = p1_element_data(mesh, 0)
        assert np.allclose(grads.sum(axis=0), 0.0, atol=1e-12)


def test_affine_mapped_gradient_oracle(rng):
    # map the reference triangle by x -> A x + b and compare with the
    # chain rule grad_phys = A^-T grad_ref
    import viscoplast.mesh as vmesh

    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    ref_grads = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    for _ in range(50):
        A = rng.normal(size=(2, 2))
        if np.linalg.det(A) < 0.1:
            continue
        b = rng.normal(size=2)
        mesh = vmesh.Mesh(
            ref @ A.T + b,
            np.array([[0, 1, 2]]),
            np.array([[0, 1], [1, 2], [2, 0]]),
            np.array([2, 2, 2]),
        )
        _, grads = p1_element_data(mesh, 0)
        expected = ref_grads @ np.linalg.inv(A)
        assert np.allclose(grads, expected, atol=1e-10)


def test_degenerate_triangle_rejected():
    import viscoplast.mesh as vmesh

    mesh = vmesh.Mesh.__new__(vmesh.Mesh)
    mesh.vertices = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    mesh.triangles = np.array([[0, 1, 2]])
    with pytest.raises(ValueError):
        p1_element_data(mesh, 0)


def test_sym_gradient_linear_fields(square_4x4):
    state = State(square_4x4)
    state.velocity[:] = square_4x4.vertices * [1.0, -1.0]  # u = (x, -y)
    for k in range(square_4x4.num_triangles):
        assert sym_gradient(state, k).triple() == pytest.approx([1.0, -1.0, 0.0])

    state.velocity[:, 0] = square_4x4.vertices[:, 1]  # u = (y, -y)
    state.velocity[:, 1] = 0.0  # u = (y, 0)
    for k in range(square_4x4.num_triangles):
        assert sym_gradient(state, k).triple() == pytest.approx([0.0, 0.0, 0.5])


def test_sym_gradient_rigid_rotation(square_4x4):
    state = State(square_4x4)
    state.velocity[:, 0] = -square_4x4.vertices[:, 1]
    state.velocity[:, 1] = square_4x4.vertices[:, 0]
    for k in range(square_4x4.num_triangles):
        assert np.allclose(sym_gradient(state, k).triple(), 0.0, atol=1e-14)


def test_interpolate_velocity_zero(square_4x4):
    assert np.all(interpolate_velocity(square_4x4, lambda x, y: (0.0, 0.0)) == 0.0)


def test_interpolate_velocity_plates_plug():
    mesh = build_rectangle((0, -1), (4, 2), 8, 8)
    exact = plates_velocity(1.0)
    block = interpolate_velocity(mesh, lambda x, y: tuple(exact(x, y))).reshape(-1, 2)
    inside = np.abs(mesh.vertices[:, 1]) <= 0.5
    assert np.allclose(block[inside, 0], np.sqrt(2.0) / 4.0)
    assert np.allclose(block[:, 1], 0.0)


def test_p1_reproduces_linear_after_refinement():
    mesh = build_rectangle((0, 0), (2, 1), 2, 2)
    f = lambda x, y: (2.0 * x - y + 1.0, x + 3.0 * y)
    coarse = interpolate_velocity(mesh, f).reshape(-1, 2)
    fine_mesh = refine_uniform(mesh)
    fine = interpolate_velocity(fine_mesh, f).reshape(-1, 2)
    # midpoint values of the coarse interpolant equal the fine samples
    for e, (a, b) in enumerate(mesh.boundary_edges):
        mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
        interp = 0.5 * (coarse[a] + coarse[b])
        j = np.argmin(np.abs(fine_mesh.vertices - mid).sum(axis=1))
        assert np.allclose(fine[j], interp, atol=1e-14)


def test_quadrature_rules_integrate_polynomials():
    # integrate x^a y^b over the reference triangle and compare with the
    # exact value a! b! / (a + b + 2)!
    from math import factorial

    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    def quad_integral(rule, a, b):
        bary, w = rule
        pts = bary @ ref
        return 0.5 * np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b)

    for rule, degree in ((QUAD_MIDPOINT, 2), (QUAD_DEGREE4, 4)):
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                exact = factorial(a) * factorial(b) / factorial(a + b + 2)
                assert quad_integral(rule, a, b) == pytest.approx(exact, rel=1e-13), (a, b)


def test_all_element_data_matches_single(square_4x4):
    areas, grads = all_element_data(square_4x4)
    for k in (0, 7, 31):
        area_k, grads_k = p1_element_data(square_4x4, k)
        assert areas[k] == pytest.approx(area_k)
        assert np.allclose(grads[k], grads_k)
