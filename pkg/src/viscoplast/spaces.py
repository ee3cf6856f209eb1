"""Degree-of-freedom layout and local basis data for the three-field mix.

Stress lives in the piecewise-constant symmetric-tensor space (three dofs
per triangle), velocity and pressure are continuous piecewise-linear on the
vertices, and one extra scalar multiplier enforces the zero-mean pressure
constraint.  Global coefficient vectors are laid out as

    [ stress | velocity | pressure | multiplier ].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh
from .tensor import SymTensor2

__all__ = [
    "DofLayout",
    "State",
    "p1_element_data",
    "sym_gradient",
    "interpolate_velocity",
    "QUAD_MIDPOINT",
    "QUAD_DEGREE4",
]

# quadrature rules in barycentric coordinates; weights sum to one so that
# integral over K = area_K * sum(w * f(x_q)).  The 3-point midpoint rule is
# exact for quadratics (mass and load terms); the 6-point rule is exact to
# degree 4 and used for error norms against non-polynomial exact solutions.
QUAD_MIDPOINT = (
    np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
    np.array([1.0, 1.0, 1.0]) / 3.0,
)

_a = 0.445948490915965
_b = 0.091576213509771
QUAD_DEGREE4 = (
    np.array(
        [
            [_a, _a, 1.0 - 2.0 * _a],
            [_a, 1.0 - 2.0 * _a, _a],
            [1.0 - 2.0 * _a, _a, _a],
            [_b, _b, 1.0 - 2.0 * _b],
            [_b, 1.0 - 2.0 * _b, _b],
            [1.0 - 2.0 * _b, _b, _b],
        ]
    ),
    np.array([0.223381589678011] * 3 + [0.109951743655322] * 3),
)


@dataclass(frozen=True)
class DofLayout:
    """Block offsets of the global coefficient vector."""

    n_tri: int
    n_vert: int

    @property
    def n_stress(self) -> int:
        return 3 * self.n_tri

    @property
    def n_velocity(self) -> int:
        return 2 * self.n_vert

    @property
    def n_pressure(self) -> int:
        return self.n_vert

    @property
    def offset_velocity(self) -> int:
        return self.n_stress

    @property
    def offset_pressure(self) -> int:
        return self.n_stress + self.n_velocity

    @property
    def offset_multiplier(self) -> int:
        return self.n_stress + self.n_velocity + self.n_pressure

    @property
    def total(self) -> int:
        return self.offset_multiplier + 1

    @staticmethod
    def of(mesh: Mesh) -> "DofLayout":
        return DofLayout(mesh.num_triangles, mesh.num_vertices)


class State:
    """Coefficient vector tied to a mesh, with block views."""

    def __init__(self, mesh: Mesh, coeffs=None):
        self.mesh = mesh
        self.layout = DofLayout.of(mesh)
        if coeffs is None:
            coeffs = np.zeros(self.layout.total)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.layout.total,):
            raise ValueError(
                f"coefficient vector has length {coeffs.shape}, expected {self.layout.total}"
            )
        self.coeffs = coeffs

    def copy(self) -> "State":
        return State(self.mesh, self.coeffs.copy())

    @property
    def stress(self):
        """(T, 3) view of the per-element stress triples."""
        lay = self.layout
        return self.coeffs[: lay.n_stress].reshape(lay.n_tri, 3)

    @property
    def velocity(self):
        """(V, 2) view of the nodal velocities."""
        lay = self.layout
        return self.coeffs[lay.offset_velocity : lay.offset_pressure].reshape(lay.n_vert, 2)

    @property
    def pressure(self):
        lay = self.layout
        return self.coeffs[lay.offset_pressure : lay.offset_multiplier]

    @property
    def multiplier(self) -> float:
        return float(self.coeffs[-1])


def p1_element_data(mesh: Mesh, tri_index: int):
    """Area and constant basis gradients of one triangle.

    Returns (area, grads) with grads[i] the gradient of the barycentric
    basis function of local vertex i; the three gradients sum to zero.
    """
    p = mesh.corners(tri_index)
    e1 = p[1] - p[0]
    e2 = p[2] - p[0]
    det = e1[0] * e2[1] - e1[1] * e2[0]
    if det <= 0.0:
        raise ValueError(f"triangle {tri_index} is degenerate or mis-oriented")
    area = 0.5 * det
    # gradient of barycentric coordinate i is the rotated opposite edge / det
    grads = np.empty((3, 2))
    for i in range(3):
        opp = p[(i + 2) % 3] - p[(i + 1) % 3]
        grads[i] = np.array([-opp[1], opp[0]]) / det
    return area, grads


def all_element_data(mesh: Mesh):
    """Vectorised areas (T,) and basis gradients (T, 3, 2) for all triangles."""
    p = mesh.corners()
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if (det <= 0.0).any():
        raise ValueError("degenerate or mis-oriented triangle")
    grads = np.empty((len(p), 3, 2))
    for i in range(3):
        opp = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
        grads[:, i, 0] = -opp[:, 1] / det
        grads[:, i, 1] = opp[:, 0] / det
    return 0.5 * det, grads


def sym_gradient(state: State, tri_index: int) -> SymTensor2:
    """Symmetric gradient of the piecewise-linear velocity on one triangle."""
    _, grads = p1_element_data(state.mesh, tri_index)
    u = state.velocity[state.mesh.triangles[tri_index]]  # (3, 2)
    dux = grads[:, 0] @ u[:, 0]
    duy = grads[:, 1] @ u[:, 0]
    dvx = grads[:, 0] @ u[:, 1]
    dvy = grads[:, 1] @ u[:, 1]
    return SymTensor2(dux, dvy, 0.5 * (duy + dvx))


def interpolate_velocity(mesh: Mesh, f):
    """Vertex samples of a velocity field, in layout order (flat, 2V)."""
    vals = np.array([f(x, y) for x, y in mesh.vertices], dtype=float)
    return vals.reshape(-1)
