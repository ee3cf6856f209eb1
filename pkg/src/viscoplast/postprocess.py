"""Error norms, derived fields, plug detection and file output."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import linsolve
from .assembly import SparseSystem, operators_for
from .mesh import Mesh
from .spaces import QUAD_DEGREE4, State, all_element_data

__all__ = [
    "FieldSnapshot",
    "PointLocationError",
    "error_l2_velocity",
    "error_h1_velocity",
    "error_l2_pressure",
    "cell_strain_norms",
    "cell_stress_norms",
    "cell_to_vertex",
    "plug_mask",
    "stream_function",
    "snapshot_of",
    "write_vtk",
    "write_csv",
    "sample_line",
]


@dataclass
class FieldSnapshot:
    """Named nodal and per-cell fields over one mesh."""

    mesh: Mesh
    point_data: dict = field(default_factory=dict)
    cell_data: dict = field(default_factory=dict)

    def __post_init__(self):
        V, T = self.mesh.num_vertices, self.mesh.num_triangles
        for name, arr in self.point_data.items():
            if len(arr) != V:
                raise ValueError(f"point field {name!r} has wrong length")
        for name, arr in self.cell_data.items():
            if len(arr) != T:
                raise ValueError(f"cell field {name!r} has wrong length")


class PointLocationError(ValueError):
    def __init__(self, index, point):
        super().__init__(f"sample point {index} at {tuple(point)} lies outside the mesh")
        self.index = index
        self.point = point


def _quad_geometry(mesh: Mesh):
    bary, weights = QUAD_DEGREE4
    corners = mesh.corners()  # (T, 3, 2)
    points = np.einsum("qi,tid->qtd", bary, corners)  # (Q, T, 2)
    return bary, weights, points


def error_l2_velocity(state: State, exact) -> float:
    """L2 norm of u_h - u_e; ``exact(x, y)`` must accept arrays."""
    areas, _ = all_element_data(state.mesh)
    bary, weights, points = _quad_geometry(state.mesh)
    u = state.velocity[state.mesh.triangles]  # (T, 3, 2)
    total = 0.0
    for q, w in enumerate(weights):
        uh = np.einsum("i,tid->td", bary[q], u)
        ue = np.asarray(exact(points[q, :, 0], points[q, :, 1]))
        total += w * np.sum(areas * np.sum((uh - ue) ** 2, axis=1))
    return float(np.sqrt(total))


def error_h1_velocity(state: State, exact_gradient) -> float:
    """H1 seminorm of the velocity error; ``exact_gradient`` returns (N,2,2)."""
    areas, grads = all_element_data(state.mesh)
    bary, weights, points = _quad_geometry(state.mesh)
    u = state.velocity[state.mesh.triangles]
    gh = np.einsum("tia,tib->tab", u, grads)  # grad u, rows = components
    total = 0.0
    for q, w in enumerate(weights):
        ge = np.asarray(exact_gradient(points[q, :, 0], points[q, :, 1]))
        total += w * np.sum(areas * np.sum((gh - ge) ** 2, axis=(1, 2)))
    return float(np.sqrt(total))


def error_l2_pressure(state: State, exact, subtract_mean: bool = True) -> float:
    """L2 norm of p_h - p_e, both reduced to zero mean by default."""
    areas, _ = all_element_data(state.mesh)
    bary, weights, points = _quad_geometry(state.mesh)
    domain_area = areas.sum()
    p = state.pressure[state.mesh.triangles]  # (T, 3)
    ph_mean = pe_mean = 0.0
    if subtract_mean:
        for q, w in enumerate(weights):
            ph_mean += w * np.sum(areas * (bary[q] @ p.T))
            pe_mean += w * np.sum(areas * np.asarray(exact(points[q, :, 0], points[q, :, 1])))
        ph_mean /= domain_area
        pe_mean /= domain_area
    total = 0.0
    for q, w in enumerate(weights):
        ph = bary[q] @ p.T - ph_mean
        pe = np.asarray(exact(points[q, :, 0], points[q, :, 1])) - pe_mean
        total += w * np.sum(areas * (ph - pe) ** 2)
    return float(np.sqrt(total))


def cell_strain_norms(state: State):
    """|D(u)| per cell (Frobenius norm of the symmetric gradient)."""
    ops = operators_for(state.mesh)
    d = (ops.B @ state.coeffs[ops.layout.offset_velocity : ops.layout.offset_pressure]).reshape(
        -1, 3
    )
    return np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2 + 2.0 * d[:, 2] ** 2)


def cell_stress_norms(state: State):
    """|S| per cell."""
    s = state.stress
    return np.sqrt(s[:, 0] ** 2 + s[:, 1] ** 2 + 2.0 * s[:, 2] ** 2)


def cell_to_vertex(mesh: Mesh, cell_values):
    """Area-weighted projection of a per-cell field onto the vertices."""
    areas, _ = all_element_data(mesh)
    num = np.zeros(mesh.num_vertices)
    den = np.zeros(mesh.num_vertices)
    w = np.repeat(areas, 3)
    np.add.at(num, mesh.triangles.ravel(), w * np.repeat(cell_values, 3))
    np.add.at(den, mesh.triangles.ravel(), w)
    return num / den


def plug_mask(state: State, threshold: float):
    """Cells where the flow is (numerically) rigid: |D(u)| < threshold."""
    if threshold < 0.0:
        raise ValueError("threshold must be nonnegative")
    return cell_strain_norms(state) < threshold


def stream_function(state: State):
    """Stream function of the discrete velocity, zero on the boundary.

    Solves the Poisson problem -Lap(psi) = vorticity with piecewise-linear
    elements; returns (psi, psi_max, y_center) where psi_max is the maximum
    of |psi| and y_center the vertical coordinate of the maximising vertex.
    """
    mesh = state.mesh
    areas, grads = all_element_data(mesh)
    V = mesh.num_vertices
    tri = mesh.triangles
    u = state.velocity[tri]  # (T, 3, 2)
    # piecewise-constant vorticity dv/dx - du/dy
    omega = np.einsum("ti,ti->t", grads[:, :, 0], u[:, :, 1]) - np.einsum(
        "ti,ti->t", grads[:, :, 1], u[:, :, 0]
    )

    rows, cols, vals = [], [], []
    for a in range(3):
        for b in range(3):
            rows.append(tri[:, a])
            cols.append(tri[:, b])
            vals.append(areas * np.einsum("ij,ij->i", grads[:, a], grads[:, b]))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    rhs = np.zeros(V)
    np.add.at(rhs, tri.ravel(), np.repeat(areas * omega / 3.0, 3))

    bnd = mesh.boundary_vertices()
    on_bnd = np.zeros(V, dtype=bool)
    on_bnd[bnd] = True
    keep = ~(on_bnd[rows] | on_bnd[cols])
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    rows = np.concatenate([rows, bnd])
    cols = np.concatenate([cols, bnd])
    vals = np.concatenate([vals, np.ones(len(bnd))])
    rhs[bnd] = 0.0

    system = SparseSystem(rows, cols, vals, rhs, V)
    psi = linsolve.solve(linsolve.factorise(system), rhs)
    imax = int(np.argmax(np.abs(psi)))
    return psi, float(np.abs(psi[imax])), float(mesh.vertices[imax, 1])


def snapshot_of(state: State, extra_point=None, extra_cell=None) -> FieldSnapshot:
    """Standard output fields of a solved state."""
    point = {"velocity": state.velocity.copy(), "pressure": state.pressure.copy()}
    s = state.stress
    cell = {
        "stress_xx": s[:, 0].copy(),
        "stress_yy": s[:, 1].copy(),
        "stress_xy": s[:, 2].copy(),
        "strain_rate_norm": cell_strain_norms(state),
        "stress_norm": cell_stress_norms(state),
    }
    if extra_point:
        point.update(extra_point)
    if extra_cell:
        cell.update(extra_cell)
    return FieldSnapshot(state.mesh, point, cell)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_vtk(snapshot: FieldSnapshot, path):
    """Legacy ASCII VTK unstructured-grid writer (triangles only)."""
    mesh = snapshot.mesh
    lines = [
        "# vtk DataFile Version 2.0",
        "viscoplast snapshot",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.num_vertices} double",
    ]
    for x, y in mesh.vertices:
        lines.append(f"{_fmt(x)} {_fmt(y)} 0")
    T = mesh.num_triangles
    lines.append(f"CELLS {T} {4 * T}")
    for a, b, c in mesh.triangles:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {T}")
    lines.extend(["5"] * T)

    def emit_fields(fields):
        for name, arr in fields.items():
            arr = np.asarray(arr)
            if arr.ndim == 2 and arr.shape[1] == 2:
                lines.append(f"VECTORS {name} double")
                for vx, vy in arr:
                    lines.append(f"{_fmt(vx)} {_fmt(vy)} 0")
            else:
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                for v in arr:
                    lines.append(_fmt(v) if arr.dtype != bool else str(int(v)))

    if snapshot.point_data:
        lines.append(f"POINT_DATA {mesh.num_vertices}")
        emit_fields(snapshot.point_data)
    if snapshot.cell_data:
        lines.append(f"CELL_DATA {T}")
        emit_fields(snapshot.cell_data)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_csv(path, header, rows):
    """CSV with a header row, comma separator and LF line endings."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


class _Locator:
    """Uniform-bucket point-in-triangle search."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        corners = mesh.corners()
        self.lo = mesh.vertices.min(axis=0)
        hi = mesh.vertices.max(axis=0)
        self.cell = max(mesh.h_max, 1e-12)
        self.nx = max(int(np.ceil((hi[0] - self.lo[0]) / self.cell)), 1)
        self.ny = max(int(np.ceil((hi[1] - self.lo[1]) / self.cell)), 1)
        self.buckets: dict[tuple[int, int], list[int]] = {}
        tlo = (corners.min(axis=1) - self.lo) / self.cell
        thi = (corners.max(axis=1) - self.lo) / self.cell
        for t in range(len(corners)):
            for ix in range(int(tlo[t, 0]), int(thi[t, 0]) + 1):
                for iy in range(int(tlo[t, 1]), int(thi[t, 1]) + 1):
                    self.buckets.setdefault((ix, iy), []).append(t)

    def find(self, point):
        ix = int((point[0] - self.lo[0]) / self.cell)
        iy = int((point[1] - self.lo[1]) / self.cell)
        for dx in (0, -1, 1):
            for dy in (0, -1, 1):
                for t in self.buckets.get((ix + dx, iy + dy), ()):
                    lam = self.barycentric(t, point)
                    if (lam >= -1e-10).all():
                        return t, np.clip(lam, 0.0, 1.0)
        return None, None

    def barycentric(self, t, point):
        p = self.mesh.corners(t)
        m = np.column_stack([p[1] - p[0], p[2] - p[0]])
        ab = np.linalg.solve(m, np.asarray(point) - p[0])
        return np.array([1.0 - ab.sum(), ab[0], ab[1]])


def sample_line(snapshot: FieldSnapshot, start, end, n: int):
    """Evenly spaced samples of all fields along a segment.

    Point fields are interpolated linearly, cell fields take the value of
    the containing cell.  Returns (header, rows); a sample outside the mesh
    raises PointLocationError with its index.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    locator = _Locator(snapshot.mesh)
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    header = ["t", "x", "y"]
    for name, arr in snapshot.point_data.items():
        header.extend([f"{name}_x", f"{name}_y"] if np.asarray(arr).ndim == 2 else [name])
    header.extend(snapshot.cell_data.keys())

    rows = []
    for i in range(n):
        t = i / (n - 1)
        point = (1.0 - t) * start + t * end
        tri, lam = locator.find(point)
        if tri is None:
            raise PointLocationError(i, point)
        verts = snapshot.mesh.triangles[tri]
        row = [t, point[0], point[1]]
        for arr in snapshot.point_data.values():
            arr = np.asarray(arr)
            val = lam @ arr[verts]
            row.extend(val if val.ndim else [val])
        for arr in snapshot.cell_data.values():
            row.append(float(np.asarray(arr)[tri]))
        rows.append(row)
    return header, rows
