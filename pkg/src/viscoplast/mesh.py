"""Triangulations of rectilinear domains with tagged boundaries.

Meshes are conforming triangulations of axis-aligned rectilinear domains:
rectangles (flow between plates, lid-driven cavity) and the symmetric
expansion-contraction channel.  Vertices, triangles and boundary edges are
plain NumPy arrays; meshes are immutable after construction and safe to
share.

Triangles are counter-clockwise.  Every boundary edge carries exactly one
:class:`BoundaryTag`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoundaryTag",
    "Mesh",
    "build_rectangle",
    "build_channel",
    "refine_uniform",
    "retag_boundary",
]


class BoundaryTag(enum.IntEnum):
    INFLOW = 0
    OUTFLOW = 1
    WALL = 2
    LID = 3


@dataclass(eq=False)
class Mesh:
    """Conforming triangulation with tagged boundary edges.

    Attributes
    ----------
    vertices : (V, 2) float array
        vertex coordinates
    triangles : (T, 3) int array
        counter-clockwise vertex indices
    boundary_edges : (B, 2) int array
        vertex pairs of boundary edges
    boundary_tags : (B,) int array
        one BoundaryTag value per boundary edge
    h_max : float
        maximum element diameter
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    h_max: float = field(default=0.0)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self.boundary_edges = np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        self.boundary_tags = np.asarray(self.boundary_tags, dtype=np.int64)
        if self.h_max == 0.0:
            self.h_max = float(self.diameters().max()) if len(self.triangles) else 0.0

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def corners(self, k=None):
        """Vertex coordinates of triangle k, or of all triangles ((T,3,2))."""
        if k is None:
            return self.vertices[self.triangles]
        return self.vertices[self.triangles[k]]

    def signed_areas(self):
        p = self.corners()
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def diameters(self):
        """Per-triangle diameter (longest edge length)."""
        p = self.corners()
        l0 = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
        l1 = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
        l2 = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
        return np.maximum(np.maximum(l0, l1), l2)

    def edge_incidence(self):
        """Map from undirected edge (min, max) to the list of owning triangles."""
        incidence: dict[tuple[int, int], list[int]] = {}
        for k, (a, b, c) in enumerate(self.triangles):
            for u, v in ((a, b), (b, c), (c, a)):
                key = (min(u, v), max(u, v))
                incidence.setdefault(key, []).append(k)
        return incidence

    def boundary_vertices(self):
        """Indices of vertices lying on the boundary."""
        return np.unique(self.boundary_edges)

    def validate(self):
        """Check the mesh invariants; raises ValueError on violation."""
        if (self.signed_areas() <= 0.0).any():
            raise ValueError("triangle with nonpositive signed area")
        incidence = self.edge_incidence()
        counts = {key: len(tris) for key, tris in incidence.items()}
        if any(c > 2 for c in counts.values()):
            raise ValueError("non-conforming edge shared by more than two triangles")
        bkeys = {(min(a, b), max(a, b)) for a, b in self.boundary_edges}
        for key, c in counts.items():
            if c == 1 and key not in bkeys:
                raise ValueError(f"untagged boundary edge {key}")
            if c == 2 and key in bkeys:
                raise ValueError(f"interior edge tagged as boundary {key}")
        if len(bkeys) != len(self.boundary_edges):
            raise ValueError("duplicate boundary edge")
        if len(self.boundary_tags) != len(self.boundary_edges):
            raise ValueError("boundary edge without exactly one tag")
        euler = self.num_vertices - len(counts) + self.num_triangles
        if euler != 1:
            raise ValueError(f"Euler relation violated (V - E + T = {euler})")


def _grid_mesh(xs, ys, cell_mask=None, diagonal="right"):
    """Triangulate the cells of a tensor grid, keeping cells where mask=True.

    ``diagonal='right'`` splits every cell along the lower-left to
    upper-right diagonal; ``'mirrored_y'`` mirrors the split about the
    horizontal midline so the triangulation is symmetric under y -> -y
    (requires an even number of cell rows).
    """
    nx, ny = len(xs) - 1, len(ys) - 1
    if cell_mask is None:
        cell_mask = np.ones((nx, ny), dtype=bool)
    if diagonal not in ("right", "mirrored_y"):
        raise ValueError(f"unknown diagonal rule {diagonal!r}")
    if diagonal == "mirrored_y" and ny % 2:
        raise ValueError("mirrored_y split requires an even cell count in y")

    used = np.zeros((nx + 1, ny + 1), dtype=bool)
    ii, jj = np.nonzero(cell_mask)
    for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
        used[ii + di, jj + dj] = True
    # number used vertices row by row (y-major) for a banded dof layout
    ids = -np.ones((ny + 1, nx + 1), dtype=np.int64)
    order = np.nonzero(used.T.ravel())[0]
    ids.ravel()[order] = np.arange(len(order))
    vid = ids.T
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([gx.T.ravel()[order], gy.T.ravel()[order]])

    tris = []
    for i, j in zip(ii, jj):
        a, b = vid[i, j], vid[i + 1, j]
        c, d = vid[i + 1, j + 1], vid[i, j + 1]
        if diagonal == "right" or j < ny // 2:
            tris.append((a, b, c))
            tris.append((a, c, d))
        else:
            tris.append((a, b, d))
            tris.append((b, c, d))
    triangles = np.array(tris, dtype=np.int64)
    return vertices, triangles


def _boundary_of(triangles):
    incidence: dict[tuple[int, int], int] = {}
    for a, b, c in triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            incidence[key] = incidence.get(key, 0) + 1
    return np.array([key for key, n in incidence.items() if n == 1], dtype=np.int64)


def build_rectangle(origin, extent, nx, ny, diagonal="right") -> Mesh:
    """Structured triangulation of an axis-aligned rectangle.

    Parameters
    ----------
    origin : (2,) lower-left corner
    extent : (2,) positive side lengths
    nx, ny : number of cells per direction (each cell is split in two)
    diagonal : 'right' (default) or 'mirrored_y'

    All boundary edges are tagged WALL; use :func:`retag_boundary` to
    assign problem-specific tags.
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise ValueError("cell counts must be at least 1")
    ox, oy = float(origin[0]), float(origin[1])
    ex, ey = float(extent[0]), float(extent[1])
    if ex <= 0.0 or ey <= 0.0:
        raise ValueError("extents must be positive")
    xs = ox + ex * np.arange(nx + 1) / nx
    ys = oy + ey * np.arange(ny + 1) / ny
    vertices, triangles = _grid_mesh(xs, ys, diagonal=diagonal)
    bedges = _boundary_of(triangles)
    tags = np.full(len(bedges), int(BoundaryTag.WALL), dtype=np.int64)
    return Mesh(vertices, triangles, bedges, tags)


def build_channel(l_hat, delta, h, cells_per_unit) -> Mesh:
    """Expansion-contraction channel, symmetric about y = 0.

    Inflow and outflow sections of half-width 1 and length ``l_hat``
    flank a central cavity of half-width ``h`` and length ``1/delta``.
    The left edge is tagged INFLOW, the right edge OUTFLOW, the rest WALL.

    ``cells_per_unit`` must align all block interfaces with the uniform
    grid, i.e. l_hat, h and 1/(2*delta) times cells_per_unit must all be
    integers.
    """
    if h <= 1.0:
        raise ValueError("cavity half-width h must exceed 1")
    if delta <= 0.0 or l_hat <= 0.0:
        raise ValueError("delta and l_hat must be positive")
    cpu = int(cells_per_unit)
    if cpu < 1:
        raise ValueError("cells_per_unit must be at least 1")

    half_cavity = 0.5 / delta
    width = l_hat + half_cavity
    lengths = {"l_hat": l_hat, "cavity half-length": half_cavity, "h": h}
    for name, value in lengths.items():
        if abs(value * cpu - round(value * cpu)) > 1e-9:
            raise ValueError(f"cells_per_unit={cpu} does not align the {name} interface")

    nx = int(round(2 * width * cpu))
    ny = int(round(2 * h * cpu))
    xs = -width + np.arange(nx + 1) / cpu
    ys = -h + np.arange(ny + 1) / cpu
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    in_cavity = np.abs(cx)[:, None] < half_cavity
    mask = in_cavity | (np.abs(cy)[None, :] < 1.0)

    vertices, triangles = _grid_mesh(xs, ys, cell_mask=mask)
    bedges = _boundary_of(triangles)
    mid = 0.5 * (vertices[bedges[:, 0]] + vertices[bedges[:, 1]])
    tags = np.full(len(bedges), int(BoundaryTag.WALL), dtype=np.int64)
    tol = 0.25 / cpu
    tags[np.abs(mid[:, 0] + width) < tol] = int(BoundaryTag.INFLOW)
    tags[np.abs(mid[:, 0] - width) < tol] = int(BoundaryTag.OUTFLOW)
    return Mesh(vertices, triangles, bedges, tags)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Split every triangle into four via edge midpoints; tags are inherited."""
    V = mesh.num_vertices
    edge_ids: dict[tuple[int, int], int] = {}
    for a, b, c in mesh.triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            if key not in edge_ids:
                edge_ids[key] = 0
    for new_id, key in enumerate(sorted(edge_ids)):
        edge_ids[key] = V + new_id

    midpoints = np.empty((len(edge_ids), 2))
    for (u, v), idx in edge_ids.items():
        midpoints[idx - V] = 0.5 * (mesh.vertices[u] + mesh.vertices[v])
    vertices = np.vstack([mesh.vertices, midpoints])

    tris = np.empty((4 * mesh.num_triangles, 3), dtype=np.int64)
    for k, (a, b, c) in enumerate(mesh.triangles):
        mab = edge_ids[(min(a, b), max(a, b))]
        mbc = edge_ids[(min(b, c), max(b, c))]
        mca = edge_ids[(min(c, a), max(c, a))]
        tris[4 * k : 4 * k + 4] = [
            (a, mab, mca),
            (b, mbc, mab),
            (c, mca, mbc),
            (mab, mbc, mca),
        ]

    nb = len(mesh.boundary_edges)
    bedges = np.empty((2 * nb, 2), dtype=np.int64)
    tags = np.empty(2 * nb, dtype=np.int64)
    for e, (a, b) in enumerate(mesh.boundary_edges):
        m = edge_ids[(min(a, b), max(a, b))]
        bedges[2 * e] = (a, m)
        bedges[2 * e + 1] = (m, b)
        tags[2 * e] = tags[2 * e + 1] = mesh.boundary_tags[e]
    return Mesh(vertices, tris, bedges, tags)


def retag_boundary(mesh: Mesh, rule) -> Mesh:
    """Return a copy of the mesh with boundary tags reassigned.

    ``rule(midpoint) -> BoundaryTag`` is evaluated at each boundary edge
    midpoint.
    """
    mid = 0.5 * (mesh.vertices[mesh.boundary_edges[:, 0]] + mesh.vertices[mesh.boundary_edges[:, 1]])
    tags = np.array([int(rule(m)) for m in mid], dtype=np.int64)
    return Mesh(
        mesh.vertices.copy(),
        mesh.triangles.copy(),
        mesh.boundary_edges.copy(),
        tags,
        h_max=mesh.h_max,
    )
