"""Global residual and generalised-Jacobian assembly.

The discrete system couples, per Newton iterate, four row blocks:

  stress rows      integral over K of G_reg(S, D(u)) : tau  (one-point rule,
                   exact for piecewise constants)
  momentum rows    alpha*(u, v) + (S, D(v)) - (p, div v) - (f, v), with
                   Dirichlet rows replaced by u_i - g_i
  continuity rows  -(q, div u) - c_stab*h_K^2*(grad p, grad q) + lam*(q, 1)
  multiplier row   (p, 1)

Only the stress rows are nonlinear; all other blocks are assembled once per
mesh and cached.  Element loops run through the constitutive sweep kernel,
so per-iteration assembly is a handful of vectorised operations.  Triplet
order is deterministic, making assembled systems bit-identical run to run.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from . import kernels
from .mesh import BoundaryTag, Mesh
from .spaces import DofLayout, State, all_element_data

__all__ = ["ProblemSpec", "SparseSystem", "assemble_residual", "assemble_jacobian", "apply_time_step"]

# Dirichlet data is applied tag by tag in this order, so a vertex shared by
# a lid edge and a wall edge takes the wall value (non-leaky cavity corners)
_TAG_PRIORITY = (BoundaryTag.LID, BoundaryTag.INFLOW, BoundaryTag.OUTFLOW, BoundaryTag.WALL)


@dataclass(frozen=True)
class ProblemSpec:
    """One regularised flow problem on a mesh.

    ``dirichlet`` maps every boundary tag present in the mesh to a velocity
    function (x, y) -> (u, v); all benchmarks prescribe the full boundary.
    ``alpha`` is the implicit-Euler coefficient (0 for the steady problem);
    ``time_step_load`` is the extra load u_old/dt installed by
    :func:`apply_time_step` and replaced, not accumulated, on reuse.
    """

    mesh: Mesh
    reg: object  # RegularizedModel
    dirichlet: Mapping[BoundaryTag, Callable[[float, float], tuple]]
    alpha: float = 0.0
    body_force: np.ndarray | None = None
    stabilization: float = 0.2
    time_step_load: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ValueError("alpha must be nonnegative")
        present = {BoundaryTag(int(t)) for t in self.mesh.boundary_tags}
        missing = present - set(self.dirichlet)
        if missing:
            raise ValueError(f"no Dirichlet data for boundary tags {sorted(t.name for t in missing)}")

    def with_eps(self, eps: float) -> "ProblemSpec":
        return replace(self, reg=self.reg.with_eps(eps))


@dataclass
class SparseSystem:
    """Assembled linear system in triplet form, plus the Newton right side."""

    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    rhs: np.ndarray
    n: int
    stress_block_lower_bound: float | None = None

    def to_csc(self):
        return sp.coo_matrix((self.vals, (self.rows, self.cols)), shape=(self.n, self.n)).tocsc()

    def to_csr(self):
        return sp.coo_matrix((self.vals, (self.rows, self.cols)), shape=(self.n, self.n)).tocsr()


class _MeshOperators:
    """Constant (state-independent) operators for one mesh."""

    def __init__(self, mesh: Mesh):
        self.layout = lay = DofLayout.of(mesh)
        areas, grads = all_element_data(mesh)
        self.areas = areas
        self.h2 = mesh.diameters() ** 2
        T, V = mesh.num_triangles, mesh.num_vertices
        tri = mesh.triangles

        # strain-displacement blocks: D(u)|_K = Bk[K] @ u_element
        Bk = np.zeros((T, 3, 6))
        for a in range(3):
            Bk[:, 0, 2 * a] = grads[:, a, 0]
            Bk[:, 1, 2 * a + 1] = grads[:, a, 1]
            Bk[:, 2, 2 * a] = 0.5 * grads[:, a, 1]
            Bk[:, 2, 2 * a + 1] = 0.5 * grads[:, a, 0]
        self.Bk = Bk
        udofs = np.empty((T, 6), dtype=np.int64)
        udofs[:, 0::2] = 2 * tri
        udofs[:, 1::2] = 2 * tri + 1
        self.udofs = udofs

        srange = np.arange(3 * T).reshape(T, 3)
        rows = np.repeat(srange, 6).reshape(T, 3, 6)
        cols = np.broadcast_to(udofs[:, None, :], (T, 3, 6))
        self.B = sp.coo_matrix(
            (Bk.ravel(), (rows.ravel(), cols.ravel())), shape=(3 * T, 2 * V)
        ).tocsr()

        # scatter patterns for the two nonlinear stress blocks
        self.rows_ss = np.repeat(srange, 3).reshape(T, 3, 3).ravel()
        self.cols_ss = np.broadcast_to(srange[:, None, :], (T, 3, 3)).ravel()
        self.rows_su = rows.ravel() + 0  # stress rows against velocity columns
        self.cols_su = (cols.ravel() + lay.offset_velocity).astype(np.int64)

        w_area = np.repeat(areas, 3) * np.tile([1.0, 1.0, 2.0], T)
        self.E = (self.B.T @ sp.diags(w_area)).tocsr()  # (2V, 3T) momentum-stress

        # consistent P1 mass (vector), pressure gradient, stabilisation
        m_loc = (np.ones((3, 3)) + np.eye(3)) / 12.0
        mr, mc, mv = [], [], []
        gr, gc, gv = [], [], []
        sr, sc, sv = [], [], []
        for a in range(3):
            for b in range(3):
                for k in range(2):
                    mr.append(2 * tri[:, a] + k)
                    mc.append(2 * tri[:, b] + k)
                    mv.append(areas * m_loc[a, b])
                    gr.append(2 * tri[:, a] + k)
                    gc.append(tri[:, b])
                    gv.append(areas * grads[:, a, k] / 3.0)
                sr.append(tri[:, a])
                sc.append(tri[:, b])
                sv.append(self.h2 * areas * np.einsum("ij,ij->i", grads[:, a], grads[:, b]))
        self.M2 = sp.coo_matrix(
            (np.concatenate(mv), (np.concatenate(mr), np.concatenate(mc))), shape=(2 * V, 2 * V)
        ).tocsr()
        self.Gp = sp.coo_matrix(
            (np.concatenate(gv), (np.concatenate(gr), np.concatenate(gc))), shape=(2 * V, V)
        ).tocsr()
        self.GpT = self.Gp.T.tocsr()
        self.Stab = sp.coo_matrix(
            (np.concatenate(sv), (np.concatenate(sr), np.concatenate(sc))), shape=(V, V)
        ).tocsr()
        self.mp = np.zeros(V)
        np.add.at(self.mp, tri.ravel(), np.repeat(areas / 3.0, 3))

        # boundary vertex bookkeeping
        self.tag_vertices = {
            tag: np.unique(mesh.boundary_edges[mesh.boundary_tags == int(tag)])
            for tag in _TAG_PRIORITY
            if (mesh.boundary_tags == int(tag)).any()
        }
        bverts = mesh.boundary_vertices()
        self.dirichlet_dofs = np.sort(
            np.concatenate([2 * bverts, 2 * bverts + 1]) + lay.offset_velocity
        )
        is_dir = np.zeros(lay.total, dtype=bool)
        is_dir[self.dirichlet_dofs] = True
        self.is_dirichlet = is_dir

        # constant Jacobian triplets (momentum/continuity/multiplier blocks),
        # with momentum rows at Dirichlet dofs dropped and identity rows added
        def coo_triplets(mat, row_off, col_off):
            coo = mat.tocoo()
            return coo.row + row_off, coo.col + col_off, coo.data

        blocks = {}
        blocks["mass"] = coo_triplets(self.M2, lay.offset_velocity, lay.offset_velocity)
        blocks["stress_div"] = coo_triplets(self.E, lay.offset_velocity, 0)
        blocks["pressure_grad"] = coo_triplets(-self.Gp, lay.offset_velocity, lay.offset_pressure)
        blocks["divergence"] = coo_triplets(-self.GpT, lay.offset_pressure, lay.offset_velocity)
        blocks["stabilization"] = coo_triplets(-self.Stab, lay.offset_pressure, lay.offset_pressure)
        for name in ("mass", "stress_div", "pressure_grad"):
            r, c, v = blocks[name]
            keep = ~is_dir[r]
            blocks[name] = (r[keep], c[keep], v[keep])
        pr = np.arange(V) + lay.offset_pressure
        blocks["mean_column"] = (pr, np.full(V, lay.offset_multiplier), self.mp.copy())
        blocks["mean_row"] = (np.full(V, lay.offset_multiplier), pr, self.mp.copy())
        blocks["identity"] = (self.dirichlet_dofs, self.dirichlet_dofs, np.ones(len(self.dirichlet_dofs)))
        self.const_blocks = blocks


_ops_cache: "weakref.WeakKeyDictionary[Mesh, _MeshOperators]" = weakref.WeakKeyDictionary()


def operators_for(mesh: Mesh) -> _MeshOperators:
    ops = _ops_cache.get(mesh)
    if ops is None:
        ops = _MeshOperators(mesh)
        _ops_cache[mesh] = ops
    return ops


def dirichlet_values(spec: ProblemSpec):
    """Global Dirichlet dof indices and prescribed values, in layout order."""
    ops = operators_for(spec.mesh)
    vals = np.zeros((spec.mesh.num_vertices, 2))
    for tag in _TAG_PRIORITY:
        verts = ops.tag_vertices.get(tag)
        if verts is None:
            continue
        f = spec.dirichlet[tag]
        for v in verts:
            vals[v] = f(spec.mesh.vertices[v, 0], spec.mesh.vertices[v, 1])
    g = vals.reshape(-1)[ops.dirichlet_dofs - ops.layout.offset_velocity]
    return ops.dirichlet_dofs, g


def _load_vector(spec: ProblemSpec, ops: _MeshOperators):
    V = spec.mesh.num_vertices
    f = np.zeros(2 * V)
    if spec.body_force is not None:
        f += np.asarray(spec.body_force, dtype=float).reshape(2 * V)
    if spec.time_step_load is not None:
        f += np.asarray(spec.time_step_load, dtype=float).reshape(2 * V)
    return f


def assemble_residual(spec: ProblemSpec, state: State) -> np.ndarray:
    """Nonlinear residual vector at the given state."""
    if state.mesh is not spec.mesh:
        raise ValueError("state and spec use different meshes")
    ops = operators_for(spec.mesh)
    lay = ops.layout
    s_flat = state.coeffs[: lay.n_stress]
    u = state.coeffs[lay.offset_velocity : lay.offset_pressure]
    p = state.coeffs[lay.offset_pressure : lay.offset_multiplier]
    lam = state.coeffs[-1]

    d_el = (ops.B @ u).reshape(-1, 3)
    g, _, _ = kernels.model_sweep(spec.reg, state.stress, d_el, want_jac=False)

    r = np.empty(lay.total)
    r[: lay.n_stress] = (ops.areas[:, None] * g).ravel()
    r_u = ops.E @ s_flat - ops.Gp @ p - ops.M2 @ _load_vector(spec, ops)
    if spec.alpha:
        r_u += spec.alpha * (ops.M2 @ u)
    r[lay.offset_velocity : lay.offset_pressure] = r_u
    r[lay.offset_pressure : lay.offset_multiplier] = (
        -(ops.GpT @ u) - spec.stabilization * (ops.Stab @ p) + lam * ops.mp
    )
    r[-1] = ops.mp @ p

    dofs, gvals = dirichlet_values(spec)
    r[dofs] = state.coeffs[dofs] - gvals
    return r


def assemble_jacobian(spec: ProblemSpec, state: State, residual=None) -> SparseSystem:
    """Generalised Jacobian selection at the state, condensed for the solve.

    Dirichlet rows are identity rows; their columns are eliminated into the
    right-hand side, which is set up for the Newton step M*delta = -F.
    """
    if state.mesh is not spec.mesh:
        raise ValueError("state and spec use different meshes")
    ops = operators_for(spec.mesh)
    lay = ops.layout
    if residual is None:
        residual = assemble_residual(spec, state)

    u = state.coeffs[lay.offset_velocity : lay.offset_pressure]
    d_el = (ops.B @ u).reshape(-1, 3)
    _, a1, a2 = kernels.model_sweep(spec.reg, state.stress, d_el, want_jac=True)

    bound = None
    if spec.reg.eps1 > 0.0 and spec.reg.eps2 > 0.0:
        det = np.linalg.det(a1)
        fro2 = np.einsum("tij,tij->t", a1, a1)
        bound = float(np.min(np.abs(det) / fro2))
        if bound <= 0.0:
            raise ValueError("singular stress block in Jacobian selection")

    vals_ss = (ops.areas[:, None, None] * a1).ravel()
    vals_su = (ops.areas[:, None, None] * np.einsum("tij,tjk->tik", a2, ops.Bk)).ravel()

    blocks = ops.const_blocks
    rows = [ops.rows_ss, ops.rows_su]
    cols = [ops.cols_ss, ops.cols_su]
    vals = [vals_ss, vals_su]
    for name, (r, c, v) in blocks.items():
        rows.append(r)
        cols.append(c)
        if name == "mass":
            v = spec.alpha * v
        elif name == "stabilization":
            v = spec.stabilization * v
        vals.append(v)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)

    rhs = -residual
    eliminate = ops.is_dirichlet[cols] & (rows != cols)
    if eliminate.any():
        np.subtract.at(rhs, rows[eliminate], vals[eliminate] * rhs[cols[eliminate]])
        keep = ~eliminate
        rows, cols, vals = rows[keep], cols[keep], vals[keep]

    return SparseSystem(rows, cols, vals, rhs, lay.total, bound)


def apply_time_step(spec: ProblemSpec, u_old: np.ndarray, dt: float) -> ProblemSpec:
    """Implicit-Euler view of the spec: alpha = 1/dt, load gains u_old/dt."""
    if dt <= 0.0:
        raise ValueError("time step must be positive")
    u_old = np.asarray(u_old, dtype=float).reshape(-1)
    if u_old.shape != (2 * spec.mesh.num_vertices,):
        raise ValueError("u_old does not match the velocity block")
    return replace(spec, alpha=1.0 / dt, time_step_load=u_old / dt)
