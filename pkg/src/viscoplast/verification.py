"""Fast self-checks behind the ``verify`` CLI command.

Each check returns (name, passed, detail); the suite is the release gate
and doubles as a seedable property-test harness: mesh invariants, the
tensor-contraction oracle, pointwise constitutive oracles and Jacobian
finite-difference checks, graph monotonicity sampling, assembly and solver
contracts, and the VTK golden file.
"""

from __future__ import annotations


from pathlib import Path

import numpy as np

from . import linsolve
from .assembly import ProblemSpec, assemble_jacobian, assemble_residual, operators_for
from .constitutive import (
    BinghamMax,
    BinghamProduct,
    BinghamProjection,
    HerschelBulkley,
    Newtonian,
    PowerLaw,
    RegularizedModel,
    eval_g,
    eval_g_reg,
    jacobian_selection,
    solve_pointwise_stress,
)
from .mesh import BoundaryTag, build_channel, build_rectangle, refine_uniform
from .newton import solve_newton
from .postprocess import FieldSnapshot, write_vtk
from .spaces import State
from .tensor import SymTensor2, inner, norm, outer

GOLDEN_VTK = Path(__file__).parent / "data" / "golden_square.vtk"

ALL_MODELS = (
    Newtonian(1.0),
    PowerLaw(2.0, 1.7),
    BinghamProduct(1.0, 0.5),
    BinghamMax(1.0, 0.5),
    BinghamProjection(1.0, 0.5),
    HerschelBulkley(1.0, 0.5, 1.7),
)


def _rand_tensor(rng, scale=1.0):
    return SymTensor2(*(scale * rng.normal(size=3)))


def check_mesh_invariants(rng):
    meshes = [
        build_rectangle((0, 0), (1, 1), 3, 3),
        build_rectangle((0, -1), (4, 2), 8, 4, diagonal="mirrored_y"),
        build_channel(3.0, 0.2, 1.2, 10),
    ]
    for mesh in meshes:
        area = mesh.signed_areas().sum()
        for _ in range(2):
            mesh.validate()
            mesh = refine_uniform(mesh)
            if abs(mesh.signed_areas().sum() - area) > 1e-12 * area:
                return False, "area not conserved under refinement"
        mesh.validate()
    return True, f"{len(meshes)} meshes, refinement depth 2"


def check_tensor_contraction(rng):
    for _ in range(100):
        a, b, t = (_rand_tensor(rng) for _ in range(3))
        c = np.einsum("ij,kl->ijkl", a.as_matrix(), b.as_matrix())
        want = np.einsum("ijkl,kl->ij", c, t.as_matrix())
        got = outer(a, b).apply(t).as_matrix()
        if not np.allclose(got, want, atol=1e-13):
            return False, "rank-one action disagrees with full contraction"
    return True, "100 random triples"


def check_origin_values(rng):
    zero = SymTensor2()
    for model in ALL_MODELS:
        if norm(eval_g(model, zero, zero)) != 0.0:
            return False, f"{type(model).__name__} violates G(0,0)=0"
        reg = RegularizedModel.single(model, float(10.0 ** rng.uniform(-4, 0)))
        if norm(eval_g_reg(reg, zero, zero)) != 0.0:
            return False, f"{type(model).__name__} regularised origin value"
    return True, f"{len(ALL_MODELS)} models"


def check_pointwise_jacobians(rng):
    for model in ALL_MODELS:
        checked = 0
        while checked < 40:
            sigma, tau = _rand_tensor(rng, 2.0), _rand_tensor(rng, 2.0)
            if norm(tau) < 0.1:
                continue
            if isinstance(model, (BinghamMax, BinghamProjection)) and (
                abs(norm(sigma) - model.tau_star) < 0.1 or norm(sigma) < 0.1
            ):
                continue
            d1, d2 = jacobian_selection(model, sigma, tau)
            ds, dt = _rand_tensor(rng), _rand_tensor(rng)
            h = 1e-7
            fd = (1.0 / (2.0 * h)) * (
                eval_g(model, sigma + h * ds, tau + h * dt)
                - eval_g(model, sigma - h * ds, tau - h * dt)
            )
            lin = d1.apply(ds) + d2.apply(dt)
            if norm(fd - lin) / max(norm(fd), 1.0) > 1e-6:
                return False, f"{type(model).__name__} finite-difference mismatch"
            checked += 1
    return True, "40 points per model, step 1e-7"


def check_graph_monotonicity(rng):
    for eps in (0.5, 0.01):
        for model in (BinghamProduct(1.0, 0.5), HerschelBulkley(1.0, 0.5, 1.7)):
            reg = RegularizedModel.single(model, eps)
            c_eps = eps / (1.0 + eps * eps)
            pairs = []
            for _ in range(26):
                u = _rand_tensor(rng)
                u = (1.0 / norm(u)) * u
                d = float(10.0 ** rng.uniform(-3, 1)) * u
                pairs.append((solve_pointwise_stress(reg, d), d))
            for i in range(len(pairs)):
                for j in range(i + 1, len(pairs)):
                    s1, d1 = pairs[i]
                    s2, d2 = pairs[j]
                    lhs = inner(s1 - s2, d1 - d2)
                    rhs = c_eps * (norm(s1 - s2) ** 2 + norm(d1 - d2) ** 2)
                    if lhs < rhs - 1e-9 * max(1.0, rhs):
                        return False, f"{type(model).__name__} eps={eps} violation"
    return True, "325 pairs per (model, eps)"


def check_newtonian_one_iteration(rng):
    mesh = build_rectangle((0, 0), (1, 1), 6, 6)
    spec = ProblemSpec(
        mesh,
        RegularizedModel.single(Newtonian(1.0), 0.1),
        dirichlet={BoundaryTag.WALL: lambda x, y: (y * (1.0 - y), 0.0)},
    )
    _, report = solve_newton(spec, State(mesh), tol=1e-9)
    if not (report.converged and report.iterations == 1):
        return False, f"took {report.iterations} iterations"
    return True, "affine problem solved in one step"


def check_assembled_jacobian_fd(rng):
    mesh = build_rectangle((0, 0), (1, 1), 4, 4)
    ops = operators_for(mesh)
    spec = ProblemSpec(
        mesh,
        RegularizedModel.single(BinghamProduct(1.0, 0.5), 0.05),
        dirichlet={BoundaryTag.WALL: lambda x, y: (y, x)},
        alpha=1.0,
    )
    checked = 0
    while checked < 5:
        state = State(mesh)
        state.coeffs[:] = 2.0 * rng.normal(size=state.coeffs.shape)
        d_el = (ops.B @ state.coeffs[ops.layout.offset_velocity : ops.layout.offset_pressure]).reshape(-1, 3)
        tau = d_el - spec.reg.eps2 * state.stress
        if np.sqrt((tau**2 * [1, 1, 2]).sum(axis=1)).min() <= 0.1:
            continue
        checked += 1
        m = assemble_jacobian(spec, state).to_csr()
        delta = rng.normal(size=state.layout.total)
        delta[ops.dirichlet_dofs] = 0.0
        h = 1e-6
        xp, xm = state.copy(), state.copy()
        xp.coeffs += h * delta
        xm.coeffs -= h * delta
        fd = (assemble_residual(spec, xp) - assemble_residual(spec, xm)) / (2.0 * h)
        lin = m @ delta
        if np.linalg.norm(fd - lin) / np.linalg.norm(lin) > 1e-6:
            return False, "assembled directional derivative mismatch"
    return True, "5 states away from kinks"


def check_linear_solver_contract(rng):
    mesh = build_rectangle((0, -1), (2, 2), 4, 4)
    spec = ProblemSpec(
        mesh,
        RegularizedModel.single(BinghamProduct(1.0, 0.5), 0.05),
        dirichlet={BoundaryTag.WALL: lambda x, y: (0.1 * y, 0.0)},
    )
    state = State(mesh)
    state.coeffs[:] = rng.normal(size=state.coeffs.shape)
    system = assemble_jacobian(spec, state)
    a = system.to_csc()
    fact = linsolve.factorise(system)
    import scipy.sparse as sp

    for _ in range(3):
        b = rng.normal(size=system.n)
        x = linsolve.solve(fact, b)
        bound = 1e-10 * (sp.linalg.norm(a) * np.linalg.norm(x) + np.linalg.norm(b))
        if np.linalg.norm(a @ x - b) > bound:
            return False, "direct solve residual above contract"
    return True, "3 right-hand sides"


def check_vtk_golden(rng):
    import tempfile

    mesh = build_rectangle((0, 0), (1, 1), 1, 1)
    snap = FieldSnapshot(
        mesh,
        point_data={"pressure": np.array([0.0, 0.25, 0.5, 1.0])},
        cell_data={"stress_norm": np.array([1.0 / 3.0, 2.0 / 3.0])},
    )
    with tempfile.NamedTemporaryFile("r", suffix=".vtk") as fh:
        write_vtk(snap, fh.name)
        got = Path(fh.name).read_bytes()
    if got != GOLDEN_VTK.read_bytes():
        return False, "writer output differs from the golden file"
    return True, "byte-identical"


CHECKS = [
    ("mesh invariants", check_mesh_invariants),
    ("tensor contraction oracle", check_tensor_contraction),
    ("constitutive origin values", check_origin_values),
    ("pointwise jacobian finite differences", check_pointwise_jacobians),
    ("regularised graph monotonicity", check_graph_monotonicity),
    ("newtonian one-iteration convergence", check_newtonian_one_iteration),
    ("assembled jacobian finite differences", check_assembled_jacobian_fd),
    ("direct solver residual contract", check_linear_solver_contract),
    ("vtk golden file", check_vtk_golden),
]


def run_all(seed: int = 0, out=None):
    """Run every check; returns (all_passed, list of (name, ok, detail))."""
    results = []
    first_failure = None
    for name, fn in CHECKS:
        rng = np.random.default_rng([seed, hash(name) % 2**32])
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failure, not an error
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
        if not ok and first_failure is None:
            first_failure = name
        if out is not None:
            print(f"{'ok  ' if ok else 'FAIL'} {name} ({detail})", file=out)
    if out is not None and first_failure is not None:
        print(f"first failing property: {first_failure}", file=out)
    return first_failure is None, results
