"""Benchmark definitions: plane flow between plates, lid-driven cavity,
expansion-contraction channel.

All Bingham benchmarks fix the viscosity at nu = 1/2: substituting the
plates solution into the momentum balance forces 2*nu = 1, and the other
two benchmarks are non-dimensionalised consistently (the Bingham number
plays the yield stress in the channel).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

from .assembly import ProblemSpec, apply_time_step, operators_for
from .constitutive import (
    BinghamMax,
    BinghamProduct,
    BinghamProjection,
    HerschelBulkley,
    Newtonian,
    RegularizedModel,
    solve_pointwise_stress,
)
from .tensor import SymTensor2
from .mesh import BoundaryTag, build_channel, build_rectangle, refine_uniform, retag_boundary
from .newton import (
    ContinuationSchedule,
    NewtonError,
    NewtonReport,
    StageResult,
    residual_backtracking,
    solve_continuation,
    solve_newton,
)
from .postprocess import (
    FieldSnapshot,
    cell_strain_norms,
    cell_to_vertex,
    error_h1_velocity,
    error_l2_pressure,
    error_l2_velocity,
    sample_line,
    snapshot_of,
    stream_function,
)
from .spaces import State

__all__ = [
    "PAPER_EPS_SCHEDULE",
    "BINGHAM_FORMS",
    "PoiseuilleCase",
    "CavityCase",
    "ChannelCase",
    "poiseuille_exact",
    "plates_velocity",
    "plates_velocity_gradient",
    "plates_pressure",
    "run_poiseuille",
    "run_cavity",
    "run_channel",
]

PAPER_EPS_SCHEDULE = (0.5, 0.0166, 0.001, 0.0001)

BINGHAM_FORMS = {
    "product": BinghamProduct,
    "max": BinghamMax,
    "projection": BinghamProjection,
}

_NU = 0.5  # 2*nu = 1 for every Bingham benchmark


def _zero_velocity(x, y):
    return (0.0, 0.0)


# ---------------------------------------------------------------------------
# flow between two plates on (0,4) x (-1,1), exact solution available


def plates_velocity(tau_star):
    """Vectorised exact velocity of the plates problem."""
    c = np.sqrt(2.0) * tau_star

    def f(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        u1 = np.where(np.abs(y) <= 0.5, c / 4.0, c * (np.abs(y) - y * y))
        return np.stack([u1, np.zeros_like(u1)], axis=-1)

    return f


def plates_velocity_gradient(tau_star):
    """Vectorised exact velocity gradient, shape (N, 2, 2)."""
    c = np.sqrt(2.0) * tau_star

    def f(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        du1dy = np.where(np.abs(y) <= 0.5, 0.0, c * (np.sign(y) - 2.0 * y))
        g = np.zeros(y.shape + (2, 2))
        g[..., 0, 1] = du1dy
        return g

    return f


def plates_pressure(tau_star):
    c = np.sqrt(2.0) * tau_star

    def f(x, y):
        return c * (16.0 - np.asarray(x, dtype=float))

    return f


def poiseuille_exact(tau_star, x):
    """Exact (velocity, pressure) of the plates problem at one point."""
    x = np.asarray(x, dtype=float)
    u = plates_velocity(tau_star)(x[0], x[1])
    p = float(plates_pressure(tau_star)(x[0], x[1]))
    return tuple(float(v) for v in u), p


@dataclass(frozen=True)
class PoiseuilleCase:
    """Plates benchmark; the base grid gives about 9e3 unknowns."""

    tau_star: float = 1.0
    nx: int = 44
    ny: int = 22
    form: str = "product"

    @property
    def nu(self) -> float:
        return _NU

    def mesh(self, refinements: int = 0):
        # the mirrored split keeps the triangulation symmetric about y = 0
        m = build_rectangle((0.0, -1.0), (4.0, 2.0), self.nx, self.ny, diagonal="mirrored_y")
        for _ in range(refinements):
            m = refine_uniform(m)
        return m

    def spec(self, refinements: int = 0, eps: float = PAPER_EPS_SCHEDULE[0]) -> ProblemSpec:
        mesh = self.mesh(refinements)
        model = BINGHAM_FORMS[self.form](self.tau_star, self.nu)
        exact = plates_velocity(self.tau_star)

        def bc(x, y):
            return tuple(exact(x, y))

        return ProblemSpec(
            mesh,
            RegularizedModel.single(model, eps),
            dirichlet={BoundaryTag.WALL: bc},
        )


@dataclass
class PoiseuilleStage:
    level: int
    dofs: int
    eps: float
    iterations: int
    converged: bool
    error_l2: float
    error_h1: float
    error_pressure: float
    residual_norms: list[float]


@dataclass
class PoiseuilleResult:
    case: PoiseuilleCase
    stages: list[PoiseuilleStage]
    states: dict  # level -> final State

    def rows(self):
        return [
            (
                s.level,
                s.dofs,
                s.eps,
                s.error_l2,
                s.error_h1,
                s.error_pressure,
                s.iterations,
                int(s.converged),
            )
            for s in self.stages
        ]

    HEADER = ("level", "dofs", "eps", "l2_velocity", "h1_velocity", "l2_pressure", "iterations", "converged")

    def total_iterations(self, level=None):
        return sum(s.iterations for s in self.stages if level is None or s.level == level)

    def all_converged(self):
        return all(s.converged for s in self.stages)


def run_poiseuille(
    case: PoiseuilleCase,
    refinements: int,
    schedule: ContinuationSchedule,
    tol: float = 1e-9,
    max_iter: int = 100,
    progress: bool = False,
) -> PoiseuilleResult:
    """Continuation runs on a ladder of uniformly refined meshes.

    Levels 0..refinements are all run; each records per-epsilon velocity
    errors (L2 and H1), mean-adjusted pressure error, Newton iteration
    counts and residual histories.
    """
    if case.form == "max" and schedule.warm_start == "reuse":
        import warnings

        warnings.warn(
            "the positive-part Bingham form is not semismooth; plain reused "
            "warm starts may fail, consider warm_start='extrapolate'",
            stacklevel=2,
        )
    stages: list[PoiseuilleStage] = []
    states = {}
    exact_u = plates_velocity(case.tau_star)
    exact_g = plates_velocity_gradient(case.tau_star)
    exact_p = plates_pressure(case.tau_star)

    for level in range(refinements + 1):
        spec = case.spec(level)
        dofs = State(spec.mesh).layout.total
        if progress:
            print(f"[plates] level {level}: {dofs} dofs", file=sys.stderr, flush=True)
        state = State(spec.mesh)
        solutions: list[tuple[float, np.ndarray]] = []
        for eps in schedule.epsilons:
            stage_spec = spec.with_eps(eps)
            guess = state
            if schedule.warm_start == "extrapolate" and len(solutions) >= 2:
                (e1, z1), (e2, z2) = solutions[-2], solutions[-1]
                guess = State(spec.mesh, (eps - e2) / (e2 - e1) * (z2 - z1) + z2)
            try:
                state_new, report = solve_newton(stage_spec, guess, tol=tol, max_iter=max_iter)
            except NewtonError as exc:
                report = exc.report
                state_new = state
            stages.append(
                PoiseuilleStage(
                    level,
                    dofs,
                    eps,
                    report.iterations,
                    report.converged,
                    error_l2_velocity(state_new, exact_u),
                    error_h1_velocity(state_new, exact_g),
                    error_l2_pressure(state_new, exact_p),
                    list(report.residual_norms),
                )
            )
            if progress:
                print(
                    f"[plates]   eps={eps:g}: {report.iterations} iterations, "
                    f"converged={report.converged}",
                    file=sys.stderr,
                    flush=True,
                )
            if not report.converged:
                break
            state = state_new
            solutions.append((eps, state.coeffs.copy()))
        states[level] = state
    return PoiseuilleResult(case, stages, states)


# ---------------------------------------------------------------------------
# lid-driven cavity, implicit Euler to steady state


@dataclass(frozen=True)
class CavityCase:
    """Lid-driven cavity benchmark.

    ``tau_star`` follows the reference tables, which are set in the
    unit-plastic-viscosity normalisation (yield stress against a viscous
    coefficient of 2); dividing stresses by two maps that system onto the
    2*nu = 1 kernel with the identical velocity field, so the driver runs
    at the Frobenius yield stress tau_star/2.
    """

    tau_star: float
    dt: float = 0.0005
    eps: float = 1e-4
    lid_speed: float = 1.0
    newton_tol: float = 1e-7
    steady_tol: float = 1e-6
    max_steps: int = 50000
    base_cells: int = 18
    first_step_schedule: tuple = PAPER_EPS_SCHEDULE[:-1]

    @property
    def frobenius_tau(self) -> float:
        return 0.5 * self.tau_star

    def mesh(self, refinements: int = 0):
        m = build_rectangle((0.0, 0.0), (1.0, 1.0), self.base_cells, self.base_cells)
        for _ in range(refinements):
            m = refine_uniform(m)
        top = m.vertices[:, 1].max()
        return retag_boundary(
            m, lambda mid: BoundaryTag.LID if mid[1] > top - 1e-12 else BoundaryTag.WALL
        )

    def spec(self, mesh) -> ProblemSpec:
        lid = self.lid_speed

        return ProblemSpec(
            mesh,
            RegularizedModel.single(BinghamProduct(self.frobenius_tau, _NU), self.eps),
            dirichlet={
                BoundaryTag.WALL: _zero_velocity,
                BoundaryTag.LID: lambda x, y: (lid, 0.0),
            },
        )


@dataclass
class CavityResult:
    case: CavityCase
    state: State
    psi: np.ndarray
    psi_max: float
    y_center: float
    steps: int
    increments: list[float]
    newton_iterations: int


def _project_physical_branch(spec: ProblemSpec, state: State) -> int:
    """Reset stresses of elements parked on the nonphysical creep tail.

    The product-form expressions are satisfied identically by D = eps2*S,
    even where |S - eps1*D| exceeds the yield stress; such elements act as
    near-rigid inclusions and a converged iterate containing them is a
    spurious root.  Detected elements get the radial physical-branch
    stress for their current strain rate.  Returns the number of elements
    corrected.
    """
    base = spec.reg.base
    if not isinstance(base, (BinghamProduct, HerschelBulkley)):
        return 0
    eps1, eps2 = spec.reg.eps1, spec.reg.eps2
    if eps2 <= 0.0:
        return 0
    ops = operators_for(spec.mesh)
    d_el = (ops.B @ state.velocity.reshape(-1)).reshape(-1, 3)
    s_el = state.stress

    def fnorm(t):
        return np.sqrt(t[:, 0] ** 2 + t[:, 1] ** 2 + 2.0 * t[:, 2] ** 2)

    sig = s_el - eps1 * d_el
    tau = d_el - eps2 * s_el
    ns, nt = fnorm(sig), fnorm(tau)
    spurious = (nt < 1e-2 * np.maximum(ns, 1e-30)) & (ns > base.tau_star * (1.0 + 1e-6))
    idx = np.nonzero(spurious)[0]
    for k in idx:
        s_el[k] = solve_pointwise_stress(spec.reg, SymTensor2(*d_el[k])).triple()
    return len(idx)


def _viscous_seed(stepped: ProblemSpec) -> State:
    """Newtonian solve of the same step, used to start the first iteration.

    From the zero state the product-form selection puts every element on
    the sloped plug (creep) branch, from which the full-step iteration can
    chatter; the viscous velocity field gives a strain rate bounded away
    from the kinks almost everywhere.
    """
    import dataclasses

    viscous = dataclasses.replace(stepped, reg=RegularizedModel.single(Newtonian(_NU), 0.0))
    state, _ = solve_newton(viscous, State(stepped.mesh), tol=1e-9, max_iter=5)
    return state


def _solve_on_physical_branch(spec, init, tol, max_iter=100, rounds=8):
    """Damped Newton solve with creep-tail monitoring.

    Re-solves after each branch projection until no element needs
    correcting; the returned iteration count aggregates all rounds.
    """
    state, report = solve_newton(
        spec, init, tol=tol, max_iter=max_iter, damping=residual_backtracking(spec)
    )
    iterations = report.iterations
    for _ in range(rounds):
        if not report.converged:
            break
        if _project_physical_branch(spec, state) == 0:
            break
        state, report = solve_newton(
            spec, state, tol=tol, max_iter=max_iter, damping=residual_backtracking(spec)
        )
        iterations += report.iterations
    report.iterations = iterations
    return state, report


def _steady_continuation_seed(steady: ProblemSpec, case: CavityCase):
    """Steady solve by regularisation continuation, on the physical branch.

    The regularised steady problem has a unique solution (the graph is
    uniformly monotone), so seeding the time march with it only shortcuts
    the transient.  Returns (state, iterations) or (None, iterations).
    """
    seed = _viscous_seed(steady)
    state, iterations = seed, 0
    for eps in tuple(e for e in case.first_step_schedule if e > case.eps) + (case.eps,):
        try:
            state, report = _solve_on_physical_branch(
                steady.with_eps(eps), state, tol=case.newton_tol, max_iter=150, rounds=15
            )
        except NewtonError as exc:
            return None, iterations + (exc.report.iterations if exc.report else 0)
        iterations += report.iterations
        if not report.converged:
            return None, iterations
    return state, iterations


def run_cavity(case: CavityCase, refinements: int = 2, progress: bool = False) -> CavityResult:
    """Steady state of the lid-driven cavity via implicit Euler.

    The implicit-Euler loop terminates when the L2 norm of the velocity
    increment drops below the steady tolerance.  The march is seeded with
    the steady continuation solution when that converges (the steady
    solution is unique, so this only removes transient steps); otherwise
    it starts from rest with a viscous first-step seed.
    """
    mesh = case.mesh(refinements)
    steady = case.spec(mesh)
    ops = operators_for(mesh)

    state, total_newton = _steady_continuation_seed(steady, case)
    seeded = state is not None
    if not seeded:
        state = State(mesh)
    if progress:
        print(
            f"[cavity tau*={case.tau_star:g}] steady seed: "
            f"{'ok' if seeded else 'failed, marching from rest'} ({total_newton} iterations)",
            file=sys.stderr,
            flush=True,
        )
    increments: list[float] = []
    for step in range(1, case.max_steps + 1):
        u_old = state.velocity.reshape(-1).copy()
        stepped = apply_time_step(steady, u_old, case.dt)
        init = _viscous_seed(stepped) if (step == 1 and not seeded) else state
        state, report = _solve_on_physical_branch(stepped, init, tol=case.newton_tol)
        if not report.converged:
            raise NewtonError(f"cavity step {step} did not converge", report.iterations)
        total_newton += report.iterations
        du = state.velocity.reshape(-1) - u_old
        inc = float(np.sqrt(du @ (ops.M2 @ du)))
        increments.append(inc)
        if progress and (step % 100 == 0 or step <= 3):
            print(
                f"[cavity tau*={case.tau_star:g}] step {step}: |du| = {inc:.3e}",
                file=sys.stderr,
                flush=True,
            )
        if inc < case.steady_tol:
            break
    else:
        raise RuntimeError(f"no steady state within {case.max_steps} steps")

    psi, psi_max, y_c = stream_function(state)
    return CavityResult(case, state, psi, psi_max, y_c, step, increments, total_newton)


# ---------------------------------------------------------------------------
# expansion-contraction channel


@dataclass(frozen=True)
class ChannelCase:
    """Expansion-contraction channel benchmark.

    The Bingham number plays the yield stress and follows the same
    unit-plastic-viscosity normalisation as the cavity references, so the
    kernel runs at the Frobenius yield stress Bn/2; the inflow and outflow
    carry the fully developed profile of that yield stress on the
    half-width-one sections.
    """

    bn: float
    l_hat: float = 3.0
    delta: float = 0.2
    h: float = 1.2
    eps: float = 1e-4
    base_cells_per_unit: int = 10
    dead_zone_rel_threshold: float = 1e-3

    @property
    def frobenius_tau(self) -> float:
        return 0.5 * self.bn

    def mesh(self, refinements: int = 0):
        m = build_channel(self.l_hat, self.delta, self.h, self.base_cells_per_unit)
        for _ in range(refinements):
            m = refine_uniform(m)
        return m

    def spec(self, mesh) -> ProblemSpec:
        inflow = plates_velocity(self.frobenius_tau)

        def bc(x, y):
            return tuple(inflow(x, y))

        return ProblemSpec(
            mesh,
            RegularizedModel.single(BinghamProduct(self.frobenius_tau, _NU), self.eps),
            dirichlet={
                BoundaryTag.INFLOW: bc,
                BoundaryTag.OUTFLOW: bc,
                BoundaryTag.WALL: _zero_velocity,
            },
        )


@dataclass
class ChannelResult:
    case: ChannelCase
    state: State
    dead_zone_lengths: dict  # relative threshold -> L_d
    pressure_samples: tuple  # (header, rows) along the mid-gap line
    upstream_r2: float
    stages: list[StageResult]

    @property
    def dead_zone_length(self) -> float:
        return self.dead_zone_lengths[self.case.dead_zone_rel_threshold]


def dead_zone_length(state: State, case: ChannelCase, rel_threshold: float) -> float:
    """Horizontal extent of the stagnant zone at the expansion corner.

    Measured along the horizontal midline of the cavity shelf (halfway
    between the straight-channel wall and the cavity wall): the connected
    run, starting at the expansion corner, where the vertex-projected
    |D(u)| stays below rel_threshold times the reference shear rate
    sqrt(2)*Bn.  The crossing is located by linear interpolation.
    """
    mesh = state.mesh
    dn = cell_to_vertex(mesh, cell_strain_norms(state))
    snap = FieldSnapshot(mesh, point_data={"dn": dn})
    y_mid = 0.5 * (1.0 + case.h)
    x_corner = -0.5 / case.delta
    x_end = 0.5 / case.delta
    n = max(int((x_end - x_corner) * case.base_cells_per_unit * 64), 200)
    _, rows = sample_line(snap, (x_corner + 1e-9, y_mid), (x_end - 1e-9, y_mid), n)
    xs = np.array([r[1] for r in rows])
    vals = np.array([r[3] for r in rows])
    thr = rel_threshold * np.sqrt(2.0) * case.frobenius_tau
    above = np.nonzero(vals >= thr)[0]
    if len(above) == 0:
        return float(x_end - x_corner)
    i = above[0]
    if i == 0:
        return 0.0
    # linear interpolation of the threshold crossing
    x0, x1 = xs[i - 1], xs[i]
    v0, v1 = vals[i - 1], vals[i]
    x_cross = x0 + (thr - v0) / (v1 - v0) * (x1 - x0)
    return float(x_cross - x_corner)


def _affine_r2(x, y):
    """Coefficient of determination of the least-squares line through (x, y)."""
    coef = np.polyfit(x, y, 1)
    fit = np.polyval(coef, x)
    ss_res = np.sum((y - fit) ** 2)
    ss_tot = np.sum((y - np.mean(y)) ** 2)
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def run_channel(
    case: ChannelCase,
    refinements: int = 1,
    schedule: ContinuationSchedule | None = None,
    tol: float = 1e-9,
    progress: bool = False,
) -> ChannelResult:
    """Steady channel solve with dead-zone and pressure-line diagnostics.

    Continuation stages run damped and with creep-tail monitoring; the
    dead zone is a plug region, so spurious frozen elements would corrupt
    its measured extent.
    """
    mesh = case.mesh(refinements)
    spec = case.spec(mesh)
    if schedule is None:
        eps_list = tuple(e for e in PAPER_EPS_SCHEDULE if e > case.eps) + (case.eps,)
        schedule = ContinuationSchedule(eps_list, "reuse")
    if progress:
        print(
            f"[channel Bn={case.bn:g}] {State(mesh).layout.total} dofs",
            file=sys.stderr,
            flush=True,
        )
    state = _viscous_seed(spec)
    stages = []
    for eps in schedule.epsilons:
        stage_spec = spec.with_eps(eps)
        try:
            state, report = _solve_on_physical_branch(
                stage_spec, state, tol=tol, max_iter=150, rounds=15
            )
        except NewtonError as exc:
            stages.append(StageResult(eps, exc.report or NewtonReport()))
            raise NewtonError("channel continuation failed", len(stages)) from exc
        stages.append(StageResult(eps, report))
        if progress:
            print(
                f"[channel Bn={case.bn:g}]   eps={eps:g}: {report.iterations} iterations",
                file=sys.stderr,
                flush=True,
            )
        if not report.converged:
            raise NewtonError("channel continuation failed", len(stages))

    lengths = {
        rel: dead_zone_length(state, case, rel)
        for rel in sorted({1e-2, 1e-4, case.dead_zone_rel_threshold})
    }

    # pressure along the line halfway between the channel wall and the plug
    snap = snapshot_of(state)
    width = case.l_hat + 0.5 / case.delta
    y_line = 0.75
    header, rows = sample_line(snap, (-width + 1e-9, y_line), (width - 1e-9, y_line), 600)
    p_col = header.index("pressure")
    xs = np.array([r[1] for r in rows])
    ps = np.array([r[p_col] for r in rows])
    upstream = (xs > -width + 0.5) & (xs < -0.5 / case.delta - 0.5)
    r2 = _affine_r2(xs[upstream], ps[upstream])

    return ChannelResult(case, state, lengths, (header, rows), float(r2), stages)
