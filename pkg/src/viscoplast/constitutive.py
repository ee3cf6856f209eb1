"""Implicit constitutive relations and their generalised Jacobian selections.

Every model is a pointwise residual function G(sigma, tau) on pairs of
symmetric tensors; the relation G(S, D(u)) = 0 closes the flow equations.
Yield-stress models (Bingham, Herschel-Bulkley) are nonsmooth, so alongside
the value we provide one measurable selection of the Clarke generalised
Jacobian, with the convention that the derivative of the positive part
p -> max(p, 0) is taken to be zero whenever the argument is nonpositive
(equivalently, the selection phi = 0 at the kink).

The graph regularisation wraps any base model as

    G_reg(S, D) = G(S - eps1*D, D - eps2*S),

which makes the induced graph single-valued, uniformly monotone and
2-coercive for eps1, eps2 > 0 while preserving semismoothness.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .tensor import SymLinMap, SymTensor2, identity_map, inner, norm, outer, zero_map

__all__ = [
    "Newtonian",
    "PowerLaw",
    "BinghamProduct",
    "BinghamMax",
    "BinghamProjection",
    "HerschelBulkley",
    "RegularizedModel",
    "PointwiseSolveError",
    "eval_g",
    "eval_g_reg",
    "jacobian_selection",
    "jacobian_selection_reg",
    "solve_pointwise_stress",
    "eval_bercovier",
]

_MIN_EXPONENT_GAP = 1e-9


@dataclass(frozen=True)
class Newtonian:
    """G(sigma, tau) = sigma - 2*nu*tau."""

    nu: float

    kernel_code = 0

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ValueError("viscosity must be positive")

    @property
    def kernel_params(self):
        return (self.nu, 0.0, 0.0)

    def value(self, sigma: SymTensor2, tau: SymTensor2) -> SymTensor2:
        return sigma - 2.0 * self.nu * tau

    def jacobian(self, sigma: SymTensor2, tau: SymTensor2):
        return identity_map(), -2.0 * self.nu * identity_map()


@dataclass(frozen=True)
class PowerLaw:
    """G(sigma, tau) = sigma - K*|tau|^(r-2)*tau, with K > 0, r > 1."""

    K: float
    r: float

    kernel_code = 1

    def __post_init__(self):
        if self.K <= 0.0:
            raise ValueError("consistency must be positive")
        if self.r <= 1.0 + _MIN_EXPONENT_GAP:
            raise ValueError("exponent must exceed 1")

    @property
    def kernel_params(self):
        return (self.K, self.r, 0.0)

    def value(self, sigma, tau):
        nt = norm(tau)
        if nt == 0.0:
            return sigma
        return sigma - (self.K * nt ** (self.r - 2.0)) * tau

    def jacobian(self, sigma, tau):
        nt = norm(tau)
        if nt == 0.0:
            # classical limit for r > 2 is zero; at r = 2 it is -K*I; the
            # shear-thinning case has no finite limit, so the bounded
            # selection zero is used
            d2 = -self.K * identity_map() if abs(self.r - 2.0) < 1e-12 else zero_map()
            return identity_map(), d2
        d2 = (
            -self.K * nt ** (self.r - 2.0) * identity_map()
            - (self.K * (self.r - 2.0) * nt ** (self.r - 4.0)) * outer(tau, tau)
        )
        return identity_map(), d2


@dataclass(frozen=True)
class BinghamProduct:
    """Product form of the Bingham relation.

    G(sigma, tau) = |tau|*sigma - (tau_star + 2*nu*|tau|)*tau.

    Semismooth; the preferred expression for the Newton solver.
    """

    tau_star: float
    nu: float

    kernel_code = 2

    def __post_init__(self):
        if self.tau_star < 0.0:
            raise ValueError("yield stress must be nonnegative")
        if self.nu <= 0.0:
            raise ValueError("viscosity must be positive")

    @property
    def kernel_params(self):
        return (self.tau_star, self.nu, 0.0)

    def value(self, sigma, tau):
        nt = norm(tau)
        return nt * sigma - (self.tau_star + 2.0 * self.nu * nt) * tau

    def jacobian(self, sigma, tau):
        nt = norm(tau)
        if nt == 0.0:
            return zero_map(), -self.tau_star * identity_map()
        d1 = nt * identity_map()
        d2 = (
            (1.0 / nt) * outer(sigma, tau)
            - (self.tau_star + 2.0 * self.nu * nt) * identity_map()
            - (2.0 * self.nu / nt) * outer(tau, tau)
        )
        return d1, d2


@dataclass(frozen=True)
class BinghamMax:
    """Positive-part (max) form of the Bingham relation.

    G(sigma, tau) = (|sigma|-tau_star)^+ * sigma
                    - 2*nu*(tau_star + (|sigma|-tau_star)^+) * tau.

    Represents the Bingham graph faithfully but is not semismooth on the
    yield surface |sigma| = tau_star.
    """

    tau_star: float
    nu: float

    kernel_code = 3

    def __post_init__(self):
        if self.tau_star < 0.0:
            raise ValueError("yield stress must be nonnegative")
        if self.nu <= 0.0:
            raise ValueError("viscosity must be positive")

    @property
    def kernel_params(self):
        return (self.tau_star, self.nu, 0.0)

    def value(self, sigma, tau):
        plus = max(norm(sigma) - self.tau_star, 0.0)
        return plus * sigma - 2.0 * self.nu * (self.tau_star + plus) * tau

    def jacobian(self, sigma, tau):
        ns = norm(sigma)
        if ns <= self.tau_star:
            return zero_map(), -2.0 * self.nu * self.tau_star * identity_map()
        plus = ns - self.tau_star
        d1 = plus * identity_map() + (1.0 / ns) * outer(sigma - 2.0 * self.nu * tau, sigma)
        d2 = -2.0 * self.nu * (self.tau_star + plus) * identity_map()
        return d1, d2


@dataclass(frozen=True)
class BinghamProjection:
    """Projection form of the Bingham relation.

    G(sigma, tau) = (|sigma|-tau_star)^+ * sigma/|sigma| - 2*nu*tau.

    Linear growth, but not semismooth.
    """

    tau_star: float
    nu: float

    kernel_code = 4

    def __post_init__(self):
        if self.tau_star < 0.0:
            raise ValueError("yield stress must be nonnegative")
        if self.nu <= 0.0:
            raise ValueError("viscosity must be positive")

    @property
    def kernel_params(self):
        return (self.tau_star, self.nu, 0.0)

    def value(self, sigma, tau):
        ns = norm(sigma)
        visc = -2.0 * self.nu * tau
        if ns <= self.tau_star or ns == 0.0:
            return visc
        return (1.0 - self.tau_star / ns) * sigma + visc

    def jacobian(self, sigma, tau):
        ns = norm(sigma)
        d2 = -2.0 * self.nu * identity_map()
        if ns <= self.tau_star:
            return zero_map(), d2
        d1 = (1.0 - self.tau_star / ns) * identity_map() + (self.tau_star / ns**3) * outer(
            sigma, sigma
        )
        return d1, d2


@dataclass(frozen=True)
class HerschelBulkley:
    """Product-type Herschel-Bulkley relation.

    G(sigma, tau) = |tau|*sigma - (tau_star + 2*nu*|tau|^(r-1))*tau,
    with r > 1, so the power term is differentiable and the whole
    expression stays semismooth.
    """

    tau_star: float
    nu: float
    r: float

    kernel_code = 5

    def __post_init__(self):
        if self.tau_star < 0.0:
            raise ValueError("yield stress must be nonnegative")
        if self.nu <= 0.0:
            raise ValueError("consistency must be positive")
        if self.r <= 1.0 + _MIN_EXPONENT_GAP:
            raise ValueError("exponent must exceed 1")

    @property
    def kernel_params(self):
        return (self.tau_star, self.nu, self.r)

    def value(self, sigma, tau):
        nt = norm(tau)
        if nt == 0.0:
            return SymTensor2()
        return nt * sigma - (self.tau_star + 2.0 * self.nu * nt ** (self.r - 1.0)) * tau

    def jacobian(self, sigma, tau):
        nt = norm(tau)
        if nt == 0.0:
            return zero_map(), -self.tau_star * identity_map()
        d1 = nt * identity_map()
        d2 = (
            (1.0 / nt) * outer(sigma, tau)
            - (self.tau_star + 2.0 * self.nu * nt ** (self.r - 1.0)) * identity_map()
            - (2.0 * self.nu * (self.r - 1.0) * nt ** (self.r - 3.0)) * outer(tau, tau)
        )
        return d1, d2


ConstitutiveModel = (
    Newtonian | PowerLaw | BinghamProduct | BinghamMax | BinghamProjection | HerschelBulkley
)


@dataclass(frozen=True)
class RegularizedModel:
    """A base relation wrapped by the graph regularisation.

    eps1 has units of viscosity and eps2 units of fluidity; setting both to
    zero reproduces the base relation exactly.  All benchmark drivers use
    eps1 = eps2 = eps.
    """

    base: ConstitutiveModel
    eps1: float
    eps2: float

    def __post_init__(self):
        if self.eps1 < 0.0 or self.eps2 < 0.0:
            raise ValueError("regularisation parameters must be nonnegative")

    @staticmethod
    def single(base: ConstitutiveModel, eps: float) -> "RegularizedModel":
        return RegularizedModel(base, eps, eps)

    def with_eps(self, eps: float) -> "RegularizedModel":
        return replace(self, eps1=eps, eps2=eps)


def eval_g(model: ConstitutiveModel, sigma: SymTensor2, tau: SymTensor2) -> SymTensor2:
    """Pointwise residual G(sigma, tau) of the constitutive relation."""
    return model.value(sigma, tau)


def jacobian_selection(model: ConstitutiveModel, sigma: SymTensor2, tau: SymTensor2):
    """One measurable selection (d1, d2) of the Clarke Jacobian of G."""
    return model.jacobian(sigma, tau)


def eval_g_reg(reg: RegularizedModel, S: SymTensor2, D: SymTensor2) -> SymTensor2:
    """Regularised residual G(S - eps1*D, D - eps2*S)."""
    return reg.base.value(S - reg.eps1 * D, D - reg.eps2 * S)


def jacobian_selection_reg(reg: RegularizedModel, S: SymTensor2, D: SymTensor2):
    """Chain rule of the selection through the regularising substitution."""
    d1, d2 = reg.base.jacobian(S - reg.eps1 * D, D - reg.eps2 * S)
    return d1 - reg.eps2 * d2, d2 - reg.eps1 * d1


class PointwiseSolveError(RuntimeError):
    """Pointwise stress solve failed to converge (bad branch or eps = 0)."""


def solve_pointwise_stress(
    reg: RegularizedModel,
    D: SymTensor2,
    S_init: SymTensor2 | None = None,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> SymTensor2:
    """Solve G_reg(S, D) = 0 for the stress at one point.

    Damped semismooth Newton on the three stress components.  Requires
    eps1, eps2 > 0 so the regularised graph is single-valued near the
    physical branch; used as the graph-sampling oracle in the property
    suites.  The default initial guess is a regularisation of the explicit
    Bingham-type resolvent, which lands in the basin of the physical branch.
    """
    if S_init is None:
        S_init = _default_stress_guess(reg, D)
    s = S_init.triple()
    res = norm(eval_g_reg(reg, S_init, D))
    for _ in range(max_iter):
        if res <= tol:
            return SymTensor2.from_triple(s)
        g = eval_g_reg(reg, SymTensor2.from_triple(s), D)
        d1e, _ = jacobian_selection_reg(reg, SymTensor2.from_triple(s), D)
        try:
            step = np.linalg.solve(d1e.a, -g.triple())
        except np.linalg.LinAlgError as exc:
            raise PointwiseSolveError(f"singular pointwise Jacobian: {exc}") from exc
        # backtracking on the residual norm
        lam = 1.0
        for _ in range(40):
            trial = s + lam * step
            trial_res = norm(eval_g_reg(reg, SymTensor2.from_triple(trial), D))
            if trial_res < res:
                s, res = trial, trial_res
                break
            lam *= 0.5
        else:
            raise PointwiseSolveError("line search stalled in pointwise stress solve")
    if res <= tol:
        return SymTensor2.from_triple(s)
    raise PointwiseSolveError(f"no convergence in {max_iter} iterations (residual {res:.3e})")


def _default_stress_guess(reg: RegularizedModel, D: SymTensor2) -> SymTensor2:
    """Initial stress on (or very near) the physical branch of the graph.

    The product-type expressions have a second, nonphysical zero set
    (the creep line extended past the regularised yield point); seeding
    from the radial solution of the isotropic scalar problem keeps the
    pointwise Newton in the basin of the graph branch.
    """
    base = reg.base
    nd = norm(D)
    if isinstance(base, Newtonian):
        return 2.0 * base.nu * D
    if isinstance(base, PowerLaw):
        if nd == 0.0:
            return SymTensor2()
        return (base.K * nd ** (base.r - 2.0)) * D
    tau_star = base.tau_star
    if nd == 0.0:
        return SymTensor2()
    e1, e2 = reg.eps1, reg.eps2
    if e2 > 0.0 and nd * (1.0 - e1 * e2) <= e2 * tau_star:
        return (1.0 / e2) * D  # regularised plug (creep) branch
    unit = (1.0 / nd) * D
    if isinstance(base, HerschelBulkley):
        # radial yielded branch: s - e1*d = tau* + 2*nu*(d - e2*s)^(r-1)
        def f(w):
            return (nd - w) / max(e2, 1e-300) - e1 * nd - tau_star - 2.0 * base.nu * w ** (
                base.r - 1.0
            )

        if e2 == 0.0:
            s = tau_star + e1 * nd + 2.0 * base.nu * nd ** (base.r - 1.0)
        else:
            from scipy.optimize import brentq

            w = brentq(f, 0.0, nd, xtol=1e-15, rtol=1e-14)
            s = (nd - w) / e2
        return s * unit
    # Bingham-type: closed-form radial yielded branch
    s = (tau_star + (2.0 * base.nu + e1) * nd) / (1.0 + 2.0 * base.nu * e2)
    return s * unit


def eval_bercovier(nu: float, tau_star: float, eps: float, D: SymTensor2) -> SymTensor2:
    """Classical smoothing of the Bingham relation, for comparison only.

    S = 2*nu*D + tau_star * D / sqrt(eps^2 + |D|^2).
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    return (2.0 * nu + tau_star / np.sqrt(eps * eps + inner(D, D))) * D
