"""NumPy implementation of the per-element constitutive sweep.

This is the pure-Python fallback for the compiled kernel; both backends
evaluate, for every element at once, the regularised residual value and one
Clarke-Jacobian selection as 3x3 actions on the component triple
(xx, yy, xy).  Model dispatch codes match ``ConstitutiveModel.kernel_code``.
"""

import numpy as np

BACKEND = "python"

_W = np.array([1.0, 1.0, 2.0])
_I3 = np.eye(3)


def _norms(t):
    return np.sqrt(t[:, 0] ** 2 + t[:, 1] ** 2 + 2.0 * t[:, 2] ** 2)


def _outer(a, b):
    # rank-one action a (x) b on triples, with the shear weight on the input
    return a[:, :, None] * (b * _W)[:, None, :]


def _eye(n, scale):
    return scale[:, None, None] * _I3


def sweep(code, p0, p1, p2, eps1, eps2, S, D, want_jac=True):
    """Evaluate G_reg and its Jacobian selection on element data.

    Parameters
    ----------
    code : int
        model dispatch code
    p0, p1, p2 : float
        model parameters (meaning depends on the model)
    eps1, eps2 : float
        graph-regularisation parameters
    S, D : (n, 3) arrays
        stress and strain-rate component triples per element
    want_jac : bool
        skip the Jacobian arrays when False

    Returns
    -------
    g : (n, 3) residual triples
    a1, a2 : (n, 3, 3) Jacobian actions w.r.t. S and D, or None
    """
    S = np.asarray(S, dtype=float)
    D = np.asarray(D, dtype=float)
    sig = S - eps1 * D
    tau = D - eps2 * S

    if code == 0:  # Newtonian(nu)
        nu = p0
        g = sig - 2.0 * nu * tau
        if not want_jac:
            return g, None, None
        n = len(S)
        d1 = np.broadcast_to(_I3, (n, 3, 3)).copy()
        d2 = np.broadcast_to(-2.0 * nu * _I3, (n, 3, 3)).copy()
    elif code == 1:  # PowerLaw(K, r)
        K, r = p0, p1
        nt = _norms(tau)
        pos = nt > 0.0
        nt_s = np.where(pos, nt, 1.0)
        visc = np.where(pos, K * nt_s ** (r - 2.0), 0.0)
        g = sig - visc[:, None] * tau
        if not want_jac:
            return g, None, None
        n = len(S)
        d1 = np.broadcast_to(_I3, (n, 3, 3)).copy()
        d2 = -visc[:, None, None] * _I3 - (
            K * (r - 2.0) * np.where(pos, nt_s ** (r - 4.0), 0.0)
        )[:, None, None] * _outer(tau, tau)
        if abs(r - 2.0) < 1e-12:
            d2[~pos] = -K * _I3
    elif code == 2:  # BinghamProduct(tau_star, nu)
        ts, nu = p0, p1
        nt = _norms(tau)
        g = nt[:, None] * sig - (ts + 2.0 * nu * nt)[:, None] * tau
        if not want_jac:
            return g, None, None
        pos = nt > 0.0
        nt_s = np.where(pos, nt, 1.0)
        d1 = _eye(len(S), nt)
        d2 = (
            _outer(sig, tau) / nt_s[:, None, None]
            - _eye(len(S), ts + 2.0 * nu * nt)
            - (2.0 * nu) * _outer(tau, tau) / nt_s[:, None, None]
        )
        d2[~pos] = -ts * _I3
        d1[~pos] = 0.0
    elif code == 3:  # BinghamMax(tau_star, nu)
        ts, nu = p0, p1
        ns = _norms(sig)
        plus = np.maximum(ns - ts, 0.0)
        g = plus[:, None] * sig - (2.0 * nu * (ts + plus))[:, None] * tau
        if not want_jac:
            return g, None, None
        yielded = ns > ts
        ns_s = np.where(yielded, ns, 1.0)
        d1 = _eye(len(S), plus) + _outer(sig - 2.0 * nu * tau, sig) / ns_s[:, None, None]
        d1[~yielded] = 0.0
        d2 = _eye(len(S), -2.0 * nu * (ts + plus))
    elif code == 4:  # BinghamProjection(tau_star, nu)
        ts, nu = p0, p1
        ns = _norms(sig)
        pos = ns > 0.0
        ns_s = np.where(pos, ns, 1.0)
        scale = np.where(pos, np.maximum(ns - ts, 0.0) / ns_s, 0.0)
        g = scale[:, None] * sig - 2.0 * nu * tau
        if not want_jac:
            return g, None, None
        yielded = ns > ts
        d1 = _eye(len(S), 1.0 - ts / ns_s) + (ts / ns_s**3)[:, None, None] * _outer(sig, sig)
        d1[~yielded] = 0.0
        d2 = np.broadcast_to(-2.0 * nu * _I3, (len(S), 3, 3)).copy()
    elif code == 5:  # HerschelBulkley(tau_star, nu, r)
        ts, nu, r = p0, p1, p2
        nt = _norms(tau)
        pos = nt > 0.0
        nt_s = np.where(pos, nt, 1.0)
        visc = ts + 2.0 * nu * np.where(pos, nt_s ** (r - 1.0), 0.0)
        g = nt[:, None] * sig - visc[:, None] * tau
        if not want_jac:
            return g, None, None
        d1 = _eye(len(S), nt)
        d1[~pos] = 0.0
        d2 = (
            _outer(sig, tau) / nt_s[:, None, None]
            - _eye(len(S), visc)
            - (2.0 * nu * (r - 1.0) * np.where(pos, nt_s ** (r - 3.0), 0.0))[:, None, None]
            * _outer(tau, tau)
        )
        d2[~pos] = -ts * _I3
    else:
        raise ValueError(f"unknown model code {code}")

    a1 = d1 - eps2 * d2
    a2 = d2 - eps1 * d1
    return g, a1, a2
