"""Backend parity: compiled and NumPy sweeps against the pointwise reference."""

import numpy as np
import pytest

from viscoplast import _kernels_py, kernels
from viscoplast.constitutive import (
    BinghamMax,
    BinghamProduct,
    BinghamProjection,
    HerschelBulkley,
    Newtonian,
    PowerLaw,
    RegularizedModel,
    eval_g_reg,
    jacobian_selection_reg,
)
from viscoplast.tensor import SymTensor2

MODELS = [
    Newtonian(0.7),
    PowerLaw(1.3, 1.7),
    PowerLaw(1.3, 2.0),
    BinghamProduct(1.0, 0.5),
    BinghamMax(1.0, 0.5),
    BinghamProjection(1.0, 0.5),
    HerschelBulkley(1.0, 0.5, 1.7),
]

try:
    from viscoplast import _kernels_c

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover
    _kernels_c = None
    HAVE_COMPILED = False


def _sample_inputs(rng, n=257):
    S = rng.normal(size=(n, 3)) * rng.choice([0.01, 1.0, 100.0], size=(n, 1))
    D = rng.normal(size=(n, 3)) * rng.choice([0.01, 1.0, 100.0], size=(n, 1))
    # force kink rows: exact zeros and rows with D = eps2*S handled below
    S[0] = 0.0
    D[0] = 0.0
    D[1] = 0.0
    S[2] = 0.0
    return S, D


@pytest.mark.parametrize("model", MODELS, ids=lambda m: type(m).__name__)
@pytest.mark.parametrize("eps", [(0.0, 0.0), (0.5, 0.5), (0.013, 0.27)])
def test_python_sweep_matches_pointwise_reference(model, eps, rng):
    reg = RegularizedModel(model, *eps)
    S, D = _sample_inputs(rng, 101)
    D[3] = eps[1] * S[3]  # puts tau exactly at the kink
    g, a1, a2 = _kernels_py.sweep(
        model.kernel_code, *model.kernel_params, reg.eps1, reg.eps2, S, D, True
    )
    for i in range(len(S)):
        s, d = SymTensor2(*S[i]), SymTensor2(*D[i])
        assert np.allclose(g[i], eval_g_reg(reg, s, d).triple(), rtol=1e-12, atol=1e-12)
        d1e, d2e = jacobian_selection_reg(reg, s, d)
        assert np.allclose(a1[i], d1e.a, rtol=1e-12, atol=1e-12)
        assert np.allclose(a2[i], d2e.a, rtol=1e-12, atol=1e-12)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels not built")
@pytest.mark.parametrize("model", MODELS, ids=lambda m: type(m).__name__)
@pytest.mark.parametrize("eps", [(0.0, 0.0), (0.5, 0.5), (0.013, 0.27)])
def test_compiled_sweep_matches_python_sweep(model, eps, rng):
    S, D = _sample_inputs(rng)
    D[3] = eps[1] * S[3]
    args = (model.kernel_code, *model.kernel_params, *eps)
    g_p, a1_p, a2_p = _kernels_py.sweep(*args, S, D, True)
    g_c, a1_c, a2_c = _kernels_c.sweep(*args, S, D, True)
    assert np.allclose(g_c, g_p, rtol=1e-14, atol=1e-14)
    assert np.allclose(a1_c, a1_p, rtol=1e-14, atol=1e-14)
    assert np.allclose(a2_c, a2_p, rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize("impl", [_kernels_py] + ([_kernels_c] if HAVE_COMPILED else []))
def test_sweep_value_only_mode(impl, rng):
    S, D = _sample_inputs(rng, 64)
    g_full, a1, a2 = impl.sweep(2, 1.0, 0.5, 0.0, 0.1, 0.1, S, D, True)
    g_only, none1, none2 = impl.sweep(2, 1.0, 0.5, 0.0, 0.1, 0.1, S, D, False)
    assert none1 is None and none2 is None
    assert np.array_equal(g_full, g_only)
    assert a1.shape == (len(S), 3, 3) and a2.shape == (len(S), 3, 3)


def test_backend_reports_name():
    assert kernels.backend() in ("compiled", "python")


def test_unknown_code_rejected(rng):
    S, D = _sample_inputs(rng, 8)
    with pytest.raises(ValueError):
        _kernels_py.sweep(99, 0.0, 0.0, 0.0, 0.0, 0.0, S, D, True)
