import numpy as np
import pytest

from viscoplast.tensor import SymLinMap, SymTensor2, identity_map, inner, norm, outer


def test_norm_identity_tensor():
    assert norm(SymTensor2(1.0, 1.0, 0.0)) == pytest.approx(np.sqrt(2.0))


def test_norm_counts_shear_twice():
    assert norm(SymTensor2(0.0, 0.0, 1.0)) == pytest.approx(np.sqrt(2.0))


def test_norm_zero():
    assert norm(SymTensor2()) == 0.0
    assert norm(SymTensor2(1e-150, 0, 0)) > 0.0


def test_inner_symmetric_positive():
    a = SymTensor2(1.0, 2.0, 3.0)
    b = SymTensor2(-1.0, 0.5, 2.0)
    assert inner(a, b) == pytest.approx(inner(b, a))
    assert inner(a, a) == pytest.approx(norm(a) ** 2)


def test_outer_example_diag():
    m = outer(SymTensor2(1.0, 0.0, 0.0), SymTensor2(1.0, 0.0, 0.0))
    out = m.apply(SymTensor2(2.0, 0.0, 0.0))
    assert out.triple() == pytest.approx([2.0, 0.0, 0.0])


def test_outer_zero_factor_is_zero_map():
    m = outer(SymTensor2(1.0, -2.0, 0.5), SymTensor2())
    assert np.allclose(m.a, 0.0)


def _full_tensor(t):
    return t.as_matrix()


def _brute_force_outer_apply(a, b, t):
    # (a (x) b) t = a * (b : t) via the full 2x2x2x2 contraction
    C = np.einsum("ij,kl->ijkl", _full_tensor(a), _full_tensor(b))
    out = np.einsum("ijkl,kl->ij", C, _full_tensor(t))
    return SymTensor2.from_matrix(out)


def test_outer_matches_full_contraction_oracle(rng):
    for _ in range(100):
        a, b, t = (SymTensor2(*rng.normal(size=3)) for _ in range(3))
        got = outer(a, b).apply(t)
        want = _brute_force_outer_apply(a, b, t)
        assert np.allclose(got.triple(), want.triple(), atol=1e-14, rtol=1e-12)


def test_identity_map_matches_symmetrised_fourth_order_identity(rng):
    # I[ijkl] = (d_ik d_jl + d_il d_jk) / 2 acts as the identity on
    # symmetric tensors
    d = np.eye(2)
    I4 = 0.5 * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d))
    for _ in range(20):
        t = SymTensor2(*rng.normal(size=3))
        out = np.einsum("ijkl,kl->ij", I4, t.as_matrix())
        assert np.allclose(identity_map().apply(t).triple(), SymTensor2.from_matrix(out).triple())


def test_map_algebra_composition(rng):
    a = SymLinMap(rng.normal(size=(3, 3)))
    b = SymLinMap(rng.normal(size=(3, 3)))
    t = SymTensor2(*rng.normal(size=3))
    left = a.compose(b).apply(t)
    right = a.apply(b.apply(t))
    assert np.allclose(left.triple(), right.triple())
