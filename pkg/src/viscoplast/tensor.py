"""Symmetric 2x2 tensor algebra used by the constitutive layer.

A symmetric tensor is stored as the raw component triple (xx, yy, xy); the
Frobenius inner product then carries an explicit factor 2 on the shear
component,

    a : b = a.xx*b.xx + a.yy*b.yy + 2*a.xy*b.xy.

Linear maps on symmetric tensors are stored as the 3x3 matrix acting on the
component triple, so applying a map is a plain matrix-vector product and the
factor-2 weighting is confined to :func:`inner` and :func:`outer`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SymTensor2", "SymLinMap", "inner", "norm", "outer", "identity_map", "zero_map"]

# weights of the component triple in the Frobenius inner product
_WEIGHTS = np.array([1.0, 1.0, 2.0])


@dataclass(frozen=True)
class SymTensor2:
    """Symmetric 2x2 tensor value (a stress or strain rate at a point)."""

    xx: float = 0.0
    yy: float = 0.0
    xy: float = 0.0

    def triple(self):
        return np.array([self.xx, self.yy, self.xy])

    @staticmethod
    def from_triple(t) -> "SymTensor2":
        return SymTensor2(float(t[0]), float(t[1]), float(t[2]))

    def as_matrix(self):
        return np.array([[self.xx, self.xy], [self.xy, self.yy]])

    @staticmethod
    def from_matrix(m) -> "SymTensor2":
        if abs(m[0, 1] - m[1, 0]) > 1e-12 * (1.0 + abs(m[0, 1])):
            raise ValueError("matrix is not symmetric")
        return SymTensor2(float(m[0, 0]), float(m[1, 1]), float(0.5 * (m[0, 1] + m[1, 0])))

    def __add__(self, other: "SymTensor2") -> "SymTensor2":
        return SymTensor2(self.xx + other.xx, self.yy + other.yy, self.xy + other.xy)

    def __sub__(self, other: "SymTensor2") -> "SymTensor2":
        return SymTensor2(self.xx - other.xx, self.yy - other.yy, self.xy - other.xy)

    def __mul__(self, s: float) -> "SymTensor2":
        return SymTensor2(self.xx * s, self.yy * s, self.xy * s)

    __rmul__ = __mul__

    def __neg__(self) -> "SymTensor2":
        return self * -1.0


def inner(a: SymTensor2, b: SymTensor2) -> float:
    """Frobenius inner product a : b."""
    return a.xx * b.xx + a.yy * b.yy + 2.0 * a.xy * b.xy


def norm(a: SymTensor2) -> float:
    """Frobenius norm sqrt(a : a)."""
    return float(np.sqrt(a.xx * a.xx + a.yy * a.yy + 2.0 * a.xy * a.xy))


@dataclass(frozen=True)
class SymLinMap:
    """Linear map on symmetric 2x2 tensors, as a 3x3 action on triples."""

    a: np.ndarray  # (3, 3)

    def apply(self, t: SymTensor2) -> SymTensor2:
        return SymTensor2.from_triple(self.a @ t.triple())

    def __add__(self, other: "SymLinMap") -> "SymLinMap":
        return SymLinMap(self.a + other.a)

    def __sub__(self, other: "SymLinMap") -> "SymLinMap":
        return SymLinMap(self.a - other.a)

    def __mul__(self, s: float) -> "SymLinMap":
        return SymLinMap(self.a * s)

    __rmul__ = __mul__

    def compose(self, other: "SymLinMap") -> "SymLinMap":
        """self after other."""
        return SymLinMap(self.a @ other.a)


def identity_map() -> SymLinMap:
    return SymLinMap(np.eye(3))


def zero_map() -> SymLinMap:
    return SymLinMap(np.zeros((3, 3)))


def outer(a: SymTensor2, b: SymTensor2) -> SymLinMap:
    """Rank-one map t -> a * (b : t)."""
    return SymLinMap(np.outer(a.triple(), _WEIGHTS * b.triple()))
