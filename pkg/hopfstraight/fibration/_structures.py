from __future__ import annotations

import math
import typing as t
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from hopfstraight.errors import DegeneratePlaneError, InvalidStructureError
from hopfstraight.halfplane import hermitian_frame
from hopfstraight.numkit import as_square, standard_j


# |J^2 + I| allowed for a LinearJ
STRUCTURE_TOLERANCE = 1e-12
DEGENERATE_RATIO = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class OrientedPlane:
    """An oriented 2-plane given by an ordered orthonormal pair (u, w)."""

    u: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen(self.u))
        object.__setattr__(self, "w", _frozen(self.w))

    @classmethod
    def from_vectors(cls, a: t.Any, b: t.Any) -> OrientedPlane:
        """Gram-Schmidt on (a, b); the orientation is the one of the pair."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        norm_a = np.linalg.norm(a)
        if norm_a == 0:
            raise DegeneratePlaneError(a)
        u = a / norm_a
        w = b - (u @ b) * u
        norm_w = np.linalg.norm(w)
        if norm_w <= DEGENERATE_RATIO * max(np.linalg.norm(b), np.finfo(float).tiny):
            raise DegeneratePlaneError(a)
        return cls(u, w / norm_w)

    @property
    def dimension(self) -> int:
        return self.u.shape[0]

    @property
    def basis(self) -> np.ndarray:
        return np.column_stack((self.u, self.w))

    @property
    def projector(self) -> np.ndarray:
        return np.outer(self.u, self.u) + np.outer(self.w, self.w)

    @property
    def bivector(self) -> np.ndarray:
        return np.outer(self.u, self.w) - np.outer(self.w, self.u)

    def distance(self, other: OrientedPlane) -> float:
        """Frobenius distance between the unit bivectors, sensitive to orientation."""
        return float(np.linalg.norm(self.bivector - other.bivector))

    def unoriented_distance(self, other: OrientedPlane) -> float:
        return float(np.linalg.norm(self.projector - other.projector))

    def membership_residual(self, v: t.Any) -> float:
        """Distance from v / |v| to the plane."""
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        return float(np.linalg.norm(v - self.projector @ v))

    def transform(self, g: t.Any) -> OrientedPlane:
        g = np.asarray(g, dtype=float)
        return OrientedPlane.from_vectors(g @ self.u, g @ self.w)

    def point(self, theta: float) -> np.ndarray:
        return math.cos(theta) * self.u + math.sin(theta) * self.w

    def reversed(self) -> OrientedPlane:
        return OrientedPlane(self.w, self.u)


@dataclass(frozen=True)
class LinearJ:
    """A linear complex structure J on R^{2n+2}."""

    matrix: np.ndarray
    _frame: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        matrix = _frozen(as_square(self.matrix))
        residual = float(np.linalg.norm(matrix @ matrix + np.eye(matrix.shape[0])))
        if matrix.shape[0] % 2 or residual > STRUCTURE_TOLERANCE * max(1.0, np.linalg.norm(matrix) ** 2):
            raise InvalidStructureError(residual)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "_frame", _frozen(hermitian_frame(matrix, np.eye(matrix.shape[0]))))

    @classmethod
    def standard(cls, n: int) -> LinearJ:
        """J0 on R^{2n+2}."""
        return cls(standard_j(n + 1))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.dimension // 2 - 1

    def __call__(self, v: t.Any) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=float)

    def complex_frame(self) -> np.ndarray:
        """Real h with J h = h J0, the identity for J0 itself."""
        return self._frame.copy()

    def conjugate(self, g: t.Any) -> LinearJ:
        g = np.asarray(g, dtype=float)
        return LinearJ(g @ self.matrix @ np.linalg.inv(g))

    def holomorphic_basis(self) -> np.ndarray:
        """Orthonormal basis (columns) of the +sqrt(-1) eigenspace of J in C^{2n+2}."""
        return scipy.linalg.null_space(self.matrix - 1j * np.eye(self.dimension))


class TwistedJ:
    """
    A map v -> J(v) of V minus the origin that is a complex structure on each plane span(v, J(v)).

    The evaluator is called on unit vectors; other vectors are scaled through it by homogeneity.
    """

    def __init__(self, evaluator: t.Callable[[np.ndarray], np.ndarray], dimension: int, description: str = ""):
        self._evaluator = evaluator
        self.dimension = dimension
        self.description = description

    def __repr__(self) -> str:
        return f"<TwistedJ dimension={self.dimension} {self.description}>"

    @classmethod
    def from_linear(cls, J: LinearJ) -> TwistedJ:
        return cls(J, J.dimension, "linear")

    def __call__(self, v: t.Any) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0:
            return np.zeros_like(v)
        return norm * self._evaluator(v / norm)
