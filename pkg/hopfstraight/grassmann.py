"""
Tangent spaces of the surface of fibers inside the Grassmannian of oriented 2-planes.

A tangent vector at a plane P is a linear map P -> V/P, realized here as a 2-column matrix sending the
basis (u, w) of P into the orthogonal complement of P.
"""
from __future__ import annotations

import math
import typing as t
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from hopfstraight import constants
from hopfstraight.errors import DegeneratePlaneError, RankDeficiencyError
from hopfstraight.fibration import Fibration, LinearJ, OrientedPlane, plane_at
from hopfstraight.log import get_logger
from hopfstraight.numkit import solve_linear
from hopfstraight.utils.sampling import normalize


__all__ = (
    "TangentBasis",
    "CharPoly",
    "tangent_basis",
    "tangent_basis_from_chart",
    "t_matrix",
    "char_poly",
    "ellipticity_margin",
    "real_projective_zeros",
    "sato_line",
    "sv_distance",
    "line_distance",
    "plane_from_sato",
    "tangent_directions_commute",
)

log = get_logger(__name__)

INDEPENDENCE_THRESHOLD = 1e-6
SATO_INVARIANCE = 1e-8

PlaneChart = t.Callable[[np.ndarray], OrientedPlane]


@dataclass(frozen=True)
class TangentBasis:
    """
    2n tangent directions of the surface of fibers at `plane`.

    Attributes:
        `plane` -- base plane P
        `directions` -- array (2n, dim, 2); directions[k] sends (u, w) into the complement of P
        `complement` -- orthonormal basis (dim, 2n) of the complement of P
        `consistency` -- largest change of a direction between the two stencil widths
        `sigma_min` -- smallest singular value of the stacked directions
    """

    plane: OrientedPlane
    directions: np.ndarray
    complement: np.ndarray
    consistency: float
    sigma_min: float

    def __len__(self) -> int:
        return self.directions.shape[0]

    def apply(self, k: int, f: np.ndarray) -> np.ndarray:
        """Image of the plane vector f under direction k."""
        return self.directions[k] @ (self.plane.basis.T @ f)


def _complement(plane: OrientedPlane) -> np.ndarray:
    return scipy.linalg.null_space(plane.basis.T)


def _derivative(chart: PlaneChart, x: np.ndarray, direction: np.ndarray, h: float) -> np.ndarray:
    return (chart(x + h * direction).projector - chart(x - h * direction).projector) / (2 * h)


def tangent_basis_from_chart(
    chart: PlaneChart,
    x: np.ndarray,
    directions: np.ndarray,
    h: t.Optional[float] = None,
) -> TangentBasis:
    """
    Tangent directions of a parametrized family of planes at chart(x).

    The derivative of the projector along each parameter direction (columns of `directions`) is a
    Richardson combination of central differences at steps h and h/2, then restricted to P -> P-perp.
    """
    h = constants.Stencils.tangent if h is None else h
    x = np.asarray(x, dtype=float)
    plane = chart(x)
    basis = plane.basis
    off_plane = np.eye(plane.dimension) - plane.projector

    images = []
    consistency = 0.0
    for k in range(directions.shape[1]):
        wide = _derivative(chart, x, directions[:, k], h)
        narrow = _derivative(chart, x, directions[:, k], h / 2)
        consistency = max(consistency, float(np.linalg.norm(wide - narrow)))
        extrapolated = (4 * narrow - wide) / 3
        images.append(off_plane @ extrapolated @ basis)

    stacked = np.array(images)
    singular_values = np.linalg.svd(stacked.reshape(len(images), -1).T, compute_uv=False)
    smallest = float(singular_values[-1]) if singular_values.size else 0.0
    if smallest <= INDEPENDENCE_THRESHOLD:
        raise RankDeficiencyError(smallest)
    log.trace(f"Tangent basis: sigma_min {smallest:.3e}, stencil consistency {consistency:.3e}")
    return TangentBasis(plane, stacked, _complement(plane), consistency, smallest)


def tangent_basis(F: Fibration, P: OrientedPlane, h: t.Optional[float] = None) -> TangentBasis:
    """Tangent directions of the surface of fibers at P, moving the point u of P across the complement."""
    complement = _complement(P)

    def chart(x: np.ndarray) -> OrientedPlane:
        return plane_at(F, normalize(P.u + x))

    basis = tangent_basis_from_chart(chart, np.zeros(P.dimension), complement, h)
    if basis.plane.unoriented_distance(P) > 1e-6:
        log.warning(f"Plane field at u disagrees with the given plane by {basis.plane.unoriented_distance(P):.3e}")
    return basis


def _components(B: TangentBasis, f: np.ndarray, complement: np.ndarray) -> np.ndarray:
    images = np.column_stack([B.apply(k, f) for k in range(len(B))])
    return np.linalg.lstsq(complement, images, rcond=None)[0]


def t_matrix(
    B: TangentBasis,
    plane_frame: t.Optional[np.ndarray] = None,
    complement: t.Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    The invariant t with u1 = t u0 for every tangent direction.

    u0 and u1 are the complement coordinates of the images of the two plane frame vectors; the frame
    defaults to (u, w) and the complement basis to the orthonormal one carried by the tangent basis.
    A complement basis is read modulo P, so frames whose complement columns lean into P are accepted.
    """
    plane_frame = B.plane.basis if plane_frame is None else np.asarray(plane_frame, dtype=float)
    if complement is None:
        complement = B.complement
    else:
        complement = (np.eye(B.plane.dimension) - B.plane.projector) @ np.asarray(complement, dtype=float)
    W0 = _components(B, plane_frame[:, 0], complement)
    W1 = _components(B, plane_frame[:, 1], complement)
    # t W0 = W1
    return solve_linear(W0.T, W1.T).T


class CharPoly:
    """xi(a0, a1) = det(a0 I + a1 t)."""

    def __init__(self, t_matrix: np.ndarray):
        self.t = np.asarray(t_matrix, dtype=float)

    def __call__(self, a0: float, a1: float) -> float:
        return float(np.linalg.det(a0 * np.eye(self.t.shape[0]) + a1 * self.t))

    @property
    def degree(self) -> int:
        return self.t.shape[0]


def char_poly(t_matrix: np.ndarray) -> CharPoly:
    return CharPoly(t_matrix)


def ellipticity_margin(t_matrix: np.ndarray) -> float:
    """Smallest |Im| of the eigenvalues of t; zero exactly when the characteristic variety has real points."""
    values = np.linalg.eigvals(np.asarray(t_matrix, dtype=float))
    return float(np.min(np.abs(values.imag))) if values.size else math.inf


def real_projective_zeros(xi: CharPoly, samples: int = 720, tolerance: float = 1e-9) -> list[float]:
    """
    Angles phi in [0, pi) where xi(cos phi, sin phi) vanishes, found by sign changes and near-zero values.

    Returned angles are refined by bisection on bracketing intervals.
    """
    phis = np.linspace(0.0, math.pi, samples + 1)
    values = np.array([xi(math.cos(phi), math.sin(phi)) for phi in phis])
    zeros: list[float] = []
    for index in range(samples):
        left, right = values[index], values[index + 1]
        if abs(left) <= tolerance:
            zeros.append(float(phis[index]))
        elif left * right < 0:
            lo, hi = phis[index], phis[index + 1]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if xi(math.cos(lo), math.sin(lo)) * xi(math.cos(mid), math.sin(mid)) <= 0:
                    hi = mid
                else:
                    lo = mid
            zeros.append(0.5 * (lo + hi))
    return zeros


def _canonical_line(z: np.ndarray) -> np.ndarray:
    pivot = z[int(np.argmax(np.abs(z)))]
    return z * (abs(pivot) / pivot) / np.linalg.norm(z)


def sato_line(P: OrientedPlane, J_P: t.Union[LinearJ, np.ndarray]) -> np.ndarray:
    """Unit representative of the line spanned by u - sqrt(-1) J_P u in C^{2n+2}."""
    J = J_P.matrix if isinstance(J_P, LinearJ) else np.asarray(J_P, dtype=float)
    image = J @ P.u
    residual = float(np.linalg.norm(image - P.projector @ image) / np.linalg.norm(image))
    if residual > SATO_INVARIANCE:
        raise DegeneratePlaneError(P.u)
    return _canonical_line(P.u - 1j * image)


def sv_distance(z: t.Any) -> float:
    """|z wedge conj(z)| / |z|^2, the Frobenius norm taken over coordinates i < j; zero on real points."""
    z = np.asarray(z, dtype=complex)
    norm = float(np.vdot(z, z).real)
    if norm == 0:
        raise ValueError("sv_distance of the zero vector")
    wedge = np.outer(z, np.conj(z)) - np.outer(np.conj(z), z)
    return float(np.linalg.norm(wedge) / math.sqrt(2) / norm)


def line_distance(z: t.Any, w: t.Any) -> float:
    """Fubini-Study angle between the complex lines through z and w."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    cosine = abs(np.vdot(z, w)) / (np.linalg.norm(z) * np.linalg.norm(w))
    return float(math.acos(min(1.0, cosine)))


def plane_from_sato(z: t.Any) -> tuple[OrientedPlane, np.ndarray]:
    """
    The plane span(x, y) of the line through z = x + sqrt(-1) y, oriented by (x, -y).

    Also returns the complex structure j of that plane (j x = -y, j y = x) as an operator vanishing on
    the orthogonal complement.
    """
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    plane = OrientedPlane.from_vectors(x, -y)
    pair = np.column_stack((x, y))
    image = np.column_stack((-y, x))
    j = image @ np.linalg.pinv(pair)
    return plane, j


def tangent_directions_commute(B: TangentBasis, J: t.Union[LinearJ, np.ndarray]) -> float:
    """Largest |D_k(J f) - (I - P) J D_k(f)| over directions and plane basis vectors."""
    J = J.matrix if isinstance(J, LinearJ) else np.asarray(J, dtype=float)
    off_plane = np.eye(B.plane.dimension) - B.plane.projector
    residual = 0.0
    for k in range(len(B)):
        for f in (B.plane.u, B.plane.w):
            difference = B.apply(k, J @ f) - off_plane @ J @ B.apply(k, f)
            residual = max(residual, float(np.linalg.norm(difference)))
    return residual
