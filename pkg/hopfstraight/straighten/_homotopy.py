"""
Deformation of one fibration into another along straight lines of the slicing planes.

Every base point y, read as the J2-line through y, spans together with V^{1,0}(J0) a projective
subspace of dimension n+1. A fibration meets it in the single Sato line of the fiber that the
straightening map sends to y, and in the affine chart complementary to P(V^{1,0}(J0)) those Sato lines
are joined by a segment.
"""
from __future__ import annotations

import threading
import typing as t
from collections import OrderedDict

import numpy as np
import scipy.linalg

from hopfstraight import constants
from hopfstraight.errors import RealLocusError, StraighteningError
from hopfstraight.fibration import Fibration, OrientedPlane, plane_at
from hopfstraight.framebundle import FrameGauge
from hopfstraight.grassmann import (
    ellipticity_margin,
    plane_from_sato,
    sato_line,
    sv_distance,
    t_matrix,
    tangent_basis_from_chart,
)
from hopfstraight.log import get_logger
from hopfstraight.straighten._hinge import Hinge, certify_hinge
from hopfstraight.straighten._map import SphereMap
from hopfstraight.utils.sampling import normalize, random_unit_vectors
from hopfstraight.utils.scheduling import map_ordered


log = get_logger(__name__)

SLICE_RESIDUAL = 1e-6
SLICE_CACHE_SIZE = 1024


class _Slice(t.NamedTuple):
    line: np.ndarray
    start: np.ndarray
    end: np.ndarray


class HomotopySample(t.NamedTuple):
    base: np.ndarray
    plane: OrientedPlane
    sv_distance: float


class BaseHomotopy:
    """The family X_tau of surfaces of planes between the fibrations F0 (tau = 0) and F1 (tau = 1)."""

    def __init__(
        self,
        F0: Fibration,
        F1: Fibration,
        hinge: Hinge,
        *,
        gauge: t.Optional[FrameGauge] = None,
        delta: t.Optional[float] = None,
    ):
        if F0.dimension != F1.dimension:
            raise ValueError(f"Fibrations of S^{F0.dimension - 1} and S^{F1.dimension - 1} cannot be joined")
        if not hinge.is_certified(delta):
            raise StraighteningError(f"Hinge is not certified for the start fibration: {hinge.margins}")
        end_hinge = certify_hinge(F1, hinge.J0, hinge.target, hinge.samples, hinge.seed)
        if not end_hinge.is_certified(delta):
            raise StraighteningError(f"Hinge is not certified for the end fibration: {end_hinge.margins}")

        self.hinge = hinge
        self.target = hinge.target
        self.maps = (SphereMap(F0, hinge, gauge=gauge), SphereMap(F1, end_hinge, gauge=gauge))
        self._holomorphic = hinge.J0.holomorphic_basis()
        self._slices: OrderedDict[bytes, _Slice] = OrderedDict()
        self._lock = threading.Lock()

    @property
    def dimension(self) -> int:
        return self.target.dimension

    def _affine(self, phi: SphereMap, line: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Chart coordinate w in V^{1,0}(J0) with the Sato line of the fiber over y spanned by line + w."""
        x = phi.inverse(y)
        sato = sato_line(plane_at(phi.fibration, x), phi.structure_at(x))
        span = np.column_stack((self._holomorphic, line))
        coefficients, *_ = np.linalg.lstsq(span, sato, rcond=None)
        residual = float(np.linalg.norm(span @ coefficients - sato))
        if residual > SLICE_RESIDUAL:
            log.warning(f"Sato line leaves its slice by {residual:.3e}")
        return self._holomorphic @ (coefficients[:-1] / coefficients[-1])

    def _slice(self, y: np.ndarray) -> _Slice:
        key = y.tobytes()
        with self._lock:
            cached = self._slices.get(key)
            if cached is not None:
                self._slices.move_to_end(key)
                return cached

        line = y - 1j * self.target(y)
        start, end = (self._affine(phi, line, y) for phi in self.maps)
        found = _Slice(line, start, end)
        with self._lock:
            found = self._slices.setdefault(key, found)
            self._slices.move_to_end(key)
            while len(self._slices) > SLICE_CACHE_SIZE:
                self._slices.popitem(last=False)
        return found

    def sato(self, y: t.Any, tau: float) -> np.ndarray:
        """The interpolated Sato line over the base point y; raises RealLocusError near the real locus."""
        y = normalize(np.asarray(y, dtype=float))
        piece = self._slice(y)
        z = piece.line + (1 - tau) * piece.start + tau * piece.end
        distance = sv_distance(z)
        if distance < constants.tolerances().sato:
            raise RealLocusError(distance, tau)
        return z

    def plane(self, y: t.Any, tau: float) -> OrientedPlane:
        return plane_from_sato(self.sato(y, tau))[0]

    def chart(self, tau: float) -> t.Callable[[np.ndarray], OrientedPlane]:
        """X_tau parametrized by unit vectors representing J2-lines."""

        def chart(x: np.ndarray) -> OrientedPlane:
            return self.plane(x, tau)

        return chart

    def sample(
        self, tau: float, samples: int, seed: int = 0, *, workers: t.Optional[int] = None
    ) -> list[HomotopySample]:
        rng = np.random.default_rng(seed)
        bases = random_unit_vectors(rng, samples, self.dimension)

        def one(y: np.ndarray) -> HomotopySample:
            z = self.sato(y, tau)
            return HomotopySample(y, plane_from_sato(z)[0], sv_distance(z))

        return map_ordered(one, bases, workers=workers)

    def ellipticity(self, y: t.Any, tau: float, h: t.Optional[float] = None) -> float:
        """Ellipticity margin of X_tau at the plane over y, moving y across the complement of its J2-line."""
        y = normalize(np.asarray(y, dtype=float))
        directions = scipy.linalg.null_space(np.vstack((y, self.target(y))))
        basis = tangent_basis_from_chart(self.chart(tau), y, directions, h)
        return ellipticity_margin(t_matrix(basis))


def base_homotopy(
    F0: Fibration,
    F1: Fibration,
    hinge: Hinge,
    tau: float,
    samples: int,
    seed: int = 0,
) -> list[HomotopySample]:
    """Sampled planes of X_tau, one per random base point."""
    if not 0 <= tau <= 1:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    found = BaseHomotopy(F0, F1, hinge).sample(tau, samples, seed)
    closest = min((sample.sv_distance for sample in found), default=np.inf)
    log.debug(f"Homotopy at tau={tau:.3f}: min sv distance {closest:.3e}")
    return found
