from __future__ import annotations

import typing as t
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from hopfstraight import constants
from hopfstraight.errors import MapInversionError, StraighteningError, ToolkitError
from hopfstraight.fibration import Fibration, LinearJ, OrientedPlane, plane_at
from hopfstraight.framebundle import FrameGauge, osculating_j
from hopfstraight.grassmann import sato_line
from hopfstraight.log import get_logger
from hopfstraight.numkit import solve_linear
from hopfstraight.straighten._hinge import Hinge
from hopfstraight.utils.caching import FiberCache
from hopfstraight.utils.sampling import normalize, random_unit_vectors
from hopfstraight.utils.scheduling import map_ordered


log = get_logger(__name__)

INVERSION_TOLERANCE = 1e-13


def _matrix(J: t.Union[LinearJ, np.ndarray]) -> np.ndarray:
    return J.matrix if isinstance(J, LinearJ) else np.asarray(J, dtype=float)


def straight_map_matrix(J1: t.Any, J0: t.Any, J2: t.Any) -> np.ndarray:
    """I + (J2 - J0)^-1 (J1 - J2), the linear map carrying J1 to J2 through the hinge J0."""
    J1, J0, J2 = _matrix(J1), _matrix(J0), _matrix(J2)
    return np.eye(J1.shape[0]) + solve_linear(J2 - J0, J1 - J2)


def pointwise_map(J1: t.Any, J0: t.Any, J2: t.Any, v: t.Any) -> np.ndarray:
    """v2 = v + (J2 - J0)^-1 (J1 - J2) v."""
    J1, J0, J2 = _matrix(J1), _matrix(J0), _matrix(J2)
    v = np.asarray(v, dtype=float)
    return v + solve_linear(J2 - J0, (J1 - J2) @ v)


class SphereMap:
    """
    The straightening diffeomorphism v -> normalize(L_P v), with L_P = I + (J2 - J0)^-1 (J_P - J2).

    One linear piece per fiber, cached by plane, so the map is linear on every fiber before normalization.
    """

    def __init__(
        self,
        fibration: Fibration,
        hinge: Hinge,
        target: t.Optional[LinearJ] = None,
        *,
        gauge: t.Optional[FrameGauge] = None,
    ):
        self.fibration = fibration
        self.hinge = hinge
        self.target = hinge.target if target is None else target
        self.gauge = gauge
        self._coupling = solve_linear(self.target.matrix - hinge.J0.matrix, np.eye(fibration.dimension))
        self._cache: FiberCache[tuple[np.ndarray, np.ndarray]] = FiberCache()

    def __repr__(self) -> str:
        return f"<SphereMap {self.fibration.kind} n={self.fibration.n} cached_fibers={len(self._cache)}>"

    def _compute_pieces(self, plane: OrientedPlane) -> tuple[np.ndarray, np.ndarray]:
        # reduce at the point of the plane closest to a coordinate axis, so J_P depends on the fiber only
        projector = plane.projector
        anchor = normalize(projector[:, int(np.argmax(np.diag(projector)))])
        structure = osculating_j(self.fibration, anchor, self.gauge).matrix
        return structure, np.eye(self.fibration.dimension) + self._coupling @ (structure - self.target.matrix)

    def _pieces(self, plane: OrientedPlane, *, cached: bool = True) -> tuple[np.ndarray, np.ndarray]:
        if not cached:
            return self._compute_pieces(plane)
        return self._cache.get_or_compute(plane.basis, lambda: self._compute_pieces(plane))

    def structure_at(self, v: t.Any) -> np.ndarray:
        """Osculating complex structure of the fiber through v."""
        return self._pieces(plane_at(self.fibration, v))[0]

    def linear_piece(self, v: t.Any) -> np.ndarray:
        return self._pieces(plane_at(self.fibration, v))[1]

    def _evaluate(self, v: t.Any, *, cached: bool = True) -> np.ndarray:
        v = normalize(np.asarray(v, dtype=float))
        piece = self._pieces(plane_at(self.fibration, v), cached=cached)[1]
        return normalize(piece @ v)

    def __call__(self, v: t.Any) -> np.ndarray:
        return self._evaluate(v)

    def inverse(self, y: t.Any, *, max_iterations: int = 50) -> np.ndarray:
        """Fixed-point iteration x <- normalize(L_{P(x)}^-1 y) started at y."""
        y = normalize(np.asarray(y, dtype=float))
        x = y
        step = np.inf
        for iteration in range(max_iterations):
            candidate = normalize(solve_linear(self.linear_piece(x), y))
            step = float(np.linalg.norm(candidate - x))
            x = candidate
            if step <= INVERSION_TOLERANCE:
                log.trace(f"Map inverted in {iteration + 1} iterations")
                return x
        if step <= 1e-10:
            return x
        raise MapInversionError(y, step)

    def jacobian(self, v: t.Any, step: t.Optional[float] = None) -> float:
        """
        |det| of the differential at v, between orthonormal bases of the tangent spaces of the sphere.

        Stencil points sit off the sampled fibers and are evaluated without touching the fiber cache.
        """
        step = constants.Stencils.jacobian if step is None else step
        v = normalize(np.asarray(v, dtype=float))
        image = self(v)
        source = scipy.linalg.null_space(v[None, :])
        target = scipy.linalg.null_space(image[None, :])
        columns = []
        for k in range(source.shape[1]):
            forward = self._evaluate(v + step * source[:, k], cached=False)
            backward = self._evaluate(v - step * source[:, k], cached=False)
            columns.append(target.T @ (forward - backward) / (2 * step))
        return float(abs(np.linalg.det(np.column_stack(columns))))


def build_map(
    F: Fibration,
    hinge: Hinge,
    J2: t.Optional[LinearJ] = None,
    *,
    gauge: t.Optional[FrameGauge] = None,
    delta: t.Optional[float] = None,
) -> SphereMap:
    if not hinge.is_certified(delta):
        raise StraighteningError(f"Hinge is not certified: margins {hinge.margins}")
    return SphereMap(F, hinge, J2, gauge=gauge)


def slice_point(phi: SphereMap, v: t.Any) -> np.ndarray:
    """The base point of the fiber through v, as the J2-line of its image in C^{2n+2}."""
    image = phi(v)
    return sato_line(OrientedPlane.from_vectors(image, phi.target(image)), phi.target)


@dataclass
class CertificationReport:
    """
    Certification of a straightening map.

    Attributes:
        `fiber_dev_max` -- largest distance of an image point from the J2-line of its circle
        `jac_det_min` -- smallest |det| of the differential
        `inv_consistency_max` -- largest |Phi^-1(Phi(x)) - x|
        `samples` -- circles times points per circle
        `seed` -- seed of the circles
        `verdict` -- pass or fail
        `tolerance` -- bound used for deviation and inverse consistency
    """

    fiber_dev_max: float
    jac_det_min: float
    inv_consistency_max: float
    samples: int
    seed: int
    verdict: bool
    tolerance: float
    jacobian_floor: float
    map_samples: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list, repr=False)
    failures: list[dict[str, t.Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, t.Any]:
        return {
            "fiber_dev_max": self.fiber_dev_max,
            "jac_det_min": self.jac_det_min,
            "inv_consistency_max": self.inv_consistency_max,
            "samples": self.samples,
            "seed": self.seed,
            "verdict": "pass" if self.verdict else "fail",
            "tolerance": self.tolerance,
            "jacobian_floor": self.jacobian_floor,
            "failures": self.failures,
        }


class _CircleOutcome(t.NamedTuple):
    deviation: float
    jacobian: float
    inverse: float
    sample: tuple[np.ndarray, np.ndarray]


def _check_circle(
    phi: SphereMap,
    J2: np.ndarray,
    v: np.ndarray,
    points: int,
    jacobian_points: int,
) -> _CircleOutcome:
    plane = plane_at(phi.fibration, v)
    thetas = 2 * np.pi * np.arange(points) / points
    circle = [plane.point(theta) for theta in thetas]
    images = np.array([phi(x) for x in circle])

    line = OrientedPlane.from_vectors(images[0], J2 @ images[0])
    deviation = max(line.membership_residual(y) for y in images)
    stride = max(1, points // max(1, jacobian_points))
    jacobian = min(phi.jacobian(circle[j]) for j in range(0, points, stride)[:jacobian_points])
    inverse = float(np.linalg.norm(phi.inverse(images[0]) - circle[0]))
    return _CircleOutcome(deviation, jacobian, inverse, (circle[0], images[0]))


def verify_map(
    phi: SphereMap,
    F: t.Optional[Fibration] = None,
    J2: t.Optional[LinearJ] = None,
    circles: int = 20,
    points: int = 16,
    seed: int = 0,
    *,
    jacobian_points: t.Optional[int] = None,
    tolerance: t.Optional[float] = None,
    workers: t.Optional[int] = None,
) -> CertificationReport:
    """
    Certify that phi carries fibers of F to J2-complex circles, is a local diffeomorphism and inverts.

    `jacobian_points` limits the Jacobians taken per circle (all points by default). Counts below 1 raise ValueError.
    """
    jacobian_points = points if jacobian_points is None else jacobian_points
    for name, count in (("circles", circles), ("points", points), ("jacobian_points", jacobian_points)):
        if count < 1:
            raise ValueError(f"{name} must be at least 1, got {count}")
    F = phi.fibration if F is None else F
    J2 = phi.target if J2 is None else J2
    tolerances = constants.tolerances()
    if tolerance is None:
        tolerance = tolerances.certify_analytic if F.analytic else tolerances.certify_perturbed

    rng = np.random.default_rng(seed)
    starts = random_unit_vectors(rng, circles, F.dimension)
    report = CertificationReport(
        np.nan, np.nan, np.nan, circles * points, seed, False, tolerance, tolerances.jacobian_floor
    )

    def check(item: tuple[int, np.ndarray]) -> t.Union[_CircleOutcome, dict[str, t.Any]]:
        index, v = item
        try:
            return _check_circle(phi, J2.matrix, v, points, jacobian_points)
        except ToolkitError as e:
            return {"index": index, "point": v, "reason": f"{type(e).__name__}: {e}"}

    outcomes = map_ordered(check, list(enumerate(starts)), workers=workers)
    good = [outcome for outcome in outcomes if isinstance(outcome, _CircleOutcome)]
    report.failures = [outcome for outcome in outcomes if not isinstance(outcome, _CircleOutcome)]
    if good:
        report.fiber_dev_max = max(outcome.deviation for outcome in good)
        report.jac_det_min = min(outcome.jacobian for outcome in good)
        report.inv_consistency_max = max(outcome.inverse for outcome in good)
        report.map_samples = [outcome.sample for outcome in good]

    report.verdict = (
        bool(good)
        and not report.failures
        and report.fiber_dev_max <= tolerance
        and report.inv_consistency_max <= tolerance
        and report.jac_det_min > report.jacobian_floor
    )
    log.info(
        f"Map certification {'passed' if report.verdict else 'failed'}: deviation {report.fiber_dev_max:.3e}, "
        f"min |det| {report.jac_det_min:.3e}, inverse {report.inv_consistency_max:.3e}"
    )
    return report
