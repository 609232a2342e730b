from __future__ import annotations

import typing as t
from dataclasses import dataclass, field

import numpy as np

from hopfstraight import constants
from hopfstraight.errors import FiberInversionError, ToolkitError
from hopfstraight.fibration._sections import PerturbationSection
from hopfstraight.fibration._structures import LinearJ, OrientedPlane, TwistedJ
from hopfstraight.log import get_logger
from hopfstraight.numkit import complexify_vector, realify_vector
from hopfstraight.utils.sampling import normalize


log = get_logger(__name__)

UNIMODULAR_TOLERANCE = 1e-9
MULTI_STARTS = 3
# a Gauss-Newton iterate this far out of its affine chart is abandoned
CHART_LIMIT = 1e6


class BaseChart(t.NamedTuple):
    """Point of CP^n in the affine chart z_index = 1, given by the remaining coordinates."""

    index: int
    coords: np.ndarray

    @classmethod
    def from_homogeneous(cls, z: np.ndarray) -> BaseChart:
        index = int(np.argmax(np.abs(z)))
        return cls(index, np.delete(z / z[index], index))

    def homogeneous(self) -> np.ndarray:
        """Unit representative of the line."""
        return normalize(np.insert(np.asarray(self.coords, dtype=complex), self.index, 1.0))


Locator = t.Callable[[np.ndarray], t.Tuple[OrientedPlane, t.Optional[BaseChart]]]


@dataclass(frozen=True)
class Fibration:
    """
    A great circle fibration of the unit sphere of R^{2n+2}.

    `locate` maps a unit vector to the oriented plane of its fiber and, when the base comes with
    CP^n charts, the chart point of that fiber. Evaluation is read-only and safe from many threads.
    """

    n: int
    kind: str
    locate: Locator = field(repr=False, compare=False)
    analytic: bool = True
    linear_structure: t.Optional[LinearJ] = field(default=None, repr=False, compare=False)
    chart_plane: t.Optional[t.Callable[[BaseChart], OrientedPlane]] = field(default=None, repr=False, compare=False)
    params: t.Mapping[str, t.Any] = field(default_factory=dict, repr=False, compare=False)

    @property
    def dimension(self) -> int:
        return 2 * self.n + 2

    @property
    def tolerance(self) -> float:
        tolerances = constants.tolerances()
        return tolerances.analytic if self.analytic else tolerances.perturbed


def plane_at(F: Fibration, v: t.Any) -> OrientedPlane:
    """The oriented plane of the fiber through the unit vector `v`."""
    return F.locate(normalize(np.asarray(v, dtype=float)))[0]


def fiber_through(F: Fibration, v: t.Any) -> tuple[OrientedPlane, t.Optional[BaseChart]]:
    """The plane through `v` and the chart point of its fiber (None for bases without CP^n charts)."""
    return F.locate(normalize(np.asarray(v, dtype=float)))


def plane_of_chart(F: Fibration, chart: BaseChart) -> OrientedPlane:
    if F.chart_plane is None:
        raise TypeError(f"Fibrations of kind {F.kind!r} carry no base chart.")
    return F.chart_plane(chart)


def fiber_circle(F: Fibration, v: t.Any, m: int) -> np.ndarray:
    """`m` equally spaced points cos(theta) u + sin(theta) w of the fiber through v, one per row."""
    plane = plane_at(F, v)
    thetas = 2 * np.pi * np.arange(m) / m
    return np.outer(np.cos(thetas), plane.u) + np.outer(np.sin(thetas), plane.w)


def _complex_plane(frame: np.ndarray, first: np.ndarray, second: np.ndarray) -> OrientedPlane:
    return OrientedPlane.from_vectors(frame @ realify_vector(first), frame @ realify_vector(second))


def hopf(J: t.Union[LinearJ, t.Any]) -> Fibration:
    """Fibers are the J-complex lines, P(v) = (v, Jv)."""
    J = J if isinstance(J, LinearJ) else LinearJ(J)
    frame = J.complex_frame()
    frame_inverse = np.linalg.inv(frame)

    def locate(v: np.ndarray) -> tuple[OrientedPlane, BaseChart]:
        chart = BaseChart.from_homogeneous(complexify_vector(frame_inverse @ v))
        return OrientedPlane.from_vectors(v, J(v)), chart

    def chart_plane(chart: BaseChart) -> OrientedPlane:
        y = chart.homogeneous()
        return _complex_plane(frame, y, 1j * y)

    return Fibration(J.n, "hopf", locate, True, J, chart_plane, {"J": J})


def conjugated(g: t.Any, F: Fibration) -> Fibration:
    """The fibration with planes g P(g^-1 v)."""
    g = np.array(g, dtype=float)
    determinant = float(np.linalg.det(g))
    if g.shape != (F.dimension, F.dimension) or abs(determinant - 1) > UNIMODULAR_TOLERANCE:
        raise ValueError(f"Conjugating matrix must be unimodular of size {F.dimension}, det={determinant:.12g}")
    g.setflags(write=False)
    g_inverse = np.linalg.inv(g)

    def locate(v: np.ndarray) -> tuple[OrientedPlane, t.Optional[BaseChart]]:
        plane, chart = F.locate(normalize(g_inverse @ v))
        return plane.transform(g), chart

    chart_plane = None
    if F.chart_plane is not None:

        def chart_plane(chart: BaseChart) -> OrientedPlane:
            return F.chart_plane(chart).transform(g)

    linear = F.linear_structure.conjugate(g) if F.linear_structure is not None else None
    return Fibration(F.n, "conjugated", locate, F.analytic, linear, chart_plane, {"g": g, "inner": F})


def direct_sum(
    F0: Fibration,
    F1: Fibration,
    *,
    structures: t.Optional[tuple[TwistedJ, TwistedJ]] = None,
) -> Fibration:
    """
    The fibration of the sum of the twisted complex structures of F0 and F1.

    Summands with a linear structure use it directly; the others use their pseudocomplex structure.
    """
    if structures is None:
        structures = (pseudocomplex_structure(F0), pseudocomplex_structure(F1))
    J0, J1 = structures
    split = F0.dimension

    def twisted(v: np.ndarray) -> np.ndarray:
        return np.concatenate((J0(v[:split]), J1(v[split:])))

    def locate(v: np.ndarray) -> tuple[OrientedPlane, None]:
        return OrientedPlane.from_vectors(v, twisted(v)), None

    linear = None
    if F0.linear_structure is not None and F1.linear_structure is not None:
        dimension = F0.dimension + F1.dimension
        block = np.zeros((dimension, dimension))
        block[:split, :split] = F0.linear_structure.matrix
        block[split:, split:] = F1.linear_structure.matrix
        linear = LinearJ(block)

    return Fibration(
        F0.n + F1.n + 1,
        "sum",
        locate,
        F0.analytic and F1.analytic,
        linear,
        None,
        {"summands": (F0, F1), "structures": (J0, J1)},
    )


def pseudocomplex_structure(F: Fibration) -> TwistedJ:
    """The twisted complex structure v -> J_{P(v)} v of a fibration."""
    if F.linear_structure is not None:
        return TwistedJ.from_linear(F.linear_structure)
    if F.kind == "sum":
        J0, J1 = F.params["structures"]
        split = F.params["summands"][0].dimension
        return TwistedJ(
            lambda v: np.concatenate((J0(v[:split]), J1(v[split:]))),
            F.dimension,
            "sum",
        )
    # the frame machinery depends on this module
    from hopfstraight.framebundle import twisted_structure

    return twisted_structure(F)


class _FiberSolver:
    """Gauss-Newton inversion of (zeta, lambda) -> lambda y + eps conj(lambda) psi(y), y the unit lift of zeta."""

    def __init__(self, section: PerturbationSection, epsilon: float):
        self.section = section
        self.epsilon = epsilon
        self.n = section.n

    def _unpack(self, x: np.ndarray, index: int) -> tuple[np.ndarray, complex]:
        n = self.n
        zeta = x[:n] + 1j * x[n : 2 * n]
        y = normalize(np.insert(zeta, index, 1.0))
        return y, complex(x[2 * n], x[2 * n + 1])

    def generators(self, y: np.ndarray, lam: complex) -> tuple[np.ndarray, np.ndarray]:
        psi = self.epsilon * self.section(y)
        first = lam * y + np.conj(lam) * psi
        second = 1j * lam * y - 1j * np.conj(lam) * psi
        return first, second

    def residual(self, x: np.ndarray, index: int, target: np.ndarray) -> np.ndarray:
        y, lam = self._unpack(x, index)
        return realify_vector(self.generators(y, lam)[0] - target)

    def solve(self, target: np.ndarray) -> tuple[BaseChart, np.ndarray, complex, int]:
        tolerance = constants.tolerances().gauss_newton * max(1.0, np.linalg.norm(target))
        order = np.argsort(-np.abs(target), kind="stable")[:MULTI_STARTS]
        best = np.inf
        for attempt, index in enumerate(order):
            if abs(target[index]) < 1e-3 * abs(target[order[0]]):
                break
            if attempt:
                log.warning(f"Fiber inversion retrying from chart {index} (best residual {best:.3e})")
            try:
                x, norm, iterations = self._gauss_newton(target, int(index), tolerance)
            except (ToolkitError, np.linalg.LinAlgError, FloatingPointError) as e:
                log.debug(f"Chart {index} start failed: {e}")
                continue
            best = min(best, norm)
            if norm <= tolerance:
                y, lam = self._unpack(x, int(index))
                zeta = x[: self.n] + 1j * x[self.n : 2 * self.n]
                return BaseChart(int(index), zeta), y, lam, iterations
        raise FiberInversionError(target, best)

    def _gauss_newton(self, target: np.ndarray, index: int, tolerance: float) -> tuple[np.ndarray, float, int]:
        n = self.n
        start = target / target[index]
        zeta = np.delete(start, index)
        y = normalize(start)
        lam = np.vdot(y, target)
        x = np.concatenate((zeta.real, zeta.imag, [lam.real, lam.imag]))

        residual = self.residual(x, index, target)
        norm = float(np.linalg.norm(residual))
        h = constants.Stencils.solver
        iteration = 0
        for iteration in range(1, constants.Search.max_iterations + 1):
            if norm <= tolerance:
                break
            jacobian = np.empty((residual.size, x.size))
            for k in range(x.size):
                step = np.zeros(x.size)
                step[k] = h * max(1.0, abs(x[k]))
                jacobian[:, k] = (self.residual(x + step, index, target) - self.residual(x - step, index, target)) / (
                    2 * step[k]
                )
            delta = np.linalg.lstsq(jacobian, -residual, rcond=None)[0]
            damping = 1.0
            while damping > 1e-9:
                trial = x + damping * delta
                trial_residual = self.residual(trial, index, target)
                trial_norm = float(np.linalg.norm(trial_residual))
                if trial_norm < norm:
                    break
                damping /= 2
            else:
                # stalled at the noise floor
                break
            x, residual, norm = trial, trial_residual, trial_norm
            if np.abs(x[: 2 * n]).max(initial=0.0) > CHART_LIMIT:
                break
            log.trace(f"Fiber Gauss-Newton chart {index} step {iteration}: residual {norm:.3e}")
        return x, norm, iteration


def perturbed_hopf(
    J: t.Union[LinearJ, t.Any],
    coeffs: t.Sequence[tuple[int, complex]],
    epsilon: float,
) -> Fibration:
    """
    Move the base of hopf(J) along a normal section.

    The fiber over the line [y] is {lambda y + eps conj(lambda) psi(y)} in the complex coordinates of J,
    and evaluating the plane field at v solves for the fiber containing v.
    """
    J = J if isinstance(J, LinearJ) else LinearJ(J)
    section = PerturbationSection(J.n, coeffs)
    solver = _FiberSolver(section, float(epsilon))
    frame = J.complex_frame()
    frame_inverse = np.linalg.inv(frame)

    def locate(v: np.ndarray) -> tuple[OrientedPlane, BaseChart]:
        target = complexify_vector(frame_inverse @ v)
        chart, _, lam, iterations = solver.solve(target)
        y = chart.homogeneous()
        first, second = solver.generators(y, lam)
        log.trace(f"Fiber located after {iterations} iterations")
        return _complex_plane(frame, first, second), chart

    def chart_plane(chart: BaseChart) -> OrientedPlane:
        first, second = solver.generators(chart.homogeneous(), 1.0)
        return _complex_plane(frame, first, second)

    params = {"J": J, "coeffs": tuple(section.coeffs), "epsilon": float(epsilon)}
    return Fibration(J.n, "perturbed", locate, False, None, chart_plane, params)
