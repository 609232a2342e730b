"""
Endomorphisms without real eigenvalues and the matrix Moebius transformations acting on them.

The Cayley map C(z) = (iz + 1)/(z + i) carries the upper half-plane to the unit disk. The group N of
disk automorphisms used by the trace normalization is parametrized by a > 0 and real b; on the upper
half-plane the same element acts as t -> a^2 t + ab.
"""
from __future__ import annotations

import math
import typing as t
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from hopfstraight import constants
from hopfstraight.errors import (
    ConvergenceError,
    DiskRadiusError,
    InvalidStructureError,
    NearRealEigenvalueError,
    NumericError,
    PoleError,
)
from hopfstraight.log import get_logger
from hopfstraight.numkit import Spectrum, as_square, sigma_min, solve_linear, spectral_radius, spectrum


__all__ = (
    "NonRealEndo",
    "DiskMatrix",
    "MoebiusN",
    "complex_structure_of",
    "hermitian_frame",
    "cayley_matrix",
    "inverse_cayley",
    "lft_apply",
    "evolve_t",
    "normalize_trace_zero",
    "trace_jacobian",
    "n_lie_action",
)

log = get_logger(__name__)

POLE_THRESHOLD = 1e-12
# the homotopy fallback walks tau * s from tau = 0 in this many steps
HOMOTOPY_STEPS = 10
# keep log a bounded so a wild Newton step cannot overflow
MAX_LOG_A = 30.0


def _check_upper(values: np.ndarray, tolerance: float) -> None:
    if values.size == 0:
        return
    worst = int(np.argmin(values.imag))
    if values.imag[worst] <= tolerance:
        raise NearRealEigenvalueError(values[worst], tolerance)


@dataclass(frozen=True)
class NonRealEndo:
    """A real endomorphism with no real eigenvalues."""

    matrix: np.ndarray
    spectrum: Spectrum
    imag_margin: float

    @classmethod
    def of(cls, T: t.Any, tolerance: t.Optional[float] = None) -> NonRealEndo:
        tolerance = constants.tolerances().ellipticity if tolerance is None else tolerance
        T = as_square(np.asarray(T, dtype=float))
        spec = spectrum(T)
        margin = spec.imag_margin
        if margin <= tolerance:
            worst = spec.eigenvalues[int(np.argmin(np.abs(spec.eigenvalues.imag)))]
            raise NearRealEigenvalueError(worst, tolerance)
        return cls(T, spec, margin)


@dataclass(frozen=True)
class DiskMatrix:
    """A complex matrix with spectrum in the open unit disk."""

    matrix: np.ndarray
    radius_margin: float

    @classmethod
    def of(cls, s: t.Any) -> DiskMatrix:
        s = as_square(np.asarray(s, dtype=complex))
        radius = spectral_radius(s)
        if radius >= 1:
            raise DiskRadiusError(radius)
        return cls(s, 1 - radius)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class MoebiusN:
    a: float = 1.0
    b: float = 0.0
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"MoebiusN needs a > 0, got {self.a!r}")
        a, b = self.a, self.b
        diagonal = a + 1 / a
        off = a - 1 / a
        matrix = np.array(
            [
                [diagonal + 1j * b, b + 1j * off],
                [b - 1j * off, diagonal - 1j * b],
            ]
        )
        object.__setattr__(self, "_matrix", matrix)

    @classmethod
    def from_coordinates(cls, b: float, log_a: float) -> MoebiusN:
        return cls(math.exp(log_a), b)

    @property
    def coordinates(self) -> tuple[float, float]:
        """(b, log a), positively oriented against the Lie algebra coordinate Q."""
        return self.b, math.log(self.a)

    def matrix(self) -> np.ndarray:
        """The element as a 2x2 complex matrix acting on the unit disk."""
        return self._matrix.copy()

    def halfplane_action(self, t_matrix: t.Any) -> np.ndarray:
        t_matrix = np.asarray(t_matrix)
        return self.a ** 2 * t_matrix + self.a * self.b * np.eye(t_matrix.shape[0])

    def compose(self, other: MoebiusN) -> MoebiusN:
        """self after other, using the half-plane form t -> a^2 t + ab."""
        a = self.a * other.a
        # a^2 (a'^2 t + a'b') + ab = (aa')^2 t + (aa') (a b' + b / a')
        return MoebiusN(a, self.a * other.b + self.b / other.a)

    def inverse(self) -> MoebiusN:
        # t = a^-2 t' - b / a
        return MoebiusN(1 / self.a, -self.b)

    def is_identity(self, tolerance: float = 1e-9) -> bool:
        return abs(self.a - 1) <= tolerance and abs(self.b) <= tolerance


def hermitian_frame(J: t.Any, candidates: t.Any, *, min_norm: float = 1e-3) -> np.ndarray:
    """
    Real frame h = [e0, J e0, e1, J e1, ...] with J h = h J0, built from `candidates` (columns).

    Candidates are taken in order and kept when their Hermitian Gram-Schmidt remainder, measured in the
    J-invariant metric (I + J^T J) / 2, is larger than `min_norm`.
    """
    J = np.asarray(J, dtype=float)
    candidates = np.asarray(candidates, dtype=float)
    dimension = J.shape[0]
    metric = 0.5 * (np.eye(dimension) + J.T @ J)
    columns: list[np.ndarray] = []
    for index in range(candidates.shape[1]):
        x = candidates[:, index]
        for column in columns:
            x = x - (column @ metric @ x) * column
        norm = math.sqrt(max(float(x @ metric @ x), 0.0))
        if norm <= min_norm:
            continue
        x = x / norm
        columns.extend((x, J @ x))
        if len(columns) == dimension:
            return np.column_stack(columns)
    raise NumericError(f"Candidates span only {len(columns)} of {dimension} dimensions.")


def complex_structure_of(T: t.Union[NonRealEndo, t.Any]) -> np.ndarray:
    """
    The complex structure J_T acting by sqrt(-1) on the eigenspaces of T with positive imaginary part.

    Evaluated through the matrix sign function of -iT, then polished with a Newton step of J -> (J - J^-1)/2.
    """
    if not isinstance(T, NonRealEndo):
        T = NonRealEndo.of(T)
    T = T.matrix
    J = np.real(1j * scipy.linalg.signm(-1j * T))
    for _ in range(2):
        J = 0.5 * (J - np.linalg.inv(J))
    identity = np.eye(J.shape[0])
    residual = float(np.linalg.norm(J @ J + identity))
    if residual > 1e-10 * max(1.0, np.linalg.norm(J) ** 2):
        raise InvalidStructureError(residual)
    return J


def cayley_matrix(t_matrix: t.Any, tolerance: t.Optional[float] = None) -> DiskMatrix:
    """s = (i t + I)(t + i I)^-1 for t with spectrum in the open upper half-plane."""
    tolerance = constants.tolerances().ellipticity if tolerance is None else tolerance
    t_matrix = as_square(np.asarray(t_matrix, dtype=complex))
    _check_upper(np.linalg.eigvals(t_matrix), tolerance)
    identity = np.eye(t_matrix.shape[0])
    # X (t + iI) = it + I, solved from the right
    s = solve_linear((t_matrix + 1j * identity).T, (1j * t_matrix + identity).T).T
    return DiskMatrix.of(s)


def inverse_cayley(s: t.Union[DiskMatrix, t.Any]) -> np.ndarray:
    """t = (I - i s)(s - i I)^-1."""
    s = s.matrix if isinstance(s, DiskMatrix) else DiskMatrix.of(s).matrix
    identity = np.eye(s.shape[0])
    return solve_linear((s - 1j * identity).T, (identity - 1j * s).T).T


def lft_apply(g: t.Any, M: t.Any) -> np.ndarray:
    """(aM + bI)(cM + dI)^-1 for g = [[a, b], [c, d]]."""
    if isinstance(g, MoebiusN):
        g = g.matrix()
    (a, b), (c, d) = np.asarray(g, dtype=complex)
    M = as_square(np.asarray(M, dtype=complex))
    identity = np.eye(M.shape[0])
    denominator = c * M + d * identity
    smallest = sigma_min(denominator)
    if smallest <= POLE_THRESHOLD * max(1.0, np.linalg.norm(denominator, 2)):
        raise PoleError(smallest)
    return np.linalg.solve(denominator.T, (a * M + b * identity).T).T


def n_lie_action(Q: complex, s: t.Any) -> np.ndarray:
    """Velocity of s under the one-parameter subgroup of N with Lie algebra coordinate Q = b/2 + i log a."""
    s = np.asarray(s, dtype=complex)
    Q = complex(Q)
    identity = np.eye(s.shape[0])
    return Q * identity + 1j * (Q + Q.conjugate()) * s - Q.conjugate() * s @ s


def evolve_t(t0: t.Union[NonRealEndo, t.Any], theta: float) -> np.ndarray:
    """
    Solve dt/dtheta = -(I + t^2) from t(0) = t0.

    Uses (t0 - tan) (I + tan t0)^-1 when |tan theta| <= 1 and the equivalent (cot t0 - I)(cot I + t0)^-1
    otherwise, so the solution stays finite through odd multiples of pi/2.
    """
    t0 = t0.matrix if isinstance(t0, NonRealEndo) else as_square(np.asarray(t0))
    values = np.linalg.eigvals(t0)
    if values.size and np.min(np.abs(values.imag)) <= constants.tolerances().ellipticity:
        worst = values[int(np.argmin(np.abs(values.imag)))]
        raise NearRealEigenvalueError(worst, constants.tolerances().ellipticity)

    # period pi
    theta = float(theta) - math.pi * round(float(theta) / math.pi)
    identity = np.eye(t0.shape[0])
    if abs(theta) <= math.pi / 4:
        tan = math.tan(theta)
        numerator, denominator = t0 - tan * identity, identity + tan * t0
    else:
        cot = 1 / math.tan(theta)
        numerator, denominator = cot * t0 - identity, cot * identity + t0
    # all factors are polynomials in t0 and commute
    return solve_linear(denominator, numerator)


def _trace_residual(s: np.ndarray, b: float, log_a: float) -> np.ndarray:
    trace = np.trace(lft_apply(MoebiusN.from_coordinates(b, log_a), s))
    return np.array([trace.real, trace.imag])


def trace_jacobian(s: t.Union[DiskMatrix, t.Any], g: t.Optional[MoebiusN] = None) -> np.ndarray:
    """Jacobian of (b, log a) -> (Re, Im) trace(g(s)) at g, by central differences."""
    s = s.matrix if isinstance(s, DiskMatrix) else np.asarray(s, dtype=complex)
    b, log_a = (g or MoebiusN()).coordinates
    h = constants.Stencils.solver
    columns = [
        (_trace_residual(s, b + h, log_a) - _trace_residual(s, b - h, log_a)) / (2 * h),
        (_trace_residual(s, b, log_a + h) - _trace_residual(s, b, log_a - h)) / (2 * h),
    ]
    return np.column_stack(columns)


def _newton(s: np.ndarray, start: tuple[float, float], tolerance: float) -> tuple[float, float, float, int]:
    b, log_a = start
    residual = _trace_residual(s, b, log_a)
    norm = float(np.linalg.norm(residual))
    iteration = 0
    for iteration in range(1, constants.Search.max_iterations + 1):
        if norm <= tolerance:
            return b, log_a, norm, iteration
        jacobian = trace_jacobian(s, MoebiusN.from_coordinates(b, log_a))
        step = np.linalg.solve(jacobian, -residual)
        damping = 1.0
        while True:
            trial_b = b + damping * step[0]
            trial_log_a = float(np.clip(log_a + damping * step[1], -MAX_LOG_A, MAX_LOG_A))
            try:
                trial = _trace_residual(s, trial_b, trial_log_a)
            except PoleError:
                trial = None
            if trial is not None and np.linalg.norm(trial) < norm:
                break
            damping /= 2
            if damping < 1e-6:
                raise ConvergenceError(norm, iteration)
        b, log_a, residual = trial_b, trial_log_a, trial
        norm = float(np.linalg.norm(residual))
        log.trace(f"Trace Newton step {iteration}: residual {norm:.3e}")
    if norm <= tolerance:
        return b, log_a, norm, iteration
    raise ConvergenceError(norm, iteration)


def normalize_trace_zero(s: t.Union[DiskMatrix, t.Any]) -> tuple[MoebiusN, DiskMatrix]:
    """
    Find the unique g in N with trace(g(s)) = 0.

    Newton from the identity first; when that fails, follow tau * s from tau = 0 with warm starts.
    """
    s = s if isinstance(s, DiskMatrix) else DiskMatrix.of(s)
    matrix = s.matrix
    tolerance = constants.tolerances().newton * max(1.0, matrix.shape[0])
    try:
        b, log_a, residual, iterations = _newton(matrix, (0.0, 0.0), tolerance)
    except (NumericError, np.linalg.LinAlgError) as e:
        log.warning(f"Trace normalization fell back to the homotopy ({e})")
        b, log_a = 0.0, 0.0
        for step in range(1, HOMOTOPY_STEPS + 1):
            tau = step / HOMOTOPY_STEPS
            try:
                b, log_a, residual, iterations = _newton(tau * matrix, (b, log_a), tolerance)
            except np.linalg.LinAlgError:
                raise ConvergenceError(float("nan"), step) from None

    g = MoebiusN.from_coordinates(b, log_a)
    normalized = DiskMatrix.of(lft_apply(g, matrix))
    log.trace(f"Trace normalized with a={g.a:.6g}, b={g.b:.6g} after {iterations} iterations")
    return g, normalized
