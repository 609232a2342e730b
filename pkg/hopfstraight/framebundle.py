"""
Moving frames adapted to a great circle fibration.

A frame g in SL(V) is reduced in four stages. B1 puts the fiber plane in the first two columns, B2 makes
the invariant t commute with J0 in the complement, B3 normalizes the trace of its Cayley transform s to
zero and B kills the torsion components s^0_{q-bar}. The osculating complex structure of a fiber is
g J0 g^-1 for a frame at level B.

Every stage is deterministic given a FrameGauge, so frames depend smoothly on the point and can be
differentiated by finite differences.
"""
from __future__ import annotations

import enum
import typing as t
from dataclasses import dataclass, replace

import numpy as np

from hopfstraight import constants
from hopfstraight.errors import (
    DegeneratePlaneError,
    EllipticityError,
    FrameDiscontinuityError,
    OrientationError,
    TorsionError,
    ToolkitError,
)
from hopfstraight.fibration import Fibration, LinearJ, OrientedPlane, TwistedJ, plane_at
from hopfstraight.grassmann import TangentBasis, ellipticity_margin, t_matrix, tangent_basis
from hopfstraight.halfplane import (
    DiskMatrix,
    MoebiusN,
    NonRealEndo,
    cayley_matrix,
    complex_structure_of,
    evolve_t,
    hermitian_frame,
    normalize_trace_zero,
)
from hopfstraight.log import get_logger
from hopfstraight.numkit import complexify_block, realify_antilinear, solve_linear, split_block, standard_j
from hopfstraight.utils.sampling import normalize


__all__ = (
    "Level",
    "FrameGauge",
    "AdaptedFrame",
    "FrameInvariants",
    "adapt_b1",
    "adapt_b2",
    "adapt_b3",
    "adapt_full",
    "adapt_chain",
    "b3_frame_field",
    "maurer_cartan",
    "structure_residual",
    "torsion_relation_residual",
    "osculating_j",
    "twisted_structure",
    "fiber_ode_residual",
    "transport_residual",
    "invariants",
    "measure_t",
    "check_frame",
)

log = get_logger(__name__)

# relative disagreement of the two Maurer-Cartan stencils that counts as a jump
FRAME_JUMP = 1e-2
COMPLEMENT_DEGENERACY = 1e-8
NORMALIZER_DRIFT = 1e-8


class Level(enum.IntEnum):
    B1 = 1
    B2 = 2
    B3 = 3
    B = 4


@dataclass(frozen=True)
class FrameGauge:
    """
    Reference data that fixes every choice made while adapting frames.

    Attributes:
        `complement_ref` -- (2n+2, 2n) vectors orthonormalized against the plane to complete the frame
        `pairing_ref` -- (2n, 2n) candidates for the Hermitian Gram-Schmidt of the complement
        `seed` -- seed the references were drawn from
    """

    complement_ref: np.ndarray
    pairing_ref: np.ndarray
    seed: int

    @classmethod
    def seeded(cls, n: int, seed: t.Optional[int] = None) -> FrameGauge:
        seed = constants.Search.gauge_seed if seed is None else seed
        rng = np.random.default_rng(seed)
        complement = rng.standard_normal((2 * n + 2, 2 * n))
        pairing = rng.standard_normal((2 * n, 2 * n))
        return cls(complement, pairing, seed)


_gauges: dict[tuple[int, int], FrameGauge] = {}


def _gauge(n: int, gauge: t.Optional[FrameGauge]) -> FrameGauge:
    if gauge is not None:
        return gauge
    key = (n, constants.Search.gauge_seed)
    if key not in _gauges:
        _gauges[key] = FrameGauge.seeded(n)
    return _gauges[key]


@dataclass(frozen=True)
class AdaptedFrame:
    """
    A frame g at `point` with the invariants attached at its reduction level.

    Attributes:
        `g` -- the frame, det 1; columns 0 and 1 span the fiber plane
        `level` -- reduction level reached
        `point` -- unit vector the frame sits over (g e0 is a positive multiple of it)
        `plane` -- oriented fiber plane
        `t` -- the invariant t in this frame (real 2n x 2n)
        `tangent` -- tangent directions used to measure t
        `directions` -- orthonormal complement of the plane from B1, used as base directions
        `t_complex` -- complexified t (B2 and later)
        `s` -- Cayley transform of t_complex (B2 and later)
        `normalizer` -- element of N applied at B3
        `s0qbar` -- torsion left after the B shift
        `s0qbar_measured` -- torsion measured before the B shift
        `relation_residual` -- residual of Omega_{0-bar} = s Omega_0 at level B
        `normalizer_drift` -- disagreement between the B3 frame change and the N action on s
    """

    g: np.ndarray
    level: Level
    point: np.ndarray
    plane: OrientedPlane
    t: np.ndarray
    tangent: TangentBasis
    directions: np.ndarray
    t_complex: t.Optional[np.ndarray] = None
    s: t.Optional[DiskMatrix] = None
    normalizer: t.Optional[MoebiusN] = None
    s0qbar: t.Optional[np.ndarray] = None
    s0qbar_measured: t.Optional[np.ndarray] = None
    relation_residual: t.Optional[float] = None
    normalizer_drift: t.Optional[float] = None

    @property
    def n(self) -> int:
        return self.g.shape[0] // 2 - 1

    @property
    def margin(self) -> float:
        return ellipticity_margin(self.t)

    def structure(self) -> np.ndarray:
        """g J0 g^-1."""
        return self.g @ standard_j(self.n + 1) @ np.linalg.inv(self.g)


def adapt_b1(F: Fibration, v: t.Any, gauge: t.Optional[FrameGauge] = None) -> AdaptedFrame:
    """Frame [v, w, C] with (v, w) an oriented orthonormal basis of the fiber plane and C completing it."""
    gauge = _gauge(F.n, gauge)
    v = normalize(np.asarray(v, dtype=float))
    fiber = plane_at(F, v)
    w = normalize(fiber.w - (v @ fiber.w) * v)
    plane = OrientedPlane(v, w)

    reference = (np.eye(F.dimension) - plane.projector) @ gauge.complement_ref
    complement, triangular = np.linalg.qr(reference)
    diagonal = np.diag(triangular)
    if np.min(np.abs(diagonal)) <= COMPLEMENT_DEGENERACY:
        raise DegeneratePlaneError(v)
    complement = complement * np.sign(diagonal)

    g = np.column_stack((v, w, complement))
    if np.linalg.det(g) < 0:
        g[:, -1] = -g[:, -1]
    basis = tangent_basis(F, plane)
    t_b1 = t_matrix(basis, g[:, :2], g[:, 2:])
    return AdaptedFrame(g, Level.B1, v, plane, t_b1, basis, g[:, 2:].copy())


def adapt_b2(F: Fibration, frame: AdaptedFrame, gauge: t.Optional[FrameGauge] = None) -> AdaptedFrame:
    """
    Change the complement columns so t commutes with J0, and attach t_complex and s = C(t_complex).

    The complex frame of J_t must be positively oriented, since frames live in SL(V). A fibration whose
    complex structure reverses the orientation of V (hopf(J) with J = diag(A, -A) on R^4, say) admits no
    such frame and raises OrientationError.
    """
    gauge = _gauge(F.n, gauge)
    tolerance = constants.tolerances().ellipticity
    margin = frame.margin
    if margin <= tolerance:
        raise EllipticityError(margin, frame.point)

    J_t = complex_structure_of(NonRealEndo.of(frame.t, tolerance))
    h = hermitian_frame(J_t, gauge.pairing_ref)
    determinant = np.linalg.det(h)
    if determinant <= 0:
        raise OrientationError(frame.point)
    h = h / determinant ** (1 / h.shape[0])

    t_b2 = solve_linear(h, frame.t @ h)
    t_complex = complexify_block(t_b2, tolerance=1e-6)
    s = cayley_matrix(t_complex)
    g = frame.g.copy()
    g[:, 2:] = frame.g[:, 2:] @ h
    return replace(frame, g=g, level=Level.B2, t=t_b2, t_complex=t_complex, s=s)


def adapt_b3(frame: AdaptedFrame) -> AdaptedFrame:
    """Apply the element of N that makes trace(s) vanish: f0 -> f0 / a, f1 -> b f0 + a f1."""
    normalizer, normalized = normalize_trace_zero(frame.s)
    a, b = normalizer.a, normalizer.b
    g = frame.g.copy()
    g[:, 0] = frame.g[:, 0] / a
    g[:, 1] = b * frame.g[:, 0] + a * frame.g[:, 1]

    t_b3 = normalizer.halfplane_action(frame.t)
    t_complex = normalizer.halfplane_action(frame.t_complex)
    s = cayley_matrix(t_complex)
    drift = float(np.linalg.norm(s.matrix - normalized.matrix))
    if drift > NORMALIZER_DRIFT:
        log.warning(f"Frame-level normalizer and matrix action disagree by {drift:.3e}")
    return replace(
        frame,
        g=g,
        level=Level.B3,
        t=t_b3,
        t_complex=t_complex,
        s=s,
        normalizer=normalizer,
        normalizer_drift=drift,
    )


def b3_frame_field(F: Fibration, gauge: t.Optional[FrameGauge] = None) -> t.Callable[[np.ndarray], np.ndarray]:
    """The deterministic B3 frame as a function of the point."""
    gauge = _gauge(F.n, gauge)

    def frame_field(p: np.ndarray) -> np.ndarray:
        return adapt_b3(adapt_b2(F, adapt_b1(F, p, gauge), gauge)).g

    return frame_field


def _sphere_curve(v: np.ndarray, direction: np.ndarray, tau: float) -> np.ndarray:
    return normalize(v + tau * direction)


def maurer_cartan(
    frame_field: t.Callable[[np.ndarray], np.ndarray],
    v: t.Any,
    direction: t.Any,
    h: t.Optional[float] = None,
) -> np.ndarray:
    """
    omega(direction) = g^-1 dg along the sphere curve normalize(v + tau direction) at tau = 0.

    Richardson-extrapolated central differences at steps h and h/2; a disagreement between the two
    larger than the frame can explain raises FrameDiscontinuityError.
    """
    h = constants.Stencils.maurer_cartan if h is None else h
    v = np.asarray(v, dtype=float)
    direction = np.asarray(direction, dtype=float)

    def difference(step: float) -> np.ndarray:
        forward = frame_field(_sphere_curve(v, direction, step))
        backward = frame_field(_sphere_curve(v, direction, -step))
        return (forward - backward) / (2 * step)

    wide, narrow = difference(h), difference(h / 2)
    jump = float(np.linalg.norm(wide - narrow))
    if jump > FRAME_JUMP * max(1.0, float(np.linalg.norm(wide))):
        raise FrameDiscontinuityError(jump, v)
    derivative = (4 * narrow - wide) / 3
    return solve_linear(frame_field(v), derivative)


def structure_residual(
    frame_field: t.Callable[[np.ndarray], np.ndarray],
    v: t.Any,
    d1: t.Any,
    d2: t.Any,
    h: t.Optional[float] = None,
) -> float:
    """|d1 omega(d2) - d2 omega(d1) + [omega(d1), omega(d2)]| on the chart normalize(v + x d1 + y d2)."""
    h = constants.Stencils.maurer_cartan if h is None else h
    v, d1, d2 = (np.asarray(x, dtype=float) for x in (v, d1, d2))

    def frame(x: float, y: float) -> np.ndarray:
        return frame_field(normalize(v + x * d1 + y * d2))

    def omega(x: float, y: float, axis: int) -> np.ndarray:
        if axis == 0:
            derivative = (frame(x + h, y) - frame(x - h, y)) / (2 * h)
        else:
            derivative = (frame(x, y + h) - frame(x, y - h)) / (2 * h)
        return np.linalg.solve(frame(x, y), derivative)

    omega_1, omega_2 = omega(0, 0, 0), omega(0, 0, 1)
    d1_omega_2 = (omega(h, 0, 1) - omega(-h, 0, 1)) / (2 * h)
    d2_omega_1 = (omega(0, h, 0) - omega(0, -h, 0)) / (2 * h)
    return float(np.linalg.norm(d1_omega_2 - d2_omega_1 + omega_1 @ omega_2 - omega_2 @ omega_1))


class _Components(t.NamedTuple):
    linear: np.ndarray  # Omega^p_0, rows = directions
    antilinear: np.ndarray  # Omega^p_{0-bar}


def _plane_components(omegas: t.Sequence[np.ndarray]) -> _Components:
    linear, antilinear = [], []
    for omega in omegas:
        L, A = split_block(omega[:, 0:2])
        linear.append(L[:, 0])
        antilinear.append(A[:, 0])
    return _Components(np.array(linear), np.array(antilinear))


def _solve_torsion(components: _Components, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Solve Omega^0_{0-bar} = s^0_r Omega^r_0 + s^0_{r-bar} conj(Omega^r_0) over the sampled directions."""
    semibasic = components.linear[:, 1:]
    system = np.hstack((semibasic, np.conj(semibasic)))
    solution = solve_linear(system, components.antilinear[:, 0])
    return solution[:n], solution[n:]


def torsion_relation_residual(omegas: t.Sequence[np.ndarray], s: t.Union[DiskMatrix, np.ndarray]) -> float:
    """Largest |Omega^p_{0-bar} - s^p_q Omega^q_0| over the sampled directions, relative to |Omega_0|."""
    s = s.matrix if isinstance(s, DiskMatrix) else np.asarray(s)
    components = _plane_components(omegas)
    residual = 0.0
    for linear, antilinear in zip(components.linear, components.antilinear):
        scale = max(float(np.linalg.norm(linear[1:])), np.finfo(float).tiny)
        residual = max(residual, float(np.linalg.norm(antilinear[1:] - s @ linear[1:])) / scale)
    return residual


def _shift(c: np.ndarray, dimension: int) -> np.ndarray:
    """I + E with E carrying the antilinear block of c in the plane rows of the complement columns."""
    E = np.zeros((dimension, dimension))
    E[0:2, 2:] = realify_antilinear(c[None, :])
    return np.eye(dimension) + E


def adapt_full(
    F: Fibration,
    frame: AdaptedFrame,
    gauge: t.Optional[FrameGauge] = None,
    h: t.Optional[float] = None,
) -> AdaptedFrame:
    """
    Remove the torsion s^0_{q-bar} by a right translation that leans the complement columns into the plane.

    The Maurer-Cartan form of the B3 frame field is measured along the B1 complement directions; the
    shift is affine in the group parameter, so one solve suffices and a second pass is only a safeguard.
    """
    gauge = _gauge(F.n, gauge)
    tolerance = constants.tolerances().torsion
    field = b3_frame_field(F, gauge)
    omegas = [maurer_cartan(field, frame.point, direction, h) for direction in frame.directions.T]

    _, measured = _solve_torsion(_plane_components(omegas), F.n)
    g, remaining = frame.g, measured
    for attempt in range(2):
        shift = _shift(remaining, F.dimension)
        g = g @ shift
        shift_inverse = np.linalg.inv(shift)
        omegas = [shift_inverse @ omega @ shift for omega in omegas]
        _, remaining = _solve_torsion(_plane_components(omegas), F.n)
        if np.linalg.norm(remaining) <= tolerance:
            break
        log.warning(f"Torsion {np.linalg.norm(remaining):.3e} survived shift #{attempt + 1}, re-solving")
    else:
        raise TorsionError(float(np.linalg.norm(remaining)), frame.point)

    relation = torsion_relation_residual(omegas, frame.s)
    log.trace(f"B frame: measured torsion {np.linalg.norm(measured):.3e}, relation residual {relation:.3e}")
    return replace(
        frame,
        g=g,
        level=Level.B,
        s0qbar=remaining,
        s0qbar_measured=measured,
        relation_residual=relation,
    )


def adapt_chain(
    F: Fibration,
    v: t.Any,
    gauge: t.Optional[FrameGauge] = None,
    h: t.Optional[float] = None,
) -> AdaptedFrame:
    """Run every reduction stage at v."""
    gauge = _gauge(F.n, gauge)
    frame = adapt_b3(adapt_b2(F, adapt_b1(F, v, gauge), gauge))
    return adapt_full(F, frame, gauge, h)


def osculating_j(
    F: Fibration,
    v: t.Union[OrientedPlane, t.Any],
    gauge: t.Optional[FrameGauge] = None,
    h: t.Optional[float] = None,
) -> LinearJ:
    """The osculating complex structure J_P = g J0 g^-1 of the fiber through v (or of the plane P)."""
    point = v.u if isinstance(v, OrientedPlane) else v
    return LinearJ(adapt_chain(F, point, gauge, h).structure())


def twisted_structure(F: Fibration, gauge: t.Optional[FrameGauge] = None) -> TwistedJ:
    """v -> J_{P(v)} v; on the fiber plane J_P only needs the B3 frame."""
    field = b3_frame_field(F, gauge)
    J0 = standard_j(F.n + 1)

    def evaluate(p: np.ndarray) -> np.ndarray:
        g = field(p)
        return g @ (J0 @ np.linalg.solve(g, p))

    return TwistedJ(evaluate, F.dimension, f"pseudocomplex:{F.kind}")


def measure_t(F: Fibration, g: t.Any) -> np.ndarray:
    """The invariant t in an arbitrary frame whose first two columns span a fiber plane."""
    g = np.asarray(g, dtype=float)
    plane = OrientedPlane.from_vectors(g[:, 0], g[:, 1])
    basis = tangent_basis(F, plane)
    return t_matrix(basis, g[:, :2], g[:, 2:])


def _circle_frames_t(F: Fibration, plane: OrientedPlane, thetas: t.Iterable[float], gauge: FrameGauge) -> np.ndarray:
    return np.array([adapt_b1(F, plane.point(theta), gauge).t for theta in thetas])


def fiber_ode_residual(
    F: Fibration,
    v: t.Any,
    m: int = 8,
    d_theta: t.Optional[float] = None,
    gauge: t.Optional[FrameGauge] = None,
) -> float:
    """Largest |dt/dtheta + I + t^2| at m points of the fiber, with t in B1 frames rotating along the circle."""
    gauge = _gauge(F.n, gauge)
    d_theta = constants.Stencils.fiber_ode if d_theta is None else d_theta
    plane = plane_at(F, v)
    identity = np.eye(2 * F.n)
    residual = 0.0
    for j in range(m):
        theta = 2 * np.pi * j / m
        before, here, after = _circle_frames_t(F, plane, (theta - d_theta, theta, theta + d_theta), gauge)
        derivative = (after - before) / (2 * d_theta)
        residual = max(residual, float(np.linalg.norm(derivative + identity + here @ here)))
    log.trace(f"Fiber ODE residual {residual:.3e} over {m} points")
    return residual


def transport_residual(F: Fibration, v: t.Any, m: int = 8, gauge: t.Optional[FrameGauge] = None) -> float:
    """Largest |t(theta) - evolve_t(t(0), theta)| at m points of the fiber."""
    gauge = _gauge(F.n, gauge)
    plane = plane_at(F, v)
    thetas = 2 * np.pi * np.arange(m) / m
    measured = _circle_frames_t(F, plane, thetas, gauge)
    return max(float(np.linalg.norm(measured[j] - evolve_t(measured[0], theta))) for j, theta in enumerate(thetas))


class FrameInvariants(t.NamedTuple):
    point: np.ndarray
    level: t.Optional[Level]
    margin: t.Optional[float] = None
    t_complex: t.Optional[np.ndarray] = None
    s: t.Optional[np.ndarray] = None
    s0qbar_norm: t.Optional[float] = None
    s0qbar_measured_norm: t.Optional[float] = None
    error: t.Optional[str] = None

    @property
    def s_norm(self) -> t.Optional[float]:
        return None if self.s is None else float(np.linalg.norm(self.s))


def invariants(
    F: Fibration,
    v: t.Any,
    gauge: t.Optional[FrameGauge] = None,
    h: t.Optional[float] = None,
) -> FrameInvariants:
    """
    Run the reduction at v and collect the invariants of the highest level reached.

    A failing stage is recorded in `error` rather than raised. Orientation-reversing fibrations stop at B1
    with an OrientationError from adapt_b2.
    """
    gauge = _gauge(F.n, gauge)
    v = normalize(np.asarray(v, dtype=float))
    frame = None
    stages = (
        lambda _: adapt_b1(F, v, gauge),
        lambda f: adapt_b2(F, f, gauge),
        adapt_b3,
        lambda f: adapt_full(F, f, gauge, h),
    )
    error = None
    for stage in stages:
        try:
            frame = stage(frame)
        except ToolkitError as e:
            log.debug(f"Reduction stopped after {frame.level.name if frame else 'nothing'}: {e}")
            error = f"{type(e).__name__}: {e}"
            break

    if frame is None:
        return FrameInvariants(v, None, error=error)
    return FrameInvariants(
        v,
        frame.level,
        margin=ellipticity_margin(_b1_t(frame)),
        t_complex=frame.t_complex,
        s=None if frame.s is None else frame.s.matrix,
        s0qbar_norm=None if frame.s0qbar is None else float(np.linalg.norm(frame.s0qbar)),
        s0qbar_measured_norm=None if frame.s0qbar_measured is None else float(np.linalg.norm(frame.s0qbar_measured)),
        error=error,
    )


def _b1_t(frame: AdaptedFrame) -> np.ndarray:
    """The t of the orthonormal B1 frame the given frame was reduced from."""
    return t_matrix(frame.tangent, frame.plane.basis, frame.directions)


def check_frame(F: Fibration, frame: AdaptedFrame) -> dict[str, float]:
    """
    Re-measure the invariants of every level up to the frame's own.

    Returns residuals by name: det and plane (B1), commute (B2), trace and normalizer (B3), torsion (B).
    """
    g = frame.g
    residuals = {"det": abs(float(np.linalg.det(g)) - 1)}
    plane = plane_at(F, g[:, 0])
    frame_plane = OrientedPlane.from_vectors(g[:, 0], g[:, 1])
    residuals["plane"] = max(frame_plane.distance(plane), float(np.linalg.norm(normalize(g[:, 0]) - frame.point)))
    if frame.level >= Level.B2:
        measured = measure_t(F, g)
        J0 = standard_j(F.n)
        residuals["commute"] = float(np.linalg.norm(measured @ J0 - J0 @ measured))
        if frame.level >= Level.B3:
            s = cayley_matrix(complexify_block(measured, tolerance=1e-6))
            residuals["trace"] = float(abs(np.trace(s.matrix)))
            residuals["normalizer"] = frame.normalizer_drift if frame.normalizer_drift is not None else 0.0
    if frame.level >= Level.B:
        residuals["torsion"] = float(np.linalg.norm(frame.s0qbar))
    return residuals
