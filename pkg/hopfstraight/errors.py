from __future__ import annotations

import typing as t

import numpy as np


def _point(point: t.Any) -> t.Optional[tuple[float, ...]]:
    if point is None:
        return None
    return tuple(float(x) for x in np.ravel(point))


class ToolkitError(Exception):
    """Base class of every error raised by hopfstraight."""


class NumericError(ToolkitError):
    """A dense linear algebra or iterative step failed."""


class NonSquareError(NumericError):
    """
    Raised when an operation needs a square matrix.

    Attributes:
        `shape` -- shape of the offending array
    """

    def __init__(self, shape: tuple[int, ...]):
        self.shape = tuple(shape)
        super().__init__(f"Expected a square matrix, got shape {self.shape}.")


class SingularMatrixError(NumericError):
    """
    Raised when a matrix is singular to working tolerance.

    Attributes:
        `sigma_min` -- smallest singular value found
        `threshold` -- the value it had to exceed
    """

    def __init__(self, sigma_min: float, threshold: float):
        self.sigma_min = float(sigma_min)
        self.threshold = float(threshold)
        super().__init__(f"Matrix is singular to tolerance: sigma_min={self.sigma_min:.3e} <= {self.threshold:.3e}.")


class RankDeficiencyError(NumericError):
    """
    Raised when a family of vectors that has to be independent is not.

    Attributes:
        `sigma_min` -- smallest singular value of the stacked family
    """

    def __init__(self, sigma_min: float):
        self.sigma_min = float(sigma_min)
        super().__init__(f"Family is rank deficient: sigma_min={self.sigma_min:.3e}.")


class ConvergenceError(NumericError):
    """
    Raised when an iteration stops before meeting its tolerance.

    Attributes:
        `residual` -- last residual norm
        `iterations` -- iterations spent
    """

    def __init__(self, residual: float, iterations: int):
        self.residual = float(residual)
        self.iterations = int(iterations)
        super().__init__(f"No convergence after {self.iterations} iterations (residual {self.residual:.3e}).")


class NearRealEigenvalueError(NumericError):
    """
    Raised when an eigenvalue is too close to the real axis.

    Attributes:
        `eigenvalue` -- the offending eigenvalue
        `margin` -- required distance from the real axis
    """

    def __init__(self, eigenvalue: complex, margin: float):
        self.eigenvalue = complex(eigenvalue)
        self.margin = float(margin)
        super().__init__(f"Eigenvalue {self.eigenvalue:.6g} lies within {self.margin:.3e} of the real axis.")


class DiskRadiusError(NumericError):
    """
    Raised when a spectrum leaves the open unit disk.

    Attributes:
        `radius` -- spectral radius found
    """

    def __init__(self, radius: float):
        self.radius = float(radius)
        super().__init__(f"Spectral radius {self.radius:.6g} is not below 1.")


class PoleError(NumericError):
    """
    Raised when a linear fractional map is evaluated at a pole.

    Attributes:
        `sigma_min` -- smallest singular value of the denominator
    """

    def __init__(self, sigma_min: float):
        self.sigma_min = float(sigma_min)
        super().__init__(f"Denominator is singular (sigma_min={self.sigma_min:.3e}).")


class BlockFormError(NumericError):
    """
    Raised when a real matrix does not have complex-linear 2x2 block form.

    Attributes:
        `residual` -- norm of the antilinear part
    """

    def __init__(self, residual: float):
        self.residual = float(residual)
        super().__init__(f"Matrix does not commute with the standard complex structure (residual {self.residual:.3e}).")


class FibrationError(ToolkitError):
    """A fibration could not be evaluated."""


class InvalidStructureError(FibrationError):
    """
    Raised when a complex structure fails J^2 = -I.

    Attributes:
        `residual` -- norm of J^2 + I
    """

    def __init__(self, residual: float):
        self.residual = float(residual)
        super().__init__(f"Not a complex structure: |J^2 + I| = {self.residual:.3e}.")


class FiberInversionError(FibrationError):
    """
    Raised when the fiber through a point could not be found.

    Attributes:
        `point` -- the point on the sphere
        `residual` -- best residual over all starts
    """

    def __init__(self, point: t.Any, residual: float):
        self.point = _point(point)
        self.residual = float(residual)
        super().__init__(f"Could not locate the fiber through a point (best residual {self.residual:.3e}).")


class DegeneratePlaneError(FibrationError):
    """
    Raised when two vectors fail to span a plane.

    Attributes:
        `point` -- point at which the plane was requested
    """

    def __init__(self, point: t.Any = None):
        self.point = _point(point)
        super().__init__("Vectors do not span a 2-plane.")


class FrameError(ToolkitError):
    """An adapted frame could not be built."""


class EllipticityError(FrameError):
    """
    Raised when a tangent plane of the surface of fibers is not elliptic.

    Attributes:
        `margin` -- smallest |Im| of the eigenvalues of t
        `point` -- point of the sphere
    """

    def __init__(self, margin: float, point: t.Any = None):
        self.margin = float(margin)
        self.point = _point(point)
        super().__init__(f"Tangent plane is not elliptic (margin {self.margin:.3e}).")


class FrameDiscontinuityError(FrameError):
    """
    Raised when the frame field jumps inside a finite-difference stencil.

    Attributes:
        `jump` -- disagreement between stencil widths
        `point` -- point of the sphere
    """

    def __init__(self, jump: float, point: t.Any = None):
        self.jump = float(jump)
        self.point = _point(point)
        super().__init__(f"Frame field is discontinuous near the point (stencil disagreement {self.jump:.3e}).")


class TorsionError(FrameError):
    """
    Raised when the torsion component cannot be removed.

    Attributes:
        `residual` -- remaining torsion norm
        `point` -- point of the sphere
    """

    def __init__(self, residual: float, point: t.Any = None):
        self.residual = float(residual)
        self.point = _point(point)
        super().__init__(f"Torsion survives normalization (residual {self.residual:.3e}).")


class OrientationError(FrameError):
    """
    Raised when a frame change would reverse orientation.

    Attributes:
        `point` -- point of the sphere
    """

    def __init__(self, point: t.Any = None):
        self.point = _point(point)
        super().__init__("Frame change reverses orientation.")


class StraighteningError(ToolkitError):
    """The straightening construction failed."""


class HingeSearchError(StraighteningError):
    """
    Raised when no hinge is found within the draw budget.

    Attributes:
        `best_margins` -- margins of the best candidate, keyed by name
        `draws` -- number of candidates tried
    """

    def __init__(self, best_margins: t.Optional[dict[str, float]], draws: int):
        self.best_margins = dict(best_margins or {})
        self.draws = int(draws)
        super().__init__(f"No hinge found in {self.draws} draws (best margins {self.best_margins}).")


class RealLocusError(StraighteningError):
    """
    Raised when a homotopy plane reaches the real locus.

    Attributes:
        `distance` -- distance to the real locus
        `tau` -- homotopy parameter
    """

    def __init__(self, distance: float, tau: float):
        self.distance = float(distance)
        self.tau = float(tau)
        super().__init__(f"Homotopy meets the real locus at tau={self.tau:.4g} (distance {self.distance:.3e}).")


class MapInversionError(StraighteningError):
    """
    Raised when the straightening map cannot be inverted at a point.

    Attributes:
        `point` -- target point
        `residual` -- last fixed-point step size
    """

    def __init__(self, point: t.Any, residual: float):
        self.point = _point(point)
        self.residual = float(residual)
        super().__init__(f"Fixed-point inversion did not settle (step {self.residual:.3e}).")


class SpecFileError(ToolkitError):
    """
    Raised for malformed fibration spec files.

    Attributes:
        `path` -- file name, or "<memory>" for in-memory specs
        `reason` -- what is wrong with it
    """

    def __init__(self, path: str, reason: str):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{self.path}: {self.reason}")
