from __future__ import annotations

import typing as t
from dataclasses import dataclass, field

import numpy as np

from hopfstraight import constants
from hopfstraight.errors import ToolkitError
from hopfstraight.fibration._kinds import Fibration, perturbed_hopf, plane_at
from hopfstraight.fibration._structures import LinearJ, TwistedJ
from hopfstraight.log import get_logger
from hopfstraight.utils.sampling import random_unit_vectors
from hopfstraight.utils.scheduling import map_ordered


log = get_logger(__name__)

# fiber angles checked for constancy, away from multiples of pi / 2
CONSTANCY_ANGLES = (0.7, 1.9, 3.3, 4.6)


@dataclass
class ValidationReport:
    """
    Outcome of a sampled validation.

    Attributes:
        `subject` -- what was validated
        `samples` -- number of sample points
        `seed` -- rng seed of the sample points
        `residuals` -- aggregated residuals by name
        `thresholds` -- the bound each residual was compared against
        `passed` -- verdict
        `failures` -- per-sample failures, each with the sample index and a reason
    """

    subject: str
    samples: int
    seed: int
    residuals: dict[str, float] = field(default_factory=dict)
    thresholds: dict[str, float] = field(default_factory=dict)
    passed: bool = False
    failures: list[dict[str, t.Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, t.Any]:
        return {
            "subject": self.subject,
            "samples": self.samples,
            "seed": self.seed,
            "residuals": dict(self.residuals),
            "thresholds": dict(self.thresholds),
            "passed": self.passed,
            "failures": list(self.failures),
        }


class _SampleOutcome(t.NamedTuple):
    index: int
    values: dict[str, float]
    failure: t.Optional[str]


def _check_fibration_sample(F: Fibration, index: int, v: np.ndarray, ellipticity: bool) -> _SampleOutcome:
    from hopfstraight import grassmann

    try:
        plane = plane_at(F, v)
        values = {"membership": plane.membership_residual(v)}
        values["constancy"] = max(plane_at(F, plane.point(theta)).distance(plane) for theta in CONSTANCY_ANGLES)
        if ellipticity:
            basis = grassmann.tangent_basis(F, plane)
            values["ellipticity_margin"] = grassmann.ellipticity_margin(grassmann.t_matrix(basis))
    except ToolkitError as e:
        log.debug(f"Sample #{index} failed: {e}")
        return _SampleOutcome(index, {}, f"{type(e).__name__}: {e}")
    return _SampleOutcome(index, values, None)


def validate_fibration(
    F: Fibration,
    samples: int = 200,
    seed: int = 0,
    *,
    ellipticity: bool = True,
    workers: t.Optional[int] = None,
) -> ValidationReport:
    """
    Check membership, fiber constancy and ellipticity of F at random points of the sphere.

    Numerical failures at a sample become report entries; the verdict fails on any of them.
    """
    rng = np.random.default_rng(seed)
    points = random_unit_vectors(rng, samples, F.dimension)
    outcomes = map_ordered(
        lambda item: _check_fibration_sample(F, item[0], item[1], ellipticity),
        list(enumerate(points)),
        workers=workers,
    )

    tolerance = F.tolerance
    report = ValidationReport(f"fibration:{F.kind}", samples, seed)
    report.thresholds = {"membership": tolerance, "constancy": tolerance}
    if ellipticity:
        report.thresholds["ellipticity_margin"] = constants.tolerances().ellipticity

    collected: dict[str, list[float]] = {key: [] for key in report.thresholds}
    for outcome in outcomes:
        if outcome.failure is not None:
            report.failures.append({"index": outcome.index, "point": points[outcome.index], "reason": outcome.failure})
            continue
        for key, value in outcome.values.items():
            collected[key].append(value)
        bad = [key for key, value in outcome.values.items() if not _within(key, value, report.thresholds[key])]
        if bad:
            report.failures.append(
                {
                    "index": outcome.index,
                    "point": points[outcome.index],
                    "reason": f"out of tolerance: {', '.join(bad)}",
                }
            )

    for key, values in collected.items():
        if values:
            report.residuals[key] = min(values) if key == "ellipticity_margin" else max(values)
    report.passed = not report.failures and samples > 0
    log.debug(f"Validated {F.kind} fibration on {samples} samples: passed={report.passed} {report.residuals}")
    return report


def _within(key: str, value: float, threshold: float) -> bool:
    if key == "ellipticity_margin":
        return value > threshold
    return value <= threshold


def validate_twisted(
    J: t.Union[TwistedJ, LinearJ],
    samples: int = 200,
    seed: int = 0,
    *,
    tolerance: t.Optional[float] = None,
) -> ValidationReport:
    """Check J(J(v)) = -v, invariance of span(v, Jv) and linearity of J on that plane at random v."""
    if isinstance(J, LinearJ):
        J = TwistedJ.from_linear(J)
    tolerance = constants.tolerances().analytic if tolerance is None else tolerance
    rng = np.random.default_rng(seed)
    points = random_unit_vectors(rng, samples, J.dimension)
    mixes = rng.standard_normal((samples, 2))

    report = ValidationReport(f"twisted:{J.description or 'structure'}", samples, seed)
    report.thresholds = {"square": tolerance, "invariance": tolerance, "linearity": tolerance}
    worst = {key: 0.0 for key in report.thresholds}
    for index, (v, (alpha, beta)) in enumerate(zip(points, mixes)):
        try:
            image = J(v)
            square = float(np.linalg.norm(J(image) + v))
            combination = alpha * v + beta * image
            combined_image = J(combination)
            plane = np.column_stack((v, image))
            coefficients = np.linalg.lstsq(plane, combined_image, rcond=None)[0]
            scale = np.linalg.norm(combination)
            invariance = float(np.linalg.norm(plane @ coefficients - combined_image) / scale)
            linearity = float(np.linalg.norm(combined_image - (alpha * image - beta * v)) / scale)
        except ToolkitError as e:
            report.failures.append({"index": index, "point": v, "reason": f"{type(e).__name__}: {e}"})
            continue
        for key, value in (("square", square), ("invariance", invariance), ("linearity", linearity)):
            worst[key] = max(worst[key], value)
            if value > tolerance:
                report.failures.append({"index": index, "point": v, "reason": f"{key} residual {value:.3e}"})

    report.residuals = worst
    report.passed = not report.failures and samples > 0
    return report


def admissible_amplitude(
    J: t.Union[LinearJ, t.Any],
    coeffs: t.Sequence[tuple[int, complex]],
    lo: float = 0.0,
    hi: float = 1.0,
    samples: int = 20,
    seed: int = 0,
    steps: int = 8,
) -> float:
    """Largest amplitude found by bisection for which the perturbed fibration passes validation."""

    def passes(epsilon: float) -> bool:
        try:
            return validate_fibration(perturbed_hopf(J, coeffs, epsilon), samples, seed).passed
        except ToolkitError:
            return False

    if passes(hi):
        return hi
    if not passes(lo):
        raise ValueError(f"Perturbation family fails validation already at amplitude {lo}")
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
        log.debug(f"Admissible amplitude bracket [{lo:.6g}, {hi:.6g}]")
    return lo
