from __future__ import annotations

import typing as t
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from hopfstraight import constants
from hopfstraight.errors import HingeSearchError, ToolkitError
from hopfstraight.fibration import Fibration, LinearJ, OrientedPlane, plane_at
from hopfstraight.framebundle import FrameGauge, osculating_j
from hopfstraight.grassmann import sato_line
from hopfstraight.log import get_logger
from hopfstraight.numkit import sigma_min
from hopfstraight.utils.sampling import random_unit_vectors
from hopfstraight.utils.scheduling import map_ordered


log = get_logger(__name__)


class FiberSample(t.NamedTuple):
    """A sampled fiber with its osculating complex structure and Sato line."""

    plane: OrientedPlane
    structure: np.ndarray
    sato: np.ndarray


def sample_fibers(
    F: Fibration,
    samples: int,
    seed: int,
    *,
    gauge: t.Optional[FrameGauge] = None,
    workers: t.Optional[int] = None,
) -> list[FiberSample]:
    rng = np.random.default_rng(seed)
    points = random_unit_vectors(rng, samples, F.dimension)

    def sample(v: np.ndarray) -> FiberSample:
        plane = plane_at(F, v)
        structure = osculating_j(F, plane, gauge)
        return FiberSample(plane, structure.matrix, sato_line(plane, structure))

    fibers = map_ordered(sample, points, workers=workers)
    log.debug(f"Sampled {len(fibers)} fibers of the {F.kind} fibration")
    return fibers


@dataclass(frozen=True)
class Hinge:
    """
    A complex structure J0 nowhere parallel to the surface of fibers and disjoint from it.

    Attributes:
        `J0` -- the hinge
        `target` -- complex structure J2 the fibration is straightened to
        `parallel_margin` -- min over samples of sigma_min(J_P - J0)
        `target_margin` -- sigma_min(J2 - J0)
        `disjoint_margin` -- min over samples of the part of the Sato line outside V^{1,0}(J0)
        `samples` -- fibers the margins were measured on
        `seed` -- seed of those fibers
    """

    J0: LinearJ
    target: LinearJ
    parallel_margin: float
    target_margin: float
    disjoint_margin: float
    samples: int
    seed: int

    @property
    def margins(self) -> dict[str, float]:
        return {
            "parallel": self.parallel_margin,
            "target": self.target_margin,
            "disjoint": self.disjoint_margin,
        }

    def is_certified(self, delta: t.Optional[float] = None) -> bool:
        delta = constants.tolerances().hinge if delta is None else delta
        return min(self.margins.values()) > delta

    def to_dict(self) -> dict[str, t.Any]:
        return {"J0": self.J0.matrix, "margins": self.margins, "samples": self.samples, "seed": self.seed}


def _disjoint_distance(z: np.ndarray, holomorphic: np.ndarray) -> float:
    return float(np.linalg.norm(z - holomorphic @ (holomorphic.conj().T @ z)))


def certify_hinge(
    F: Fibration,
    J0: LinearJ,
    J2: LinearJ,
    samples: int = 50,
    seed: int = 0,
    *,
    fibers: t.Optional[t.Sequence[FiberSample]] = None,
) -> Hinge:
    """Measure the hinge margins of J0 on sampled fibers of F, without searching."""
    if fibers is None:
        fibers = sample_fibers(F, samples, seed)
    J0 = J0 if isinstance(J0, LinearJ) else LinearJ(J0)
    holomorphic = J0.holomorphic_basis()
    parallel = min((sigma_min(fiber.structure - J0.matrix) for fiber in fibers), default=np.inf)
    disjoint = min((_disjoint_distance(fiber.sato, holomorphic) for fiber in fibers), default=np.inf)
    return Hinge(J0, J2, parallel, sigma_min(J2.matrix - J0.matrix), disjoint, len(fibers), seed)


def find_hinge(
    F: Fibration,
    J2: LinearJ,
    seed: int = 0,
    samples: int = 50,
    *,
    budget: t.Optional[int] = None,
    delta: t.Optional[float] = None,
) -> Hinge:
    """
    Search J0 = h J_std h^-1, J_std = -J2, with h = expm(sigma A) for Gaussian A.

    The scale sigma starts small and doubles every few draws; the fibers are sampled once and reused.
    """
    budget = constants.Search.budget if budget is None else budget
    delta = constants.tolerances().hinge if delta is None else delta
    best: t.Optional[Hinge] = None
    if budget <= 0:
        raise HingeSearchError(None, 0)

    fibers = sample_fibers(F, samples, seed)
    rng = np.random.default_rng(seed)
    standard = -J2.matrix
    for draw in range(budget):
        if draw == 0:
            h = np.eye(F.dimension)
        else:
            scale = constants.Search.initial_scale * 2 ** ((draw - 1) // constants.Search.draws_per_scale)
            h = scipy.linalg.expm(scale * rng.standard_normal((F.dimension, F.dimension)))
        try:
            candidate = certify_hinge(F, LinearJ(h @ standard @ np.linalg.inv(h)), J2, samples, seed, fibers=fibers)
        except ToolkitError as e:
            log.trace(f"Hinge draw {draw} rejected: {e}")
            continue
        if best is None or min(candidate.margins.values()) > min(best.margins.values()):
            best = candidate
        if candidate.is_certified(delta):
            log.info(f"Found a hinge after {draw + 1} draws, margins {candidate.margins}")
            return candidate
        log.trace(f"Hinge draw {draw}: margins {candidate.margins}")
    raise HingeSearchError(best.margins if best else None, budget)
