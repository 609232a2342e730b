from __future__ import annotations

import typing as t

import numpy as np
import scipy.linalg

from hopfstraight import constants
from hopfstraight.errors import ConvergenceError, ToolkitError
from hopfstraight.fibration import Fibration, OrientedPlane, plane_at
from hopfstraight.log import get_logger
from hopfstraight.utils.sampling import normalize, random_unit_vectors


log = get_logger(__name__)

ACCEPT_RESIDUAL = 1e-8
RANK_THRESHOLD = 1e-6
DUPLICATE_DISTANCE = 1e-6


class LocusPoint(t.NamedTuple):
    """
    A fiber inside the kernel of the covector.

    `rank_sigma` is the second singular value of the derivative of the residual across the fiber;
    positive means the locus has real codimension 2 there.
    """

    plane: OrientedPlane
    residual: float
    rank_sigma: float


def _residual(F: Fibration, xi: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(xi v, xi w) with w the unit vector of the fiber plane a quarter turn after v."""
    v = normalize(v)
    plane = plane_at(F, v)
    quarter = (v @ plane.u) * plane.w - (v @ plane.w) * plane.u
    return np.array([xi @ v, xi @ quarter])


def _jacobian(F: Fibration, xi: np.ndarray, v: np.ndarray, directions: np.ndarray) -> np.ndarray:
    h = constants.Stencils.solver
    columns = [
        (_residual(F, xi, v + h * direction) - _residual(F, xi, v - h * direction)) / (2 * h)
        for direction in directions.T
    ]
    return np.column_stack(columns)


def _across(F: Fibration, v: np.ndarray) -> np.ndarray:
    return scipy.linalg.null_space(plane_at(F, v).basis.T)


def _descend(F: Fibration, xi: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, float]:
    """Gauss-Newton on the sphere with minimum-norm steps across the fiber."""
    tolerance = constants.tolerances().gauss_newton
    residual = _residual(F, xi, v)
    norm = float(np.linalg.norm(residual))
    for iteration in range(constants.Search.max_iterations):
        if norm <= tolerance:
            break
        directions = _across(F, v)
        step, *_ = np.linalg.lstsq(_jacobian(F, xi, v, directions), -residual, rcond=None)
        damping = 1.0
        while damping > 1e-6:
            trial = normalize(v + damping * (directions @ step))
            trial_residual = _residual(F, xi, trial)
            if np.linalg.norm(trial_residual) < norm:
                v, residual = trial, trial_residual
                norm = float(np.linalg.norm(residual))
                break
            damping /= 2
        else:
            break
        log.trace(f"Locus iteration {iteration}: residual {norm:.3e}")
    if norm > ACCEPT_RESIDUAL:
        raise ConvergenceError(norm, constants.Search.max_iterations)
    return v, norm


def hyperplane_locus(F: Fibration, xi: t.Any, resolution: int = 20, seed: int = 0) -> list[LocusPoint]:
    """
    Fibers of F lying in the hyperplane ker xi.

    `resolution` is the number of starting points, drawn uniformly on the sphere from `seed`, not the
    side of a grid; every start descends to at most one fiber. Each accepted fiber carries both generators
    in ker xi to ACCEPT_RESIDUAL and is reported once.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (F.dimension,):
        raise ValueError(f"Covector must have {F.dimension} entries, got shape {xi.shape}")
    if not np.any(xi):
        raise ValueError("The zero covector defines no hyperplane")
    xi = xi / np.linalg.norm(xi)

    rng = np.random.default_rng(seed)
    found: list[LocusPoint] = []
    for start in random_unit_vectors(rng, resolution, F.dimension):
        try:
            v, residual = _descend(F, xi, start)
            plane = plane_at(F, v)
            rank = np.linalg.svd(_jacobian(F, xi, v, _across(F, v)), compute_uv=False)
        except ToolkitError as e:
            log.trace(f"Locus start discarded: {e}")
            continue
        if any(plane.distance(point.plane) < DUPLICATE_DISTANCE for point in found):
            continue
        point = LocusPoint(plane, residual, float(rank[1]))
        if point.rank_sigma <= RANK_THRESHOLD:
            log.warning(f"Locus point with degenerate rank {point.rank_sigma:.3e}")
        found.append(point)
    log.debug(f"Hyperplane locus: {len(found)} fibers from {resolution} starts")
    return found
