import logging
from os import environ
from typing import NamedTuple

import psutil


__all__ = (
    "Toolkit",
    "Tolerances",
    "Stencils",
    "Search",
    "DEBUG_MODE",
    "tolerances",
    "set_tolerances",
    "reset_tolerances",
)

log = logging.getLogger(__name__)


def _threads() -> int:
    configured = int(environ.get("TOOLKIT_THREADS", 0))
    if configured > 0:
        return configured
    return psutil.cpu_count(logical=False) or 1


class Toolkit(NamedTuple):

    name = "hopfstraight"
    debug = environ.get("TOOLKIT_DEBUG", "false").lower() == "true"
    trace_loggers = environ.get("TOOLKIT_TRACE_LOGGERS")
    threads = _threads()
    log_file = environ.get("TOOLKIT_LOG_FILE")


DEBUG_MODE = Toolkit.debug


class Tolerances(NamedTuple):
    """Numerical thresholds shared by every stage."""

    singular: float = float(environ.get("TOOLKIT_TOL_SINGULAR", 1e-12))
    ellipticity: float = float(environ.get("TOOLKIT_TOL_ELLIPTICITY", 1e-8))
    torsion: float = float(environ.get("TOOLKIT_TOL_TORSION", 1e-5))
    analytic: float = float(environ.get("TOOLKIT_TOL_ANALYTIC", 1e-9))
    perturbed: float = float(environ.get("TOOLKIT_TOL_PERTURBED", 1e-7))
    hinge: float = float(environ.get("TOOLKIT_TOL_HINGE", 1e-2))
    certify_analytic: float = float(environ.get("TOOLKIT_TOL_CERTIFY_ANALYTIC", 1e-6))
    certify_perturbed: float = float(environ.get("TOOLKIT_TOL_CERTIFY_PERTURBED", 1e-3))
    newton: float = float(environ.get("TOOLKIT_TOL_NEWTON", 1e-12))
    gauss_newton: float = float(environ.get("TOOLKIT_TOL_GAUSS_NEWTON", 1e-12))
    sato: float = float(environ.get("TOOLKIT_TOL_SATO", 1e-3))
    jacobian_floor: float = float(environ.get("TOOLKIT_TOL_JACOBIAN_FLOOR", 0.05))


class Stencils:
    tangent = float(environ.get("TOOLKIT_STENCIL_TANGENT", 1e-4))
    maurer_cartan = float(environ.get("TOOLKIT_STENCIL_MAURER_CARTAN", 1e-3))
    jacobian = float(environ.get("TOOLKIT_STENCIL_JACOBIAN", 1e-5))
    fiber_ode = float(environ.get("TOOLKIT_STENCIL_FIBER_ODE", 1e-3))
    # central-difference step for Newton and Gauss-Newton Jacobians
    solver = 1e-7


class Search:
    budget = int(environ.get("TOOLKIT_HINGE_BUDGET", 100))
    draws_per_scale = 10
    initial_scale = 0.1
    gauge_seed = int(environ.get("TOOLKIT_GAUGE_SEED", 20220514))
    max_iterations = 50


_active = Tolerances()


def tolerances() -> Tolerances:
    """Return the tolerances in effect for this process."""
    return _active


def set_tolerances(**overrides: float) -> Tolerances:
    """
    Replace selected tolerances for the rest of the run.

    Unknown names and non-positive values raise ValueError.
    """
    global _active
    for key, value in overrides.items():
        if key not in Tolerances._fields:
            raise ValueError(f"Unknown tolerance {key!r}; expected one of {', '.join(Tolerances._fields)}")
        if not value > 0:
            raise ValueError(f"Tolerance {key!r} must be positive, got {value!r}")
    _active = _active._replace(**{key: float(value) for key, value in overrides.items()})
    log.debug(f"Active tolerances: {_active}")
    return _active


def reset_tolerances() -> Tolerances:
    """Restore the environment defaults."""
    global _active
    _active = Tolerances()
    return _active
