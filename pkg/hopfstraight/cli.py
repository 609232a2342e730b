"""
Command line front end.

Every command reads a fibration spec file and writes one report, either to --out or to stdout.
Exit codes: 0 success, 2 unusable input, 3 numerical failure or failed verdict, 4 no hinge found.
"""
from __future__ import annotations

import argparse
import sys
import typing as t
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from hopfstraight import __version__, constants
from hopfstraight.errors import HingeSearchError, PoleError, SpecFileError, ToolkitError
from hopfstraight.fibration import (
    FibrationSpec,
    LinearJ,
    build_fibration,
    fiber_circle,
    load_spec,
    validate_fibration,
)
from hopfstraight.framebundle import FrameInvariants, invariants
from hopfstraight.log import get_logger, setup
from hopfstraight.straighten import build_map, find_hinge, verify_map
from hopfstraight.utils.io import canonical_json, rows_to_csv, write_atomic
from hopfstraight.utils.sampling import normalize, random_unit_vectors
from hopfstraight.utils.scheduling import map_ordered


log = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_NO_HINGE = 4

SEED_LIMIT = 2 ** 64


@dataclass
class RunConfig:
    """
    Everything a command needs, resolved from the command line.

    Attributes:
        `command` -- subcommand name
        `spec_path` -- fibration spec file
        `samples` -- sample count (points for validate and invariants, hinge fibers for straighten)
        `seed` -- rng seed, 0 <= seed < 2**64
        `tolerances` -- overrides applied on top of the environment defaults
        `out` -- output file, stdout when None
        `format` -- "json" or "csv"
        `workers` -- worker threads for sample loops
    """

    command: str
    spec_path: Path
    samples: int = 50
    seed: int = 0
    tolerances: dict[str, float] = field(default_factory=dict)
    out: t.Optional[Path] = None
    format: str = "json"
    workers: t.Optional[int] = None
    debug: bool = False
    target: t.Optional[Path] = None
    budget: t.Optional[int] = None
    circles: int = 20
    points: int = 16
    projection: str = "stereographic"
    pole: t.Optional[tuple[float, ...]] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        return cls(
            command=args.command,
            spec_path=args.spec,
            samples=args.samples,
            seed=args.seed,
            tolerances=dict(args.tol),
            out=args.out,
            format=args.format,
            workers=args.threads,
            debug=args.debug,
            target=getattr(args, "target", None),
            budget=getattr(args, "budget", None),
            circles=getattr(args, "circles", 20),
            points=getattr(args, "points", 16),
            projection=getattr(args, "projection", "stereographic"),
            pole=getattr(args, "pole", None),
        )


class Outcome(t.NamedTuple):
    text: str
    exit_code: int


def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed < SEED_LIMIT:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2**64), got {value}")
    return seed


def _positive(value: str) -> int:
    number = int(value)
    if number <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def _tolerance(value: str) -> tuple[str, float]:
    key, sep, number = value.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VAL, got {value!r}")
    key = key.strip().lower()
    if key not in constants.Tolerances._fields:
        raise argparse.ArgumentTypeError(f"unknown tolerance {key!r}")
    try:
        parsed = float(number)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {key} is not a number: {number!r}") from None
    if not parsed > 0:
        raise argparse.ArgumentTypeError(f"tolerance {key} must be positive, got {number}")
    return key, parsed


def _vector(value: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hopfstraight",
        description="Recognize and straighten great circle fibrations of spheres.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--debug", action="store_true", help="Log at debug level.")
    parser.add_argument("--threads", type=_positive, default=None, help="Worker threads for sample loops.")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", type=Path, required=True, help="Fibration spec file (JSON).")
    common.add_argument("--samples", type=_positive, default=50, help="Number of samples.")
    common.add_argument("--seed", type=_seed, default=0, help="Seed of the sampled points.")
    common.add_argument(
        "--tol",
        type=_tolerance,
        action="append",
        default=[],
        metavar="KEY=VAL",
        help=f"Override a tolerance ({', '.join(constants.Tolerances._fields)}).",
    )
    common.add_argument("--out", type=Path, default=None, help="Output file; stdout when omitted.")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="Output format.")

    commands = parser.add_subparsers(dest="command", required=True, metavar="command")
    commands.add_parser("validate", parents=[common], help="Check the fibration at sample points.")
    commands.add_parser("invariants", parents=[common], help="Tabulate frame invariants at sample points.")

    straighten = commands.add_parser("straighten", parents=[common], help="Straighten to a Hopf fibration.")
    straighten.add_argument("--target", type=Path, default=None, help="Hopf spec file whose J is the target.")
    straighten.add_argument("--budget", type=int, default=None, help="Hinge search draws.")
    straighten.add_argument("--circles", type=_positive, default=20, help="Circles to certify.")
    straighten.add_argument("--points", type=_positive, default=16, help="Points per certified circle.")

    pointcloud = commands.add_parser("pointcloud", parents=[common], help="Export sampled fiber circles.")
    pointcloud.add_argument("--circles", type=_positive, default=3, help="Number of fibers.")
    pointcloud.add_argument("--points", type=_positive, default=64, help="Points per fiber.")
    pointcloud.add_argument("--projection", choices=("stereographic", "none"), default="stereographic")
    pointcloud.add_argument("--pole", type=_vector, default=None, help="Projection pole, comma separated.")
    return parser


def _render(config: RunConfig, document: t.Any, header: t.Sequence[str], rows: t.Iterable[t.Sequence]) -> str:
    if config.format == "csv":
        return rows_to_csv(header, rows)
    return canonical_json(document)


def cmd_validate(config: RunConfig, spec: FibrationSpec) -> Outcome:
    F = build_fibration(spec, str(config.spec_path))
    report = validate_fibration(F, config.samples, config.seed, workers=config.workers)
    rows = [(key, value, report.thresholds.get(key)) for key, value in sorted(report.residuals.items())]
    rows.append(("passed", str(report.passed).lower(), None))
    text = _render(config, {"spec": spec, "validation": report}, ("residual", "value", "threshold"), rows)
    return Outcome(text, EXIT_OK if report.passed else EXIT_NUMERIC)


def _invariant_record(index: int, item: FrameInvariants) -> dict[str, t.Any]:
    return {
        "index": index,
        "point": item.point,
        "margin": item.margin,
        "s_norm": item.s_norm,
        "s0qbar_norm": item.s0qbar_norm,
        "level": item.level.name if item.level is not None else None,
        "error": item.error,
    }


def cmd_invariants(config: RunConfig, spec: FibrationSpec) -> Outcome:
    F = build_fibration(spec, str(config.spec_path))
    rng = np.random.default_rng(config.seed)
    points = random_unit_vectors(rng, config.samples, F.dimension)
    found = map_ordered(lambda v: invariants(F, v), points, workers=config.workers)
    records = [_invariant_record(index, item) for index, item in enumerate(found)]

    columns = ("margin", "s_norm", "s0qbar_norm", "level", "error")
    header = ["index", *(f"v{k}" for k in range(F.dimension)), *columns]
    rows = [(record["index"], *record["point"], *(record[key] for key in columns)) for record in records]
    document = {"spec": spec, "seed": config.seed, "invariants": records}
    failed = any(item.error for item in found)
    return Outcome(_render(config, document, header, rows), EXIT_NUMERIC if failed else EXIT_OK)


def _target(config: RunConfig, spec: FibrationSpec) -> LinearJ:
    if config.target is None:
        return LinearJ.standard(spec.n)
    target = load_spec(config.target)
    if target.kind != "hopf" or target.n != spec.n:
        raise SpecFileError(str(config.target), f"target must be a hopf spec with n={spec.n}")
    return target.structure()


def cmd_straighten(config: RunConfig, spec: FibrationSpec) -> Outcome:
    F = build_fibration(spec, str(config.spec_path))
    J2 = _target(config, spec)
    hinge = find_hinge(F, J2, config.seed, config.samples, budget=config.budget)
    phi = build_map(F, hinge, J2)
    report = verify_map(phi, F, J2, config.circles, config.points, config.seed, workers=config.workers)

    rows = [(key, value) for key, value in report.to_dict().items() if key != "failures"]
    document = {
        "spec": spec,
        "hinge": hinge,
        "certification": report,
        "map_samples": [{"x": x, "y": y} for x, y in report.map_samples],
    }
    return Outcome(_render(config, document, ("field", "value"), rows), EXIT_OK if report.verdict else EXIT_NUMERIC)


def _stereographic(points: np.ndarray, pole: np.ndarray) -> np.ndarray:
    """Project from `pole` onto its orthogonal complement; points must stay away from the pole."""
    basis = scipy.linalg.null_space(pole[None, :])
    denominators = 1 - points @ pole
    closest = float(np.min(np.abs(denominators)))
    if closest <= constants.tolerances().analytic:
        raise PoleError(closest)
    return (points @ basis) / denominators[:, None]


def cmd_pointcloud(config: RunConfig, spec: FibrationSpec) -> Outcome:
    F = build_fibration(spec, str(config.spec_path))
    if config.projection == "stereographic" and F.n != 1:
        raise SpecFileError(str(config.spec_path), "stereographic projection needs a fibration of S^3 (n = 1)")

    rng = np.random.default_rng(config.seed)
    starts = random_unit_vectors(rng, config.circles, F.dimension)
    circles = map_ordered(lambda v: fiber_circle(F, v, config.points), starts, workers=config.workers)

    if config.projection == "stereographic":
        pole = np.eye(F.dimension)[0] if config.pole is None else np.array(config.pole, dtype=float)
        if pole.shape != (F.dimension,) or not np.any(pole):
            raise SpecFileError(str(config.spec_path), f"pole must be a nonzero vector with {F.dimension} entries")
        circles = [_stereographic(circle, normalize(pole)) for circle in circles]

    width = circles[0].shape[1] if circles else 0
    header = ["circle", *(f"x{k}" for k in range(width))]
    rows = [(index, *point) for index, circle in enumerate(circles) for point in circle]
    document = {
        "spec": spec,
        "projection": config.projection,
        "circles": [{"circle": index, "points": circle} for index, circle in enumerate(circles)],
    }
    return Outcome(_render(config, document, header, rows), EXIT_OK)


HANDLERS: dict[str, t.Callable[[RunConfig, FibrationSpec], Outcome]] = {
    "validate": cmd_validate,
    "invariants": cmd_invariants,
    "straighten": cmd_straighten,
    "pointcloud": cmd_pointcloud,
}


def run(config: RunConfig) -> int:
    """Run one command; the report is written only when the command completes."""
    constants.set_tolerances(**config.tolerances)
    try:
        spec = load_spec(config.spec_path)
        outcome = HANDLERS[config.command](config, spec)
    except SpecFileError as e:
        log.error(f"Unusable input: {e}")
        return EXIT_USAGE
    except HingeSearchError as e:
        log.error(str(e))
        return EXIT_NO_HINGE
    except ToolkitError as e:
        log.error(f"{config.command} failed: {type(e).__name__}: {e}")
        return EXIT_NUMERIC
    finally:
        constants.reset_tolerances()

    if config.out is None:
        sys.stdout.write(outcome.text)
    else:
        write_atomic(config.out, outcome.text)
    log.info(f"{config.command} finished with exit code {outcome.exit_code}")
    return outcome.exit_code


def main(argv: t.Optional[t.Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup(debug=args.debug or None)
    return run(RunConfig.from_args(args))
