"""
Versioned JSON description of a fibration.

{"schema_version": 1, "n": 1, "kind": "perturbed", "J": [...] | null, "coeffs": [[index, re, im], ...],
 "epsilon": 0.05, "rng_seed": 0}

Kinds: hopf (J), conjugated (g, inner), perturbed (J, coeffs, epsilon) and sum (summands).
Matrices are flattened row-major; a null J means the standard structure J0.
"""
from __future__ import annotations

import json
import math
import typing as t
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hopfstraight.errors import InvalidStructureError, SpecFileError
from hopfstraight.fibration._kinds import Fibration, conjugated, direct_sum, hopf, perturbed_hopf
from hopfstraight.fibration._structures import LinearJ
from hopfstraight.log import get_logger
from hopfstraight.utils.io import canonical_json, write_atomic


log = get_logger(__name__)

SCHEMA_VERSION = 1
KINDS = ("hopf", "conjugated", "perturbed", "sum")
MEMORY = "<memory>"


@dataclass(frozen=True)
class FibrationSpec:
    n: int
    kind: str
    J: t.Optional[tuple[float, ...]] = None
    g: t.Optional[tuple[float, ...]] = None
    inner: t.Optional[FibrationSpec] = None
    summands: tuple[FibrationSpec, ...] = ()
    coeffs: tuple[tuple[int, float, float], ...] = ()
    epsilon: float = 0.0
    rng_seed: int = 0
    schema_version: int = SCHEMA_VERSION
    extra: t.Mapping[str, t.Any] = field(default_factory=dict, compare=False)

    @property
    def dimension(self) -> int:
        return 2 * self.n + 2

    def structure(self) -> LinearJ:
        if self.J is None:
            return LinearJ.standard(self.n)
        return LinearJ(np.array(self.J, dtype=float).reshape(self.dimension, self.dimension))

    def to_dict(self) -> dict[str, t.Any]:
        data: dict[str, t.Any] = {"schema_version": self.schema_version, "n": self.n, "kind": self.kind}
        if self.kind in ("hopf", "perturbed"):
            data["J"] = None if self.J is None else list(self.J)
        if self.kind == "perturbed":
            data["coeffs"] = [list(triple) for triple in self.coeffs]
            data["epsilon"] = self.epsilon
        if self.kind == "conjugated":
            data["g"] = list(self.g)
            data["inner"] = self.inner.to_dict()
        if self.kind == "sum":
            data["summands"] = [summand.to_dict() for summand in self.summands]
        data["rng_seed"] = self.rng_seed
        data.update(self.extra)
        return data


def _float_list(value: t.Any, length: int, key: str, path: str) -> tuple[float, ...]:
    if not isinstance(value, list) or len(value) != length:
        raise SpecFileError(path, f"{key!r} must be a list of {length} numbers")
    numbers = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, (int, float)) or not math.isfinite(item):
            raise SpecFileError(path, f"{key!r} contains a non-numeric entry {item!r}")
        numbers.append(float(item))
    return tuple(numbers)


def _integer(data: t.Mapping[str, t.Any], key: str, path: str, default: t.Optional[int] = None) -> int:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecFileError(path, f"{key!r} must be an integer, got {value!r}")
    return value


def parse_spec(data: t.Any, path: str = MEMORY) -> FibrationSpec:
    """Validate a decoded JSON object and turn it into a FibrationSpec."""
    if not isinstance(data, dict):
        raise SpecFileError(path, "top level must be an object")
    version = _integer(data, "schema_version", path, SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SpecFileError(path, f"unsupported schema_version {version}")
    n = _integer(data, "n", path)
    if n < 0:
        raise SpecFileError(path, f"n must be non-negative, got {n}")
    kind = data.get("kind")
    if kind not in KINDS:
        raise SpecFileError(path, f"kind must be one of {', '.join(KINDS)}, got {kind!r}")
    seed = _integer(data, "rng_seed", path, 0)
    if not 0 <= seed < 2 ** 64:
        raise SpecFileError(path, "rng_seed must fit in 64 bits")

    size = (2 * n + 2) ** 2
    known = {"schema_version", "n", "kind", "J", "g", "inner", "summands", "coeffs", "epsilon", "rng_seed"}
    extra = {key: value for key, value in data.items() if key not in known}
    if extra:
        log.debug(f"{path}: keeping unknown keys {sorted(extra)}")

    J = None
    if kind in ("hopf", "perturbed") and data.get("J") is not None:
        J = _float_list(data["J"], size, "J", path)

    if kind == "conjugated":
        g = _float_list(data.get("g"), size, "g", path)
        inner = parse_spec(data.get("inner"), path)
        if inner.n != n:
            raise SpecFileError(path, f"inner fibration has n={inner.n}, expected {n}")
        return FibrationSpec(n, kind, g=g, inner=inner, rng_seed=seed, extra=extra)

    if kind == "sum":
        summands = data.get("summands")
        if not isinstance(summands, list) or len(summands) != 2:
            raise SpecFileError(path, "'summands' must be a list of two fibration specs")
        parsed = tuple(parse_spec(summand, path) for summand in summands)
        if parsed[0].n + parsed[1].n + 1 != n:
            raise SpecFileError(path, f"summand dimensions do not add up to n={n}")
        return FibrationSpec(n, kind, summands=parsed, rng_seed=seed, extra=extra)

    if kind == "perturbed":
        raw = data.get("coeffs", [])
        if not isinstance(raw, list):
            raise SpecFileError(path, "'coeffs' must be a list of [index, re, im] triples")
        coeffs = []
        for triple in raw:
            if not isinstance(triple, list) or len(triple) != 3:
                raise SpecFileError(path, f"malformed coefficient {triple!r}")
            index = triple[0]
            if isinstance(index, bool) or not isinstance(index, int) or index < 0:
                raise SpecFileError(path, f"coefficient index must be a non-negative integer, got {index!r}")
            re, im = _float_list(triple[1:], 2, "coeffs", path)
            coeffs.append((index, re, im))
        epsilon = data.get("epsilon", 0.0)
        if isinstance(epsilon, bool) or not isinstance(epsilon, (int, float)) or not math.isfinite(epsilon):
            raise SpecFileError(path, f"epsilon must be a finite number, got {epsilon!r}")
        return FibrationSpec(n, kind, J=J, coeffs=tuple(coeffs), epsilon=float(epsilon), rng_seed=seed, extra=extra)

    return FibrationSpec(n, kind, J=J, rng_seed=seed, extra=extra)


def load_spec(path: t.Union[str, Path]) -> FibrationSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SpecFileError(str(path), f"cannot read file ({e.strerror})") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecFileError(str(path), f"invalid JSON at line {e.lineno} column {e.colno}") from e
    spec = parse_spec(data, str(path))
    log.debug(f"Loaded {spec.kind} fibration spec with n={spec.n} from {path}")
    return spec


def dump_spec(spec: FibrationSpec, path: t.Union[str, Path, None] = None) -> str:
    """Canonical text of the spec; written atomically to `path` when given."""
    text = canonical_json(spec.to_dict())
    if path is not None:
        write_atomic(path, text)
    return text


def build_fibration(spec: FibrationSpec, path: str = MEMORY) -> Fibration:
    """Construct the fibration a spec describes."""
    try:
        if spec.kind == "hopf":
            return hopf(spec.structure())
        if spec.kind == "perturbed":
            coeffs = [(index, complex(re, im)) for index, re, im in spec.coeffs]
            return perturbed_hopf(spec.structure(), coeffs, spec.epsilon)
        if spec.kind == "conjugated":
            g = np.array(spec.g, dtype=float).reshape(spec.dimension, spec.dimension)
            return conjugated(g, build_fibration(spec.inner, path))
        first, second = (build_fibration(summand, path) for summand in spec.summands)
        return direct_sum(first, second)
    except (InvalidStructureError, IndexError, ValueError) as e:
        raise SpecFileError(path, str(e)) from e
