import json
from pathlib import Path

import numpy as np
import scipy.linalg


def unimodular(rng: np.random.Generator, dimension: int, scale: float = 0.2) -> np.ndarray:
    """A random element of SL near the identity."""
    A = rng.standard_normal((dimension, dimension))
    A -= np.trace(A) / dimension * np.eye(dimension)
    return scipy.linalg.expm(scale * A)


def upper_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    """A complex matrix with numerical range, hence spectrum, in the half-plane Im >= 1."""
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (A + A.conj().T) + 1j * (B @ B.conj().T + np.eye(n))


def disk_matrix(rng: np.random.Generator, n: int, radius: float = 0.6) -> np.ndarray:
    """A complex matrix with spectral radius `radius`."""
    s = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return radius * s / np.max(np.abs(np.linalg.eigvals(s)))


def write_json(path: Path, data: dict) -> Path:
    path.write_text(json.dumps(data), encoding="utf-8")
    return path
