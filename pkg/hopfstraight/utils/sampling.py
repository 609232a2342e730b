import numpy as np


def normalize(v: np.ndarray) -> np.ndarray:
    """Return `v` scaled to unit length; the zero vector is returned unchanged."""
    norm = np.linalg.norm(v)
    if norm == 0:
        return v
    return v / norm


def random_unit_vectors(rng: np.random.Generator, count: int, dimension: int) -> np.ndarray:
    """Draw `count` points uniformly from the unit sphere of R^dimension, one per row."""
    points = rng.standard_normal((count, dimension))
    return points / np.linalg.norm(points, axis=1, keepdims=True)
