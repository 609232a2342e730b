import threading
import typing as t

import numpy as np

from hopfstraight.log import get_logger


log = get_logger(__name__)

V = t.TypeVar("V")


class FiberCache(t.Generic[V]):
    """
    Thread-safe cache of values attached to oriented planes.

    Keys are compared by the distance between their bivectors, so every point of one fiber
    finds the entry stored for that fiber. At most `maxsize` entries are kept; once full,
    the oldest entry is overwritten.
    """

    def __init__(self, tolerance: float = 1e-9, maxsize: int = 4096):
        if maxsize < 1:
            raise ValueError(f"maxsize must be positive, got {maxsize}")
        self.tolerance = tolerance
        self.maxsize = maxsize
        self._lock = threading.Lock()
        self._keys: t.Optional[np.ndarray] = None
        self._values: list[V] = []
        self._oldest = 0
        self.hits = 0
        self.misses = 0
        self.evictions = 0

    def __len__(self) -> int:
        return len(self._values)

    def _find(self, key: np.ndarray) -> t.Optional[int]:
        if not self._values:
            return None
        distances = np.linalg.norm(self._keys[: len(self._values)] - key, axis=1)
        index = int(np.argmin(distances))
        return index if distances[index] <= self.tolerance else None

    def get(self, basis: np.ndarray) -> t.Optional[V]:
        """Return the value stored for the plane spanned by the columns of `basis`, if any."""
        key = _bivector(basis)
        with self._lock:
            index = self._find(key)
            if index is None:
                self.misses += 1
                return None
            self.hits += 1
            return self._values[index]

    def put(self, basis: np.ndarray, value: V) -> V:
        """Store `value` for a plane, keeping the entry of a concurrent writer if one landed first."""
        key = _bivector(basis)
        with self._lock:
            index = self._find(key)
            if index is not None:
                log.trace("Plane was cached concurrently, keeping the first entry.")
                return self._values[index]
            if self._keys is None:
                self._keys = np.empty((self.maxsize, key.size))
            if len(self._values) < self.maxsize:
                self._keys[len(self._values)] = key
                self._values.append(value)
            else:
                self._keys[self._oldest] = key
                self._values[self._oldest] = value
                self._oldest = (self._oldest + 1) % self.maxsize
                self.evictions += 1
        return value

    def get_or_compute(self, basis: np.ndarray, compute: t.Callable[[], V]) -> V:
        cached = self.get(basis)
        if cached is not None:
            return cached
        return self.put(basis, compute())

    def clear(self) -> None:
        with self._lock:
            self._keys = None
            self._values.clear()
            self._oldest = 0


def _bivector(basis: np.ndarray) -> np.ndarray:
    u, w = basis[:, 0], basis[:, 1]
    return (np.outer(u, w) - np.outer(w, u)).ravel()
