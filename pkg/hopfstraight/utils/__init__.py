from .sampling import normalize, random_unit_vectors


__all__ = [
    "normalize",
    "random_unit_vectors",
]
