"""
Dense matrix arithmetic that the rest of the package builds on.

Real vectors of R^{2m} are identified with C^m through the coordinates (x0, y0, x1, y1, ...), so the
block diagonal J0 = diag([[0, -1], [1, 0]], ...) is multiplication by sqrt(-1).
"""
from __future__ import annotations

import typing as t
from dataclasses import dataclass

import numpy as np

from hopfstraight import constants
from hopfstraight.errors import (
    BlockFormError,
    ConvergenceError,
    DiskRadiusError,
    NonSquareError,
    SingularMatrixError,
)
from hopfstraight.log import get_logger


__all__ = (
    "Spectrum",
    "spectrum",
    "solve_linear",
    "complexify_block",
    "realify_block",
    "split_block",
    "realify_antilinear",
    "complexify_vector",
    "realify_vector",
    "solve_disk_sylvester",
    "standard_j",
    "spectral_radius",
    "sigma_min",
)

log = get_logger(__name__)

# residual bound for eigenpairs, relative to |M| |v|
EIGEN_RESIDUAL = 1e-8
# block-form check for complexify_block, relative to max(1, |R|)
BLOCK_FORM_TOLERANCE = 1e-8
DISK_MARGIN = 1e-10

_J0_BLOCK = np.array([[0.0, -1.0], [1.0, 0.0]])


def as_square(M: t.Any) -> np.ndarray:
    """Return `M` as a 2D array, raising NonSquareError unless it is square."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NonSquareError(M.shape)
    return M


def standard_j(m: int) -> np.ndarray:
    """Block diagonal J0 on R^{2m}."""
    return np.kron(np.eye(m), _J0_BLOCK)


def sigma_min(A: np.ndarray) -> float:
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def spectral_radius(M: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(as_square(M))))) if np.size(M) else 0.0


@dataclass(frozen=True)
class Spectrum:
    """
    Eigen-decomposition of a square matrix.

    Eigenvalues are sorted by decreasing imaginary part, then increasing real part. Each eigenvector
    (a column of `eigenvectors`) is unit length with its largest-modulus coordinate real and positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    condition: float

    @property
    def imag_margin(self) -> float:
        return float(np.min(np.abs(self.eigenvalues.imag)))

    def upper(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenpairs with positive imaginary part."""
        mask = self.eigenvalues.imag > 0
        return self.eigenvalues[mask], self.eigenvectors[:, mask]


def _canonical_phase(vectors: np.ndarray) -> np.ndarray:
    vectors = vectors / np.linalg.norm(vectors, axis=0, keepdims=True)
    pivots = np.argmax(np.abs(vectors), axis=0)
    phases = vectors[pivots, np.arange(vectors.shape[1])]
    return vectors * (np.abs(phases) / phases)


def spectrum(M: t.Any) -> Spectrum:
    """Eigenvalues and eigenvectors of `M` in a deterministic order and phase."""
    M = as_square(M)
    try:
        values, vectors = np.linalg.eig(M)
    except np.linalg.LinAlgError:
        raise ConvergenceError(float("nan"), 0) from None

    order = np.lexsort((values.real, -values.imag))
    values = values[order]
    vectors = _canonical_phase(vectors[:, order].astype(complex))

    scale = max(np.linalg.norm(M, 2), np.finfo(float).tiny)
    residual = np.linalg.norm(M @ vectors - vectors * values, axis=0).max(initial=0.0)
    if residual > EIGEN_RESIDUAL * scale:
        log.debug(f"Eigenpair residual {residual:.3e} exceeds bound for a {M.shape[0]}x{M.shape[0]} matrix")
        raise ConvergenceError(residual / scale, 1)

    return Spectrum(values, vectors, float(np.linalg.cond(vectors)))


def solve_linear(A: t.Any, B: t.Any) -> np.ndarray:
    """Solve A X = B after checking that A is not singular to working tolerance."""
    A = as_square(A)
    singular_values = np.linalg.svd(A, compute_uv=False)
    threshold = constants.tolerances().singular * singular_values[0]
    if singular_values[-1] <= threshold:
        raise SingularMatrixError(singular_values[-1], threshold)
    return np.linalg.solve(A, B)


def _check_even(R: np.ndarray) -> None:
    if R.ndim != 2 or R.shape[0] % 2 or R.shape[1] % 2:
        raise BlockFormError(float("inf"))


def split_block(R: t.Any) -> tuple[np.ndarray, np.ndarray]:
    """
    Split a real 2p x 2q matrix into its complex-linear part L and antilinear part A.

    R = realify_block(L) + realify_antilinear(A); on vectors, R acts as z -> L z + sqrt(-1) A conj(z).
    """
    R = np.asarray(R, dtype=float)
    _check_even(R)
    r00, r01 = R[0::2, 0::2], R[0::2, 1::2]
    r10, r11 = R[1::2, 0::2], R[1::2, 1::2]
    linear = 0.5 * (r00 + r11) + 0.5j * (r10 - r01)
    antilinear = 0.5 * (r10 + r01) + 0.5j * (r11 - r00)
    return linear, antilinear


def complexify_block(R: t.Any, tolerance: float = BLOCK_FORM_TOLERANCE) -> np.ndarray:
    """Identify a J0-linear real matrix with blocks [[a, -b], [b, a]] with the complex matrix a + ib."""
    linear, antilinear = split_block(R)
    residual = float(np.linalg.norm(antilinear))
    if residual > tolerance * max(1.0, float(np.linalg.norm(R))):
        raise BlockFormError(residual)
    return linear


def realify_block(C: t.Any) -> np.ndarray:
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    p, q = C.shape
    R = np.zeros((2 * p, 2 * q))
    R[0::2, 0::2] = C.real
    R[1::2, 1::2] = C.real
    R[1::2, 0::2] = C.imag
    R[0::2, 1::2] = -C.imag
    return R


def realify_antilinear(A: t.Any) -> np.ndarray:
    """Real matrix of z -> sqrt(-1) A conj(z), blocks [[-Im a, Re a], [Re a, Im a]]."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    p, q = A.shape
    R = np.zeros((2 * p, 2 * q))
    R[0::2, 0::2] = -A.imag
    R[0::2, 1::2] = A.real
    R[1::2, 0::2] = A.real
    R[1::2, 1::2] = A.imag
    return R


def complexify_vector(x: t.Any) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[0::2] + 1j * x[1::2]


def realify_vector(z: t.Any) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    x = np.empty(2 * z.shape[0])
    x[0::2] = z.real
    x[1::2] = z.imag
    return x


def solve_disk_sylvester(s: t.Any, B: t.Any, margin: float = DISK_MARGIN) -> np.ndarray:
    """
    Solve M - s M conj(s) = B for M.

    The operator is inverted as one dense system on the row-major vectorization of M,
    which requires the spectrum of `s` to stay inside the unit disk.
    """
    s = as_square(np.asarray(s, dtype=complex))
    B = np.asarray(B, dtype=complex)
    radius = spectral_radius(s)
    if radius >= 1 - margin:
        raise DiskRadiusError(radius)
    n = s.shape[0]
    # row-major vec(S M T) = kron(S, T^T) vec(M)
    operator = np.eye(n * n) - np.kron(s, np.conj(s).T)
    return solve_linear(operator, B.reshape(-1)).reshape(n, n)
