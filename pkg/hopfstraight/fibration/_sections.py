"""
The finite family of normal sections used to move the Hopf base.

A section assigns to every complex line [z] of C^{n+1} the antilinear map lambda z -> conj(lambda) psi(z)
from the line to its orthogonal complement. psi is built from monomials that scale by exp(-i phi) when z
is multiplied by exp(i phi), so the moved plane depends on the line only.
"""
from __future__ import annotations

import math
import typing as t
from collections import Counter
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SectionTerm:
    """
    The monomial z_holomorphic * conj(z_j) * conj(z_k) ... placed in output coordinate `target`.

    Attributes:
        `target` -- output coordinate l of the basis vector e_l
        `conjugated` -- indices of the conjugated factors
        `holomorphic` -- indices of the plain factors
    """

    target: int
    conjugated: tuple[int, ...]
    holomorphic: tuple[int, ...] = ()

    @property
    def degree(self) -> int:
        return len(self.conjugated) + len(self.holomorphic)

    @property
    def sup_norm(self) -> float:
        """Maximum of the monomial's modulus on the unit sphere."""
        counts = Counter(self.conjugated + self.holomorphic).values()
        total = self.degree
        return math.prod((a / total) ** (a / 2) for a in counts)

    def evaluate(self, z: np.ndarray) -> complex:
        value = complex(1.0)
        for index in self.conjugated:
            value *= np.conj(z[index])
        for index in self.holomorphic:
            value *= z[index]
        return value / self.sup_norm

    def describe(self) -> str:
        factors = [f"z{m}" for m in self.holomorphic] + [f"conj(z{j})" for j in self.conjugated]
        return f"{'*'.join(factors)} e{self.target}"


def section_terms(n: int) -> list[SectionTerm]:
    """
    Enumerate the section family on C^{n+1}.

    Degree one terms conj(z_j) e_l come first at index l * (n + 1) + j, followed by the degree three terms
    z_m conj(z_j) conj(z_k) e_l with j <= k, ordered by (l, m, j, k).
    """
    size = n + 1
    terms = [SectionTerm(target, (j,)) for target in range(size) for j in range(size)]
    for target in range(size):
        for m in range(size):
            for j in range(size):
                for k in range(j, size):
                    terms.append(SectionTerm(target, (j, k), (m,)))
    return terms


class PerturbationSection:
    """The section psi(z) = projection onto z-perp of sum c_k m_k(z), for unit z."""

    def __init__(self, n: int, coeffs: t.Sequence[tuple[int, complex]]):
        family = section_terms(n)
        self.n = n
        self.coeffs: list[tuple[int, complex]] = []
        for index, value in coeffs:
            if not 0 <= index < len(family):
                raise IndexError(f"Section index {index} outside the family of {len(family)} terms for n={n}")
            self.coeffs.append((int(index), complex(value)))
        self._terms = [(family[index], value) for index, value in self.coeffs]

    def __bool__(self) -> bool:
        return any(value != 0 for _, value in self.coeffs)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        raw = np.zeros(self.n + 1, dtype=complex)
        for term, value in self._terms:
            raw[term.target] += value * term.evaluate(z)
        return raw - z * np.vdot(z, raw)
