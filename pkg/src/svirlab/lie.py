"""Finite-dimensional simple Lie algebra data in the basic normalization.

Structure constants are stored exactly as rational multiples of sqrt(2)
so the normalization identity sum_{bc} f_abc f_a'bc = 2 h_vee delta can
be checked without tolerances.  Only su(2) ships with a builder, but the
container is generic in the dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exactnum import Ex


@dataclass(frozen=True)
class SimpleLieAlgebra:
    """Structure data (d, h_vee, f_abc) in an orthonormal basis of the basic form."""

    name: str
    d: int
    h_vee: int
    # f_sqrt2[a][b][c] is the rational q with f_abc = q * sqrt(2); indices 0-based.
    f_sqrt2: tuple = field(repr=False)

    def f(self, a: int, b: int, c: int) -> float:
        return float(self.f_sqrt2[a][b][c]) * 2 ** 0.5

    def f_exact(self, a: int, b: int, c: int) -> Ex:
        return Ex.sqrt2(self.f_sqrt2[a][b][c])

    def f_array(self) -> np.ndarray:
        arr = np.zeros((self.d, self.d, self.d))
        for a in range(self.d):
            for b in range(self.d):
                for c in range(self.d):
                    arr[a, b, c] = self.f(a, b, c)
        return arr

    def check_invariants(self):
        """Antisymmetry, Jacobi and the basic-form normalization, all exact."""
        d = self.d
        f = self.f_sqrt2
        for a in range(d):
            for b in range(d):
                for c in range(d):
                    assert f[a][b][c] == -f[b][a][c] == -f[a][c][b]
        for a in range(d):
            for b in range(d):
                for c in range(d):
                    for g in range(d):
                        s = sum(f[a][b][e] * f[e][c][g]
                                + f[b][c][e] * f[e][a][g]
                                + f[c][a][e] * f[e][b][g] for e in range(d))
                        assert s == 0, "Jacobi identity fails"
        for a in range(d):
            for a2 in range(d):
                # (q sqrt2)(q' sqrt2) = 2 q q'
                s = sum(2 * f[a][b][c] * f[a2][b][c]
                        for b in range(d) for c in range(d))
                want = 2 * self.h_vee if a == a2 else 0
                assert s == want, "basic-form normalization fails"


@dataclass(frozen=True, order=True)
class WeightLabel:
    """su(2) Dynkin label 2j at a given level."""

    twice_spin: int
    level: int

    def __post_init__(self):
        if self.twice_spin < 0 or self.level < 0:
            raise ValueError("labels must be nonnegative")
        if self.twice_spin > self.level:
            raise ValueError(
                f"weight 2j={self.twice_spin} not integrable at level {self.level}")


def build_su2() -> SimpleLieAlgebra:
    """su(2) with f_abc = sqrt(2) * epsilon_abc (basic form <theta,theta> = 2)."""
    q = Fraction(1)
    f = [[[Fraction(0)] * 3 for _ in range(3)] for _ in range(3)]
    for (a, b, c), s in (((0, 1, 2), q), ((1, 2, 0), q), ((2, 0, 1), q),
                         ((1, 0, 2), -q), ((2, 1, 0), -q), ((0, 2, 1), -q)):
        f[a][b][c] = s
    alg = SimpleLieAlgebra("su2", 3, 2,
                           tuple(tuple(tuple(row) for row in plane) for plane in f))
    alg.check_invariants()
    return alg


def admissible_weights(level: int) -> set[WeightLabel]:
    """Integrable su(2) weights at the given level: 2j in {0, ..., level}."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    return {WeightLabel(tj, level) for tj in range(level + 1)}


def conformal_dimension(w: WeightLabel, g: SimpleLieAlgebra) -> Fraction:
    """Sugawara lowest energy j(j+1)/(level + h_vee) of the weight-w module."""
    if w not in admissible_weights(w.level):
        raise ValueError(f"{w} is not admissible")
    return Fraction(w.twice_spin * (w.twice_spin + 2), 4 * (w.level + g.h_vee))
