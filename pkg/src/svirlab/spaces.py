"""Shared interface for energy-truncated state spaces.

Every concrete space (Fock, PBW quotient, tensor product) exposes an
ordered basis with exact rational energies.  Operators are plain scipy
sparse matrices in that basis; the helpers here implement the
safe-subspace discipline: a relation between cutoff operators is only
asserted after projecting onto states that cannot be pushed above the
cutoff.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import scipy.sparse as sp


class TruncatedSpace:
    """Ordered basis with energies <= cutoff; subclasses fill the tables."""

    def __init__(self, cutoff, energies_exact):
        self.cutoff = Fraction(cutoff)
        self.energies_exact = list(energies_exact)
        self.energies = np.array([float(e) for e in self.energies_exact])
        self.dim = len(self.energies_exact)

    def level_indices(self, energy) -> list[int]:
        e = Fraction(energy)
        return [i for i, x in enumerate(self.energies_exact) if x == e]

    def lowest_energy(self) -> Fraction:
        return min(self.energies_exact)

    def projector_upto(self, energy) -> sp.csr_matrix:
        """Diagonal 0/1 projector onto states of energy <= energy."""
        e = float(Fraction(energy))
        diag = (self.energies <= e + 1e-12).astype(complex)
        return sp.diags(diag).tocsr()

    def identity(self) -> sp.csr_matrix:
        return sp.identity(self.dim, dtype=complex, format="csr")


def frob_norm(mat) -> float:
    if sp.issparse(mat):
        return float(np.sqrt(abs(mat.multiply(mat.conj())).sum()))
    return float(np.linalg.norm(mat, "fro"))


def op_norm(mat) -> float:
    """Spectral norm; densifies, intended for the moderate sizes used here."""
    dense = mat.toarray() if sp.issparse(mat) else np.asarray(mat)
    if dense.size == 0:
        return 0.0
    return float(np.linalg.norm(dense, 2))


def comm(a, b):
    return a @ b - b @ a


def acomm(a, b):
    return a @ b + b @ a


def dag(a):
    return a.conj().T


def safe_residual(expr, space: TruncatedSpace, safe_energy) -> float:
    """Frobenius norm of expr restricted to columns of energy <= safe_energy."""
    if Fraction(safe_energy) < space.lowest_energy():
        raise ValueError("empty safe subspace: cutoff too small for this relation")
    return frob_norm(expr @ space.projector_upto(safe_energy))
