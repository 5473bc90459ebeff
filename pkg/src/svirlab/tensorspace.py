"""Energy-truncated tensor product of two truncated spaces.

The retained basis is the set of factor pairs with total energy within
the cutoff.  Operator lifts go through the full Kronecker product
followed by selection, which keeps every retained matrix element exact
as long as the factor matrices are exact on their own blocks.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .spaces import TruncatedSpace


class TensorModule(TruncatedSpace):
    def __init__(self, space1: TruncatedSpace, space2: TruncatedSpace, cutoff=None):
        if cutoff is None:
            cutoff = min(space1.cutoff, space2.cutoff)
        cutoff = Fraction(cutoff)
        self.space1 = space1
        self.space2 = space2
        pairs = []
        for i1, e1 in enumerate(space1.energies_exact):
            if e1 > cutoff:
                continue
            for i2, e2 in enumerate(space2.energies_exact):
                if e1 + e2 <= cutoff:
                    pairs.append((e1 + e2, i1, i2))
        pairs.sort(key=lambda t: (t[0], t[1], t[2]))
        self.pairs = [(i1, i2) for _, i1, i2 in pairs]
        self.pair_index = {p: k for k, p in enumerate(self.pairs)}
        super().__init__(cutoff, [e for e, _, _ in pairs])

        full = space1.dim * space2.dim
        sel = sp.lil_matrix((self.dim, full), dtype=complex)
        for k, (i1, i2) in enumerate(self.pairs):
            sel[k, i1 * space2.dim + i2] = 1.0
        self._sel = sel.tocsr()

        p1 = getattr(space1, "parity", None)
        p2 = getattr(space2, "parity", None)
        if p1 is not None and p2 is not None:
            self.parity = np.array([p1[i1] * p2[i2] for i1, i2 in self.pairs])
        else:
            self.parity = None

    def lift(self, m1, m2) -> sp.csr_matrix:
        """m1 (x) m2 restricted to the retained pair basis."""
        return (self._sel @ sp.kron(m1, m2, format="csr") @ self._sel.T).tocsr()

    def lift1(self, m1) -> sp.csr_matrix:
        return self.lift(m1, sp.identity(self.space2.dim, dtype=complex, format="csr"))

    def lift2(self, m2) -> sp.csr_matrix:
        return self.lift(sp.identity(self.space1.dim, dtype=complex, format="csr"), m2)

    def vacuum_index(self) -> int:
        return 0
