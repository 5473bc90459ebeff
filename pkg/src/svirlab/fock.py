"""Truncated Fock spaces for the d-fermion self-dual CAR algebra.

States are occupation patterns of negative modes over a zero-mode
Clifford module (Ramond) or the bare vacuum (Neveu-Schwarz).  Mode
operators are assembled by symbolic action on basis states, so every
matrix element between retained states is exact; relations like the CAR
hold on the safe subspace to machine precision by construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .exactnum import Ex
from .qseries import QSeries
from .spaces import TruncatedSpace

HALF = Fraction(1, 2)

# 2x2 exact Hermitian involutions for the iterated Clifford construction.
_SX = ((Ex(0), Ex(1)), (Ex(1), Ex(0)))
_SY = ((Ex(0), Ex.i(-1)), (Ex.i(1), Ex(0)))
_SZ = ((Ex(1), Ex(0)), (Ex(0), Ex(-1)))
_ID = ((Ex(1), Ex(0)), (Ex(0), Ex(1)))


@dataclass(frozen=True)
class FermionSector:
    """NS or R mode grid; the variant picks a Clifford irreducible for odd d."""

    kind: str  # "NS" | "R"
    zero_mode_variant: str = "unique"  # "unique" | "plus" | "minus"

    def __post_init__(self):
        if self.kind not in ("NS", "R"):
            raise ValueError("sector kind must be 'NS' or 'R'")
        if self.zero_mode_variant not in ("unique", "plus", "minus"):
            raise ValueError("bad zero_mode_variant")

    def mode_step(self) -> Fraction:
        return Fraction(1)

    def lowest_positive_mode(self) -> Fraction:
        return HALF if self.kind == "NS" else Fraction(1)

    def on_grid(self, r) -> bool:
        r = Fraction(r)
        if self.kind == "NS":
            return (r - HALF).denominator == 1
        return r.denominator == 1


NS = FermionSector("NS")


def ramond_sector(d: int, variant: str = "plus") -> FermionSector:
    """Ramond sector; for even d the zero-mode module is unique."""
    if d % 2 == 0:
        return FermionSector("R", "unique")
    return FermionSector("R", variant)


def _kron(a, b):
    ra, rb = len(a), len(b)
    ca, cb = len(a[0]), len(b[0])
    return tuple(
        tuple(a[i // rb][j // cb] * b[i % rb][j % cb] for j in range(ca * cb))
        for i in range(ra * rb)
    )


def _clifford_gammas(d: int, variant: str):
    """Exact gamma matrices with {g_a, g_b} = 2 delta_ab on dim 2^{floor(d/2)}."""
    m = d // 2
    gammas = []
    for i in range(1, m + 1):
        for s in (_SX, _SY):
            mat = ((Ex(1),),)
            for k in range(1, m + 1):
                if k < i:
                    factor = _SZ
                elif k == i:
                    factor = s
                else:
                    factor = _ID
                mat = _kron(mat, factor)
            gammas.append(mat)
    if d % 2 == 1:
        sign = 1 if variant == "plus" else -1
        mat = ((Ex(1),),)
        for _ in range(m):
            mat = _kron(mat, _SZ)
        gammas.append(tuple(tuple(sign * x for x in row) for row in mat))
    return gammas


def _chirality_diag(m: int):
    """Diagonal of sigma_z^{tensor m}: the zero-mode grading (even d = 2m)."""
    diag = [1]
    for _ in range(m):
        diag = [x for x in diag for x in (x, -x)]
    return diag


class TruncatedFockSpace(TruncatedSpace):
    """All occupation states of energy <= cutoff over the zero-mode module.

    A basis state is (zero_idx, modes) with modes a sorted tuple of
    occupied creation labels (a, r), r < 0, each at most once.  The basis
    is ordered lexicographically in (energy, zero_idx, modes); the inner
    product is the one that makes it orthonormal.
    """

    def __init__(self, d: int, sector: FermionSector, cutoff):
        if d < 1:
            raise ValueError("d >= 1 required")
        cutoff = Fraction(cutoff)
        if cutoff < 0:
            raise ValueError("cutoff >= 0 required")
        # floor mixed cutoffs to the sector grid
        step = sector.lowest_positive_mode()
        cutoff = step * (cutoff / step).__floor__() if cutoff % step else cutoff
        if sector.kind == "NS" and sector.zero_mode_variant != "unique":
            raise ValueError("NS sector has a unique vacuum module")
        if sector.kind == "R" and d % 2 == 0 and sector.zero_mode_variant != "unique":
            raise ValueError("even d has a unique zero-mode module")
        if sector.kind == "R" and d % 2 == 1 and sector.zero_mode_variant == "unique":
            raise ValueError("odd d needs zero_mode_variant 'plus' or 'minus'")

        self.d = d
        self.sector = sector

        if sector.kind == "R":
            self._gammas = _clifford_gammas(d, sector.zero_mode_variant)
            self.zero_dim = len(self._gammas[0])
            # F^a_0 = gamma_a / sqrt(2), exact and as complex arrays
            half_sqrt2 = Ex.sqrt2(HALF)
            self.f0_exact = [
                tuple(tuple(x * half_sqrt2 for x in row) for row in g)
                for g in self._gammas
            ]
            self.f0_np = [
                np.array([[x.to_complex() for x in row] for row in g])
                for g in self.f0_exact
            ]
        else:
            self._gammas = None
            self.zero_dim = 1
            self.f0_exact = None
            self.f0_np = None

        # negative-mode labels ordered by (|r|, a)
        modes = []
        r = -sector.lowest_positive_mode()
        while -r <= cutoff:
            for a in range(d):
                modes.append((a, r))
            r -= 1
        modes.sort(key=lambda m: (-m[1], m[0]))
        self._mode_pool = modes

        states = []

        def extend(start, occ, energy):
            for z in range(self.zero_dim):
                states.append((energy, z, tuple(occ)))
            for i in range(start, len(modes)):
                a, r = modes[i]
                e2 = energy + (-r)
                if e2 > cutoff:
                    break
                occ.append((a, r))
                extend(i + 1, occ, e2)
                occ.pop()

        extend(0, [], Fraction(0))
        states.sort(key=lambda s: (s[0], s[1], tuple((-r, a) for a, r in s[2])))

        self.basis = [(z, occ) for _, z, occ in states]
        self.index = {st: i for i, st in enumerate(self.basis)}
        super().__init__(cutoff, [e for e, _, _ in states])

        if sector.kind == "NS":
            zero_parity = [1]
        elif d % 2 == 0:
            zero_parity = _chirality_diag(d // 2)
        else:
            zero_parity = None
        if zero_parity is None:
            self.parity = None
        else:
            self.parity = np.array([
                zero_parity[z] * (-1) ** len(occ) for z, occ in self.basis
            ])

    # -- symbolic mode action -------------------------------------------------

    def apply_mode(self, a: int, r, state, coeff, exact=False):
        """F^a_r applied to one basis state; list of (state, coeff) terms.

        Output states may lie above the cutoff; callers working with
        retained matrix blocks simply drop those rows.
        """
        r = Fraction(r)
        z, occ = state
        if r == 0:
            if self.sector.kind != "R":
                raise ValueError("zero modes exist only in the R sector")
            sign = -1 if len(occ) % 2 else 1
            out = []
            for z2 in range(self.zero_dim):
                # column z of F0 gives amplitudes <z2| F^a_0 |z>
                entry = self.f0_exact[a][z2][z] if exact else self.f0_np[a][z2][z]
                if (entry.is_zero() if exact else entry == 0):
                    continue
                out.append(((z2, occ), coeff * sign * entry))
            return out
        if r < 0:
            key = (-r, a)
            pos = 0
            for (b, s) in occ:
                if (b, s) == (a, r):
                    return []
                if (-s, b) < key:
                    pos += 1
            new = occ[:pos] + ((a, r),) + occ[pos:]
            sign = -1 if pos % 2 else 1
            return [((z, new), coeff * sign)]
        # r > 0: annihilate the matching occupied mode, if present
        target = (a, -r)
        for pos, m in enumerate(occ):
            if m == target:
                sign = -1 if pos % 2 else 1
                new = occ[:pos] + occ[pos + 1:]
                return [((z, new), coeff * sign)]
        return []

    def apply_word(self, letters, vec, exact=False):
        """Apply a product of mode letters (leftmost acts last) to a vector.

        vec and the result are dicts state -> coefficient; intermediate
        states are kept exactly even above the cutoff.
        """
        for a, r in reversed(letters):
            out = {}
            for state, coeff in vec.items():
                for st2, c2 in self.apply_mode(a, r, state, coeff, exact=exact):
                    if st2 in out:
                        out[st2] = out[st2] + c2
                    else:
                        out[st2] = c2
            vec = out
        return vec

    def matrix_from_terms(self, terms) -> sp.csr_matrix:
        """Assemble sum_k coeff_k * (product of letters_k) on the retained basis."""
        mat = sp.lil_matrix((self.dim, self.dim), dtype=complex)
        for j, state in enumerate(self.basis):
            acc = {}
            for coeff, letters in terms:
                for st2, c2 in self.apply_word(letters, {state: coeff}).items():
                    acc[st2] = acc.get(st2, 0.0) + c2
            for st2, c2 in acc.items():
                i = self.index.get(st2)
                if i is not None and c2 != 0:
                    mat[i, j] = c2
        return mat.tocsr()

    def vector(self, state) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index[state]] = 1.0
        return v

    def vacuum_state(self):
        return self.basis[0]

    def grading_matrix(self):
        if self.parity is None:
            return None
        return sp.diags(self.parity.astype(complex)).tocsr()

    def export_basis_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "energy", "parity", "occupation"])
            for i, (z, occ) in enumerate(self.basis):
                par = self.parity[i] if self.parity is not None else ""
                occ_str = " ".join(f"F[{a + 1},{r}]" for a, r in occ) or "-"
                w.writerow([i, str(self.energies_exact[i]),
                            par, f"zero={z}|{occ_str}"])


def build_fock(d: int, sector: FermionSector, cutoff) -> TruncatedFockSpace:
    return TruncatedFockSpace(d, sector, cutoff)


def mode_matrix(space: TruncatedFockSpace, a: int, r) -> sp.csr_matrix:
    """Matrix of F^a_r (a is 1-based here, following the algebra labels)."""
    r = Fraction(r)
    if not space.sector.on_grid(r):
        raise ValueError(f"mode {r} is off the {space.sector.kind} grid")
    if abs(r) > space.cutoff:
        raise ValueError("mode index beyond cutoff")
    return space.matrix_from_terms([(1.0, [(a - 1, r)])])


def smear_fermion(space: TruncatedFockSpace, coeffs: dict) -> sp.csr_matrix:
    """F(f) = sum f_{r,a} F^a_r for a trig polynomial with modes within cutoff.

    coeffs maps (a, r) with 1-based flavor a to a complex amplitude.
    """
    terms = []
    for (a, r), c in coeffs.items():
        r = Fraction(r)
        if not space.sector.on_grid(r):
            raise ValueError(f"mode {r} off-grid")
        if abs(r) > space.cutoff:
            raise ValueError("smearing mode beyond cutoff")
        terms.append((complex(c), [(a - 1, r)]))
    return space.matrix_from_terms(terms)


def smear_l2_norm(coeffs: dict) -> float:
    return float(np.sqrt(sum(abs(complex(c)) ** 2 for c in coeffs.values())))


def conjugate_trig(coeffs: dict) -> dict:
    """The modes of f-bar: conj(f_{-r,a})."""
    return {(a, -Fraction(r)): complex(c).conjugate() for (a, r), c in coeffs.items()}


def character(d: int, sector: FermionSector, max_exp) -> QSeries:
    """Graded dimension series of the truncated Fock tower (ungraded count)."""
    max_exp = Fraction(max_exp)
    zero_dim = 2 ** (d // 2) if sector.kind == "R" else 1
    out = QSeries({Fraction(0): Fraction(zero_dim)}, max_exp)
    r = sector.lowest_positive_mode()
    while r <= max_exp:
        out = out * QSeries.one_plus_q_pow(r, d, max_exp)
        r += 1
    return out
