"""Affine su(2) current modules at finite energy truncation.

Two realizations are provided: fermionic bilinears on a truncated Fock
space (level h_vee) and a PBW/Shapovalov construction of the integrable
highest-weight modules at general level.  Both expose mode matrices
J^a_n; the affine relations then hold exactly on the safe subspace.

The bilinear currents carry a -i/2 prefactor, J^a_n = -(i/2) sum f_abc
F^b_{n-r} F^c_r.  With real totally antisymmetric structure constants,
this prefactor (rather than 1/2 alone) is what makes (J^a_n)* = J^a_{-n}
and produces level h_vee; the ordering constant vanishes identically
because of the antisymmetry of f.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .lie import SimpleLieAlgebra, WeightLabel, conformal_dimension, admissible_weights
from .fock import TruncatedFockSpace
from .spaces import TruncatedSpace
from .tensorspace import TensorModule

SQRT2 = 2 ** 0.5


# ---------------------------------------------------------------------------
# current sets
# ---------------------------------------------------------------------------

@dataclass
class CurrentSet:
    """Mode matrices J^a_n (1-based flavor a, |n| <= mode range) on a host space."""

    space: TruncatedSpace
    algebra: SimpleLieAlgebra
    J: dict = field(repr=False)
    level: float = 0.0
    lowest_energy: Fraction = Fraction(0)

    def mode(self, a: int, n: int) -> sp.csr_matrix:
        try:
            return self.J[(a, n)]
        except KeyError:
            raise ValueError(f"current mode ({a},{n}) not built") from None

    def mode_range(self) -> int:
        return max(n for _, n in self.J)


def _grid_window(space: TruncatedFockSpace, n: int):
    """Fermion modes r with both r and n-r inside the cutoff window.

    The window is exact: in the flavor-contracted bilinears no term with
    a mode beyond the cutoff can contribute to retained matrix elements.
    """
    lo = max(-space.cutoff, Fraction(n) - space.cutoff)
    hi = min(space.cutoff, Fraction(n) + space.cutoff)
    r = lo if space.sector.on_grid(lo) else lo + Fraction(1, 2)
    out = []
    while r <= hi:
        out.append(r)
        r += 1
    return out


def fermionic_currents(space: TruncatedFockSpace, g: SimpleLieAlgebra) -> CurrentSet:
    """Level-h_vee currents from fermion bilinears on the given Fock space."""
    if space.d != g.d:
        raise ValueError(f"space has d={space.d} but algebra dimension is {g.d}")
    nmax = int(space.cutoff)
    J = {}
    for a in range(g.d):
        for n in range(-nmax, nmax + 1):
            terms = []
            for b in range(g.d):
                for c in range(g.d):
                    fa = g.f(a, b, c)
                    if fa == 0.0:
                        continue
                    for r in _grid_window(space, n):
                        terms.append((-0.5j * fa, [(b, Fraction(n) - r), (c, r)]))
            J[(a + 1, n)] = space.matrix_from_terms(terms)
    cs = CurrentSet(space, g, J, lowest_energy=space.lowest_energy())
    cs.level = measure_level(cs)
    return cs


def pair_current(space: TruncatedFockSpace, a: int, b: int, nmax: int) -> dict:
    """so(d) pair currents J^{ab}_n = -i sum_r F^a_{n-r} F^b_r for fixed a < b.

    These are the even bilinears available for any d; for d = 2 they are
    the u(1) current of the two-fermion model.  Returns {n: matrix}.
    """
    if a == b:
        raise ValueError("pair current needs distinct flavors")
    out = {}
    for n in range(-nmax, nmax + 1):
        terms = [(-1.0j, [(a - 1, Fraction(n) - r), (b - 1, r)])
                 for r in _grid_window(space, n)]
        out[n] = space.matrix_from_terms(terms)
    return out


def measure_level(cs: CurrentSet) -> float:
    """Vacuum expectation of [J^1_1, J^1_{-1}]; equals the level exactly.

    For a = b the structure-constant term drops out of the affine
    relation, so the commutator is level * identity on the safe subspace
    and any lowest-energy state measures it.
    """
    j1 = cs.mode(1, 1)
    jm1 = cs.mode(1, -1)
    i0 = cs.space.level_indices(cs.space.lowest_energy())[0]
    v = np.zeros(cs.space.dim, dtype=complex)
    v[i0] = 1.0
    comm = j1 @ (jm1 @ v) - jm1 @ (j1 @ v)
    return float(np.real(np.vdot(v, comm)))


def diagonal_currents(bos: CurrentSet, fer: CurrentSet,
                      tspace: TensorModule) -> CurrentSet:
    """J^a_n (x) 1 + 1 (x) J^a_n on the truncated tensor module."""
    if bos.algebra.d != fer.algebra.d:
        raise ValueError("incompatible algebras")
    if tspace.space1 is not bos.space or tspace.space2 is not fer.space:
        raise ValueError("tensor module factors do not match the current sets")
    nmax = min(bos.mode_range(), fer.mode_range(), int(tspace.cutoff))
    J = {}
    for a in range(1, bos.algebra.d + 1):
        for n in range(-nmax, nmax + 1):
            J[(a, n)] = tspace.lift1(bos.mode(a, n)) + tspace.lift2(fer.mode(a, n))
    cs = CurrentSet(tspace, bos.algebra, J,
                    lowest_energy=tspace.lowest_energy())
    cs.level = measure_level(cs)
    return cs


def smear_current(cs: CurrentSet, coeffs: dict) -> sp.csr_matrix:
    """J(f) = sum f_{n,a} J^a_n; coeffs maps (a, n) to complex amplitudes."""
    nmax = cs.mode_range()
    out = None
    for (a, n), c in coeffs.items():
        if abs(n) > nmax:
            raise ValueError(f"current mode {n} beyond the built range {nmax}")
        term = complex(c) * cs.mode(a, n)
        out = term if out is None else out + term
    if out is None:
        raise ValueError("empty smearing function")
    return out.tocsr()


def derivative_trig(coeffs: dict) -> dict:
    """Modes of f' with the convention iota^n = z^n: (f')_n = i n f_n."""
    return {(a, n): 1j * n * complex(c) for (a, n), c in coeffs.items()}


def bracket_trig(g: SimpleLieAlgebra, coeffs1: dict, coeffs2: dict) -> dict:
    """Pointwise Lie bracket [f, g] of g-valued trig polynomials.

    With [e_a, e_b] = sum_c f_abc e_c in the orthonormal basis.
    """
    out: dict = {}
    for (a, n), ca in coeffs1.items():
        for (b, m), cb in coeffs2.items():
            for c in range(1, g.d + 1):
                fz = g.f(a - 1, b - 1, c - 1)
                if fz == 0.0:
                    continue
                key = (c, n + m)
                out[key] = out.get(key, 0.0) + fz * complex(ca) * complex(cb)
    return {k: v for k, v in out.items() if v != 0.0}


# ---------------------------------------------------------------------------
# PBW / Shapovalov construction
# ---------------------------------------------------------------------------
#
# Chevalley-style letters for affine sl(2) at level l:
#   [h_m, h_n] = 2 m l delta,  [h_m, e_n] = 2 e_{m+n},  [h_m, f_n] = -2 f_{m+n},
#   [e_m, f_n] = h_{m+n} + m l delta,   e* = f (opposite mode), h* = h.
# The orthonormal-basis currents are J^1 = (e+f)/sqrt2, J^2 = -i(e-f)/sqrt2,
# J^3 = h/sqrt2.

_RANK = {"h": 0, "e": 1, "f": 2}


def _key(letter):
    kind, n = letter
    return (n, _RANK[kind])


def _is_creation(letter):
    kind, n = letter
    return n < 0 or (n == 0 and kind == "f")


def _adjoint(letter):
    kind, n = letter
    flip = {"e": "f", "f": "e", "h": "h"}
    return (flip[kind], -n)


class _Sl2Engine:
    """Normal-ordering engine for affine sl(2) words acting on a h.w. vector."""

    def __init__(self, level: int, twice_spin: int):
        self.level = Fraction(level)
        self.lam = Fraction(twice_spin)
        self._ann_cache: dict = {}
        self._shap_cache: dict = {}

    def _comm(self, l1, l2):
        k1, n1 = l1
        k2, n2 = l2
        out = []
        if k1 == "h" and k2 == "h":
            if n1 + n2 == 0:
                out.append((None, 2 * n1 * self.level))
        elif k1 == "h" and k2 == "e":
            out.append((("e", n1 + n2), Fraction(2)))
        elif k1 == "h" and k2 == "f":
            out.append((("f", n1 + n2), Fraction(-2)))
        elif k1 == "e" and k2 == "h":
            out.append((("e", n1 + n2), Fraction(-2)))
        elif k1 == "f" and k2 == "h":
            out.append((("f", n1 + n2), Fraction(2)))
        elif k1 == "e" and k2 == "f":
            out.append((("h", n1 + n2), Fraction(1)))
            if n1 + n2 == 0:
                out.append((None, n1 * self.level))
        elif k1 == "f" and k2 == "e":
            # [f_m, e_n] = -h_{m+n} - n l delta_{m+n,0}
            out.append((("h", n1 + n2), Fraction(-1)))
            if n1 + n2 == 0:
                out.append((None, -n2 * self.level))
        return out

    def _on_vacuum(self, letter):
        kind, n = letter
        if n > 0:
            return {}
        if n == 0:
            if kind == "h":
                return {(): self.lam}
            if kind == "e":
                return {}
            return {(letter,): Fraction(1)}
        return {(letter,): Fraction(1)}

    def _insert(self, letter, word):
        """letter (creation type) times canonical word, as canonical combos."""
        if not word:
            return self._on_vacuum(letter)
        if _key(letter) <= _key(word[0]):
            return {(letter,) + word: Fraction(1)}
        f0, rest = word[0], word[1:]
        out: dict = {}
        for w2, c2 in self._insert(letter, rest).items():
            for w3, c3 in self._insert(f0, w2).items():
                out[w3] = out.get(w3, Fraction(0)) + c2 * c3
        for l2, c in self._comm(letter, f0):
            if l2 is None:
                out[rest] = out.get(rest, Fraction(0)) + c
            else:
                for w2, c2 in self._insert(l2, rest).items():
                    out[w2] = out.get(w2, Fraction(0)) + c * c2
        return out

    def _annihilate(self, letter, word):
        """letter (annihilator type) times canonical word."""
        key = (letter, word)
        hit = self._ann_cache.get(key)
        if hit is not None:
            return hit
        if not word:
            out = self._on_vacuum(letter)
            self._ann_cache[key] = out
            return out
        f0, rest = word[0], word[1:]
        out = {}
        for l2, c in self._comm(letter, f0):
            if l2 is None:
                out[rest] = out.get(rest, Fraction(0)) + c
            else:
                for w2, c2 in self.apply(l2, {rest: Fraction(1)}).items():
                    out[w2] = out.get(w2, Fraction(0)) + c * c2
        for w2, c2 in self._annihilate(letter, rest).items():
            for w3, c3 in self._insert(f0, w2).items():
                out[w3] = out.get(w3, Fraction(0)) + c2 * c3
        out = {w: c for w, c in out.items() if c}
        self._ann_cache[key] = out
        return out

    def apply(self, letter, state: dict) -> dict:
        out: dict = {}
        op = self._insert if _is_creation(letter) else self._annihilate
        for word, coeff in state.items():
            for w2, c2 in op(letter, word).items():
                out[w2] = out.get(w2, Fraction(0)) + coeff * c2
        return {w: c for w, c in out.items() if c}

    def shapovalov(self, w1, w2) -> Fraction:
        """<w1 v, w2 v> via the contravariant form; exact rational."""
        key = (w1, w2)
        hit = self._shap_cache.get(key)
        if hit is not None:
            return hit
        state = {w2: Fraction(1)}
        for letter in w1:
            state = self.apply(_adjoint(letter), state)
            if not state:
                break
        val = state.get((), Fraction(0))
        self._shap_cache[key] = val
        return val

    def op_element(self, letter, w1, w2) -> Fraction:
        """<w1 v, X w2 v> for a single generator letter X."""
        if _is_creation(letter):
            state = self.apply(_adjoint(letter), {w1: Fraction(1)})
            return sum((c * self.shapovalov(w, w2) for w, c in state.items()),
                       Fraction(0))
        state = self.apply(letter, {w2: Fraction(1)})
        return sum((c * self.shapovalov(w1, w) for w, c in state.items()),
                   Fraction(0))


def _word_weight(word, lam: int) -> int:
    w = lam
    for kind, _ in word:
        w += 2 if kind == "e" else (-2 if kind == "f" else 0)
    return w


def _enumerate_words(lam: int, cutoff: int):
    """Canonical PBW words of energy <= cutoff, keyed by (energy, weight)."""
    letters = []
    for n in range(-cutoff, 0):
        for kind in ("h", "e", "f"):
            letters.append((kind, n))
    letters.sort(key=_key)

    by_block: dict = {}

    def record(word):
        e = sum(-n for _, n in word)
        w = _word_weight(word, lam)
        by_block.setdefault((Fraction(e), w), []).append(word)

    def extend(start, word, energy):
        # append f_0 powers while the weight can still be reached in the module
        base_w = _word_weight(word, lam)
        kmax = (base_w + lam + 2 * energy) // 2
        for k in range(0, max(0, kmax) + 1):
            record(tuple(word) + (("f", 0),) * k)
        for i in range(start, len(letters)):
            kind, n = letters[i]
            if energy + (-n) > cutoff:
                continue
            word.append((kind, n))
            extend(i, word, energy + (-n))
            word.pop()

    extend(0, [], 0)
    for block in by_block.values():
        block.sort()
    return by_block


def _exact_rank(gram_rows) -> int:
    """Rank of a rational symmetric matrix by fraction-free elimination."""
    m = [row[:] for row in gram_rows]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    rank = 0
    for col in range(cols):
        piv = next((r for r in range(rank, rows) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pv = m[rank][col]
        for r in range(rows):
            if r != rank and m[r][col] != 0:
                fac = m[r][col] / pv
                m[r] = [x - fac * y for x, y in zip(m[r], m[rank])]
        rank += 1
    return rank


class AffineModule(TruncatedSpace):
    """Truncated irreducible level-l su(2) module via PBW + null quotient.

    Basis states are orthonormal combinations of PBW monomials, grouped
    by (grade, su(2)-weight); the Shapovalov form is computed exactly
    and the null space removed per block with threshold 1e-9.
    """

    NULL_THRESHOLD = 1e-9

    def __init__(self, algebra: SimpleLieAlgebra, level: int, weight, cutoff: int,
                 exact_rank_check: bool = False):
        if algebra.name != "su2":
            raise ValueError("PBW construction is implemented for su2")
        twice_spin = weight.twice_spin if isinstance(weight, WeightLabel) else int(weight)
        wl = WeightLabel(twice_spin, level)
        if wl not in admissible_weights(level):
            raise ValueError(f"weight {twice_spin} not admissible at level {level}")
        self.algebra = algebra
        self.level = level
        self.weight = wl
        self.engine = _Sl2Engine(level, twice_spin)
        self.h = conformal_dimension(wl, algebra)

        blocks = _enumerate_words(twice_spin, cutoff)
        self.blocks = {}
        basis_energy = []
        self.basis_states = []  # (energy, weight, words, coeff_vector)
        self.gram_spectra = {}
        for (e, w), words in sorted(blocks.items()):
            n = len(words)
            gram_q = [[self.engine.shapovalov(words[i], words[j]) for j in range(n)]
                      for i in range(n)]
            gram = np.array([[float(x) for x in row] for row in gram_q])
            vals, vecs = np.linalg.eigh(gram)
            if vals.min() < -self.NULL_THRESHOLD:
                raise ArithmeticError(
                    f"indefinite Shapovalov block at grade {e}, weight {w}: "
                    f"min eigenvalue {vals.min():.3e}")
            keep = vals > self.NULL_THRESHOLD
            if exact_rank_check:
                r_exact = _exact_rank(gram_q)
                if r_exact != int(keep.sum()):
                    raise ArithmeticError(
                        f"float rank {int(keep.sum())} != exact rank {r_exact} "
                        f"at grade {e}, weight {w}")
            self.gram_spectra[(e, w)] = sorted(float(v) for v in vals)
            kept = []
            for i in np.nonzero(keep)[0]:
                vec = vecs[:, i] / np.sqrt(vals[i])
                kept.append(vec)
                self.basis_states.append((e, w, words, vec))
                basis_energy.append(e)
            self.blocks[(e, w)] = (words, kept)
        super().__init__(Fraction(cutoff), basis_energy)
        self._op_cache: dict = {}

    def graded_dimension(self, grade) -> int:
        return len(self.level_indices(grade))

    def _letter_matrix(self, letter) -> np.ndarray:
        hit = self._op_cache.get(letter)
        if hit is not None:
            return hit
        mat = np.zeros((self.dim, self.dim), dtype=complex)
        kind, n = letter
        dw = {"e": 2, "f": -2, "h": 0}[kind]
        for j, (e2, w2, words2, vec2) in enumerate(self.basis_states):
            e1 = e2 - n
            w1t = w2 + dw
            for i, (e1b, w1b, words1, vec1) in enumerate(self.basis_states):
                if e1b != e1 or w1b != w1t:
                    continue
                val = Fraction(0)
                for i2, b2 in enumerate(words2):
                    if vec2[i2] == 0.0:
                        continue
                    for i1, b1 in enumerate(words1):
                        if vec1[i1] == 0.0:
                            continue
                        q = self.engine.op_element(letter, b1, b2)
                        if q:
                            mat[i, j] += vec1[i1] * vec2[i2] * float(q)
        self._op_cache[letter] = mat
        return mat

    def current_matrix(self, a: int, n: int) -> sp.csr_matrix:
        """J^a_n in the orthonormal quotient basis (1-based flavor)."""
        e = self._letter_matrix(("e", n))
        f = self._letter_matrix(("f", n))
        h = self._letter_matrix(("h", n))
        if a == 1:
            mat = (e + f) / SQRT2
        elif a == 2:
            mat = -1j * (e - f) / SQRT2
        elif a == 3:
            mat = h / SQRT2
        else:
            raise ValueError("su2 flavors are 1..3")
        return sp.csr_matrix(mat)

    def current_set(self, nmax: int | None = None) -> CurrentSet:
        nmax = int(self.cutoff) if nmax is None else nmax
        J = {(a, n): self.current_matrix(a, n)
             for a in (1, 2, 3) for n in range(-nmax, nmax + 1)}
        cs = CurrentSet(self, self.algebra, J, lowest_energy=Fraction(0))
        cs.level = measure_level(cs)
        return cs

    def export_graded_dims_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["grade", "dimension"])
            for e in sorted({x for x in self.energies_exact}):
                w.writerow([str(e), self.graded_dimension(e)])

    def export_gram_spectra_json(self, path):
        data = [
            {"grade": str(e), "weight": w, "spectrum": spec}
            for (e, w), spec in sorted(self.gram_spectra.items())
        ]
        with open(path, "w") as fh:
            json.dump(data, fh, indent=1)


def build_pbw_module(g: SimpleLieAlgebra, level: int, weight, cutoff: int,
                     exact_rank_check: bool = False) -> AffineModule:
    if cutoff > 4:
        raise ValueError("PBW construction supports cutoff <= 4")
    return AffineModule(g, level, weight, cutoff, exact_rank_check=exact_rank_check)
