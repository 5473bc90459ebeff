"""Graded-dimension generating series with exact rational data.

A QSeries maps half-integer exponents to rational coefficients and is
truncated at a fixed maximal exponent.  It is used for fermionic
characters (NS exponents live on half-integers) and as the consistency
contract between enumerated Fock bases and their partition counts.
"""

from __future__ import annotations

from fractions import Fraction


class QSeries:
    """Finite q-expansion sum_E c_E q^E with Fraction exponents/coefficients."""

    def __init__(self, coeffs=None, max_exp=Fraction(0)):
        self.max_exp = Fraction(max_exp)
        self.coeffs: dict[Fraction, Fraction] = {}
        for e, c in (coeffs or {}).items():
            e = Fraction(e)
            c = Fraction(c)
            if c and e <= self.max_exp:
                self.coeffs[e] = c

    @staticmethod
    def one(max_exp) -> "QSeries":
        return QSeries({Fraction(0): Fraction(1)}, max_exp)

    def coeff(self, e) -> Fraction:
        return self.coeffs.get(Fraction(e), Fraction(0))

    def exponents(self):
        return sorted(self.coeffs)

    def __mul__(self, other: "QSeries") -> "QSeries":
        max_exp = min(self.max_exp, other.max_exp)
        out: dict[Fraction, Fraction] = {}
        for e1, c1 in self.coeffs.items():
            if e1 > max_exp:
                continue
            for e2, c2 in other.coeffs.items():
                e = e1 + e2
                if e > max_exp:
                    continue
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return QSeries(out, max_exp)

    def scale(self, s) -> "QSeries":
        return QSeries({e: Fraction(s) * c for e, c in self.coeffs.items()}, self.max_exp)

    @staticmethod
    def one_plus_q_pow(r, power: int, max_exp) -> "QSeries":
        """(1 + q^r)^power truncated at max_exp."""
        r = Fraction(r)
        max_exp = Fraction(max_exp)
        out = {Fraction(0): Fraction(1)}
        binom = 1
        for k in range(1, power + 1):
            binom = binom * (power - k + 1) // k
            e = r * k
            if e > max_exp:
                break
            out[e] = Fraction(binom)
        return QSeries(out, max_exp)

    def __eq__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        exps = set(self.coeffs) | set(other.coeffs)
        return all(self.coeff(e) == other.coeff(e) for e in exps)

    def __repr__(self):
        terms = [f"{c}*q^{e}" for e, c in sorted(self.coeffs.items())]
        return " + ".join(terms) if terms else "0"

    def to_rows(self):
        """(exponent, coefficient) rows as strings, for CSV export."""
        return [(str(e), str(c)) for e, c in sorted(self.coeffs.items())]
