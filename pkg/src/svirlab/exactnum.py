"""Exact scalar arithmetic in the field Q(i, sqrt(2)).

The fermion-mode engine works over this field: Clifford zero modes
contribute entries in {0, +-1, +-i} divided by sqrt(2), and the su(2)
structure constants are rational multiples of sqrt(2).  Keeping the
coefficients exact lets the central-charge measurement come out as a
literal rational number instead of a float.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational


class Ex:
    """(ar + i*ai) + (br + i*bi) * sqrt(2) with rational components."""

    __slots__ = ("ar", "ai", "br", "bi")

    def __init__(self, ar=0, ai=0, br=0, bi=0):
        self.ar = Fraction(ar)
        self.ai = Fraction(ai)
        self.br = Fraction(br)
        self.bi = Fraction(bi)

    @staticmethod
    def of(x) -> "Ex":
        if isinstance(x, Ex):
            return x
        if isinstance(x, Rational):
            return Ex(x)
        raise TypeError(f"cannot coerce {x!r} to Ex")

    @staticmethod
    def i(scale=1) -> "Ex":
        return Ex(0, scale)

    @staticmethod
    def sqrt2(scale=1) -> "Ex":
        return Ex(0, 0, scale)

    def __add__(self, other):
        o = Ex.of(other)
        return Ex(self.ar + o.ar, self.ai + o.ai, self.br + o.br, self.bi + o.bi)

    __radd__ = __add__

    def __neg__(self):
        return Ex(-self.ar, -self.ai, -self.br, -self.bi)

    def __sub__(self, other):
        return self + (-Ex.of(other))

    def __rsub__(self, other):
        return Ex.of(other) + (-self)

    def __mul__(self, other):
        o = Ex.of(other)
        # (a + b s)(c + d s) = (ac + 2bd) + (ad + bc) s, s = sqrt(2),
        # with complex-rational a, b, c, d.
        ar, ai, br, bi = self.ar, self.ai, self.br, self.bi
        cr, ci, dr, di = o.ar, o.ai, o.br, o.bi
        acr = ar * cr - ai * ci
        aci = ar * ci + ai * cr
        bdr = br * dr - bi * di
        bdi = br * di + bi * dr
        adr = ar * dr - ai * di
        adi = ar * di + ai * dr
        bcr = br * cr - bi * ci
        bci = br * ci + bi * cr
        return Ex(acr + 2 * bdr, aci + 2 * bdi, adr + bcr, adi + bci)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Rational):
            q = Fraction(other)
            return Ex(self.ar / q, self.ai / q, self.br / q, self.bi / q)
        raise TypeError("Ex division only by rationals")

    def conjugate(self) -> "Ex":
        return Ex(self.ar, -self.ai, self.br, -self.bi)

    def abs2(self) -> "Ex":
        """|z|^2, exact (still an Ex; rational iff the sqrt(2) part cancels)."""
        return self * self.conjugate()

    def is_zero(self) -> bool:
        return not (self.ar or self.ai or self.br or self.bi)

    def rational_part(self) -> Fraction:
        """The value as an exact Fraction; raises if not purely rational."""
        if self.ai or self.br or self.bi:
            raise ValueError(f"{self!r} is not rational")
        return self.ar

    def to_complex(self) -> complex:
        s = 2 ** 0.5
        return complex(float(self.ar) + s * float(self.br),
                       float(self.ai) + s * float(self.bi))

    def __eq__(self, other):
        try:
            o = Ex.of(other)
        except TypeError:
            return NotImplemented
        return (self.ar, self.ai, self.br, self.bi) == (o.ar, o.ai, o.br, o.bi)

    def __hash__(self):
        return hash((self.ar, self.ai, self.br, self.bi))

    def __repr__(self):
        return f"Ex({self.ar}, {self.ai}, {self.br}, {self.bi})"
