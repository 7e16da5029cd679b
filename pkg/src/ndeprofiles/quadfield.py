"""Exact arithmetic in quadratic fields Q(sqrt(d)).

Just enough field arithmetic for the closed-form zero sequences: values are
a + b*sqrt(d) with Fraction coefficients and integer d.  Mixing two different
irrational parts is an error; rationals (b = 0) join any field.
"""

from fractions import Fraction
from math import sqrt


def _join(x, y):
    """Put two values into a common field; returns (a1, b1, a2, b2, d)."""
    if not isinstance(x, QuadExt):
        x = QuadExt(x, 0, y.d if isinstance(y, QuadExt) else 2)
    if not isinstance(y, QuadExt):
        y = QuadExt(y, 0, x.d)
    if x.d == y.d or y.b == 0:
        return x.a, x.b, y.a, y.b, x.d
    if x.b == 0:
        return x.a, Fraction(0), y.a, y.b, y.d
    raise ValueError("mixing sqrt(%d) with sqrt(%d)" % (x.d, y.d))


class QuadExt:
    __slots__ = ("a", "b", "d")

    def __init__(self, a, b=0, d=2):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.d = int(d)

    def __add__(self, other):
        a1, b1, a2, b2, d = _join(self, other)
        return QuadExt(a1 + a2, b1 + b2, d)

    __radd__ = __add__

    def __neg__(self):
        return QuadExt(-self.a, -self.b, self.d)

    def __sub__(self, other):
        a1, b1, a2, b2, d = _join(self, other)
        return QuadExt(a1 - a2, b1 - b2, d)

    def __rsub__(self, other):
        a1, b1, a2, b2, d = _join(other, self)
        return QuadExt(a1 - a2, b1 - b2, d)

    def __mul__(self, other):
        a1, b1, a2, b2, d = _join(self, other)
        return QuadExt(a1*a2 + d*b1*b2, a1*b2 + b1*a2, d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        a1, b1, a2, b2, d = _join(self, other)
        nrm = a2*a2 - d*b2*b2
        if nrm == 0:
            raise ZeroDivisionError
        return QuadExt(a1, b1, d)*QuadExt(a2/nrm, -b2/nrm, d)

    def __rtruediv__(self, other):
        a1, b1, a2, b2, d = _join(other, self)
        return QuadExt(a1, b1, d)/QuadExt(a2, b2, d)

    def __eq__(self, other):
        try:
            a1, b1, a2, b2, _ = _join(self, other)
        except ValueError:
            return False
        return a1 == a2 and b1 == b2

    def __hash__(self):
        return hash((self.a, self.b, self.d if self.b else 0))

    def __float__(self):
        return float(self.a) + float(self.b)*sqrt(self.d)

    def __lt__(self, other):
        return float(self) < (float(other) if isinstance(other, QuadExt) else other)

    def __repr__(self):
        if self.b == 0:
            return "QuadExt(%s)" % (self.a,)
        return "QuadExt(%s + %s*sqrt(%d))" % (self.a, self.b, self.d)
