"""Exact scalars: big rationals and elements of a real quadratic field Q(sqrt d).

Every real quantity in the package (parameters, coordinates, measures) is a
:class:`Scalar`.  A scalar is stored as ``(a + b*sqrt(d)) / c`` with Python
integers, so comparisons against the half-open boundaries of the dynamics are
decided by integer arithmetic only.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

__all__ = [
    "Scalar",
    "ScalarLike",
    "MixedSurdError",
    "GReduction",
    "as_scalar",
    "parse_scalar",
    "format_scalar",
    "reduce_mod_G",
    "floor_quotient",
    "frac",
    "sqrt",
    "HALF",
    "ZERO",
    "ONE",
]


class MixedSurdError(ValueError):
    """Raised when two scalars over different quadratic fields meet."""


def _squarefree_part(d: int) -> tuple[int, int]:
    """Return ``(k, e)`` with ``d == k*k*e`` and ``e`` square-free."""
    k = 1
    e = d
    p = 2
    while p * p <= e:
        while e % (p * p) == 0:
            e //= p * p
            k *= p
        p += 1
    return k, e


class Scalar:
    """Exact real number ``(a + b*sqrt(d)) / c``.

    Rationals have ``b == 0`` and ``d == 0``.  Quadratic scalars have
    ``b != 0`` and a square-free ``d > 1``.  Instances are immutable and
    hashable, so they can be shared between worker processes.

    >>> x = Scalar.surd(2, -1, 2, 2)     # (2 - sqrt 2)/2
    >>> x < Scalar(1, 2)
    True
    >>> str(x)
    '(2-1*sqrt(2))/2'
    """

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, num: int | Fraction = 0, den: int = 1):
        if isinstance(num, Fraction):
            num, den = num.numerator * 1, num.denominator * den
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        if den < 0:
            num, den = -num, -den
        g = math.gcd(num, den)
        if g > 1:
            num //= g
            den //= g
        self.a = num
        self.b = 0
        self.c = den
        self.d = 0

    @classmethod
    def _raw(cls, a: int, b: int, c: int, d: int) -> "Scalar":
        # Normalize a triple; demote to rational when the surd part vanishes.
        if c < 0:
            a, b, c = -a, -b, -c
        if b == 0:
            g = math.gcd(a, c)
            obj = object.__new__(cls)
            obj.a, obj.b, obj.c, obj.d = (a // g, 0, c // g, 0) if g > 1 else (a, 0, c, 0)
            return obj
        g = math.gcd(a, b, c)
        if g > 1:
            a //= g
            b //= g
            c //= g
        obj = object.__new__(cls)
        obj.a, obj.b, obj.c, obj.d = a, b, c, d
        return obj

    @classmethod
    def surd(cls, a: int, b: int, c: int, d: int) -> "Scalar":
        """Build ``(a + b*sqrt(d)) / c`` for any positive integer ``d``."""
        if d < 0:
            raise ValueError("only real quadratic fields are supported")
        if c == 0:
            raise ZeroDivisionError("zero denominator")
        k, e = _squarefree_part(d) if d > 0 else (0, 0)
        if e == 1:
            return cls._raw(a + b * k, 0, c, 0)
        return cls._raw(a, b * k, c, e)

    # ---- introspection -------------------------------------------------
    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def as_fraction(self) -> Fraction:
        if self.b:
            raise ValueError(f"{self} is not rational")
        return Fraction(self.a, self.c)

    @property
    def numerator(self) -> int:
        return self.as_fraction().numerator

    @property
    def denominator(self) -> int:
        return self.as_fraction().denominator

    def conjugate(self) -> "Scalar":
        return Scalar._raw(self.a, -self.b, self.c, self.d)

    # ---- arithmetic ----------------------------------------------------
    @staticmethod
    def _field(x: "Scalar", y: "Scalar") -> int:
        if x.d and y.d and x.d != y.d:
            raise MixedSurdError(f"cannot combine sqrt({x.d}) with sqrt({y.d})")
        return x.d or y.d

    def __add__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        if not (self.b or o.b):
            return Scalar._raw(self.a * o.c + o.a * self.c, 0, self.c * o.c, 0)
        d = Scalar._field(self, o)
        return Scalar._raw(self.a * o.c + o.a * self.c, self.b * o.c + o.b * self.c, self.c * o.c, d)

    __radd__ = __add__

    def __neg__(self):
        return Scalar._raw(-self.a, -self.b, self.c, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        if not (self.b or o.b):
            return Scalar._raw(self.a * o.a, 0, self.c * o.c, 0)
        d = Scalar._field(self, o)
        return Scalar._raw(
            self.a * o.a + self.b * o.b * d,
            self.a * o.b + self.b * o.a,
            self.c * o.c,
            d,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def inverse(self) -> "Scalar":
        if self.b == 0:
            if self.a == 0:
                raise ZeroDivisionError("division by zero scalar")
            return Scalar._raw(self.c, 0, self.a, 0)
        # c / (a + b sqrt d) = c (a - b sqrt d) / (a^2 - b^2 d)
        norm = self.a * self.a - self.b * self.b * self.d
        return Scalar._raw(self.c * self.a, -self.c * self.b, norm, self.d)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # ---- order ---------------------------------------------------------
    def sign(self) -> int:
        """Sign of the scalar, decided with integers only."""
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a >= 0 and b > 0:
            return 1
        if a <= 0 and b < 0:
            return -1
        # opposite signs: compare a^2 with b^2 d
        lhs = a * a
        rhs = b * b * self.d
        if a > 0:
            return 1 if lhs > rhs else -1
        return -1 if lhs > rhs else 1

    def _cmp(self, other) -> int | None:
        o = as_scalar(other, strict=False)
        if o is None:
            return None
        if not (self.b or o.b):
            lhs = self.a * o.c
            rhs = o.a * self.c
            return (lhs > rhs) - (lhs < rhs)
        return (self - o).sign()

    def __lt__(self, other):
        r = self._cmp(other)
        return NotImplemented if r is None else r < 0

    def __le__(self, other):
        r = self._cmp(other)
        return NotImplemented if r is None else r <= 0

    def __gt__(self, other):
        r = self._cmp(other)
        return NotImplemented if r is None else r > 0

    def __ge__(self, other):
        r = self._cmp(other)
        return NotImplemented if r is None else r >= 0

    def __eq__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        if self.b == 0 and o.b == 0:
            return self.a == o.a and self.c == o.c
        return self.a == o.a and self.b == o.b and self.c == o.c and self.d == o.d

    def __hash__(self):
        if self.b == 0:
            return hash(Fraction(self.a, self.c))
        return hash((self.a, self.b, self.c, self.d))

    def __bool__(self):
        return self.a != 0 or self.b != 0

    def __floor__(self) -> int:
        a, b, c = self.a, self.b, self.c
        if b == 0:
            return a // c
        # b*sqrt(d) is irrational, so it lies strictly between s and s+1
        s = math.isqrt(b * b * self.d)
        if b > 0:
            return (a + s) // c
        return (a - s - 1) // c

    def floor(self) -> int:
        return self.__floor__()

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # ---- conversion ----------------------------------------------------
    def __float__(self) -> float:
        if self.b == 0:
            return self.a / self.c
        # enough digits to survive cancellation between a and b*sqrt(d)
        digits = max(len(str(abs(self.a))), len(str(abs(self.b)))) + 20
        return float(self.to_mpf(digits))

    def to_mpf(self, dps: int = 60):
        """High precision evaluation through mpmath (reporting only)."""
        import mpmath

        with mpmath.workdps(dps):
            return (mpmath.mpf(self.a) + self.b * mpmath.sqrt(self.d)) / self.c

    def __str__(self) -> str:
        return format_scalar(self)

    def __repr__(self) -> str:
        return f"Scalar('{format_scalar(self)}')"

    def __reduce__(self):
        return (Scalar._raw, (self.a, self.b, self.c, self.d))


ScalarLike = Union[Scalar, int, Fraction, str]

_SURD_RE = re.compile(
    r"^\(\s*([+-]?\d+)\s*([+-])\s*(\d+)\s*\*\s*sqrt\(\s*(\d+)\s*\)\s*\)\s*(?:/\s*(\d+))?$"
)


def parse_scalar(text: str) -> Scalar:
    """Parse ``"p/q"``, ``"(a+b*sqrt(d))/c"`` or a plain decimal.

    Decimals are read exactly (``"0.3"`` is ``3/10``).

    >>> parse_scalar("(2-1*sqrt(2))/2") == Scalar.surd(2, -1, 2, 2)
    True
    >>> parse_scalar("0.3")
    Scalar('3/10')
    """
    t = text.strip()
    m = _SURD_RE.match(t)
    if m:
        a = int(m.group(1))
        b = int(m.group(3)) * (1 if m.group(2) == "+" else -1)
        d = int(m.group(4))
        c = int(m.group(5) or 1)
        return Scalar.surd(a, b, c, d)
    try:
        return Scalar(Fraction(t))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse scalar {text!r}") from exc


def format_scalar(x: Scalar) -> str:
    """Canonical text form, inverse of :func:`parse_scalar`."""
    if x.b == 0:
        return f"{x.a}/{x.c}"
    sign = "+" if x.b > 0 else "-"
    return f"({x.a}{sign}{abs(x.b)}*sqrt({x.d}))/{x.c}"


def as_scalar(value, strict: bool = True) -> Scalar | None:
    """Coerce ints, Fractions and text into a :class:`Scalar`."""
    if isinstance(value, Scalar):
        return value
    if isinstance(value, int):
        return Scalar._raw(value, 0, 1, 0)
    if isinstance(value, Rational):
        return Scalar._raw(int(value.numerator), 0, int(value.denominator), 0)
    if isinstance(value, str):
        return parse_scalar(value)
    if strict:
        raise TypeError(f"cannot convert {type(value).__name__} to Scalar exactly")
    return None


def sqrt(d: int) -> Scalar:
    return Scalar.surd(0, 1, 1, d)


ZERO = Scalar(0)
ONE = Scalar(1)
HALF = Scalar(1, 2)


def frac(x: Scalar) -> Scalar:
    """Representative of ``x`` mod 1 in ``[0, 1)``."""
    return x - x.floor()


@dataclass(frozen=True)
class GReduction:
    """Result of reducing ``t`` modulo the group generated by ``t -> t+1``, ``t -> -t``.

    The reconstruction identity is ``t == integer_part + orientation * reduced``.
    """

    reduced: Scalar
    orientation: int
    integer_part: int

    def reconstruct(self) -> Scalar:
        return self.integer_part + self.orientation * self.reduced


def reduce_mod_G(t: ScalarLike) -> GReduction:
    """Map ``t`` into the fundamental domain ``[0, 1/2]``.

    Points equivalent to ``1/2`` get the positive orientation.

    >>> reduce_mod_G(Scalar(3, 4))
    GReduction(reduced=Scalar('1/4'), orientation=-1, integer_part=1)
    """
    t = as_scalar(t)
    n = t.floor()
    rest = t - n
    if rest <= HALF:
        return GReduction(rest, 1, n)
    return GReduction(ONE - rest, -1, n + 1)


def floor_quotient(x: ScalarLike, y: ScalarLike) -> int:
    """Greatest integer not exceeding ``x / y``; requires ``y > 0``."""
    x = as_scalar(x)
    y = as_scalar(y)
    if y.sign() <= 0:
        raise ValueError("floor_quotient needs a positive divisor")
    return (x / y).floor()
