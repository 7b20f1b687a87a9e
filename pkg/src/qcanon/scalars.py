"""Exact coefficient arithmetic.

All values live over the field Q(s) with s = q^{1/2}, optionally extended by
one square root x with x^2 = disc(q).  Exponents are stored in s-units
throughout, so the Hecke side (which needs q^{1/2}) and the plain-q side share
one representation; q-unit views are derived (one q = two s-exponents).

Three layers:

  Laurent  -- Laurent polynomial in s over Q, a dict {exponent: Fraction}.
  RatFunc  -- quotient of Laurents in canonical form: the denominator is a
              true polynomial in s, has nonzero constant term, is monic at its
              top degree, and shares no factor with the numerator.
  QuadExt  -- a + b*x with a, b RatFunc and x^2 = disc; bar acts on x as
              bar(x) = q^m * x for the configured twist m.

The bar involution is the field automorphism s -> s^{-1} (plus the twist on
x).  Canonical text serialization writes terms ``p/q*s^k`` joined by `` + ``
with ascending k, and extension elements as ``(<A>) + (<B>)*x``; parsing
accepts exactly that grammar and round-trips bit-exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Iterable, Union

from .errors import (
    DivideByZero,
    FieldMismatch,
    NoExtension,
    NotRegularAtZero,
    ParseError,
    PoleAtOne,
)

MINUS_INF = float("-inf")


# ---------------------------------------------------------------------------
# Laurent polynomials in s
# ---------------------------------------------------------------------------

class Laurent:
    """Laurent polynomial in s with Fraction coefficients.

    Zero coefficients are never stored; the zero polynomial has an empty term
    dict.  Instances are treated as immutable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, Fraction] | None = None):
        self.terms = terms if terms is not None else {}

    @staticmethod
    def from_terms(pairs: Iterable[tuple[int, Union[int, Fraction]]]) -> "Laurent":
        terms: dict[int, Fraction] = {}
        for k, c in pairs:
            c = Fraction(c)
            if c:
                acc = terms.get(k)
                c = c if acc is None else acc + c
                if c:
                    terms[k] = c
                else:
                    del terms[k]
        return Laurent(terms)

    @staticmethod
    def const(c: Union[int, Fraction]) -> "Laurent":
        c = Fraction(c)
        return Laurent({0: c} if c else {})

    @staticmethod
    def monomial(k: int, c: Union[int, Fraction] = 1) -> "Laurent":
        c = Fraction(c)
        return Laurent({k: c} if c else {})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, Laurent) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "Laurent") -> "Laurent":
        if not self.terms:
            return other
        if not other.terms:
            return self
        terms = dict(self.terms)
        for k, c in other.terms.items():
            acc = terms.get(k)
            if acc is None:
                terms[k] = c
            else:
                acc = acc + c
                if acc:
                    terms[k] = acc
                else:
                    del terms[k]
        return Laurent(terms)

    def __neg__(self) -> "Laurent":
        return Laurent({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "Laurent") -> "Laurent":
        return self + (-other)

    def __mul__(self, other: "Laurent") -> "Laurent":
        if not self.terms or not other.terms:
            return ZERO_L
        if len(self.terms) > len(other.terms):
            self, other = other, self
        terms: dict[int, Fraction] = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = k1 + k2
                c = c1 * c2
                acc = terms.get(k)
                if acc is None:
                    terms[k] = c
                else:
                    acc = acc + c
                    if acc:
                        terms[k] = acc
                    else:
                        del terms[k]
        return Laurent(terms)

    def scale(self, c: Union[int, Fraction]) -> "Laurent":
        c = Fraction(c)
        if not c:
            return ZERO_L
        return Laurent({k: v * c for k, v in self.terms.items()})

    def shift(self, k: int) -> "Laurent":
        """Multiply by s^k."""
        if k == 0:
            return self
        return Laurent({e + k: c for e, c in self.terms.items()})

    def val(self) -> int:
        """Order of vanishing at s = 0 (raises on zero)."""
        if not self.terms:
            raise ValueError("valuation of zero")
        return min(self.terms)

    def deg(self) -> int:
        """Top s-exponent (raises on zero)."""
        if not self.terms:
            raise ValueError("degree of zero")
        return max(self.terms)

    def coeff(self, k: int) -> Fraction:
        return self.terms.get(k, Fraction(0))

    def leading(self) -> Fraction:
        return self.terms[self.deg()]

    def bar(self) -> "Laurent":
        """s -> s^{-1}."""
        return Laurent({-k: c for k, c in self.terms.items()})

    def is_bar_invariant(self) -> bool:
        return all(self.terms.get(-k) == c for k, c in self.terms.items())

    def eval_one(self) -> Fraction:
        return sum(self.terms.values(), Fraction(0))

    def eval_at(self, v: Fraction) -> Fraction:
        v = Fraction(v)
        out = Fraction(0)
        for k, c in self.terms.items():
            out += c * v ** k
        return out

    def subs_square(self) -> "Laurent":
        """View a q-unit polynomial in s-units (double every exponent)."""
        return Laurent({2 * k: c for k, c in self.terms.items()})

    def __repr__(self) -> str:
        return f"Laurent({format_laurent(self)!r})"


ZERO_L = Laurent()
ONE_L = Laurent({0: Fraction(1)})


def poly_divmod(a: Laurent, b: Laurent) -> tuple[Laurent, Laurent]:
    """Division with remainder of true polynomials in s (val >= 0)."""
    if b.is_zero():
        raise DivideByZero("polynomial division by zero")
    q_terms: dict[int, Fraction] = {}
    rem = dict(a.terms)
    db = b.deg()
    lb = b.terms[db]
    while rem and max(rem) >= db:
        dr = max(rem)
        c = rem[dr] / lb
        q_terms[dr - db] = c
        for k, v in b.terms.items():
            e = dr - db + k
            acc = rem.get(e, Fraction(0)) - c * v
            if acc:
                rem[e] = acc
            else:
                rem.pop(e, None)
    return Laurent(q_terms), Laurent(rem)


def poly_gcd(a: Laurent, b: Laurent) -> Laurent:
    """Monic gcd of true polynomials in s."""
    while not b.is_zero():
        a, b = b, poly_divmod(a, b)[1]
    if a.is_zero():
        return ZERO_L
    return a.scale(1 / a.leading())


def laurent_divexact(a: Laurent, b: Laurent) -> Laurent:
    """Exact division of Laurents; raises if the division is not exact."""
    if b.is_zero():
        raise DivideByZero("division by zero Laurent")
    if a.is_zero():
        return ZERO_L
    va, vb = a.val(), b.val()
    q, r = poly_divmod(a.shift(-va), b.shift(-vb))
    if not r.is_zero():
        raise ValueError("inexact Laurent division")
    return q.shift(va - vb)


def laurent_divides(b: Laurent, a: Laurent) -> bool:
    """True if b divides a as Laurent polynomials."""
    if a.is_zero():
        return True
    if b.is_zero():
        return False
    _, r = poly_divmod(a.shift(-a.val()), b.shift(-b.val()))
    return r.is_zero()


def poly_sqrt(a: Laurent) -> Laurent | None:
    """Exact square root of a Laurent polynomial, or None.

    The root is normalized to have positive leading coefficient.
    """
    if a.is_zero():
        return ZERO_L
    va, da = a.val(), a.deg()
    if va % 2 or da % 2:
        return None
    lead = a.terms[da]
    if lead < 0:
        return None
    num_r, den_r = _frac_sqrt(lead)
    if num_r is None:
        return None
    half = da // 2
    # fix root coefficients top-down: the s^k coefficient of r^2 pairs the
    # unknown r_{k-half} against the known leading coefficient
    r: dict[int, Fraction] = {half: Fraction(num_r, den_r)}
    for k in range(da - 1, half + va // 2 - 1, -1):
        acc = Fraction(0)
        for e1, c1 in r.items():
            e2 = k - e1
            if e2 > e1:
                continue
            if e2 == e1:
                acc += c1 * c1
            elif e2 in r:
                acc += 2 * c1 * r[e2]
        unknown = (a.coeff(k) - acc) / (2 * r[half])
        if unknown:
            r[k - half] = unknown
    cand = Laurent(r)
    if cand * cand == a:
        return cand
    return None


def ratfunc_sqrt(v: "RatFunc") -> "RatFunc | None":
    """Exact square root of a rational function, or None."""
    if v.is_zero():
        return RatFunc.const(0)
    vn = v.num.val()
    if vn % 2:
        return None
    rn = poly_sqrt(v.num.shift(-vn))
    rd = poly_sqrt(v.den)
    if rn is None or rd is None:
        return None
    return RatFunc(rn.shift(vn // 2), rd)


def _frac_sqrt(c: Fraction) -> tuple[int | None, int]:
    if c < 0:
        return None, 1
    pn, pd = isqrt(c.numerator), isqrt(c.denominator)
    if pn * pn == c.numerator and pd * pd == c.denominator:
        return pn, pd
    return None, 1


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------

class RatFunc:
    """Quotient of Laurent polynomials in canonical reduced form."""

    __slots__ = ("num", "den")

    def __init__(self, num: Laurent, den: Laurent = ONE_L, reduce: bool = True):
        if den.is_zero():
            raise DivideByZero("zero denominator")
        if reduce:
            num, den = _canonicalize(num, den)
        self.num = num
        self.den = den

    # -- constructors --------------------------------------------------------

    @staticmethod
    def const(c: Union[int, Fraction]) -> "RatFunc":
        return RatFunc(Laurent.const(c), ONE_L, reduce=False)

    @staticmethod
    def s_power(k: int, c: Union[int, Fraction] = 1) -> "RatFunc":
        return RatFunc(Laurent.monomial(k, c), ONE_L, reduce=False)

    @staticmethod
    def from_laurent(p: Laurent) -> "RatFunc":
        return RatFunc(p, ONE_L, reduce=False)

    # -- predicates -----------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self) -> bool:
        return bool(self.num.terms)

    def is_one(self) -> bool:
        return self.num == ONE_L and self.den == ONE_L

    def is_laurent(self) -> bool:
        return self.den == ONE_L

    def as_laurent(self) -> Laurent:
        if self.den != ONE_L:
            raise ValueError("not a Laurent polynomial")
        return self.num

    def is_const(self) -> bool:
        return self.den == ONE_L and (
            self.num.is_zero() or set(self.num.terms) == {0}
        )

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = RatFunc.const(other)
        if isinstance(other, QuadExt):
            return other.__eq__(self)
        return (
            isinstance(other, RatFunc)
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, int):
            other = RatFunc.const(other)
        if isinstance(other, QuadExt):
            return other + self
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        return RatFunc(self.num * other.den + other.num * self.den,
                       self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den, reduce=False)

    def __sub__(self, other):
        if isinstance(other, int):
            other = RatFunc.const(other)
        if isinstance(other, QuadExt):
            return (-other) + self
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            if other == 1:
                return self
            other = RatFunc.const(other)
        if isinstance(other, QuadExt):
            return other * self
        if self.den == ONE_L and other.den == ONE_L:
            return RatFunc(self.num * other.num, ONE_L, reduce=False)
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, int):
            other = RatFunc.const(other)
        if isinstance(other, QuadExt):
            return QuadExt(self, _RF_ZERO, other.config) / other
        if other.is_zero():
            raise DivideByZero("division by zero scalar")
        return RatFunc(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return RatFunc.const(other) / self

    def __pow__(self, n: int):
        out = RatFunc.const(1)
        base = self
        if n < 0:
            base = RatFunc.const(1) / self
            n = -n
        for _ in range(n):
            out = out * base
        return out

    def inv(self) -> "RatFunc":
        return RatFunc.const(1) / self

    # -- structure ------------------------------------------------------------

    def bar(self) -> "RatFunc":
        return RatFunc(self.num.bar(), self.den.bar())

    def is_bar_invariant(self) -> bool:
        return self.bar() == self

    def val0(self) -> int:
        """Order of vanishing at s = 0 (den has nonzero constant term)."""
        if self.is_zero():
            raise ValueError("valuation of zero")
        return self.num.val()

    def deg_infty(self) -> int:
        """Top s-degree as a rational function (pole order at s = infinity)."""
        if self.is_zero():
            raise ValueError("degree of zero")
        return self.num.deg() - self.den.deg()

    def eval_one(self) -> Fraction:
        d = self.den.eval_one()
        if d == 0:
            raise PoleAtOne(f"pole at q = 1: {format_scalar(self)}")
        return self.num.eval_one() / d

    def eval_at(self, v: Fraction) -> Fraction:
        d = self.den.eval_at(v)
        if d == 0:
            raise PoleAtOne(f"pole at s = {v}")
        return self.num.eval_at(v) / d

    def __repr__(self) -> str:
        return f"RatFunc({format_scalar(self)!r})"


def _canonicalize(num: Laurent, den: Laurent) -> tuple[Laurent, Laurent]:
    """Move s-powers into num, make den a monic polynomial, cancel the gcd."""
    if num.is_zero():
        return ZERO_L, ONE_L
    vd = den.val()
    den = den.shift(-vd)
    num = num.shift(-vd)
    if den != ONE_L:
        vn = num.val()
        g = poly_gcd(num.shift(-vn), den)
        if g.deg() > 0:
            num = laurent_divexact(num, g)
            den = laurent_divexact(den, g)
        lead = den.leading()
        if lead != 1:
            den = den.scale(1 / lead)
            num = num.scale(1 / lead)
    return num, den


_RF_ZERO = RatFunc(ZERO_L, ONE_L, reduce=False)
_RF_ONE = RatFunc(ONE_L, ONE_L, reduce=False)


# ---------------------------------------------------------------------------
# Quadratic extension
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldConfig:
    """One quadratic extension K = Q(s)[x]/(x^2 - disc).

    disc is stored in s-units.  bar acts on the generator by
    bar(x) = q^{bar_twist} * x (bar_twist in q-units); consistency demands
    q^{2*bar_twist} * disc(q) = disc(q^{-1}).
    """

    disc: Laurent | None = None
    bar_twist: int = 0

    def check(self) -> None:
        if self.disc is None:
            return
        if poly_sqrt(self.disc.shift(-self.disc.val())) is not None and \
                self.disc.val() % 2 == 0:
            raise FieldMismatch("disc is a perfect square")
        lhs = self.disc.shift(4 * self.bar_twist)
        if lhs != self.disc.bar():
            raise FieldMismatch("bar twist inconsistent with disc")

    def x_val0(self) -> int:
        assert self.disc is not None
        v = self.disc.val()
        if v % 2:
            raise FieldMismatch("disc has odd valuation; x not s-graded")
        return v // 2

    def x_deg(self) -> int:
        assert self.disc is not None
        d = self.disc.deg()
        if d % 2:
            raise FieldMismatch("disc has odd degree; x not s-graded")
        return d // 2


PLAIN_FIELD = FieldConfig()


class QuadExt:
    """a + b*x over a FieldConfig with disc present."""

    __slots__ = ("a", "b", "config")

    def __init__(self, a: RatFunc, b: RatFunc, config: FieldConfig):
        if config.disc is None:
            raise NoExtension("QuadExt over a plain field")
        self.a = a
        self.b = b
        self.config = config

    @staticmethod
    def of(v: Union[int, RatFunc, "QuadExt"], config: FieldConfig) -> "QuadExt":
        if isinstance(v, QuadExt):
            if v.config != config:
                raise FieldMismatch("mixed extension contexts")
            return v
        if isinstance(v, int):
            v = RatFunc.const(v)
        return QuadExt(v, _RF_ZERO, config)

    @staticmethod
    def gen(config: FieldConfig) -> "QuadExt":
        return QuadExt(_RF_ZERO, _RF_ONE, config)

    def _coerce(self, other) -> "QuadExt":
        return QuadExt.of(other, self.config)

    def is_zero(self) -> bool:
        return self.a.is_zero() and self.b.is_zero()

    def __bool__(self) -> bool:
        return not self.is_zero()

    def is_rational(self) -> bool:
        return self.b.is_zero()

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, RatFunc)):
            other = QuadExt.of(other, self.config)
        return (
            isinstance(other, QuadExt)
            and self.config == other.config
            and self.a == other.a
            and self.b == other.b
        )

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def __add__(self, other):
        o = self._coerce(other)
        return QuadExt(self.a + o.a, self.b + o.b, self.config)

    __radd__ = __add__

    def __neg__(self):
        return QuadExt(-self.a, -self.b, self.config)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        disc = RatFunc.from_laurent(self.config.disc)
        return QuadExt(
            self.a * o.a + self.b * o.b * disc,
            self.a * o.b + self.b * o.a,
            self.config,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.is_zero():
            raise DivideByZero("division by zero scalar")
        disc = RatFunc.from_laurent(self.config.disc)
        n = o.a * o.a - o.b * o.b * disc
        if n.is_zero():
            raise DivideByZero("division by a zero divisor (disc is square?)")
        conj = QuadExt(o.a, -o.b, self.config)
        num = self * conj
        return QuadExt(num.a / n, num.b / n, self.config)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def bar(self) -> "QuadExt":
        tw = RatFunc.s_power(2 * self.config.bar_twist)
        return QuadExt(self.a.bar(), self.b.bar() * tw, self.config)

    def is_bar_invariant(self) -> bool:
        return self.bar() == self

    def conj(self) -> "QuadExt":
        """The nontrivial Galois conjugate x -> -x."""
        return QuadExt(self.a, -self.b, self.config)

    def __repr__(self) -> str:
        return f"QuadExt({format_scalar(self)!r})"


Scalar = Union[RatFunc, QuadExt]


# ---------------------------------------------------------------------------
# Spec operations on scalars
# ---------------------------------------------------------------------------

def bar(v: Scalar) -> Scalar:
    return v.bar()


def degree_at_zero(v: Scalar) -> Union[int, float]:
    """Degree at q = 0 (order of the pole at q = infinity), in s-units.

    Defined for elements integral over Q[s, s^{-1}]: Laurent polynomials, and
    extension elements a + b*x with a Laurent and b*x in the integral subring
    (b times half the disc valuation in s stays Laurent).  Returns -inf for
    zero, raises NotRegularAtZero otherwise.
    """
    if isinstance(v, QuadExt):
        if not v.a.is_laurent() or not v.b.is_laurent():
            raise NotRegularAtZero(format_scalar(v))
        da = MINUS_INF if v.a.is_zero() else v.a.num.deg()
        db = MINUS_INF if v.b.is_zero() else v.b.num.deg() + v.config.x_deg()
        return max(da, db)
    if v.is_zero():
        return MINUS_INF
    if not v.is_laurent():
        raise NotRegularAtZero(format_scalar(v))
    return v.num.deg()


def trace_norm(v: QuadExt) -> tuple[RatFunc, RatFunc]:
    """Sum and product of the two Galois images of a + b*x."""
    if not isinstance(v, QuadExt):
        raise NoExtension("trace/norm need an extension element")
    disc = RatFunc.from_laurent(v.config.disc)
    return v.a + v.a, v.a * v.a - v.b * v.b * disc


def eval_at_one(v: Union[Laurent, RatFunc]) -> Fraction:
    if isinstance(v, Laurent):
        return v.eval_one()
    return v.eval_one()


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def format_laurent(p: Laurent) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for k in sorted(p.terms):
        c = p.terms[k]
        if c.denominator == 1:
            cs = str(c.numerator)
        else:
            cs = f"{c.numerator}/{c.denominator}"
        parts.append(f"{cs}*s^{k}")
    return " + ".join(parts)


def format_scalar(v: Scalar) -> str:
    if isinstance(v, QuadExt):
        return f"({format_scalar(v.a)}) + ({format_scalar(v.b)})*x"
    if v.den == ONE_L:
        return format_laurent(v.num)
    return f"({format_laurent(v.num)})/({format_laurent(v.den)})"


_TERM_RE = re.compile(r"^(-?\d+)(?:/(\d+))?\*s\^(-?\d+)$")


def parse_laurent(text: str) -> Laurent:
    text = text.strip()
    if text == "0":
        return ZERO_L
    terms: dict[int, Fraction] = {}
    for raw in text.split(" + "):
        m = _TERM_RE.match(raw.strip())
        if not m:
            raise ParseError(f"bad Laurent term: {raw!r}")
        num, den, k = m.group(1), m.group(2) or "1", int(m.group(3))
        c = Fraction(int(num), int(den))
        if k in terms or c == 0:
            raise ParseError(f"non-canonical Laurent text: {text!r}")
        terms[k] = c
    return Laurent(terms)


def parse_scalar(text: str, config: FieldConfig = PLAIN_FIELD) -> Scalar:
    text = text.strip()
    m = re.match(r"^\((.*)\) \+ \((.*)\)\*x$", text, re.DOTALL)
    if m:
        if config.disc is None:
            raise ParseError("extension element over a plain field")
        a = _parse_ratfunc(m.group(1))
        b = _parse_ratfunc(m.group(2))
        return QuadExt(a, b, config)
    return _parse_ratfunc(text)


def _parse_ratfunc(text: str) -> RatFunc:
    text = text.strip()
    m = re.match(r"^\((.*)\)/\((.*)\)$", text)
    if m:
        return RatFunc(parse_laurent(m.group(1)), parse_laurent(m.group(2)))
    return RatFunc.from_laurent(parse_laurent(text))


# ---------------------------------------------------------------------------
# Convenience constructors used all over the code base and the fixtures
# ---------------------------------------------------------------------------

def sp(k: int, c: Union[int, Fraction] = 1) -> RatFunc:
    """c * s^k."""
    return RatFunc.s_power(k, c)


def qp(c: Union[int, Fraction], k: int) -> RatFunc:
    """c * q^k."""
    return RatFunc.s_power(2 * k, c)


Q = qp(1, 1)
S = sp(1)
ONE = RatFunc.const(1)
ZERO = RatFunc.const(0)


def q_poly(*coeff_exp: tuple[Union[int, Fraction], int]) -> RatFunc:
    """Sum of c * q^k terms."""
    return RatFunc.from_laurent(
        Laurent.from_terms([(2 * k, c) for c, k in coeff_exp])
    )
