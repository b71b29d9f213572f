"""Exact rationals and guarded high-precision intervals behind one value type.

Two representations share the :class:`Scalar` wrapper:

* ``Mode.EXACT`` holds a :class:`fractions.Fraction`.
* ``Mode.GUARDED`` holds an mpmath interval whose endpoints are rounded
  outward, so the true real is always enclosed.

The construction code does not use :class:`Scalar` in its inner loops.  It
works on raw numbers (``Fraction`` or mpmath ``ivmpf``) through a *field*
object (:class:`ExactField` / :class:`GuardedField`) and wraps results at
the API boundary.
"""

from __future__ import annotations

import math
import re
from enum import Enum
from fractions import Fraction
from functools import lru_cache

import gmpy2
from mpmath import libmp, mp, mpf
from mpmath.ctx_iv import MPIntervalContext

from .errors import IrrationalInExactMode, NegativeBase, Undecidable

DEFAULT_PRECISION = 256


class Mode(str, Enum):
    EXACT = "exact"
    GUARDED = "guarded"


class Ordering(str, Enum):
    LESS = "Less"
    EQUAL = "Equal"
    GREATER = "Greater"
    UNDECIDABLE = "Undecidable"


class _IntervalContext(MPIntervalContext):
    """mpmath intervals that also accept Fraction operands, enclosed outward."""

    def convert(self, x):
        if isinstance(x, Fraction):
            return _iv_from_fraction(self, x)
        return super().convert(x)


@lru_cache(maxsize=None)
def interval_context(prec: int = DEFAULT_PRECISION) -> MPIntervalContext:
    """Shared mpmath interval context at a fixed working precision."""
    ctx = _IntervalContext()
    ctx.prec = prec
    return ctx


def _iv_from_fraction(ctx, q: Fraction):
    if q.denominator == 1:
        return ctx.mpf(q.numerator)
    return ctx.mpf(q.numerator) / q.denominator


def iv_bounds(v) -> tuple[Fraction, Fraction]:
    """Exact rational endpoints of an mpmath interval (or of a plain rational)."""
    if isinstance(v, (int, Fraction)):
        q = Fraction(v)
        return q, q
    lo, hi = v._mpi_
    (ln, ld), (hn, hd) = libmp.to_rational(lo), libmp.to_rational(hi)
    return Fraction(int(ln), int(ld)), Fraction(int(hn), int(hd))


def _exact_root(q: Fraction, k: int) -> Fraction | None:
    if k == 1:
        return q
    num, ok_n = gmpy2.iroot(q.numerator, k)
    if not ok_n:
        return None
    den, ok_d = gmpy2.iroot(q.denominator, k)
    if not ok_d:
        return None
    return Fraction(int(num), int(den))


class Scalar:
    """An exact rational or an outward-rounded interval."""

    __slots__ = ("_q", "_iv", "_prec")

    def __init__(self, value=0, *, prec: int | None = None):
        if isinstance(value, Scalar):
            self._q, self._iv, self._prec = value._q, value._iv, value._prec
            return
        if prec is None and not isinstance(value, float):
            self._q = Fraction(value)
            self._iv = None
            self._prec = None
            return
        ctx = interval_context(prec or DEFAULT_PRECISION)
        self._q = None
        self._prec = ctx.prec
        if isinstance(value, (int, Fraction)):
            self._iv = _iv_from_fraction(ctx, Fraction(value))
        else:
            self._iv = ctx.convert(value)

    # -- constructors ---------------------------------------------------
    @classmethod
    def exact(cls, value) -> Scalar:
        out = cls.__new__(cls)
        out._q = value if isinstance(value, Fraction) else Fraction(value)
        out._iv = None
        out._prec = None
        return out

    @classmethod
    def from_interval(cls, iv, prec: int = DEFAULT_PRECISION) -> Scalar:
        out = cls.__new__(cls)
        out._q = None
        out._iv = iv
        out._prec = prec
        return out

    @classmethod
    def guarded(cls, approx, err=0, prec: int = DEFAULT_PRECISION) -> Scalar:
        """Interval ``[approx - err, approx + err]`` (widened outward)."""
        ctx = interval_context(prec)
        lo_q = Fraction(approx) - Fraction(err)
        hi_q = Fraction(approx) + Fraction(err)
        lo = _iv_from_fraction(ctx, lo_q)
        hi = _iv_from_fraction(ctx, hi_q)
        return cls.from_interval(ctx.mpf([lo.a, hi.b]), prec)

    # -- inspection -----------------------------------------------------
    @property
    def mode(self) -> Mode:
        return Mode.EXACT if self._q is not None else Mode.GUARDED

    @property
    def is_exact(self) -> bool:
        return self._q is not None

    @property
    def exact_value(self) -> Fraction:
        if self._q is None:
            raise IrrationalInExactMode("guarded scalar has no exact value")
        return self._q

    @property
    def interval(self):
        return self._iv

    @property
    def precision(self) -> int | None:
        return self._prec

    @property
    def approx_value(self) -> mpf:
        """Interval midpoint (exact, since the endpoints are dyadic)."""
        q = self.midpoint()
        with mp.workprec((self._prec or DEFAULT_PRECISION) + 2):
            return mpf(q.numerator) / q.denominator

    @property
    def err_radius(self) -> mpf:
        """Half-width, rounded up to 64 bits."""
        rad = self.radius()
        return mpf(libmp.from_rational(rad.numerator, rad.denominator, 64, libmp.round_ceiling))

    def bounds(self) -> tuple[Fraction, Fraction]:
        if self._q is not None:
            return self._q, self._q
        return iv_bounds(self._iv)

    def midpoint(self) -> Fraction:
        lo, hi = self.bounds()
        return (lo + hi) / 2

    def radius(self) -> Fraction:
        lo, hi = self.bounds()
        return (hi - lo) / 2

    def raw(self, prec: int | None = None):
        """The underlying Fraction, or an interval at ``prec`` bits."""
        if prec is None:
            return self._q if self._q is not None else self._iv
        ctx = interval_context(prec)
        if self._q is not None:
            return _iv_from_fraction(ctx, self._q)
        return ctx.convert(self._iv)

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Scalar):
            return other
        if isinstance(other, (int, Fraction)):
            return Scalar.exact(other)
        return NotImplemented

    def _binary(self, other, op):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self._q is not None and other._q is not None:
            return Scalar.exact(op(self._q, other._q))
        prec = max(p for p in (self._prec, other._prec) if p)
        return Scalar.from_interval(op(self.raw(prec), other.raw(prec)), prec)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._binary(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._binary(other, lambda a, b: b * a)

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: b / a)

    def __neg__(self):
        if self._q is not None:
            return Scalar.exact(-self._q)
        return Scalar.from_interval(-self._iv, self._prec)

    def __abs__(self):
        if self._q is not None:
            return Scalar.exact(abs(self._q))
        lo, hi = self.bounds()
        if lo >= 0:
            return self
        if hi <= 0:
            return -self
        ctx = interval_context(self._prec)
        top = _iv_from_fraction(ctx, max(-lo, hi))
        return Scalar.from_interval(ctx.mpf([0, top.b]), self._prec)

    # -- comparison -----------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Scalar.exact(other)
        if not isinstance(other, Scalar):
            return NotImplemented
        if self._q is not None and other._q is not None:
            return self._q == other._q
        return self.bounds() == other.bounds() and self.mode == other.mode

    def __hash__(self):
        return hash(self._q) if self._q is not None else hash(self.bounds())

    def __lt__(self, other):
        return _decided(compare(self, other)) is Ordering.LESS

    def __le__(self, other):
        return _decided(compare(self, other)) is not Ordering.GREATER

    def __gt__(self, other):
        return _decided(compare(self, other)) is Ordering.GREATER

    def __ge__(self, other):
        return _decided(compare(self, other)) is not Ordering.LESS

    def __float__(self):
        if self._q is not None:
            return float(self._q)
        return float(self._iv.mid)

    def __str__(self):
        return format_scalar(self)

    def __repr__(self):
        return f"Scalar({format_scalar(self)!r})"


def _decided(order: Ordering) -> Ordering:
    if order is Ordering.UNDECIDABLE:
        raise Undecidable("interval comparison cannot be decided")
    return order


def as_scalar(value) -> Scalar:
    if isinstance(value, Scalar):
        return value
    if isinstance(value, str):
        return parse_scalar(value)
    if isinstance(value, float):
        return Scalar.exact(Fraction(value))
    return Scalar.exact(value)


def compare(x, y) -> Ordering:
    """Three-way comparison; overlapping guarded intervals are Undecidable."""
    x, y = as_scalar(x), as_scalar(y)
    if x.is_exact and y.is_exact:
        a, b = x.exact_value, y.exact_value
        return Ordering.LESS if a < b else Ordering.GREATER if a > b else Ordering.EQUAL
    xl, xh = x.bounds()
    yl, yh = y.bounds()
    if xh < yl:
        return Ordering.LESS
    if xl > yh:
        return Ordering.GREATER
    if xl == xh == yl == yh:
        return Ordering.EQUAL
    return Ordering.UNDECIDABLE


def pow_rational(x, p: int, q: int = 1, *, require_exact: bool = False,
                 prec: int = DEFAULT_PRECISION) -> Scalar:
    """``x ** (p/q)`` for ``x >= 0``; exact whenever the result is rational."""
    if q <= 0:
        raise ValueError("q must be positive")
    x = as_scalar(x)
    lo, _ = x.bounds()
    if lo < 0:
        raise NegativeBase(f"negative base {x}")
    g = math.gcd(p, q)
    p, q = p // g, q // g
    if x.is_exact:
        v = x.exact_value
        if v == 0:
            if p < 0:
                raise ZeroDivisionError("0 to a negative power")
            return Scalar.exact(0 if p else 1)
        root = _exact_root(v, q)
        if root is not None:
            return Scalar.exact(root ** p)
        if require_exact:
            raise IrrationalInExactMode(f"{v}^({p}/{q}) is irrational")
    ctx = interval_context(prec)
    return Scalar.from_interval(iv_pow(ctx, x.raw(prec), p, q), prec)


def iv_pow(ctx, v, p: int, q: int):
    """Outward-rounded ``v ** (p/q)`` for a nonnegative interval ``v``."""
    if q == 1:
        return v ** p if p >= 0 else 1 / v ** (-p)
    lo, hi = iv_bounds(v)
    if lo == 0 and hi == 0:
        return ctx.mpf(0)
    base = v ** p if p >= 0 else 1 / v ** (-p)
    if lo > 0:
        return ctx.exp(ctx.log(base) / q)
    # interval touching zero: the map is monotone, take endpoints separately
    top = ctx.exp(ctx.log(ctx.mpf(base.b)) / q)
    return ctx.mpf([0, top.b])


# -- textual forms --------------------------------------------------------

_GUARDED_RE = re.compile(r"^\s*([^±]+?)\s*(?:±|\+-|\+/-)\s*(\S+)\s*$")


def parse_scalar(text: str, prec: int = DEFAULT_PRECISION) -> Scalar:
    """Parse ``p/q``, an integer, a decimal, or ``value±err``."""
    m = _GUARDED_RE.match(text)
    if m:
        return Scalar.guarded(Fraction(m.group(1)), Fraction(m.group(2)), prec)
    return Scalar.exact(Fraction(text.strip()))


def format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_err(err: Fraction, digits: int = 2) -> str:
    """Decimal upper bound of a nonnegative rational, rounded up."""
    if err == 0:
        return "0"
    e = math.floor(math.log10(err.numerator) - math.log10(err.denominator)) - digits + 1
    scale = Fraction(10) ** (-e)
    mant = math.ceil(err * scale)
    if mant >= 10 ** digits:
        mant = math.ceil(Fraction(mant, 10))
        e += 1
    mant_s = str(mant).rstrip("0") or "0"
    e += len(str(mant)) - len(mant_s)
    if len(mant_s) > 1:
        return f"{mant_s[0]}.{mant_s[1:]}e{e + len(mant_s) - 1}"
    return f"{mant_s}e{e}"


def format_decimal(q: Fraction, err: Fraction = Fraction(0)) -> str:
    """Decimal string with enough digits to stay well inside ``err``."""
    if err > 0:
        digits = max(6, min(80, 2 - math.floor(math.log10(err.numerator) - math.log10(err.denominator))))
    else:
        digits = 40
    scaled = round(q * 10 ** digits)
    sign = "-" if scaled < 0 else ""
    s = str(abs(scaled)).rjust(digits + 1, "0")
    whole, frac = s[:-digits], s[-digits:].rstrip("0")
    return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"


def format_pair(value: Fraction, err: Fraction) -> tuple[str, str]:
    # the printed error also absorbs the rounding of the printed value
    text = format_decimal(value, err)
    return text, format_err(err + abs(value - Fraction(text)))


def format_scalar(x: Scalar) -> str:
    if x.is_exact:
        return format_fraction(x.exact_value)
    mid, err = format_pair(x.midpoint(), x.radius())
    return f"{mid}±{err}"


def format_value(value: Fraction, err: Fraction) -> str:
    """``p/q`` when exact, ``decimal ± err`` otherwise; the text encloses the value."""
    if err == 0:
        return format_fraction(value)
    mid, e = format_pair(value, err)
    return f"{mid} ± {e}"


# -- fields used by the construction --------------------------------------

class ExactField:
    """Rational arithmetic; every comparison is decided."""

    exact = True
    prec = None

    def num(self, v):
        return v if isinstance(v, Fraction) else Fraction(v)

    def pow(self, x, p: int, q: int = 1):
        if q == 1:
            return x ** p
        root = _exact_root(x, q)
        if root is None:
            raise IrrationalInExactMode(f"{x}^(1/{q}) is irrational")
        return root ** p

    def floor(self, t, state=None) -> int:
        return math.floor(t)

    def lt(self, a, b, state=None) -> bool:
        return a < b

    def le(self, a, b, state=None) -> bool:
        return a <= b

    def eq(self, a, b) -> bool:
        return a == b

    def lower(self, v) -> Fraction:
        return v

    def upper(self, v) -> Fraction:
        return v

    def mid(self, v) -> Fraction:
        return v

    def width(self, v) -> Fraction:
        return Fraction(0)

    def wrap(self, v) -> Scalar:
        return Scalar.exact(v)


class AmbiguityLog:
    """Collects the widths of branch decisions a guarded descent had to guess."""

    __slots__ = ("width",)

    def __init__(self):
        self.width = Fraction(0)

    def note(self, w: Fraction):
        if w > self.width:
            self.width = w


class GuardedField:
    """Outward-rounded interval arithmetic at a fixed precision.

    Branch decisions whose interval straddles the threshold follow the
    midpoint and record the straddle width in an :class:`AmbiguityLog`;
    callers turn that width into an extra error term.
    """

    exact = False

    def __init__(self, prec: int = DEFAULT_PRECISION):
        self.prec = prec
        self.ctx = interval_context(prec)

    def num(self, v):
        if isinstance(v, (int, Fraction)):
            return _iv_from_fraction(self.ctx, Fraction(v))
        return self.ctx.convert(v)

    def pow(self, x, p: int, q: int = 1):
        return iv_pow(self.ctx, x, p, q)

    def floor(self, t, state=None) -> int:
        lo, hi = iv_bounds(t)
        fl, fh = math.floor(lo), math.floor(hi)
        if fl == fh:
            return fl
        if state is not None:
            state.note(hi - lo)
        return math.floor((lo + hi) / 2)

    def lt(self, a, b, state=None) -> bool:
        al, ah = iv_bounds(a)
        bl, bh = iv_bounds(b)
        if ah < bl:
            return True
        if al >= bh:
            return False
        if state is not None:
            state.note(max(ah, bh) - min(al, bl))
        return (al + ah) < (bl + bh)

    def le(self, a, b, state=None) -> bool:
        al, ah = iv_bounds(a)
        bl, bh = iv_bounds(b)
        if ah <= bl:
            return True
        if al > bh:
            return False
        if state is not None:
            state.note(max(ah, bh) - min(al, bl))
        return (al + ah) <= (bl + bh)

    def eq(self, a, b) -> bool:
        al, ah = iv_bounds(a)
        bl, bh = iv_bounds(b)
        return al == ah == bl == bh

    def lower(self, v) -> Fraction:
        return iv_bounds(v)[0]

    def upper(self, v) -> Fraction:
        return iv_bounds(v)[1]

    def mid(self, v) -> Fraction:
        lo, hi = iv_bounds(v)
        return (lo + hi) / 2

    def width(self, v) -> Fraction:
        lo, hi = iv_bounds(v)
        return hi - lo

    def wrap(self, v) -> Scalar:
        return Scalar.from_interval(v, self.prec)


@lru_cache(maxsize=None)
def field_for(mode: Mode, prec: int = DEFAULT_PRECISION):
    return ExactField() if Mode(mode) is Mode.EXACT else GuardedField(prec)
