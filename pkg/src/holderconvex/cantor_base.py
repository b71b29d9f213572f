"""The self-similar base set F0 and the CDF phi0 of its natural measure.

F0 is the attractor of N similarities of ratio L = N**(-1/alpha) whose
images are spread evenly over [0, 1]: child i starts at i*P with
P = (1 - L)/(N - 1).  phi0 gives mass 1/N to each child and is constant on
the gaps between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator

from .errors import DepthLimitExceeded, InvalidParams, OutOfDomain, PrecisionUnreachable
from .records import EvalResult, Address, IntervalRec, Kind, Step, StepKind, TerminalKind, IDENTITY_FRAME
from .scalar import DEFAULT_PRECISION, AmbiguityLog, Mode, Scalar, as_scalar, field_for, pow_rational


class Strictness(str, Enum):
    STRICT = "strict"
    RELAXED = "relaxed"


def parse_alpha(alpha) -> Fraction:
    if isinstance(alpha, Scalar):
        alpha = alpha.exact_value
    if isinstance(alpha, float):
        raise InvalidParams("alpha must be given as an exact fraction such as '1/2'")
    try:
        return Fraction(alpha)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParams(f"cannot parse alpha {alpha!r}") from exc


@dataclass(frozen=True)
class ConstructionParams:
    N: int = 128
    alpha: Fraction = Fraction(1, 2)
    mode: Mode = Mode.EXACT
    strictness: Strictness = Strictness.STRICT
    float_precision_bits: int = DEFAULT_PRECISION
    max_depth: int = 60
    max_child_depth: int = 12
    enumeration_budget: int = 2_000_000

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_alpha(self.alpha))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "strictness", Strictness(self.strictness))
        N, a = self.N, self.alpha
        if not isinstance(N, int) or N < 4 or N % 2:
            raise InvalidParams(f"N must be an even integer >= 4, got {N!r}")
        if not 0 < a < 1:
            raise InvalidParams(f"alpha must lie in (0, 1), got {a}")
        if self.mode is Mode.EXACT and a.numerator != 1:
            raise InvalidParams("exact mode needs 1/alpha to be an integer; use guarded mode")
        if self.float_precision_bits < 53:
            raise InvalidParams("float_precision_bits must be at least 53")
        if self.strict:
            if N <= 100:
                raise InvalidParams(f"strict mode needs N > 100, got N={N}; pass relaxed strictness")
            # N^(1-alpha) > 4  <=>  N^(q-p) > 4^q  for alpha = p/q
            if N ** (a.denominator - a.numerator) <= 4 ** a.denominator:
                raise InvalidParams("strict mode needs N^(1-alpha) > 4")

    @property
    def strict(self) -> bool:
        return self.strictness is Strictness.STRICT

    @property
    def warnings(self) -> tuple[str, ...]:
        if self.strict:
            return ()
        return (f"relaxed mode: largeness assumptions on N are not enforced (N={self.N})",)

    @classmethod
    def relaxed(cls, N: int, alpha="1/2", **kw) -> ConstructionParams:
        return cls(N=N, alpha=alpha, strictness=Strictness.RELAXED, **kw)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "alpha": f"{self.alpha.numerator}/{self.alpha.denominator}",
            "mode": self.mode.value,
            "strict": self.strict,
            "float_precision_bits": self.float_precision_bits,
            "max_depth": self.max_depth,
        }


class Geometry:
    """Derived constants of one parameter set, as raw field numbers."""

    def __init__(self, params: ConstructionParams):
        self.params = params
        self.F = F = field_for(params.mode, params.float_precision_bits)
        self.N = N = params.N
        a = params.alpha
        self.inv_alpha = (a.denominator, a.numerator)  # 1/alpha as p/q
        self.M = F.pow(F.num(N), a.denominator, a.numerator)  # inverse child length
        self.L = 1 / self.M if not F.exact else Fraction(1, self.M)
        self.P = (1 - self.L) / (N - 1)
        self.gap0 = self.P - self.L
        self.Q = (self.M - 1) // (N - 1) if F.exact else None
        self.inv_N = F.num(Fraction(1, N))
        # tail factor of the plateau oscillation: 1/(1 - N^(-2/alpha))
        self.N_pow_2ia = F.pow(F.num(N), 2 * a.denominator, a.numerator)
        self.tail_factor = 1 / (1 - 1 / self.N_pow_2ia)
        self.half_N = Fraction(1, 2 * N)

    def delta(self, length):
        """Plateau amplitude (length/N)^(2/alpha) of an interval."""
        p, q = self.inv_alpha
        return self.F.pow(length / self.N, 2 * p, q)

    def tail(self, length):
        """Bound on |g - v| and |g1 - v| inside a block of value v."""
        return self.tail_factor * self.delta(length)

    def child_integral_offset(self, i: int):
        """Integral of local phi0 over [0, i*P]."""
        N, L = self.N, self.L
        return L * Fraction(i * i, 2 * N) + self.gap0 * Fraction(i * (i + 1), 2 * N)

    @cached_property
    def phi0_integral(self):
        """Integral of phi0 over [0, 1] from the self-similar identity."""
        N, L = self.N, self.L
        return (self.child_integral_offset(N - 1) + L * Fraction(N - 1, N)) / (1 - L / N)

    def gap_length(self, d: int):
        return self.gap0 * self.L ** d

    def tail_upper(self, length) -> Fraction:
        return self.F.upper(self.tail(length))


@lru_cache(maxsize=64)
def geometry(params: ConstructionParams) -> Geometry:
    return Geometry(params)


# past this many bits exact plateau descents get too slow to be useful
EXACT_BITS_LIMIT = 1 << 16


def guard_exact_size(F, *values) -> None:
    """Raise once exact denominators outgrow EXACT_BITS_LIMIT."""
    if not F.exact:
        return
    for v in values:
        if v.denominator.bit_length() > EXACT_BITS_LIMIT:
            raise PrecisionUnreachable(
                f"exact denominators passed {EXACT_BITS_LIMIT} bits; guarded mode reaches this precision")


def to_raw(params: ConstructionParams, x):
    """Point as a field number, after domain checks."""
    F = geometry(params).F
    s = as_scalar(x)
    lo, hi = s.bounds()
    if lo < 0 or hi > 1:
        raise OutOfDomain(f"x = {s} is outside [0, 1]")
    if s.is_exact:
        return F.num(s.exact_value)
    return F.num(s.raw(params.float_precision_bits))


# -- the digit descent ------------------------------------------------------

@dataclass
class F0Path:
    """Record of a descent through the children of F0 towards a point."""

    digits: list = field(default_factory=list)  # child indices i_d
    locals: list = field(default_factory=list)  # local coordinates x_0, x_1, ...
    terminal: str = "truncated"  # endpoint0 | endpoint1 | gap | cycle | truncated
    gap_index: int | None = None
    cycle_start: int | None = None
    origin: object = 0  # global left end of the deepest child
    scale: object = 1  # its length L^depth
    mass: object = 0  # phi0 at its left end
    ambiguity: AmbiguityLog = field(default_factory=AmbiguityLog)

    @property
    def depth(self) -> int:
        return len(self.digits)


def f0_descend(geom: Geometry, x, eps: Fraction, extra: int = 8) -> F0Path:
    """Walk down the children containing ``x`` until it resolves.

    Stops on a gap, on a child endpoint, on a repeated local coordinate
    (exact mode only), or once the deepest child carries mass <= eps and
    ``extra`` further levels found nothing exact.
    """
    F, N, P, L = geom.F, geom.N, geom.P, geom.L
    path = F0Path()
    path.origin, path.scale, path.mass = F.num(0), F.num(1), F.num(0)
    mass_unit = Fraction(1)
    seen = {} if F.exact else None
    budget = None
    xl = x
    max_depth = geom.params.max_depth
    while True:
        path.locals.append(xl)
        if F.eq(xl, 0):
            path.terminal = "endpoint0"
            return path
        if F.eq(xl, 1):
            path.terminal = "endpoint1"
            return path
        if seen is not None:
            if xl in seen:
                path.terminal = "cycle"
                path.cycle_start = seen[xl]
                return path
            seen[xl] = path.depth
        if budget is None and mass_unit <= eps:
            budget = path.depth + extra
        if (budget is not None and path.depth >= budget) or path.depth >= max_depth:
            if mass_unit > eps:
                raise PrecisionUnreachable(f"F0 descent hit depth {path.depth} before reaching {float(eps):.3g}")
            path.terminal = "truncated"
            return path
        i = min(F.floor(xl / P, path.ambiguity), N - 1)
        r = xl - i * P
        if F.le(r, L, path.ambiguity):
            path.digits.append(i)
            path.origin = path.origin + path.scale * i * P
            path.mass = path.mass + mass_unit * Fraction(i, N)
            path.scale = path.scale * L
            mass_unit /= N
            xl = r / L
            continue
        path.terminal = "gap"
        path.gap_index = i
        return path


def path_gap(geom: Geometry, path: F0Path):
    """Global (a, b, phi0 value) of the gap a path ended in."""
    i = path.gap_index
    P, L, N = geom.P, geom.L, geom.N
    a = path.origin + path.scale * (i * P + L)
    b = path.origin + path.scale * ((i + 1) * P)
    v = path.mass + Fraction(i + 1, N ** (path.depth + 1))
    return a, b, v


def _unwind(offsets, scales, inner):
    v = inner
    for off, sc in zip(reversed(offsets), reversed(scales)):
        v = off + sc * v
    return v


def _solve_cycle(offsets, scales, start):
    """Fixed point of the affine composition of steps ``start..end``."""
    A, B = 0, 1
    for off, sc in zip(offsets[start:], scales[start:]):
        A, B = A + B * off, B * sc
    return A / (1 - B)


def phi0_local_value(geom: Geometry, path: F0Path):
    """(value, err) of phi0 at the point described by ``path``."""
    N = geom.N
    offsets = [Fraction(i, N) for i in path.digits]
    scales = [Fraction(1, N)] * len(offsets)
    err = Fraction(0)
    t = path.terminal
    if t == "endpoint0":
        inner = 0
    elif t == "endpoint1":
        inner = 1
    elif t == "gap":
        inner = Fraction(path.gap_index + 1, N)
    elif t == "cycle":
        s = path.cycle_start
        inner = _solve_cycle(offsets, scales, s)
        offsets, scales = offsets[:s], scales[:s]
    else:
        inner = Fraction(1, 2)
        err = Fraction(1, 2 * N ** path.depth)
    return _unwind(offsets, scales, inner), err


def phi0_local_integral(geom: Geometry, path: F0Path):
    """(value, err) of the integral of phi0 over [0, x]."""
    N, L, P, F = geom.N, geom.L, geom.P, geom.F
    offsets, scales = [], []
    for d, i in enumerate(path.digits):
        offsets.append(geom.child_integral_offset(i) + L * Fraction(i, N) * path.locals[d + 1])
        scales.append(L / N)
    err = Fraction(0)
    t = path.terminal
    xl = path.locals[-1] if path.locals else None
    if t == "endpoint0":
        inner = F.num(0)
    elif t == "endpoint1":
        inner = geom.phi0_integral
    elif t == "gap":
        i = path.gap_index
        inner = geom.child_integral_offset(i) + L * (Fraction(i, N) + Fraction(1, 2 * N)) \
            + Fraction(i + 1, N) * (xl - i * P - L)
    elif t == "cycle":
        s = path.cycle_start
        inner = _solve_cycle(offsets, scales, s)
        offsets, scales = offsets[:s], scales[:s]
    else:
        inner = xl / 2
        err = F.upper(xl / 2 * (L / N) ** path.depth)
    return _unwind(offsets, scales, inner), err


def _ambiguity_err(geom: Geometry, path_width: Fraction) -> Fraction:
    """Hoelder-type inflation for guessed branches in guarded mode."""
    if path_width == 0:
        return Fraction(0)
    from .analysis.holder import analytic_phi0_bound  # local import: avoids a cycle

    a = geom.params.alpha
    c = analytic_phi0_bound(geom.params)
    w = pow_rational(path_width, a.numerator, a.denominator).bounds()[1]
    return (6 * c + 2) * w


def phi0_eval(params: ConstructionParams, x, eps=Fraction(1, 10 ** 12)) -> EvalResult:
    """phi0(x) with an error bound; exact at gaps, endpoints and periodic orbits."""
    geom = geometry(params)
    xr = to_raw(params, x)
    eps = Fraction(as_scalar(eps).exact_value)
    path = f0_descend(geom, xr, eps)
    value, err = phi0_local_value(geom, path)
    err += _ambiguity_err(geom, path.ambiguity.width)
    kind = TerminalKind.TRUNCATED if path.terminal == "truncated" else TerminalKind.EXACT
    steps = tuple(Step(StepKind.CHILD, i + 1) for i in path.digits)
    if path.terminal == "gap":
        steps += (Step(StepKind.GAP, path.gap_index + 1),)
    return EvalResult(
        geom.F.wrap(geom.F.num(value)),
        Scalar.exact(err),
        Address(steps, IDENTITY_FRAME, kind),
        params.warnings,
    )


# -- enumeration ------------------------------------------------------------

def children_at_depth(params: ConstructionParams, d: int) -> list[IntervalRec]:
    """The N**d construction intervals of depth d, left to right."""
    if d < 0:
        raise ValueError("depth must be nonnegative")
    if d > params.max_child_depth or params.N ** d > params.enumeration_budget:
        raise DepthLimitExceeded(f"depth {d} exceeds the configured limit")
    geom = geometry(params)
    F = geom.F
    out = []
    for start, mass in _child_starts(geom, d):
        out.append(IntervalRec(
            F.wrap(start), F.wrap(start + geom.L ** d), Kind.CHILD, d,
            base_value=Scalar.exact(mass),
        ))
    return out


def _child_starts(geom: Geometry, d: int) -> Iterator[tuple]:
    F, N, P, L = geom.F, geom.N, geom.P, geom.L
    starts = [(F.num(0), Fraction(0))]
    for level in range(d):
        scale = L ** level
        unit = Fraction(1, N ** (level + 1))
        starts = [(s + scale * i * P, m + i * unit) for s, m in starts for i in range(N)]
    return iter(starts)


def gaps_at_depth(params: ConstructionParams, d: int) -> Iterator[IntervalRec]:
    """Gaps between the children of every depth-d child, left to right."""
    geom = geometry(params)
    F, N, P, L = geom.F, geom.N, geom.P, geom.L
    scale = L ** d
    unit = Fraction(1, N ** (d + 1))
    for start, mass in _child_starts(geom, d):
        for i in range(N - 1):
            a = start + scale * (i * P + L)
            b = start + scale * ((i + 1) * P)
            v = mass + (i + 1) * unit
            yield IntervalRec(F.wrap(a), F.wrap(b), Kind.GAP, d,
                              base_value=Scalar.exact(v), delta=F.wrap(geom.delta(b - a)), index=i + 1)


def gaps_level0(params: ConstructionParams) -> list[IntervalRec]:
    """The N - 1 gaps between consecutive depth-1 children."""
    return list(gaps_at_depth(params, 0))


def gap_count_at_depth(N: int, d: int) -> int:
    return N ** d * (N - 1)


def gap_length_bound(params: ConstructionParams) -> Fraction:
    """The sharper 1/(N-1) bound on top-level gap lengths."""
    return Fraction(1, params.N - 1)


def gap_length_bound_guarded(params: ConstructionParams, depth: int) -> float:
    """The looser 2^(alpha/2)/N^(depth+1) bound."""
    return 2 ** (float(params.alpha) / 2) / params.N ** (depth + 1)


def child_depth_for_level(params: ConstructionParams, k: int) -> int:
    """Smallest d with N^(-d/alpha) <= N^(-k)."""
    return math.ceil(k * params.alpha)
