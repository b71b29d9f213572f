"""f(x) = int_0^x g, the constant K = int_0^1 g, and segment integrals.

f splits as Phi0(x) + E(x): Phi0 integrates phi0 and follows the
self-similar recursion of F0, while E integrates g - phi0.  E vanishes over
every complete gap once K = 1/2, so only the gap containing x contributes;
inside it, complete blocks and slots have closed forms and the partial
piece is handled recursively.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .cantor_base import (
    ConstructionParams,
    Geometry,
    _ambiguity_err,
    f0_descend,
    geometry,
    guard_exact_size,
    path_gap,
    phi0_local_integral,
    to_raw,
)
from .errors import InvalidParams, PrecisionUnreachable
from .records import EvalResult, IntervalRec, Kind
from .scalar import AmbiguityLog, Scalar, as_scalar
from .tower import locate

DEFAULT_EPS = Fraction(1, 10 ** 12)
_K_EPS = Fraction(1, 10 ** 60)


@dataclass(frozen=True)
class QuadratureNode:
    interval: IntervalRec
    contribution: Scalar
    err: Scalar
    method: str  # PlateauExact | TransitionalSelfSimilar | HolderFallback


@dataclass(frozen=True)
class SelfSimilarConstant:
    """K = A/(1 - B) together with the sweep sums that produced it."""

    K: object
    err: Fraction
    A: object
    B: object
    sweep_err: Fraction
    deviation_total: Fraction  # bound on the summed a(l) over every gap


def _square_ratio(geom: Geometry) -> Fraction:
    # delta(l/N - 2 delta) <= delta(l)/N^(2/alpha)
    return Fraction(geom.N) / geom.F.lower(geom.N_pow_2ia) ** 2


def _square_sum(geom: Geometry, length, tol: Fraction, max_bits: int = 4096):
    """a(l) = sum_m N^m delta(l_m)^2 with l_{m+1} = l_m/N - 2 delta(l_m).

    Returns (truncated sum, bound on the omitted tail).  Exact terms stop
    early once the nested powers get too long; the tail bound covers the rest.
    """
    F, N = geom.F, geom.N
    q = _square_ratio(geom)  # N^m delta_m^2 shrinks at least by this factor per level
    total = F.num(0)
    weight = 1
    ell = length
    while True:
        d = geom.delta(ell)
        total = total + weight * d * d
        tail = F.upper(weight * d * d) * q / (1 - q)
        if tail <= tol or (F.exact and d.denominator.bit_length() > max_bits):
            return total, tail
        ell = ell / N - 2 * d
        weight *= N


@lru_cache(maxsize=64)
def self_similar_constant(params: ConstructionParams, eps: Fraction = _K_EPS) -> SelfSimilarConstant:
    geom = geometry(params)
    F, N, L = geom.F, geom.N, geom.L
    # gap d has length L^d * gap0, so delta and a(l) scale by L^(2d/alpha) and L^(4d/alpha)
    p, q_ = geom.inv_alpha
    shrink = F.upper(geom.F.pow(L, 4 * p, q_)) * N  # ratio between successive depths
    if shrink >= 1:
        raise PrecisionUnreachable("gap sweep does not contract")
    tol = eps / 16
    A = F.num(geom.phi0_integral)
    B = F.num(0)
    err_a = Fraction(0)
    d = 0
    while True:
        count = N ** d * (N - 1)
        s, t = _square_sum(geom, geom.gap_length(d), tol / (count * 2 ** (d + 1)))
        A = A + count * s
        B = B - 2 * count * s
        err_a += count * t
        d0 = F.upper(geom.delta(geom.gap_length(d)))
        rest = count * d0 * d0 / (1 - _square_ratio(geom)) * shrink / (1 - shrink)
        if rest <= tol:
            err_a += rest
            break
        d += 1
    err_b = 2 * err_a
    K = A / (1 - B)
    a_lo, a_hi = F.lower(A) - err_a, F.upper(A) + err_a
    b_lo, b_hi = F.lower(B) - err_b, F.upper(B) + err_b
    k_lo = a_lo / (1 - b_lo)
    k_hi = a_hi / (1 - b_hi)
    err = max(k_hi - F.lower(K), F.upper(K) - k_lo)
    deviation_total = F.upper(A) - F.lower(geom.phi0_integral) + err_a
    return SelfSimilarConstant(K, err, A, B, err_a, deviation_total)


def integral_01_g(params: ConstructionParams, eps=DEFAULT_EPS) -> EvalResult:
    """K = int_0^1 g as the fixed point of K = A + B K."""
    eps = Fraction(as_scalar(eps).exact_value)
    if eps <= 0:
        raise InvalidParams("eps must be positive")
    c = self_similar_constant(params, eps)
    geom = geometry(params)
    return EvalResult(geom.F.wrap(c.K), Scalar.exact(c.err), None, params.warnings)


# -- partial-gap integrals ----------------------------------------------------

class _Ctx:
    """Per-call settings of the excess integral."""

    def __init__(self, geom: Geometry, integrand: str, n: int | None, trace: list | None):
        self.geom = geom
        self.integrand = integrand  # "g" or "phi"
        self.n = n
        self.trace = trace
        self.state = AmbiguityLog()
        if integrand == "g":
            c = self_similar_constant(geom.params)
            self.K, self.eK = c.K, c.err
            self.dev_total = c.deviation_total
            self.a_factor = 1 / (1 - _square_ratio(geom))
        else:
            self.K, self.eK = Fraction(1, 2), Fraction(0)
            self.dev_total = Fraction(0)
            self.a_factor = Fraction(0)

    def node(self, a, b, contribution, err, method):
        if self.trace is None:
            return
        F = self.geom.F
        self.trace.append(QuadratureNode(
            IntervalRec(F.wrap(a), F.wrap(b), Kind.TRANSITIONAL if method == "TransitionalSelfSimilar" else Kind.PLATEAU, 0),
            F.wrap(F.num(contribution)), Scalar.exact(err), method,
        ))

    def dev_bound(self, length) -> Fraction:
        """|int over a complete block of (g - block value)|."""
        if self.integrand != "g" or self.eK == 0:
            return Fraction(0)
        d = self.geom.F.upper(self.geom.delta(length))
        return 2 * self.eK * d * d * self.a_factor


def _excess(ctx: _Ctx, a, b, v, x, eps: Fraction, level: int):
    """int_a^x (h - v) over a region (a, b) on which the previous level is v."""
    geom = ctx.geom
    F, N = geom.F, geom.N
    if level > geom.params.max_depth:
        raise PrecisionUnreachable("integral recursion exceeded the depth limit")
    guard_exact_size(F, a)
    w = (b - a) / N
    d = geom.delta(b - a)
    lb = w - 2 * d
    piece = locate(geom, a, b, v, x, ctx.state)
    if piece.kind == "block":
        J, S = piece.index - 1, piece.index
    else:
        J, S = piece.index, piece.index
    inner_slots = max(S - 1, 0)
    total = F.num(0)
    err = Fraction(0)
    if J % 2:
        total = total + d * lb
    err += J * ctx.dev_bound(lb)
    if S:
        const = 2 * d * d if inner_slots % 2 else 0
        slope = d * d - (4 * d * d if inner_slots % 2 else 0)
        total = total + const + slope * ctx.K
        err += F.upper(abs(slope)) * ctx.eK
    ctx.node(a, piece.a, total, err, "PlateauExact")

    if piece.kind == "block":
        val = piece.va
        total = total + (val - v) * (x - piece.a)
        last = ctx.n is not None and level >= ctx.n
        if last or F.eq(x, piece.a):
            return total, err
        if F.eq(x, piece.b):
            return total, err + ctx.dev_bound(piece.b - piece.a)
        span = F.upper(x - piece.a)
        tail = geom.tail_upper(piece.b - piece.a) * span
        if tail <= eps:
            ctx.node(piece.a, x, 0, tail, "HolderFallback")
            return total, err + tail
        sub, sub_err = _excess(ctx, piece.a, piece.b, val, x, eps, level + 1)
        return total + sub, err + sub_err

    # partial slot
    length = piece.b - piece.a
    dx = x - piece.a
    total = total + (piece.va - v) * dx
    rise = piece.vb - piece.va
    if ctx.integrand == "phi" or (ctx.n is not None and level >= ctx.n):
        total = total + rise * dx * dx / (2 * length)
        return total, err
    u = dx / length
    coef = F.upper(abs(rise * length))
    inner_eps = eps / coef
    if F.upper(u) / 2 <= inner_eps:
        fu, fu_err = u / 2, F.upper(u) / 2
    else:
        fu, fu_err = _f_raw(ctx, u, inner_eps)
    ctx.node(piece.a, x, rise * length * fu, coef * fu_err, "TransitionalSelfSimilar")
    return total + rise * length * fu, err + coef * fu_err


def _f_raw(ctx: _Ctx, x, eps: Fraction):
    """(value, err) of int_0^x h for a raw point."""
    geom = ctx.geom
    F = geom.F
    if F.eq(x, 0):
        return F.num(0), Fraction(0)
    path = f0_descend(geom, x, eps / 4)
    if path.ambiguity.width:
        ctx.state.note(path.ambiguity.width * F.upper(path.scale))
    base, err = phi0_local_integral(geom, path)
    err += ctx.dev_total * 2 * ctx.eK
    if path.terminal == "truncated" and ctx.n != 0:
        span = F.upper(x - path.origin)
        err += geom.tail_upper(geom.gap_length(path.depth)) * span
    if path.terminal != "gap" or ctx.n == 0:
        return base, err
    a, b, v = path_gap(geom, path)
    exc, exc_err = _excess(ctx, a, b, v, x, eps / 2, 1)
    return base + exc, err + exc_err


def _antiderivative(params: ConstructionParams, x, eps: Fraction, integrand: str, n: int | None,
                    trace: list | None = None):
    geom = geometry(params)
    ctx = _Ctx(geom, integrand, n, trace)
    value, err = _f_raw(ctx, to_raw(params, x), eps)
    if ctx.state.width:
        err += _ambiguity_err(geom, ctx.state.width)
    return geom.F.num(value), err


def _check_eps(eps) -> Fraction:
    e = Fraction(as_scalar(eps).exact_value)
    if e <= 0:
        raise InvalidParams("eps must be positive")
    return e


def f_eval(params: ConstructionParams, x, eps=DEFAULT_EPS) -> EvalResult:
    """f(x) = int_0^x g(t) dt with err <= eps."""
    e = _check_eps(eps)
    value, err = _antiderivative(params, x, e, "g", None)
    if err > e:
        raise PrecisionUnreachable(f"f({x}) error {float(err):.3g} exceeds eps")
    geom = geometry(params)
    return EvalResult(geom.F.wrap(value), Scalar.exact(err), None, params.warnings)


def f_eval_traced(params: ConstructionParams, x, eps=DEFAULT_EPS) -> tuple[EvalResult, list[QuadratureNode]]:
    """Like :func:`f_eval`, also returning the quadrature pieces inside the last gap."""
    e = _check_eps(eps)
    nodes: list = []
    value, err = _antiderivative(params, x, e, "g", None, nodes)
    geom = geometry(params)
    return EvalResult(geom.F.wrap(value), Scalar.exact(err), None, params.warnings), nodes


@dataclass(frozen=True)
class G:
    """Integrand marker for g."""


@dataclass(frozen=True)
class Phi:
    """Integrand marker for phi_n."""

    n: int


def segment_integral(params: ConstructionParams, a, b, integrand=G(), eps=DEFAULT_EPS) -> EvalResult:
    """int_a^b of g or of phi_n; phi_n integrals are exact in exact mode."""
    e = _check_eps(eps)
    geom = geometry(params)
    sa, sb = as_scalar(a), as_scalar(b)
    if sb.bounds()[1] < sa.bounds()[0]:
        raise InvalidParams("segment_integral needs a <= b")
    if isinstance(integrand, Phi):
        if integrand.n < 0:
            raise InvalidParams("n must be nonnegative")
        kind, n = "phi", integrand.n
    elif isinstance(integrand, G):
        kind, n = "g", None
    else:
        raise InvalidParams(f"unknown integrand {integrand!r}")
    if sa == sb:
        return EvalResult(geom.F.wrap(geom.F.num(0)), Scalar.exact(0), None, params.warnings)
    va, ea = _antiderivative(params, sa, e / 2, kind, n)
    vb, eb = _antiderivative(params, sb, e / 2, kind, n)
    err = ea + eb
    if err > e:
        raise PrecisionUnreachable("segment integral error exceeds eps")
    return EvalResult(geom.F.wrap(vb - va), Scalar.exact(err), None, params.warnings)
