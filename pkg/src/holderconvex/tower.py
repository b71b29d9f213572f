"""Plateau tower phi_n, its limit g1, and the self-similar limit g.

Inside a gap (a, b) whose previous level is the constant v, the next level
splits the gap into N equal cells.  Each cell holds a closed *block*
shrunk by delta = ((b - a)/N)**(2/alpha) at both ends.  The block value is
v + delta, v - delta, v + delta, ... for j = 1..N.  The *slots* between
blocks carry the linear interpolation with slope of modulus one.  g1 is the
limit of that refinement; g replaces every slot of g1 with an affine copy
of g itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .cantor_base import (
    ConstructionParams,
    F0Path,
    Geometry,
    _ambiguity_err,
    f0_descend,
    gaps_at_depth,
    geometry,
    guard_exact_size,
    path_gap,
    phi0_local_value,
    to_raw,
)
from .errors import DegenerateGap, EnumerationBudgetExceeded, InvalidParams, PrecisionUnreachable
from .records import (
    Address,
    AffineFrame,
    EvalResult,
    IntervalRec,
    Kind,
    Step,
    StepKind,
    TerminalKind,
)
from .scalar import AmbiguityLog, Scalar, as_scalar

DEFAULT_EPS = Fraction(1, 10 ** 12)


def _sign(j: int) -> int:
    return 1 if j % 2 else -1


@dataclass(frozen=True)
class Piece:
    """A block or slot of one plateau region, as raw field numbers."""

    kind: str  # "block" | "slot"
    index: int  # block j in 1..N, slot i in 0..N
    a: object
    b: object
    va: object  # value at a (the constant value for blocks)
    vb: object


def slot_piece(geom: Geometry, a, b, v, i: int, w=None, d=None) -> Piece:
    N = geom.N
    if w is None:
        w = (b - a) / N
        d = geom.delta(b - a)
    lo = a if i == 0 else a + i * w - d
    hi = b if i == N else a + i * w + d
    va = v if i == 0 else v + _sign(i) * d
    vb = v if i == N else v + _sign(i + 1) * d
    return Piece("slot", i, lo, hi, va, vb)


def block_piece(geom: Geometry, a, b, v, j: int, w=None, d=None) -> Piece:
    if w is None:
        w = (b - a) / geom.N
        d = geom.delta(b - a)
    val = v + _sign(j) * d
    return Piece("block", j, a + (j - 1) * w + d, a + j * w - d, val, val)


def locate(geom: Geometry, a, b, v, x, state: AmbiguityLog | None = None) -> Piece:
    """The piece of region (a, b) containing x.

    A point shared by a slot and a block goes to the piece lying on its
    left; the two formulas agree there.
    """
    F, N = geom.F, geom.N
    w = (b - a) / N
    d = geom.delta(b - a)
    t = x - a
    j0 = min(max(F.floor(t / w, state), 0), N - 1)
    r = t - j0 * w
    if F.le(r, d, state):
        return slot_piece(geom, a, b, v, j0, w, d)
    if F.le(r, w - d, state):
        return block_piece(geom, a, b, v, j0 + 1, w, d)
    return slot_piece(geom, a, b, v, j0 + 1, w, d)


def slot_value(piece: Piece, x):
    return piece.va + (piece.vb - piece.va) * (x - piece.a) / (piece.b - piece.a)


@dataclass
class Resolution:
    """Where the g1 descent stopped and what it concluded."""

    kind: str  # "f0" | "gap" | "slot" | "plateau"
    value: object
    err: Fraction
    path: F0Path
    steps: list
    slot: Piece | None = None
    gap: tuple | None = None
    level: int = 0


def resolve(geom: Geometry, x, eps: Fraction, max_levels: int | None = None,
            state: AmbiguityLog | None = None) -> Resolution:
    """Shared descent behind phi_n, g1 and the inner loop of g."""
    F = geom.F
    path = f0_descend(geom, x, eps)
    steps = [Step(StepKind.CHILD, i + 1) for i in path.digits]
    if state is not None and path.ambiguity.width:
        state.note(path.ambiguity.width * F.upper(path.scale))
    if path.terminal != "gap":
        value, err = phi0_local_value(geom, path)
        if path.terminal == "truncated" and max_levels != 0:
            err += geom.tail_upper(geom.gap_length(path.depth))
        return Resolution("f0", F.num(value), err, path, steps)
    steps.append(Step(StepKind.GAP, path.gap_index + 1))
    a, b, v = path_gap(geom, path)
    if max_levels == 0:
        return Resolution("gap", v, Fraction(0), path, steps, gap=(a, b, v))
    level = 1
    peeked = False
    limit = geom.params.max_depth
    while True:
        piece = locate(geom, a, b, v, x, state)
        if piece.kind == "slot":
            steps.append(Step(StepKind.TRANSITIONAL, piece.index))
            return Resolution("slot", slot_value(piece, x), Fraction(0), path, steps,
                              slot=piece, gap=path_gap(geom, path), level=level)
        steps.append(Step(StepKind.PLATEAU, piece.index))
        if F.eq(x, piece.b) or (max_levels is not None and level >= max_levels):
            return Resolution("plateau", piece.va, Fraction(0), path, steps,
                              gap=path_gap(geom, path), level=level)
        tail = geom.tail_upper(piece.b - piece.a)
        if tail <= eps:
            if peeked:
                return Resolution("plateau", piece.va, tail, path, steps,
                                  gap=path_gap(geom, path), level=level)
            peeked = True  # one more level turns block midpoints into exact slot hits
        a, b, v = piece.a, piece.b, piece.va
        guard_exact_size(F, a)
        level += 1
        if level > limit:
            raise PrecisionUnreachable(f"plateau descent exceeded {limit} levels")


def _eps(eps) -> Fraction:
    e = Fraction(as_scalar(eps).exact_value) if eps is not None else DEFAULT_EPS
    if e <= 0:
        raise InvalidParams("eps must be positive")
    return e


def _finish(geom: Geometry, value, err: Fraction, steps, frame, terminal, state) -> EvalResult:
    F = geom.F
    if state is not None and state.width:
        err += _ambiguity_err(geom, state.width)
    return EvalResult(F.wrap(F.num(value)), Scalar.exact(err),
                      Address(tuple(steps), frame, terminal), geom.params.warnings)


_TERMINAL = {
    "f0": TerminalKind.IN_F0_LIMIT,
    "gap": TerminalKind.EXACT,
    "slot": TerminalKind.IN_TRANSITIONAL,
    "plateau": TerminalKind.ON_PLATEAU_LIMIT,
}


def _frame_of(geom: Geometry, O, S, da, db) -> AffineFrame:
    w = geom.F.wrap
    return AffineFrame(w(O), w(S), w(da), w(db))


def _terminal(res: Resolution) -> TerminalKind:
    if res.err and res.kind == "f0":
        return TerminalKind.TRUNCATED
    return _TERMINAL[res.kind]


def phi_n_eval(params: ConstructionParams, x, n: int, eps=None) -> EvalResult:
    """phi_n(x): n plateau levels stacked on phi0."""
    if n < 0:
        raise InvalidParams("n must be nonnegative")
    geom = geometry(params)
    state = AmbiguityLog()
    res = resolve(geom, to_raw(params, x), _eps(eps), max_levels=n, state=state)
    one = geom.F.num(1)
    return _finish(geom, res.value, res.err, res.steps, _frame_of(geom, 0, one, 0, one), _terminal(res), state)


def g1_eval(params: ConstructionParams, x, eps=None) -> EvalResult:
    """g1(x) = lim phi_n(x), with err <= eps."""
    geom = geometry(params)
    e = _eps(eps)
    state = AmbiguityLog()
    res = resolve(geom, to_raw(params, x), e, state=state)
    if res.err > e:
        raise PrecisionUnreachable("g1 descent could not reach the requested precision")
    one = geom.F.num(1)
    return _finish(geom, res.value, res.err, res.steps, _frame_of(geom, 0, one, 0, one), _terminal(res), state)


def g_eval(params: ConstructionParams, x, eps=None, max_tier: int | None = None) -> EvalResult:
    """g(x) via the slot recursion g = va + (vb - va) * g(u).

    Each time the g1 descent lands in a slot (a', b') the evaluation moves
    to u = (x - a')/(b' - a') under the frame offset + scale * g(u).  A
    repeated u closes the recursion exactly (exact mode); otherwise it stops
    once |scale| <= eps, since g takes values in [0, 1].  ``max_tier=n``
    evaluates g_n, which keeps the linear slot values from tier n on.
    """
    geom = geometry(params)
    F = geom.F
    e = _eps(eps)
    if max_tier is not None and max_tier < 1:
        raise InvalidParams("max_tier must be positive")
    state = AmbiguityLog()
    xc = to_raw(params, x)
    O, S = F.num(0), F.num(1)
    dom_a, dom_b = F.num(0), F.num(1)
    seen = {} if F.exact else None
    steps: list = []
    tier, spare = 1, 0
    limit = params.max_depth
    while True:
        scale_hi = F.upper(abs(S)) if not F.exact else abs(S)
        res = resolve(geom, xc, e / scale_hi, state=state)
        steps.extend(res.steps)
        if res.kind != "slot" or (max_tier is not None and tier >= max_tier):
            frame = _frame_of(geom, O, S, dom_a, dom_b)
            return _finish(geom, O + S * res.value, res.err * scale_hi, steps, frame, _terminal(res), state)
        if seen is not None:
            if xc in seen:
                O1, S1 = seen[xc]
                gx = (O - O1) / (S1 - S)
                frame = _frame_of(geom, O1, S1, dom_a, dom_b)
                return _finish(geom, O1 + S1 * gx, Fraction(0), steps, frame, TerminalKind.EXACT, state)
            seen[xc] = (O, S)
        sl = res.slot
        width = dom_b - dom_a
        dom_a, dom_b = dom_a + width * sl.a, dom_a + width * sl.b
        O, S = O + S * sl.va, S * (sl.vb - sl.va)
        xc = (xc - sl.a) / (sl.b - sl.a)
        guard_exact_size(F, xc)
        tier += 1
        scale_hi = F.upper(abs(S)) if not F.exact else abs(S)
        if scale_hi <= e:
            spare += 1
            # a couple of extra pushes give exact orbits a chance to repeat
            if spare > 2 or seen is None:
                frame = _frame_of(geom, O, S, dom_a, dom_b)
                return _finish(geom, O + S / 2, scale_hi / 2, steps, frame, TerminalKind.TRUNCATED, state)
        if tier > limit:
            raise PrecisionUnreachable(f"g recursion exceeded {limit} tiers")


# -- structure enumeration --------------------------------------------------

def subblocks(params: ConstructionParams, gap: IntervalRec) -> tuple[list[IntervalRec], list[IntervalRec]]:
    """Plateau blocks I(a, b, j) and the N + 1 slots of a constant region."""
    if gap.kind not in (Kind.GAP, Kind.PLATEAU):
        raise InvalidParams("subblocks needs a gap or plateau interval")
    geom = geometry(params)
    F = geom.F
    a, b = gap.a.raw(), gap.b.raw()
    if not F.exact:
        a, b = F.num(gap.a.raw(params.float_precision_bits)), F.num(gap.b.raw(params.float_precision_bits))
    v = F.num(gap.base_value.raw() if gap.base_value.is_exact else gap.base_value.raw(params.float_precision_bits))
    d = geom.delta(b - a)
    if F.upper(d) == 0 or F.lower((b - a) / geom.N - 2 * d) <= 0:
        raise DegenerateGap("gap too short for the working precision")
    level = gap.depth + 1 if gap.kind is Kind.PLATEAU else 1
    blocks, slots = [], []
    for j in range(1, geom.N + 1):
        p = block_piece(geom, a, b, v, j)
        blocks.append(IntervalRec(F.wrap(p.a), F.wrap(p.b), Kind.PLATEAU, level,
                                  base_value=F.wrap(p.va), delta=F.wrap(d), index=j))
    for i in range(geom.N + 1):
        p = slot_piece(geom, a, b, v, i)
        slots.append(IntervalRec(F.wrap(p.a), F.wrap(p.b), Kind.TRANSITIONAL, level,
                                 base_value=F.wrap(p.va), delta=F.wrap(d), index=i))
    return blocks, slots


@dataclass(frozen=True)
class TransitionalComponent:
    a: Scalar
    b: Scalar
    tier: int
    g_at_a: Scalar
    g_at_b: Scalar

    @property
    def length(self) -> Scalar:
        return self.b - self.a


def _region_slots(geom: Geometry, a, b, v, min_len, out: list, budget: int):
    """Slots of a region and of all its blocks that are at least min_len long."""
    F, N = geom.F, geom.N
    d = geom.delta(b - a)
    if F.upper(2 * d) < min_len:
        return
    w = (b - a) / N
    for i in range(N + 1):
        s = slot_piece(geom, a, b, v, i, w, d)
        if F.upper(s.b - s.a) >= min_len:
            out.append((s.a, s.b, s.va, s.vb))
            if len(out) > budget:
                raise EnumerationBudgetExceeded(f"more than {budget} transitional components")
    for j in range(1, N + 1):
        p = block_piece(geom, a, b, v, j, w, d)
        _region_slots(geom, p.a, p.b, p.va, min_len, out, budget)


@lru_cache(maxsize=32)
def _tier1(params: ConstructionParams, min_len: Fraction) -> tuple:
    geom = geometry(params)
    F = geom.F
    out: list = []
    budget = params.enumeration_budget
    d = 0
    while F.upper(2 * geom.delta(geom.gap_length(d))) >= min_len:
        if geom.N ** d * (geom.N - 1) > budget:
            raise EnumerationBudgetExceeded("too many gaps above the length cutoff")
        for gap in gaps_at_depth(params, d):
            a = F.num(gap.a.raw(params.float_precision_bits)) if not F.exact else gap.a.exact_value
            b = F.num(gap.b.raw(params.float_precision_bits)) if not F.exact else gap.b.exact_value
            _region_slots(geom, a, b, F.num(gap.base_value.exact_value), min_len, out, budget)
        d += 1
    out.sort(key=lambda c: F.mid(c[0]))
    return tuple(out)


def enumerate_transitional(params: ConstructionParams, tier: int, min_len) -> list[TransitionalComponent]:
    """Components of the tier-th transitional set with length >= min_len.

    Tier n components are the images of tier-1 components under the affine
    maps of tier n - 1 components, with the matching affine image of g values.
    """
    if tier < 1:
        raise InvalidParams("tier must be positive")
    geom = geometry(params)
    F = geom.F
    min_len = Fraction(as_scalar(min_len).exact_value)
    if min_len <= 0:
        raise InvalidParams("min_len must be positive")
    budget = params.enumeration_budget
    comps = list(_tier1(params, min_len))
    for _ in range(tier - 1):
        nxt = []
        for a, b, ga, gb in comps:
            width = b - a
            inner = _tier1(params, min_len / F.lower(width))
            for c, d, gc, gd in inner:
                nxt.append((a + width * c, a + width * d, ga + (gb - ga) * gc, ga + (gb - ga) * gd))
                if len(nxt) > budget:
                    raise EnumerationBudgetExceeded(f"more than {budget} transitional components")
        comps = nxt
    w = F.wrap
    return [TransitionalComponent(w(a), w(b), tier, w(ga), w(gb)) for a, b, ga, gb in comps]
