"""Grid box counts on closed cells and log-log slope fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..cantor_base import ConstructionParams, geometry
from ..errors import EnumerationBudgetExceeded, InsufficientRows, InvalidParams
from ..scalar import Scalar, pow_rational

# F0 counts run vectorised, so they get a larger child budget than plain enumeration
_F0_CHILD_LIMIT = 1 << 26


@dataclass(frozen=True)
class BoxCountRow:
    base_N: int
    k: int
    count: int

    def ratio(self, alpha) -> Scalar:
        """count / base^(alpha k)."""
        a = Fraction(alpha)
        return Scalar.exact(self.count) / pow_rational(Fraction(self.base_N) ** self.k, a.numerator, a.denominator)


@dataclass(frozen=True)
class DimFit:
    rows: tuple[BoxCountRow, ...]
    slope: float
    intercept: float
    sup_ratio: Scalar | None

    def to_dict(self) -> dict:
        return {
            "rows": [{"base": r.base_N, "k": r.k, "count": r.count} for r in self.rows],
            "slope": self.slope,
            "intercept": self.intercept,
            "sup_ratio": None if self.sup_ratio is None else float(self.sup_ratio),
        }


def _as_fraction(p) -> Fraction:
    x = getattr(p, "x", p)
    if isinstance(x, Scalar):
        return x.exact_value
    return Fraction(x)


def touched_cells(x: Fraction, base: int, k: int) -> tuple[int, ...]:
    """1-based closed cells [(j-1)/B, j/B] containing x, with B = base^k."""
    B = base ** k
    num, den = x.numerator * B, x.denominator
    j, r = divmod(num, den)
    if r:
        return (j + 1,)
    return tuple(c for c in (j, j + 1) if 1 <= c <= B)


def box_count_points(points, base_N: int, k: int) -> BoxCountRow:
    """Number of closed base^-k cells meeting a finite point set."""
    if base_N < 2 or k < 0:
        raise InvalidParams("need base >= 2 and k >= 0")
    cells: set[int] = set()
    for p in points:
        x = _as_fraction(p)
        if not 0 <= x <= 1:
            raise InvalidParams(f"point {x} outside [0, 1]")
        cells.update(touched_cells(x, base_N, k))
    return BoxCountRow(base_N, k, len(cells))


# -- exact counts for the construction ---------------------------------------

def _f0_positions(params: ConstructionParams, d: int):
    """Left ends of the depth-d children in units of their length L^d."""
    geom = geometry(params)
    N, M, Q = params.N, int(geom.M), geom.Q
    if N ** d > max(params.enumeration_budget, _F0_CHILD_LIMIT):
        raise EnumerationBudgetExceeded(f"{N ** d} children at depth {d}")
    if M ** d < 2 ** 62:
        pos = np.zeros(1, dtype=np.int64)
        for t in range(d):
            step = Q * M ** (d - 1 - t)
            pos = (pos[:, None] + step * np.arange(N, dtype=np.int64)[None, :]).ravel()
        return pos
    pos = [0]
    for t in range(d):
        step = Q * M ** (d - 1 - t)
        pos = [p + i * step for p in pos for i in range(N)]
    return pos


def _count_f0_exact(params: ConstructionParams, k: int) -> int:
    p = params.alpha.denominator  # 1/alpha
    d = -(-k // p)
    N = params.N
    unit = N ** (p * d - k)  # one level-k cell in units of L^d
    cells_total = N ** k
    pos = _f0_positions(params, d)
    if isinstance(pos, np.ndarray):
        ends = np.concatenate([pos, pos + 1])
        j, r = np.divmod(ends, unit)
        cells = [j[r != 0] + 1, j[r == 0], j[r == 0] + 1]
        allc = np.unique(np.concatenate(cells))
        return int(np.count_nonzero((allc >= 1) & (allc <= cells_total)))
    found = set()
    for s in pos:
        for e in (s, s + 1):
            j, r = divmod(e, unit)
            if r:
                found.add(j + 1)
            else:
                found.update(c for c in (j, j + 1) if 1 <= c <= cells_total)
    return len(found)


def _count_f0_guarded(params: ConstructionParams, k: int) -> int:
    from ..cantor_base import children_at_depth

    geom = geometry(params)
    F = geom.F
    a = params.alpha
    d = math.ceil(k * a)
    while F.upper(geom.L ** d) > Fraction(1, params.N ** k):
        d += 1
    found = set()
    B = params.N ** k
    for child in children_at_depth(params, d):
        for end in (child.a, child.b):
            lo, hi = end.bounds()
            jl, jh = math.floor(lo * B), math.floor(hi * B)
            if jl != jh or lo * B == jl or hi * B == jh:
                # touches a grid line within the guard: count both neighbours
                found.update(c for c in range(jl, jh + 2) if 1 <= c <= B)
            else:
                found.add(jl + 1)
    return len(found)


def _count_transitional(params: ConstructionParams, tier: int, k: int) -> int:
    from ..tower import enumerate_transitional

    B = params.N ** k
    cutoff = Fraction(1, B)
    comps = enumerate_transitional(params, tier, cutoff)
    cells = set()
    for c in comps:
        a_lo, _ = c.a.bounds()
        _, b_hi = c.b.bounds()
        if b_hi - a_lo <= cutoff:
            continue
        # open (a, b) meets closed cell j iff (j-1)/B < b and j/B > a
        first = math.floor(a_lo * B) + 1
        last = math.ceil(b_hi * B)
        cells.update(range(max(first, 1), min(last, B) + 1))
    return len(cells)


@dataclass(frozen=True)
class GTTransitional:
    tier: int


F0 = "F0"


def box_count_set(params: ConstructionParams, set_id, k: int) -> BoxCountRow:
    """Exact N-adic box count of F0 or of a long-component transitional set."""
    if k < 0:
        raise InvalidParams("k must be nonnegative")
    if k == 0:
        return BoxCountRow(params.N, 0, 1)
    if set_id == F0 or set_id == "F0":
        if params.mode.value == "exact":
            return BoxCountRow(params.N, k, _count_f0_exact(params, k))
        return BoxCountRow(params.N, k, _count_f0_guarded(params, k))
    if isinstance(set_id, GTTransitional):
        return BoxCountRow(params.N, k, _count_transitional(params, set_id.tier, k))
    raise InvalidParams(f"unknown set {set_id!r}")


def dim_fit(rows, alpha=None) -> DimFit:
    """Least-squares slope of log2(count) against k*log2(base)."""
    rows = tuple(rows)
    if len(rows) < 3:
        raise InsufficientRows("dim_fit needs at least three rows")
    bases = {r.base_N for r in rows}
    if len(bases) != 1:
        raise InvalidParams("rows must share one base")
    base = bases.pop()
    xs = np.array([r.k * math.log2(base) for r in rows])
    ys = np.array([math.log2(r.count) for r in rows])
    slope, intercept = np.polyfit(xs, ys, 1)
    sup = None
    if alpha is not None:
        ratios = [r.ratio(alpha) for r in rows]
        sup = max(ratios, key=lambda s: s.bounds()[1])
    return DimFit(rows, float(slope), float(intercept), sup)
