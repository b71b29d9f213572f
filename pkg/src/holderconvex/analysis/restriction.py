"""Longest convex, concave and monotone restrictions of sampled functions."""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ..errors import CapExceeded, InvalidParams
from ..records import EvalResult
from ..scalar import Scalar

DEFAULT_CAP = 3000
# values whose common denominator exceeds this many bits are rounded onto a dyadic grid
_EXACT_DENOM_BITS = 2048
_QUANT_BITS = 512


def _frac(v) -> Fraction:
    if isinstance(v, Scalar):
        return v.midpoint()
    return Fraction(v)


@dataclass(frozen=True)
class PointSample:
    """A sample (x, value) with |true value - value| <= err."""

    x: Fraction
    value: Fraction
    err: Fraction = Fraction(0)

    def __post_init__(self):
        if isinstance(self.x, Scalar) and not self.x.is_exact:
            raise InvalidParams("sample abscissae must be exact")
        extra = self.value.radius() if isinstance(self.value, Scalar) else Fraction(0)
        object.__setattr__(self, "x", _frac(self.x))
        object.__setattr__(self, "value", _frac(self.value))
        object.__setattr__(self, "err", _frac(self.err) + extra)
        if self.err < 0:
            raise InvalidParams("err must be nonnegative")

    @classmethod
    def from_eval(cls, x, r: EvalResult) -> PointSample:
        return cls(Fraction(x), r.mid, r.total_err)


def _check_points(points: Sequence[PointSample], cap: int):
    if len(points) > cap:
        raise CapExceeded(f"{len(points)} points exceed the cap of {cap}")
    for p, q in zip(points, points[1:]):
        if not p.x < q.x:
            raise InvalidParams("sample abscissae must be strictly increasing")


def _lcm_denominators(vals) -> int:
    d = 1
    for v in vals:
        d = math.lcm(d, v.denominator)
        if d.bit_length() > _EXACT_DENOM_BITS:
            return 0
    return d


def _integer_coords(vals) -> tuple[list[int], bool]:
    """Integers proportional to vals, exact when the denominators allow it."""
    d = _lcm_denominators(vals)
    if d:
        return [v.numerator * (d // v.denominator) for v in vals], True
    return [round(v * (1 << _QUANT_BITS)) for v in vals], False


@dataclass(frozen=True)
class SubsetResult:
    indices: list[int]
    quantized: bool

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


def _slope_keys(X: list[int], V: list[int]):
    """Integer keys whose order matches the order of chord slopes."""
    span = X[-1] - X[0]
    shift = 2 * span.bit_length() + 2

    def key(i: int, j: int) -> int:
        return ((V[j] - V[i]) << shift) // (X[j] - X[i])

    return key


def _longest_convex(X: list[int], V: list[int]) -> list[int]:
    m = len(X)
    if m <= 2:
        return list(range(m))
    key = _slope_keys(X, V)
    # best[i, j]: most points in a convex chain whose first two points are i < j
    best = np.zeros((m, m), dtype=np.int32)
    for j in range(m - 1, 0, -1):
        if j == m - 1:
            for i in range(j):
                best[i, j] = 2
            continue
        out_keys = [key(j, k) for k in range(j + 1, m)]
        order = sorted(range(len(out_keys)), key=out_keys.__getitem__)
        sorted_keys = [out_keys[t] for t in order]
        lens = best[j, j + 1:][order]
        sufmax = np.maximum.accumulate(lens[::-1])[::-1]
        for i in range(j):
            pos = bisect_left(sorted_keys, key(i, j))
            best[i, j] = 2 if pos == len(sorted_keys) else int(sufmax[pos]) + 1
    top = int(best.max())
    i = int(np.argmax((best == top).any(axis=1)))
    j = int(np.argmax(best[i] == top))
    chain = [i, j]
    remaining = top - 2
    while remaining:
        kij = key(chain[-2], chain[-1])
        a = chain[-1]
        for k in range(a + 1, m):
            if best[a, k] == remaining + 1 and key(a, k) >= kij:
                chain.append(k)
                break
        remaining -= 1
    return chain


def longest_convex_subset(points: Sequence[PointSample], cap: int = DEFAULT_CAP) -> SubsetResult:
    """Largest index set with nondecreasing consecutive chord slopes.

    Ties go to the lexicographically smallest index sequence.  Values are
    compared exactly unless their denominators are too large, in which case
    they are rounded to 2^-512 and the result is flagged as quantized.
    """
    _check_points(points, cap)
    X, _ = _integer_coords([p.x for p in points])
    V, exact = _integer_coords([p.value for p in points])
    return SubsetResult(_longest_convex(X, V), not exact)


def longest_concave_subset(points: Sequence[PointSample], cap: int = DEFAULT_CAP) -> SubsetResult:
    negated = [PointSample(p.x, -p.value, p.err) for p in points]
    return longest_convex_subset(negated, cap)


def _longest_nondecreasing(vals: list) -> list[int]:
    tails: list = []
    tail_idx: list[int] = []
    prev = [-1] * len(vals)
    for i, v in enumerate(vals):
        # bisect_right keeps equal values in the same chain
        lo, hi = 0, len(tails)
        while lo < hi:
            mid = (lo + hi) // 2
            if tails[mid] <= v:
                lo = mid + 1
            else:
                hi = mid
        if lo:
            prev[i] = tail_idx[lo - 1]
        if lo == len(tails):
            tails.append(v)
            tail_idx.append(i)
        else:
            tails[lo] = v
            tail_idx[lo] = i
    out = []
    i = tail_idx[-1] if tail_idx else -1
    while i >= 0:
        out.append(i)
        i = prev[i]
    return out[::-1]


@dataclass(frozen=True)
class MonotoneResult:
    indices: list[int]
    direction: str  # "nondecreasing" or "nonincreasing"


def longest_monotone_subset(points: Sequence[PointSample]) -> MonotoneResult:
    """Longer of the longest nondecreasing and nonincreasing subsequences."""
    vals = [p.value for p in points]
    up = _longest_nondecreasing(vals)
    down = _longest_nondecreasing([-v for v in vals])
    if len(down) > len(up):
        return MonotoneResult(down, "nonincreasing")
    return MonotoneResult(up, "nondecreasing")


# -- certified classification ----------------------------------------------

@dataclass(frozen=True)
class ConvexityVerdict:
    classification: str  # "Convex", "Concave" or "Neither"
    convex: bool | None
    concave: bool | None
    convex_violation: tuple[int, int, int] | None
    concave_violation: tuple[int, int, int] | None
    undecidable: bool = False


def _slope_bounds(p: PointSample, q: PointSample) -> tuple[Fraction, Fraction]:
    dx = q.x - p.x
    return (q.value - q.err - p.value - p.err) / dx, (q.value + q.err - p.value + p.err) / dx


def _decide(points: Sequence[PointSample], sign: int):
    """(holds, first violating triple, saw undecidable) for sign * values convex."""
    undecided = None
    for i in range(len(points) - 2):
        lo1, hi1 = _slope_bounds(points[i], points[i + 1])
        lo2, hi2 = _slope_bounds(points[i + 1], points[i + 2])
        if sign < 0:
            lo1, hi1, lo2, hi2 = -hi1, -lo1, -hi2, -lo2
        if lo1 > hi2:
            return False, (i, i + 1, i + 2), False
        if hi1 > lo2 and undecided is None:
            undecided = (i, i + 1, i + 2)
    if undecided is not None:
        return None, undecided, True
    return True, None, False


def check_convex_restriction(points: Sequence[PointSample],
                             reevaluate: Callable[[Sequence[PointSample]], Sequence[PointSample]] | None = None,
                             ) -> ConvexityVerdict:
    """Classify a sampled restriction, retrying once with sharper values if needed."""
    for attempt in range(2):
        cv, cv_t, cv_u = _decide(points, 1)
        cc, cc_t, cc_u = _decide(points, -1)
        if not (cv_u or cc_u) or reevaluate is None or attempt:
            break
        points = reevaluate(points)
    if cv:
        cls = "Convex"
    elif cc:
        cls = "Concave"
    else:
        cls = "Neither"
    return ConvexityVerdict(
        cls, cv, cc,
        cv_t if cv is False else None,
        cc_t if cc is False else None,
        undecidable=(cv is None or cc is None) and cls == "Neither",
    )
