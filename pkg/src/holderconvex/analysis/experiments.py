"""Numerical experiments on the constructed function: slope oscillation,
mean-value transfer of convex restrictions and the convexity-dimension run."""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from ..cantor_base import ConstructionParams, gaps_at_depth, geometry
from ..errors import InvalidParams, OscillationViolation, RootNotBracketed
from ..integral import f_eval
from ..records import EvalResult, IntervalRec
from ..scalar import Scalar
from ..tower import block_piece, enumerate_transitional, g_eval, resolve, subblocks
from .boxcount import BoxCountRow, DimFit, box_count_points, dim_fit
from .restriction import (
    PointSample,
    check_convex_restriction,
    longest_concave_subset,
    longest_convex_subset,
)


# -- parallel evaluation ----------------------------------------------------

def _eval_chunk(args):
    params, kind, xs, eps = args
    fn = f_eval if kind == "f" else g_eval
    out = []
    for x in xs:
        r = fn(params, x, eps)
        out.append((r.mid, r.total_err))
    return out


def evaluate_many(params: ConstructionParams, kind: str, xs: Sequence[Fraction], eps, jobs: int = 1):
    """[(midpoint, radius)] of f or g at each x, optionally across processes."""
    if kind not in ("f", "g"):
        raise InvalidParams("kind must be 'f' or 'g'")
    xs = list(xs)
    if jobs <= 1 or len(xs) < 64:
        return _eval_chunk((params, kind, xs, eps))
    size = math.ceil(len(xs) / (jobs * 4))
    chunks = [(params, kind, xs[i:i + size], eps) for i in range(0, len(xs), size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return [r for part in pool.map(_eval_chunk, chunks) for r in part]


# -- slope oscillation inside one gap ---------------------------------------

@dataclass(frozen=True)
class OscillationRow:
    j: int
    t: Fraction
    margin: Fraction  # certified lower bound of the inequality's slack


@dataclass(frozen=True)
class OscillationReport:
    gap: tuple[Fraction, Fraction]
    depth: int
    threshold: Fraction  # lower bound of delta - 6 (b-a)^(2/alpha) / N^(4/alpha)
    rows: tuple[OscillationRow, ...]
    parity_margins: tuple[Fraction, ...]
    passed: bool

    @property
    def min_margin(self) -> Fraction:
        return min(r.margin for r in self.rows)


def oscillation_check(params: ConstructionParams, gap: IntervalRec, eps=None, *,
                      extra_per_block: int = 2, seed: int = 0,
                      raise_on_fail: bool = True) -> OscillationReport:
    """Check that g sits above g(a) on odd blocks and below it on even blocks.

    The slack must exceed delta - 6 (b-a)^(2/alpha) / N^(4/alpha) at the
    block midpoints t_j and at a few random points of each block.
    """
    if not params.strict:
        raise InvalidParams("the oscillation bounds need strict parameters")
    geom = geometry(params)
    F = geom.F
    blocks, _ = subblocks(params, gap)
    delta = gap.delta
    corr = 6 * delta / F.wrap(geom.N_pow_2ia)
    threshold_hi = (delta - corr).bounds()[1]
    threshold_lo = (delta - corr).bounds()[0]
    if threshold_lo <= 0:
        raise InvalidParams("oscillation threshold is not positive")
    ga = gap.base_value.exact_value
    eps = Fraction(eps) if eps is not None else corr.bounds()[0] / 100
    rng = random.Random(seed)
    rows, mids = [], []
    for blk in blocks:
        j = blk.index
        a, b = blk.a.midpoint(), blk.b.midpoint()
        pts = [(a + b) / 2]
        span = 2 ** 64
        pts += [a + (b - a) * Fraction(rng.randrange(1, span), span) for _ in range(extra_per_block)]
        worst = None
        for k, t in enumerate(pts):
            r = g_eval(params, t, eps)
            if k == 0:
                mids.append(r)
            m = (r.lower - ga if j % 2 else ga - r.upper) - threshold_hi
            worst = m if worst is None else min(worst, m)
        rows.append(OscillationRow(j, pts[0], worst))
    parity = tuple(mids[j - 1].lower - mids[j].upper for j in range(1, len(mids), 2))
    passed = all(r.margin > 0 for r in rows) and all(p > 0 for p in parity)
    report = OscillationReport((gap.a.midpoint(), gap.b.midpoint()), gap.depth, threshold_lo,
                               tuple(rows), parity, passed)
    if not passed and raise_on_fail:
        bad = min(rows, key=lambda r: r.margin)
        raise OscillationViolation(bad.j, bad.margin)
    return report


def sample_gaps(params: ConstructionParams, count: int, depths=(0, 1, 2), seed: int = 0) -> list[IntervalRec]:
    """A seeded selection of gaps spread over the given IFS depths."""
    rng = random.Random(seed)
    out = []
    per = [count // len(depths) + (1 if i < count % len(depths) else 0) for i in range(len(depths))]
    for d, n in zip(depths, per):
        total = params.N ** d * (params.N - 1)
        picks = sorted(rng.sample(range(total), min(n, total)))
        it = gaps_at_depth(params, d) if total <= 20_000 else None
        if it is not None:
            gaps = list(it)
            out += [gaps[i] for i in picks]
        else:
            out += [_gap_by_index(params, d, i) for i in picks]
    return out


def _gap_by_index(params: ConstructionParams, d: int, idx: int) -> IntervalRec:
    from ..records import Kind

    geom = geometry(params)
    F, N, P, L = geom.F, geom.N, geom.P, geom.L
    child, i = divmod(idx, N - 1)
    digits = []
    for _ in range(d):
        child, r = divmod(child, N)
        digits.append(r)
    digits.reverse()
    start, scale, mass = F.num(0), F.num(1), Fraction(0)
    for t, c in enumerate(digits):
        start = start + scale * c * P
        mass += Fraction(c, N ** (t + 1))
        scale = scale * L
    a = start + scale * (i * P + L)
    b = start + scale * ((i + 1) * P)
    return IntervalRec(F.wrap(a), F.wrap(b), Kind.GAP, d,
                       base_value=Scalar.exact(mass + Fraction(i + 1, N ** (d + 1))),
                       delta=F.wrap(geom.delta(b - a)), index=i + 1)


# -- finite block-occupancy check -------------------------------------------

@dataclass(frozen=True)
class BlockOccupancy:
    regions_checked: int
    worst_region: tuple[Fraction, Fraction] | None
    worst_count: int  # blocks of one region holding >= 2 points
    passed: bool


def block_occupancy_check(params: ConstructionParams, xs: Sequence[Fraction], levels: int = 3) -> BlockOccupancy:
    """At most two blocks of any region may hold two or more points.

    Regions are the gaps of F0 and the plateau blocks nested inside them,
    down to ``levels`` plateau levels.
    """
    geom = geometry(params)
    F = geom.F
    occupancy: dict[tuple, Counter] = defaultdict(Counter)
    for x in xs:
        x = F.num(Fraction(x))
        res = resolve(geom, x, Fraction(1, 10 ** 30), max_levels=levels)
        if res.gap is None:
            continue
        a, b, v = res.gap
        plateau_steps = [s.index for s in res.steps if s.kind.value == "PlateauEntry"]
        for j in plateau_steps:
            piece = block_piece(geom, a, b, v, j)
            if F.lt(piece.a, x) and F.lt(x, piece.b):
                occupancy[(F.mid(a), F.mid(b))][j] += 1
            a, b, v = piece.a, piece.b, piece.va
    worst, worst_region = 0, None
    for region, counter in occupancy.items():
        crowded = sum(1 for c in counter.values() if c >= 2)
        if crowded > worst:
            worst, worst_region = crowded, region
    return BlockOccupancy(len(occupancy), worst_region, worst, worst <= 2)


# -- mean-value transfer ----------------------------------------------------

@dataclass(frozen=True)
class TransferResult:
    B: tuple[PointSample, ...]
    targets: tuple[Fraction, ...]
    residuals: tuple[Fraction, ...]
    monotone: bool
    box_rows: tuple[tuple[int, int, int], ...]  # (k, count A, count B)
    box_ok: bool

    @property
    def ok(self) -> bool:
        return self.monotone and self.box_ok


def _find_root(g: Callable, lo: Fraction, hi: Fraction, s_lo: Fraction, s_hi: Fraction,
               eps: Fraction, grid_levels: int, max_iter: int = 400) -> tuple[Fraction, EvalResult]:
    cache: dict[Fraction, EvalResult] = {}

    def ev(t):
        if t not in cache:
            cache[t] = g(t, eps / 4)
        return cache[t]

    def sign(r: EvalResult) -> int:
        if r.lower > s_hi:
            return 1
        if r.upper < s_lo:
            return -1
        return 0

    bracket = None
    for level in range(0, grid_levels + 1):
        n = 2 ** level
        ts = [lo + (hi - lo) * Fraction(j, n) for j in range(n + 1)]
        signs = [sign(ev(t)) for t in ts]
        for t, sg in zip(ts[1:-1], signs[1:-1]):
            if sg == 0:
                return t, ev(t)
        for (t0, s0), (t1, s1) in zip(zip(ts, signs), zip(ts[1:], signs[1:])):
            if s0 * s1 < 0:
                bracket = (t0, t1, s0)
                break
        if bracket:
            break
    if bracket is None:
        raise RootNotBracketed(f"no sign change of g - target on [{float(lo)}, {float(hi)}]")
    a, b, sa = bracket
    for _ in range(max_iter):
        m = (a + b) / 2
        sm = sign(ev(m))
        if sm == 0 or b - a <= eps:
            return m, ev(m)
        if sm == sa:
            a = m
        else:
            b = m
    m = (a + b) / 2
    return m, ev(m)


def mvt_transfer(A: Sequence[PointSample], g: Callable[[Fraction, Fraction], EvalResult], eps=Fraction(1, 10 ** 12),
                 *, k_max: int = 10, base: int = 2, grid_levels: int = 12) -> TransferResult:
    """Turn a convex restriction of f into a monotone restriction of g = f'.

    Each chord of A has a point of g equal to its slope by the mean value
    theorem.  Those points form B.
    """
    eps = Fraction(eps)
    verdict = check_convex_restriction(A)
    if verdict.convex is not True:
        raise InvalidParams("f restricted to A is not certified convex")
    B, targets, residuals = [], [], []
    for p, q in zip(A, A[1:]):
        dx = q.x - p.x
        s = (q.value - p.value) / dx
        spread = (p.err + q.err) / dx
        t, r = _find_root(g, p.x, q.x, s - spread, s + spread, eps, grid_levels)
        B.append(PointSample(t, r.mid, r.total_err))
        targets.append(s)
        residuals.append(abs(r.mid - s) + r.total_err)
    tol = 2 * eps + 2 * max((p.err for p in A), default=Fraction(0))
    monotone = all(b1.value - b0.value >= -tol for b0, b1 in zip(B, B[1:]))
    rows = []
    for k in range(0, k_max + 1):
        na = box_count_points(A, base, k).count
        nb = box_count_points(B, base, k).count if B else 0
        rows.append((k, na, nb))
    box_ok = all(na <= 3 * nb + 2 for _, na, nb in rows)
    return TransferResult(tuple(B), tuple(targets), tuple(residuals), monotone, tuple(rows), box_ok)


# -- the convexity-dimension experiment -------------------------------------

@dataclass(frozen=True)
class SubsetReport:
    indices: tuple[int, ...]
    fit: DimFit
    ratios: tuple[tuple[int, float], ...]  # (k, count / base^(alpha k))
    quantized: bool
    occupancy: BlockOccupancy | None = None


@dataclass(frozen=True)
class ExperimentReport:
    seed: int
    m: int
    base: int
    k_range: tuple[int, ...]
    alpha: Fraction
    convex: SubsetReport
    concave: SubsetReport
    control: SubsetReport
    c_alpha: float
    c_g1_rows: tuple[tuple[int, int, float], ...]  # (k, count, ratio) with base N
    notes: tuple[str, ...] = field(default=())

    @property
    def slope_bound(self) -> float:
        return float(self.alpha) + 0.15

    @property
    def passed(self) -> bool:
        return max(self.convex.fit.slope, self.concave.fit.slope) <= self.slope_bound

    @property
    def c_g1(self) -> float:
        return max(r for _, _, r in self.c_g1_rows)


def jittered_grid(m: int, seed: int, bits: int = 64) -> list[Fraction]:
    """x_j = (j + 1/2 + U(-0.4, 0.4)) / m on a 2^-bits grid."""
    rng = random.Random(seed)
    one = 1 << bits
    span = (4 * one) // (10 * m)
    out = []
    for j in range(m):
        centre = ((2 * j + 1) * one) // (2 * m)
        out.append(Fraction(centre + rng.randint(-span, span), one))
    return out


def _subset_report(points, indices, quantized, base, k_range, alpha) -> SubsetReport:
    chosen = [points[i] for i in indices]
    rows = [box_count_points(chosen, base, k) for k in k_range]
    fit = dim_fit(rows, alpha)
    ratios = tuple((r.k, float(r.ratio(alpha))) for r in rows)
    return SubsetReport(tuple(indices), fit, ratios, quantized)


def _outside_long_components(params: ConstructionParams, xs, k: int) -> list[Fraction]:
    comps = enumerate_transitional(params, 1, Fraction(1, params.N ** k))
    starts = [c.a.midpoint() for c in comps]
    keep = []
    for x in xs:
        i = bisect_right(starts, x) - 1
        inside = i >= 0 and comps[i].a.bounds()[0] < x < comps[i].b.bounds()[1] \
            and comps[i].length.bounds()[1] > Fraction(1, params.N ** k)
        if not inside:
            keep.append(x)
    return keep


def convexity_dimension_experiment(params: ConstructionParams, m: int = 1500, k_range=range(2, 9),
                                   seed: int = 0, *, eps=Fraction(1, 10 ** 30), base: int = 2,
                                   jobs: int = 1, check_occupancy: bool = True) -> ExperimentReport:
    """Longest convex and concave restrictions of sampled f, and their box counts.

    The control runs the same pipeline on x^2.
    """
    xs = jittered_grid(m, seed)
    vals = evaluate_many(params, "f", xs, eps, jobs)
    pts = [PointSample(x, v, e) for x, (v, e) in zip(xs, vals)]
    k_range = tuple(k_range)
    a = params.alpha
    cv = longest_convex_subset(pts)
    cc = longest_concave_subset(pts)
    control_pts = [PointSample(x, x * x) for x in xs]
    ctrl = longest_convex_subset(control_pts)
    convex = _subset_report(pts, cv.indices, cv.quantized, base, k_range, a)
    concave = _subset_report(pts, cc.indices, cc.quantized, base, k_range, a)
    control = _subset_report(control_pts, ctrl.indices, ctrl.quantized, base, k_range, a)
    if check_occupancy:
        convex = _with_occupancy(params, convex, xs)
        concave = _with_occupancy(params, concave, xs)
    c_alpha = max(r for rep in (convex, concave) for _, r in rep.ratios)
    # count of the convex set outside long tier-1 components, in base N
    chosen = [xs[i] for i in cv.indices]
    g1_rows = []
    k = 0
    while params.N ** k <= 4 * m:
        kept = _outside_long_components(params, chosen, k)
        n = box_count_points(kept, params.N, k).count if kept else 0
        g1_rows.append((k, n, n / params.N ** (float(a) * k)))
        k += 1
    notes = []
    if cv.quantized or cc.quantized:
        notes.append("sample values were rounded to 2^-512 for the subset search")
    return ExperimentReport(seed, m, base, k_range, a, convex, concave, control, c_alpha,
                            tuple(g1_rows), tuple(notes))


def _with_occupancy(params, rep: SubsetReport, xs) -> SubsetReport:
    occ = block_occupancy_check(params, [xs[i] for i in rep.indices])
    return SubsetReport(rep.indices, rep.fit, rep.ratios, rep.quantized, occ)


def box_rows(points, base: int, k_range) -> list[BoxCountRow]:
    return [box_count_points(points, base, k) for k in k_range]
