"""Named check suites shared by the command line and the acceptance tests."""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from ..cantor_base import ConstructionParams, geometry, phi0_eval
from ..errors import DegenerateGap, InvalidParams
from ..integral import f_eval
from ..records import EvalResult
from ..scalar import Ordering, Scalar
from ..tower import enumerate_transitional, g1_eval, g_eval, phi_n_eval, subblocks
from .boxcount import F0, box_count_set, dim_fit
from .experiments import (
    convexity_dimension_experiment,
    jittered_grid,
    mvt_transfer,
    oscillation_check,
    sample_gaps,
)
from .gapsum import gap_sum, transitional_sum_bound
from .holder import (
    AdversarialEndpoints,
    UniformRandom,
    analytic_phi0_bound,
    holder_estimate,
)
from .restriction import (
    PointSample,
    check_convex_restriction,
    longest_convex_subset,
    longest_monotone_subset,
)

SUITES = ("holder", "tower", "gapsum", "boxcount", "oscillation", "convexity", "transfer")


@dataclass
class Check:
    name: str
    passed: bool
    margin: float | None = None
    witness: str | None = None
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "margin": self.margin,
            "witness": self.witness,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class Sizes:
    """Sample sizes; the defaults are the acceptance sizes."""

    random_points: int = 1000
    holder_pairs: int = 100_000
    holder_pairs_tower: int = 10_000
    derivative_points: int = 100
    oscillation_gaps: int = 20
    experiment_m: int = 1500
    brute_force_instances: int = 200
    transfer_sample: int = 200
    transfer_max_points: int = 40

    @classmethod
    def quick(cls) -> Sizes:
        return cls(100, 4000, 1000, 10, 3, 300, 40, 80, 12)


def random_points(n: int, seed: int, lo=Fraction(0), hi=Fraction(1), bits: int = 64) -> list[Fraction]:
    """n seeded dyadic points strictly inside (lo, hi)."""
    rng = random.Random(seed)
    one = 1 << bits
    out = []
    while len(out) < n:
        u = Fraction(rng.randrange(1, one), one)
        out.append(lo + (hi - lo) * u)
    return out


def _timed(fn: Callable[..., Check]) -> Callable[..., Check]:
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        check = fn(*args, **kwargs)
        check.seconds = time.perf_counter() - t0
        return check

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _f(x) -> str:
    return str(x) if isinstance(x, Fraction) and x.denominator < 10 ** 6 else f"{float(x):.17g}"


# -- tower ------------------------------------------------------------------

@_timed
def check_endpoints(params: ConstructionParams) -> Check:
    """g(0) = 0, g(1) = 1 and f(0) = 0, exactly in exact mode."""
    vals = {"g(0)": (g_eval(params, 0), 0), "g(1)": (g_eval(params, 1), 1), "f(0)": (f_eval(params, 0), 0)}
    exact_mode = params.mode.value == "exact"
    ok = True
    for _, (r, want) in vals.items():
        ok &= r.contains(want) and (r.is_exact or not exact_mode)
    return Check("endpoint_exactness", ok, 0.0,
                 detail={k: str(r) for k, (r, _) in vals.items()})


@_timed
def check_range_and_monotone(params: ConstructionParams, n: int, seed: int) -> Check:
    """0 < g < 1 on random interior points and no certified decrease of phi0."""
    xs = sorted(random_points(n, seed))
    worst, witness = None, None
    for x in xs:
        r = g_eval(params, x)
        m = min(r.lower, 1 - r.upper)
        if worst is None or m < worst:
            worst, witness = m, x
    phis = [phi0_eval(params, x) for x in xs]
    drops = [(xs[i], xs[i + 1]) for i in range(len(xs) - 1) if phis[i].lower > phis[i + 1].upper]
    ok = worst > 0 and not drops
    return Check("range_and_monotone_cdf", ok, float(worst), _f(witness),
                 {"points": n, "phi0_certified_drops": len(drops)})


@_timed
def check_symmetry(params: ConstructionParams, n: int, seed: int, eps=Fraction(1, 10 ** 10)) -> Check:
    """g(1 - x) = 1 - g(x) to 2 eps, and f(1) = 1/2 to 1e-9."""
    worst, witness = Fraction(0), None
    for x in random_points(n, seed):
        d = abs(g_eval(params, 1 - x, eps).mid + g_eval(params, x, eps).mid - 1)
        if d >= worst:
            worst, witness = d, x
    f1 = f_eval(params, 1)
    tol = Fraction(1, 10 ** 9)
    f_ok = f1.lower >= Fraction(1, 2) - tol and f1.upper <= Fraction(1, 2) + tol
    ok = worst <= 2 * eps and f_ok
    return Check("symmetry", ok, float(2 * eps - worst), _f(witness),
                 {"max_defect": float(worst), "f(1)": str(f1)})


def _perturbation_points(params: ConstructionParams, gaps, n: int, seed: int):
    """Points in level-1 blocks; half of them inside deeper slots, where g and g1 differ."""
    rng = random.Random(seed)
    span = 1 << 64
    out = []
    blocks_of = {}
    for idx in range(n):
        gap = gaps[idx % len(gaps)]
        key = (gap.a.midpoint(), gap.b.midpoint())
        if key not in blocks_of:
            blocks_of[key] = subblocks(params, gap)[0]
        block = rng.choice(blocks_of[key])
        if idx % 2:
            try:
                inner_blocks, inner_slots = subblocks(params, block)
                host = rng.choice(inner_slots[1:-1])
                if rng.random() < 0.5:
                    host = rng.choice(subblocks(params, rng.choice(inner_blocks))[1][1:-1])
            except DegenerateGap:  # too thin for the working precision: stay in the block
                host = block
        else:
            host = block
        a, b = host.a.midpoint(), host.b.midpoint()
        out.append((gap, a + (b - a) * Fraction(rng.randrange(1, span), span)))
    return out


@_timed
def check_perturbation(params: ConstructionParams, n: int, seed: int) -> Check:
    """|g - g1| < 4 (b-a)^(2/alpha) / N^(4/alpha) off the level-1 slots, |phi1 - phi0| <= delta on gaps."""
    geom = geometry(params)
    gaps = sample_gaps(params, 12, depths=(0, 1), seed=seed)
    worst_rel, witness = None, None
    for gap, x in _perturbation_points(params, gaps, n, seed):
        bound = (4 * gap.delta / geom.F.wrap(geom.N_pow_2ia)).bounds()[0]
        eps = bound / 1000
        g, g1 = g_eval(params, x, eps), g1_eval(params, x, eps)
        diff = max(g.upper - g1.lower, g1.upper - g.lower)
        rel = (bound - diff) / bound
        if worst_rel is None or rel < worst_rel:
            worst_rel, witness = rel, x
    phi_worst = None
    rng = random.Random(seed + 1)
    for gap in gaps:
        a, b = gap.a.midpoint(), gap.b.midpoint()
        d = gap.delta.bounds()[1]
        for _ in range(20):
            x = a + (b - a) * Fraction(rng.randrange(1, 1 << 64), 1 << 64)
            p1, p0 = phi_n_eval(params, x, 1), phi0_eval(params, x)
            m = d - max(p1.upper - p0.lower, p0.upper - p1.lower)
            phi_worst = m if phi_worst is None else min(phi_worst, m)
    ok = worst_rel > 0 and phi_worst >= 0
    return Check("perturbation_bounds", ok, float(worst_rel), _f(witness),
                 {"points": n, "relative_margin_g_g1": float(worst_rel),
                  "phi1_phi0_margin": float(phi_worst)})


@_timed
def check_derivative_link(params: ConstructionParams, n: int, seed: int, c_phi0: Fraction | None = None) -> Check:
    """Central differences of f track g within (6 c + 2) h^alpha + 1e-9."""
    c = c_phi0 if c_phi0 is not None else analytic_phi0_bound(params)
    a = float(params.alpha)
    lo = Fraction(1, 2 ** 9)
    eps = Fraction(1, 10 ** 20)
    worst, witness = None, None
    for x in random_points(n, seed, lo, 1 - lo):
        gx = g_eval(params, x, eps)
        for e in range(10, 19):
            h = Fraction(1, 2 ** e)
            fp, fm = f_eval(params, x + h, eps), f_eval(params, x - h, eps)
            dq = (fp.mid - fm.mid) / (2 * h)
            err = (fp.total_err + fm.total_err) / (2 * h) + gx.total_err
            slack = (6 * float(c) + 2) * float(h) ** a + 1e-9 - (float(abs(dq - gx.mid)) - float(err))
            if worst is None or slack < worst:
                worst, witness = slack, f"x={_f(x)}, h=2^-{e}"
    return Check("derivative_link", worst >= 0, worst, witness, {"points": n, "c_phi0": float(c)})


def suite_tower(params: ConstructionParams, seed: int = 0, sizes: Sizes = Sizes(),
                c_phi0: Fraction | None = None) -> list[Check]:
    return [
        check_endpoints(params),
        check_range_and_monotone(params, sizes.random_points, seed),
        check_symmetry(params, sizes.random_points, seed),
        check_perturbation(params, sizes.random_points, seed),
        check_derivative_link(params, sizes.derivative_points, seed, c_phi0),
    ]


# -- holder -----------------------------------------------------------------

def _estimate(fn, params, pairs: int, seed: int):
    a = params.alpha
    est = [holder_estimate(fn, a, pairs // 2, UniformRandom(seed)),
           holder_estimate(fn, a, pairs - pairs // 2, AdversarialEndpoints(params, seed))]
    return max(est, key=lambda e: e.lower_bound)


@dataclass(frozen=True)
class HolderMeasurement:
    c_phi0_low: Fraction
    c_phi0_high: Fraction
    witness: tuple


def measure_phi0(params: ConstructionParams, pairs: int, seed: int) -> HolderMeasurement:
    eps = Fraction(1, 10 ** 30)
    est = _estimate(lambda x: phi0_eval(params, x, eps), params, pairs, seed)
    return HolderMeasurement(est.lower_bound, analytic_phi0_bound(params), est.witness)


def suite_holder(params: ConstructionParams, seed: int = 0, sizes: Sizes = Sizes(),
                 measured: HolderMeasurement | None = None) -> list[Check]:
    checks = []
    t0 = time.perf_counter()
    m = measured or measure_phi0(params, sizes.holder_pairs, seed)
    c = m.c_phi0_low
    checks.append(Check(
        "phi0_constant_bracket", c <= m.c_phi0_high, float(m.c_phi0_high - c),
        f"x={_f(m.witness[0])}, y={_f(m.witness[1])}" if m.witness else None,
        {"lower": float(c), "upper": float(m.c_phi0_high), "pairs": sizes.holder_pairs,
         "normalizer": float(1 / c) if c else None},
        time.perf_counter() - t0))
    for n in range(1, 5):
        t0 = time.perf_counter()
        est = _estimate(lambda x, n=n: phi_n_eval(params, x, n), params, sizes.holder_pairs_tower, seed + n)
        bound = c * (2 - Fraction(1, 2 ** n)) * Fraction(105, 100)
        checks.append(Check(f"phi{n}_holder", est.lower_bound <= bound, float(bound - est.lower_bound),
                            str(tuple(_f(v) for v in est.witness)) if est.witness else None,
                            {"estimate": float(est.lower_bound), "bound": float(bound)},
                            time.perf_counter() - t0))
    t0 = time.perf_counter()
    est = _estimate(lambda x: g_eval(params, x), params, sizes.holder_pairs_tower, seed + 9)
    bound = 6 * c + 2
    checks.append(Check("g_holder", est.lower_bound <= bound, float(bound - est.lower_bound),
                        str(tuple(_f(v) for v in est.witness)) if est.witness else None,
                        {"estimate": float(est.lower_bound), "bound": float(bound)},
                        time.perf_counter() - t0))
    return checks


# -- gap sums ---------------------------------------------------------------

def suite_gapsum(params: ConstructionParams, seed: int = 0, sizes: Sizes = Sizes(),
                 cutoff=Fraction(1, 10 ** 18)) -> list[Check]:
    checks = []
    N = params.N
    for n in (1, 2, 3):
        t0 = time.perf_counter()
        comps = enumerate_transitional(params, n, cutoff)
        gs = gap_sum(comps, params.alpha, cutoff)
        bound = Fraction(1, N ** n)
        order = gs.compare_below(bound)
        checks.append(Check(
            f"transitional_sum_tier{n}", order is Ordering.LESS,
            float(bound - gs.partial_sum.midpoint()), None,
            {"components": gs.components_counted, "partial_sum": str(gs.partial_sum),
             "exact_form": gs.render_exact(), "bound": str(bound), "cutoff": float(cutoff)},
            time.perf_counter() - t0))
    t0 = time.perf_counter()
    total = transitional_sum_bound(params)
    hi = total.bounds()[1]
    ok = all(hi ** n < Fraction(1, N ** n) for n in (1, 2, 3))
    checks.append(Check("transitional_sum_full_bound", ok, float(Fraction(1, N) - hi), None,
                        {"upper_bound": float(hi), "bound": f"1/{N}"}, time.perf_counter() - t0))
    return checks


# -- box counts -------------------------------------------------------------

def suite_boxcount(params: ConstructionParams, seed: int = 0, sizes: Sizes = Sizes(), k_max: int = 6) -> list[Check]:
    t0 = time.perf_counter()
    rows = [box_count_set(params, F0, k) for k in range(1, k_max + 1)]
    ratios = [float(r.ratio(params.alpha)) for r in rows]
    c_box = max(ratios)
    fit = dim_fit(rows, params.alpha)
    spread = max(ratios) / min(ratios)
    elapsed = time.perf_counter() - t0
    table = {"counts": [r.count for r in rows], "ratios": ratios, "c_f0_boxcount": c_box}
    slope_margin = 0.03 - abs(fit.slope - float(params.alpha))
    return [
        Check("f0_ratio_below_constant", all(r <= c_box for r in ratios), 0.0, None, table, elapsed),
        Check("f0_ratio_within_factor_2", spread <= 2, 2 - spread, None,
              {"max_over_min": spread, **table}),
        Check("f0_dim_fit_slope", slope_margin >= 0, slope_margin, None,
              {"slope": fit.slope, "alpha": float(params.alpha)}),
    ]


# -- oscillation ------------------------------------------------------------

def suite_oscillation(params: ConstructionParams, seed: int = 0, sizes: Sizes = Sizes()) -> list[Check]:
    checks = []
    for gap in sample_gaps(params, sizes.oscillation_gaps, depths=(0, 1, 2), seed=seed):
        t0 = time.perf_counter()
        rep = oscillation_check(params, gap, raise_on_fail=False, seed=seed)
        rel = rep.min_margin / rep.threshold
        parity = min(rep.parity_margins)
        bad = min(rep.rows, key=lambda r: r.margin)
        checks.append(Check(
            f"oscillation_depth{gap.depth}_gap{gap.index}", rep.passed, float(rel),
            f"j={bad.j}", {"gap": [_f(v) for v in rep.gap], "threshold": float(rep.threshold),
                           "min_margin": float(rep.min_margin), "parity_margin": float(parity)},
            time.perf_counter() - t0))
    return checks


# -- convexity --------------------------------------------------------------

def suite_convexity(params: ConstructionParams, seed: int = 0, sizes: Sizes = Sizes(), jobs: int = 1,
                    k_range=range(2, 9)) -> list[Check]:
    t0 = time.perf_counter()
    rep = convexity_dimension_experiment(params, sizes.experiment_m, k_range, seed, jobs=jobs)
    elapsed = time.perf_counter() - t0
    bound = rep.slope_bound
    checks = []
    for name in ("convex", "concave"):
        sub = getattr(rep, name)
        checks.append(Check(f"{name}_subset_slope", sub.fit.slope <= bound, bound - sub.fit.slope, None,
                            {"size": len(sub.indices), "slope": sub.fit.slope, "bound": bound,
                             "ratios": [list(r) for r in sub.ratios], "quantized": sub.quantized},
                            elapsed if name == "convex" else 0.0))
        occ = sub.occupancy
        checks.append(Check(f"{name}_block_occupancy", occ.passed, float(2 - occ.worst_count), None,
                            {"regions": occ.regions_checked, "worst_count": occ.worst_count}))
    ctl = rep.control
    ok = len(ctl.indices) == sizes.experiment_m and ctl.fit.slope >= 0.95
    checks.append(Check("control_parabola", ok, ctl.fit.slope - 0.95, None,
                        {"size": len(ctl.indices), "slope": ctl.fit.slope}))
    checks.append(Check("measured_constants", True, None, None,
                        {"c_alpha": rep.c_alpha, "c_g1_proxy": rep.c_g1,
                         "c_g1_rows": [list(r) for r in rep.c_g1_rows],
                         "note": "finite-sample proxy: counts a sampled set, not an arbitrary one",
                         "seed": seed}))
    return checks


# -- transfer ---------------------------------------------------------------

def _brute_convex(points) -> int:
    m = len(points)
    for r in range(m, 0, -1):
        for c in itertools.combinations(range(m), r):
            if check_convex_restriction([points[i] for i in c]).convex:
                return r
    return 0


def _brute_monotone(vals) -> int:
    m = len(vals)
    for r in range(m, 0, -1):
        for c in itertools.combinations(range(m), r):
            seq = [vals[i] for i in c]
            if all(a <= b for a, b in zip(seq, seq[1:])) or all(a >= b for a, b in zip(seq, seq[1:])):
                return r
    return 0


def _random_instance(rng: random.Random):
    m = rng.randint(1, 12)
    xs = sorted(rng.sample(range(1, 1000), m))
    return [PointSample(Fraction(x, 1000), Fraction(rng.randint(-20, 20), rng.randint(1, 5))) for x in xs]


@_timed
def check_dp_oracles(instances: int, seed: int) -> Check:
    rng = random.Random(seed)
    bad = None
    for t in range(instances):
        pts = _random_instance(rng)
        cv = longest_convex_subset(pts).indices
        mono = longest_monotone_subset(pts).indices
        if len(cv) != _brute_convex(pts) or not check_convex_restriction([pts[i] for i in cv]).convex:
            bad = f"convex instance {t}"
            break
        if len(mono) != _brute_monotone([p.value for p in pts]):
            bad = f"monotone instance {t}"
            break
    return Check("dp_matches_brute_force", bad is None, None, bad, {"instances": instances})


@_timed
def check_transfer_identity() -> Check:
    def g(t, eps):
        return EvalResult(Scalar.exact(t), Scalar.exact(0))

    A = [PointSample(x, x * x / 2) for x in (Fraction(1, 10), Fraction(2, 10), Fraction(4, 10))]
    res = mvt_transfer(A, g, Fraction(1, 10 ** 12))
    want = [Fraction(3, 20), Fraction(3, 10)]
    err = max(abs(b.x - w) for b, w in zip(res.B, want))
    ok = err <= Fraction(1, 10 ** 10) and res.ok
    return Check("transfer_identity_roots", ok, float(Fraction(1, 10 ** 10) - err), None,
                 {"roots": [str(b.x) for b in res.B]})


@_timed
def check_transfer_constructed(params: ConstructionParams, sample: int, max_points: int, seed: int) -> Check:
    eps = Fraction(1, 10 ** 30)
    xs = jittered_grid(sample, seed)
    pts = []
    for x in xs:
        r = f_eval(params, x, eps)
        pts.append(PointSample(x, r.mid, r.total_err))
    idx = longest_convex_subset(pts).indices
    A = [pts[i] for i in idx]
    if len(A) > max_points:
        step = len(A) / max_points
        A = [A[int(i * step)] for i in range(max_points)]

    def g(t, e):
        return g_eval(params, t, e)

    res = mvt_transfer(A, g, Fraction(1, 10 ** 15))
    worst = min((3 * nb + 2 - na for _, na, nb in res.box_rows), default=0)
    return Check("transfer_constructed", res.ok, float(worst), None,
                 {"A": len(A), "B": len(res.B), "monotone": res.monotone,
                  "box_rows": [list(r) for r in res.box_rows]})


def suite_transfer(params: ConstructionParams, seed: int = 0, sizes: Sizes = Sizes()) -> list[Check]:
    return [
        check_dp_oracles(sizes.brute_force_instances, seed),
        check_transfer_identity(),
        check_transfer_constructed(params, sizes.transfer_sample, sizes.transfer_max_points, seed),
    ]


# -- dispatch ---------------------------------------------------------------

@dataclass
class SuiteResult:
    suite: str
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def run_suite(name: str, params: ConstructionParams, seed: int = 0, sizes: Sizes = Sizes(),
              jobs: int = 1) -> list[SuiteResult]:
    """Run one suite, or all of them for ``name == "all"``."""
    names = SUITES if name == "all" else (name,)
    for n in names:
        if n not in SUITES:
            raise InvalidParams(f"unknown suite {n!r}")
    out = []
    for n in names:
        if n == "convexity":
            checks = suite_convexity(params, seed, sizes, jobs)
        else:
            checks = globals()[f"suite_{n}"](params, seed, sizes)
        out.append(SuiteResult(n, checks))
    return out

