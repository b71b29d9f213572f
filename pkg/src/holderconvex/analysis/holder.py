"""Hoelder quotient estimates and measured constants."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator

import gmpy2

from ..cantor_base import ConstructionParams, Strictness, geometry
from ..errors import InvalidParams
from ..records import Bracket, EvalResult, MeasuredConstants
from ..scalar import Scalar

_DYADIC_BITS = 64


def root_upper(r: Fraction, alpha: Fraction, extra_bits: int = 64) -> Fraction:
    """A rational upper bound on r**alpha for r >= 0."""
    if r == 0:
        return Fraction(0)
    p, q = alpha.numerator, alpha.denominator
    # r**(p/q) = (n**p * d**(q-p))**(1/q) / d
    n, d = r.numerator, r.denominator
    radicand = n ** p * d ** (q - p) << (q * extra_bits)
    root, exact = gmpy2.iroot(gmpy2.mpz(radicand), q)
    root = int(root) + (0 if exact else 1)
    return Fraction(root, d << extra_bits)


@lru_cache(maxsize=64)
def analytic_phi0_bound(params: ConstructionParams) -> Fraction:
    """Upper bound on the Hoelder constant of phi0.

    Pairs inside one child reduce to the whole set by self-similarity, so
    the supremum comes from points s children apart: the mass between them
    is at most (s+1)/N and their distance at least s*P - L.
    """
    geom = geometry(params)
    F = geom.F
    a = params.alpha
    N = params.N
    best = Fraction(0)
    for s in range(1, N):
        dist = F.lower(s * geom.P - geom.L)
        if dist <= 0:
            continue
        # lower bound on dist**alpha: invert the upper bound of dist**-alpha
        inv = root_upper(1 / dist, a)
        best = max(best, Fraction(s + 1, N) * inv)
    return best


# -- samplers ---------------------------------------------------------------

def _dyadic(u: float) -> Fraction:
    return Fraction(min(max(int(u * 2 ** _DYADIC_BITS), 0), 2 ** _DYADIC_BITS), 2 ** _DYADIC_BITS)


@dataclass(frozen=True)
class UniformRandom:
    """Uniform x with a log-uniform separation, so every scale is probed."""

    seed: int = 0
    min_log2_sep: int = 48

    def pairs(self, n: int) -> Iterator[tuple[Fraction, Fraction]]:
        rng = random.Random(self.seed)
        for _ in range(n):
            x = _dyadic(rng.random())
            sep = Fraction(1, 2 ** rng.randint(1, self.min_log2_sep)) * _dyadic(rng.random())
            y = x + sep if x + sep <= 1 else x - sep
            if y != x and 0 <= y <= 1:
                yield (min(x, y), max(x, y))


@dataclass(frozen=True)
class DyadicGrid:
    """Neighbouring points of the dyadic grids 2^-1 .. 2^-level."""

    level: int = 16

    def pairs(self, n: int) -> Iterator[tuple[Fraction, Fraction]]:
        per = max(1, n // self.level)
        for m in range(1, self.level + 1):
            size = 2 ** m
            count = min(per, size)
            for t in range(count):
                j = t * size // count
                yield (Fraction(j, size), Fraction(j + 1, size))


@dataclass(frozen=True)
class AdversarialEndpoints:
    """Endpoints of children, gaps, blocks and slots, plus jitter inside them."""

    params: ConstructionParams
    seed: int = 0
    depth: int = 2

    def _intervals(self) -> list[tuple[Fraction, Fraction]]:
        from ..cantor_base import children_at_depth, gaps_at_depth
        from ..tower import subblocks

        out = []
        for d in range(self.depth + 1):
            if self.params.N ** d > 20_000:
                break
            out += [(c.a.midpoint(), c.b.midpoint()) for c in children_at_depth(self.params, d)]
        rng = random.Random(self.seed)
        gaps = list(gaps_at_depth(self.params, 0))
        for gap in rng.sample(gaps, min(8, len(gaps))):
            out.append((gap.a.midpoint(), gap.b.midpoint()))
            blocks, slots = subblocks(self.params, gap)
            out += [(r.a.midpoint(), r.b.midpoint()) for r in blocks + slots]
        return [(a, b) for a, b in out if a < b]

    def pairs(self, n: int) -> Iterator[tuple[Fraction, Fraction]]:
        rng = random.Random(self.seed)
        ivs = self._intervals()
        ends = sorted({e for iv in ivs for e in iv})
        emitted = 0
        for a, b in ivs:
            if emitted >= n:
                return
            yield (a, b)
            emitted += 1
        while emitted < n:
            if rng.random() < 0.5:
                i = rng.randrange(len(ends) - 1)
                yield (ends[i], ends[i + 1])
            else:
                a, b = ivs[rng.randrange(len(ivs))]
                u, v = sorted((rng.random(), rng.random()))
                x, y = a + (b - a) * _dyadic(u), a + (b - a) * _dyadic(v)
                if x == y:
                    continue
                yield (x, y)
            emitted += 1


@dataclass(frozen=True)
class FixedPairs:
    pairs_list: tuple[tuple[Fraction, Fraction], ...]

    def pairs(self, n: int) -> Iterator[tuple[Fraction, Fraction]]:
        for a, b in self.pairs_list[:n]:
            yield (Fraction(a), Fraction(b))


# -- estimation -------------------------------------------------------------

@dataclass(frozen=True)
class HolderEstimate:
    """Largest certified quotient found, with the pair that achieves it."""

    lower_bound: Fraction
    ratio_estimate: Fraction
    witness: tuple[Fraction, Fraction] | None
    pairs_tested: int
    notes: tuple[str, ...] = field(default=())

    def __float__(self) -> float:
        return float(self.lower_bound)


def _interval_of(r) -> tuple[Fraction, Fraction]:
    if isinstance(r, EvalResult):
        return r.lower, r.upper
    if isinstance(r, Scalar):
        return r.bounds()
    q = Fraction(r)
    return q, q


def holder_estimate(fn: Callable, alpha, n_pairs: int = 10_000, sampler=None) -> HolderEstimate:
    """Certified lower bound on sup |fn(x) - fn(y)| / |x - y|^alpha over sampled pairs.

    ``fn`` returns an EvalResult, a Scalar or an exact number.
    """
    a = Fraction(alpha)
    if not 0 < a <= 1:
        raise InvalidParams("alpha must lie in (0, 1]")
    sampler = sampler or UniformRandom()
    cache: dict[Fraction, tuple[Fraction, Fraction]] = {}

    def val(x):
        if x not in cache:
            cache[x] = _interval_of(fn(x))
        return cache[x]

    best, best_mid, witness, tested = Fraction(0), Fraction(0), None, 0
    for x, y in sampler.pairs(n_pairs):
        tested += 1
        (xl, xh), (yl, yh) = val(x), val(y)
        gap = max(yl - xh, xl - yh, Fraction(0))
        mid_diff = abs((yl + yh) - (xl + xh)) / 2
        denom = root_upper(abs(y - x), a)
        lb = gap / denom
        if lb > best:
            best, witness = lb, (x, y)
        best_mid = max(best_mid, mid_diff / denom)
    return HolderEstimate(best, best_mid, witness, tested)


def measure_c_phi0(params: ConstructionParams, n_pairs: int = 20_000, seed: int = 0) -> Bracket:
    """Sampled lower bound and analytic upper bound for the phi0 constant."""
    from ..cantor_base import phi0_eval

    a = params.alpha
    fn = lambda x: phi0_eval(params, x, Fraction(1, 10 ** 30))  # noqa: E731
    lows = [holder_estimate(fn, a, n_pairs // 2, UniformRandom(seed)).lower_bound,
            holder_estimate(fn, a, n_pairs // 2, AdversarialEndpoints(params, seed)).lower_bound]
    low = max(lows)
    return Bracket(low, max(low, analytic_phi0_bound(params)))


def measure_c_f0_boxcount(params: ConstructionParams, k_max: int = 6) -> tuple[Bracket, list]:
    """Range of count/N^(alpha k) for F0 over k = 1..k_max."""
    from .boxcount import F0, box_count_set

    rows = [box_count_set(params, F0, k) for k in range(1, k_max + 1)]
    ratios = [r.ratio(params.alpha).bounds() for r in rows]
    lo = min(r[0] for r in ratios)
    hi = max(r[1] for r in ratios)
    return Bracket(lo, hi), rows


def measure_constants(params: ConstructionParams, *, n_pairs: int = 20_000, k_max: int = 6,
                      seed: int = 0) -> MeasuredConstants:
    """Measure the phi0 and F0 box-count constants for one parameter set."""
    c_phi0 = measure_c_phi0(params, n_pairs, seed)
    box, _rows = measure_c_f0_boxcount(params, k_max)
    notes = []
    if params.strictness is Strictness.STRICT and c_phi0.upper <= 2:
        notes.append("measured phi0 constant is below 2; the proof's choice of N does not need it")
    return MeasuredConstants(
        c_phi0=c_phi0,
        c_f0_boxcount=box,
        c_phi0_analytic=analytic_phi0_bound(params),
        notes=tuple(notes),
    )

