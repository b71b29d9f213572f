"""Sums of alpha-powers of interval lengths, kept exact where possible.

For alpha = 1/p every length produced by the construction is a power of two
times a rational p-th power, so each term is rational times 2^(c/p).  The
sum is stored as one rational coefficient per c and only turned into an
interval when it must be compared.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import gmpy2

from ..cantor_base import ConstructionParams, geometry
from ..errors import InvalidParams
from ..scalar import Ordering, Scalar, interval_context, iv_pow

_COMPARE_PRECISIONS = (128, 512, 2048, 8192)


def _perfect_root(n: int, p: int) -> int | None:
    r, exact = gmpy2.iroot(gmpy2.mpz(n), p)
    return int(r) if exact else None


def _split_two(n: int) -> tuple[int, int]:
    e = (n & -n).bit_length() - 1
    return e, n >> e


def radical_form(length: Fraction, p: int) -> tuple[int, Fraction] | None:
    """(c, r) with length**(1/p) == r * 2**(c/p), 0 <= c < p, or None."""
    if length <= 0:
        return None
    e1, n = _split_two(length.numerator)
    e2, d = _split_two(length.denominator)
    rn, rd = _perfect_root(n, p), _perfect_root(d, p)
    if rn is None or rd is None:
        return None
    t, c = divmod(e1 - e2, p)
    return c, Fraction(rn, rd) * Fraction(2) ** t


@dataclass(frozen=True)
class GapSum:
    alpha: Fraction
    partial_sum: Scalar
    components_counted: int
    min_len_cutoff: Fraction
    exact_terms: tuple[tuple[int, Fraction], ...] | None = None

    def compare_below(self, bound) -> Ordering:
        """Decide partial_sum < bound, raising precision until settled."""
        return compare_terms(self, Fraction(bound))

    def render_exact(self) -> str | None:
        if self.exact_terms is None:
            return None
        p = self.alpha.denominator
        parts = []
        for c, coef in self.exact_terms:
            parts.append(str(coef) if c == 0 else f"({coef})*2^({c}/{p})")
        return " + ".join(parts) or "0"


def _value(terms, p: int, prec: int):
    ctx = interval_context(prec)
    acc = ctx.mpf(0)
    for c, coef in terms:
        root = iv_pow(ctx, ctx.mpf(2), c, p) if c else ctx.mpf(1)
        acc += ctx.mpf(coef.numerator) / coef.denominator * root
    return acc


def compare_terms(gs: GapSum, bound: Fraction) -> Ordering:
    if gs.exact_terms is not None and all(c == 0 for c, _ in gs.exact_terms):
        total = sum((q for _, q in gs.exact_terms), Fraction(0))
        return Ordering.LESS if total < bound else (Ordering.EQUAL if total == bound else Ordering.GREATER)
    for prec in _COMPARE_PRECISIONS:
        if gs.exact_terms is not None:
            lo, hi = Scalar.from_interval(_value(gs.exact_terms, gs.alpha.denominator, prec), prec).bounds()
        else:
            lo, hi = gs.partial_sum.bounds()
        if hi < bound:
            return Ordering.LESS
        if lo > bound:
            return Ordering.GREATER
        if gs.exact_terms is None:
            break
    return Ordering.UNDECIDABLE


def _endpoints(comp) -> tuple[Scalar, Scalar]:
    return comp.a, comp.b


def gap_sum(components, alpha, min_len_cutoff=0) -> GapSum:
    """Sum of |b - a|^alpha over components at least min_len_cutoff long."""
    a = Fraction(alpha)
    if not 0 < a < 1:
        raise InvalidParams("alpha must lie in (0, 1)")
    cutoff = Fraction(min_len_cutoff)
    p = a.denominator
    exact_ok = a.numerator == 1
    coeffs: dict[int, Fraction] = defaultdict(Fraction)
    lengths = []
    for comp in components:
        lo_a, hi_a = _endpoints(comp)
        length = hi_a - lo_a
        if length.bounds()[1] < cutoff:
            continue
        lengths.append(length)
        form = radical_form(length.exact_value, p) if exact_ok and length.is_exact else None
        if form is None:
            exact_ok = False
        else:
            c, r = form
            coeffs[c] += r
    count = len(lengths)
    if exact_ok:
        terms = tuple(sorted((c, q) for c, q in coeffs.items() if q))
        if all(c == 0 for c, _ in terms):
            total = Scalar.exact(sum((q for _, q in terms), Fraction(0)))
        else:
            total = Scalar.from_interval(_value(terms, p, 256), 256)
        return GapSum(a, total, count, cutoff, terms)
    ctx = interval_context(256)
    approx = ctx.mpf(0)
    for length in lengths:
        approx += iv_pow(ctx, length.raw(256), a.numerator, p)
    return GapSum(a, Scalar.from_interval(approx, 256), count, cutoff, None)


def transitional_sum_bound(params: ConstructionParams) -> Scalar:
    """Upper bound on the full tier-1 sum S(G'_{T,1}, alpha) with no cutoff.

    A region of length l contributes two end slots of length delta and N - 1
    inner slots of length 2*delta, then recurses into N blocks whose length
    is below l/N.  Summing the resulting geometric series over every gap of
    every depth gives the bound.
    """
    geom = geometry(params)
    F = geom.F
    N = params.N
    a = params.alpha
    pa, qa = a.numerator, a.denominator
    ctx = interval_context(256)

    def powa(x):
        return iv_pow(ctx, x, pa, qa)

    two_a = powa(ctx.mpf(2))
    # delta^alpha = (l/N)^2 for every alpha
    per_region = lambda l: (l / N) ** 2 * (2 + (N - 1) * two_a)  # noqa: E731
    # blocks are shorter than l/N, so each level scales the slot sum by at most 1/N
    region_factor = 1 / (1 - ctx.mpf(1) / N)
    gap0, L = F.upper(geom.gap0), F.upper(geom.L)
    gap0_iv = ctx.mpf(gap0.numerator) / gap0.denominator
    L_iv = ctx.mpf(L.numerator) / L.denominator
    # depth d holds N^d (N-1) gaps of length gap0 L^d
    depth_factor = 1 / (1 - N * L_iv ** 2)
    total = (N - 1) * per_region(gap0_iv) * region_factor * depth_factor
    return Scalar.from_interval(total, 256)
