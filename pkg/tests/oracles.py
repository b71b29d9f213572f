"""Slow, independent reference implementations used as test oracles.

Everything here works on plain Fractions for alpha = 1/p, written straight
from the construction rather than from the package code.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def sqrt_digits(n: int, digits: int) -> tuple[Fraction, Fraction]:
    """Bracket [r, r + 10^-digits] around sqrt(n), digit by digit."""
    r = math.isqrt(n * 10 ** (2 * digits))
    return Fraction(r, 10 ** digits), Fraction(r + 1, 10 ** digits)


def f0_geometry(N: int, p: int) -> tuple[Fraction, Fraction]:
    L = Fraction(1, N ** p)
    return L, (1 - L) / (N - 1)


def f0_children(N: int, p: int, d: int) -> list[tuple[Fraction, Fraction]]:
    L, P = f0_geometry(N, p)
    out = [(Fraction(0), Fraction(1))]
    for _ in range(d):
        out = [(a + s * P * (b - a), a + (s * P + L) * (b - a)) for a, b in out for s in range(N)]
    return out


def _f0_walk(N: int, p: int, x: Fraction, max_depth: int):
    """Descend into F0; return ('gap', A, B, v) or ('point', v) or None."""
    L, P = f0_geometry(N, p)
    off, scale = Fraction(0), Fraction(1)  # global = off + scale * local
    voff, vscale = Fraction(0), Fraction(1)
    for _ in range(max_depth):
        if x == 0:
            return ("point", voff)
        if x == 1:
            return ("point", voff + vscale)
        s = min(int(x / P), N - 1)
        start = s * P
        if x <= start + L:
            off, scale = off + scale * start, scale * L
            voff, vscale = voff + vscale * Fraction(s, N), vscale / N
            x = (x - start) / L
            continue
        A, B = off + scale * (start + L), off + scale * (s + 1) * P
        return ("gap", A, B, voff + vscale * Fraction(s + 1, N))
    return None


def phi0(N: int, p: int, x, max_depth: int = 80):
    hit = _f0_walk(N, p, Fraction(x), max_depth)
    if hit is None:
        return None
    return hit[1] if hit[0] == "point" else hit[3]


def _sign(j: int) -> int:
    return 1 if j % 2 else -1


def _pieces(N: int, p: int, A, B, v):
    """Slots and blocks of region (A, B) in left-to-right order."""
    w = (B - A) / N
    d = (w) ** (2 * p)
    for i in range(N + 1):
        lo = A if i == 0 else A + i * w - d
        hi = B if i == N else A + i * w + d
        va = v if i == 0 else v + _sign(i) * d
        vb = v if i == N else v + _sign(i + 1) * d
        yield ("slot", lo, hi, va, vb)
        if i < N:
            j = i + 1
            yield ("block", A + i * w + d, A + j * w - d, v + _sign(j) * d, v + _sign(j) * d)


def _find(N, p, A, B, v, x):
    for piece in _pieces(N, p, A, B, v):
        if piece[1] <= x <= piece[2]:
            return piece
    raise AssertionError("pieces do not cover the region")


def phi_n(N: int, p: int, x, n: int):
    """phi_n(x), or None when x sits too deep in F0 for the walk."""
    x = Fraction(x)
    hit = _f0_walk(N, p, x, 80)
    if hit is None:
        return None
    if hit[0] == "point":
        return hit[1]
    _, A, B, v = hit
    for _ in range(n):
        kind, lo, hi, va, vb = _find(N, p, A, B, v, x)
        if kind == "slot":
            return va + (vb - va) * (x - lo) / (hi - lo)
        A, B, v = lo, hi, va
    return v


def g_bracket(N: int, p: int, x, levels: int = 4, tiers: int = 3):
    """An interval [lo, hi] containing g(x), or None if x is too deep in F0.

    g equals g1 outside slots; in a slot (lo, hi) with end values va, vb it
    is va + (vb - va) * g(u) for the rescaled u.  Values of g stay in [0, 1],
    and below a block of length l everything stays within 2 * (l/N)^(2p).
    """
    x = Fraction(x)
    O, S = Fraction(0), Fraction(1)
    for _ in range(tiers):
        hit = _f0_walk(N, p, x, 80)
        if hit is None:
            return None
        if hit[0] == "point":
            return O + S * hit[1], O + S * hit[1]
        _, A, B, v = hit
        for _ in range(levels):
            kind, lo, hi, va, vb = _find(N, p, A, B, v, x)
            if kind == "slot":
                break
            A, B, v = lo, hi, va
        else:
            r = 2 * ((B - A) / N) ** (2 * p)
            ends = (O + S * (v - r), O + S * (v + r))
            return min(ends), max(ends)
        O, S = O + S * va, S * (vb - va)
        x = (x - lo) / (hi - lo)
    ends = (O, O + S)
    return min(ends), max(ends)


def box_count_cloud(points, base: int, k: int) -> int:
    """Closed grid cells of side base^-k that contain at least one point."""
    n = base ** k
    cells = set()
    for x in points:
        t = x * n
        c = math.floor(t)
        if c < n:
            cells.add(c)
        if t == c and c > 0:
            cells.add(c - 1)
    return len(cells)


def f0_endpoint_cloud(N: int, p: int, d: int) -> list[Fraction]:
    return sorted({e for iv in f0_children(N, p, d) for e in iv})


def brute_longest_convex(xs, vs) -> int:
    m = len(xs)
    for r in range(m, 2, -1):
        for c in itertools.combinations(range(m), r):
            slopes = [(vs[c[t + 1]] - vs[c[t]]) / (xs[c[t + 1]] - xs[c[t]]) for t in range(r - 1)]
            if all(s <= t for s, t in zip(slopes, slopes[1:])):
                return r
    return min(m, 2)


def brute_longest_monotone(vs) -> int:
    m = len(vs)
    for r in range(m, 0, -1):
        for c in itertools.combinations(range(m), r):
            sub = [vs[i] for i in c]
            if sub == sorted(sub) or sub == sorted(sub, reverse=True):
                return r
    return 0


def f_bracket(N: int, p: int, x, levels: int = 4, tiers: int = 3):
    """An interval containing int_0^x g.

    Over a whole gap or plateau region with base value v, the +-delta
    offsets cancel in pairs and every slot averages to its midpoint value, so
    the integral is v times the length.  A partial slot (lo, hi) contributes
    va*(x - lo) + (vb - va)*(hi - lo)*F(u), which recurses on F.
    """
    return _f_walk(N, p, Fraction(x), levels, tiers)


def _f_walk(N, p, x, levels, tiers):
    L, P = f0_geometry(N, p)
    acc = Fraction(0)
    c0, ln, v0, vs = Fraction(0), Fraction(1), Fraction(0), Fraction(1)
    for _ in range(60):
        t = (x - c0) / ln
        if t == 0:
            return acc, acc
        s = min(int(t / P), N - 1)
        for u in range(s):
            acc += ln * L * (v0 + vs * (2 * u + 1) / (2 * N))
            acc += ln * (P - L) * (v0 + vs * Fraction(u + 1, N))
        start = c0 + ln * s * P
        if t <= s * P + L:
            c0, ln, v0, vs = start, ln * L, v0 + vs * Fraction(s, N), vs / N
            continue
        acc += ln * L * (v0 + vs * (2 * s + 1) / (2 * N))
        A, B = start + ln * L, c0 + ln * (s + 1) * P
        lo, hi = _region_partial(N, p, A, B, v0 + vs * Fraction(s + 1, N), x, levels, tiers)
        return acc + lo, acc + hi
    return acc + (x - c0) * v0, acc + (x - c0) * (v0 + vs)


def _region_partial(N, p, A, B, v, x, levels, tiers):
    acc = Fraction(0)
    for _ in range(levels):
        for kind, lo, hi, va, vb in _pieces(N, p, A, B, v):
            if hi <= x:
                acc += (hi - lo) * (va + vb) / 2
                continue
            if lo >= x:
                return acc, acc
            if kind == "block":
                A, B, v = lo, hi, va
                break
            u = (x - lo) / (hi - lo)
            flo, fhi = _f_walk(N, p, u, levels, tiers - 1) if tiers > 1 else (Fraction(0), u)
            ends = (va * (x - lo) + (vb - va) * (hi - lo) * flo, va * (x - lo) + (vb - va) * (hi - lo) * fhi)
            return acc + min(ends), acc + max(ends)
    r = 2 * ((B - A) / N) ** (2 * p)
    return acc + (x - A) * (v - r), acc + (x - A) * (v + r)
