"""Plain record types passed between the construction and analysis layers."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import NamedTuple

from .scalar import Scalar, format_value


class Kind(str, Enum):
    CHILD = "Child"
    GAP = "Gap"
    PLATEAU = "Plateau"
    TRANSITIONAL = "Transitional"


@dataclass(frozen=True)
class IntervalRec:
    """One node of the interval hierarchy.

    ``depth`` is the IFS depth for children and gaps, and the plateau level
    for plateau blocks and transitional slots.
    """

    a: Scalar
    b: Scalar
    kind: Kind
    depth: int
    base_value: Scalar | None = None
    delta: Scalar | None = None
    index: int | None = None

    @property
    def length(self) -> Scalar:
        return self.b - self.a


class StepKind(str, Enum):
    CHILD = "ChildDescent"
    GAP = "GapEntry"
    PLATEAU = "PlateauEntry"
    TRANSITIONAL = "TransitionalEntry"


class Step(NamedTuple):
    kind: StepKind
    index: int


class TerminalKind(str, Enum):
    IN_F0_LIMIT = "InF0Limit"
    ON_PLATEAU_LIMIT = "OnPlateauLimit"
    IN_TRANSITIONAL = "InTransitional"
    TRUNCATED = "Truncated"
    EXACT = "Exact"


@dataclass(frozen=True)
class AffineFrame:
    """Maps g on [0, 1] onto a transitional interval: ``offset + scale * g(u)``."""

    offset: Scalar
    scale: Scalar
    domain_a: Scalar
    domain_b: Scalar

    def compose(self, inner: AffineFrame) -> AffineFrame:
        """Frame of ``inner`` seen from the coordinates of ``self``."""
        width = self.domain_b - self.domain_a
        return AffineFrame(
            offset=self.offset + self.scale * inner.offset,
            scale=self.scale * inner.scale,
            domain_a=self.domain_a + width * inner.domain_a,
            domain_b=self.domain_a + width * inner.domain_b,
        )


IDENTITY_FRAME = AffineFrame(Scalar.exact(0), Scalar.exact(1), Scalar.exact(0), Scalar.exact(1))


@dataclass(frozen=True)
class Address:
    steps: tuple[Step, ...]
    frame: AffineFrame
    terminal_kind: TerminalKind


@dataclass(frozen=True)
class EvalResult:
    """A value and a bound on its distance from the true value."""

    value: Scalar
    err: Scalar
    address: Address | None = None
    warnings: tuple[str, ...] = ()

    @property
    def is_exact(self) -> bool:
        return self.value.is_exact and self.err.exact_value == 0

    @property
    def lower(self) -> Fraction:
        return self.value.bounds()[0] - self.err.exact_value

    @property
    def upper(self) -> Fraction:
        return self.value.bounds()[1] + self.err.exact_value

    @property
    def mid(self) -> Fraction:
        return self.value.midpoint()

    @property
    def total_err(self) -> Fraction:
        """Radius around :attr:`mid` covering both rounding and truncation."""
        return self.value.radius() + self.err.exact_value

    def contains(self, q) -> bool:
        return self.lower <= Fraction(q) <= self.upper

    def __str__(self) -> str:
        return format_value(self.mid, self.total_err)


@dataclass(frozen=True)
class Bracket:
    lower: Fraction
    upper: Fraction

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("bracket lower exceeds upper")


@dataclass(frozen=True)
class MeasuredConstants:
    """Empirical stand-ins for the constants that the proofs leave implicit."""

    c_phi0: Bracket
    c_f0_boxcount: Bracket
    c_g1: Bracket | None = None
    c_alpha: Bracket | None = None
    c_phi0_analytic: Fraction | None = None
    notes: tuple[str, ...] = field(default=())
