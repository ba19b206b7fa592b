"""Core data model: NSW instances, cap-limited Fisher markets, perturbed markets.

All numeric state is held in exact rational arithmetic (fractions.Fraction).
Floats never enter any solver path; they are only produced by reporting code.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

Frac = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def as_frac(value) -> Fraction:
    """Parse a rational from an int, Fraction, or 'p/q' / 'p' string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(int(text))
    raise TypeError(f"cannot interpret {value!r} as a rational")


def frac_str(value: Fraction) -> str:
    """Canonical 'p/q' (or 'p' for integers) rendering, inverse of as_frac."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def frac_float12(value: Fraction) -> str:
    """Human-readable 12-significant-digit rendering for reports only."""
    return f"{float(value):.12g}"


@dataclass(frozen=True)
class NswInstance:
    """Indivisible-item allocation problem with budget-additive valuations.

    values[i][j] is the integer value of item j for agent i; caps[i] is the
    utility cap. Requires at least as many items as agents.
    """

    n: int
    m: int
    values: tuple[tuple[int, ...], ...]
    caps: tuple[int, ...]

    def __post_init__(self):
        if self.n <= 0 or self.m < self.n:
            raise ValueError(f"need m >= n >= 1, got n={self.n}, m={self.m}")
        if len(self.values) != self.n or any(len(row) != self.m for row in self.values):
            raise ValueError("values must be an n x m matrix")
        if len(self.caps) != self.n:
            raise ValueError("caps must have one entry per agent")
        if any(not isinstance(v, int) or v < 0 for row in self.values for v in row):
            raise ValueError("values must be non-negative integers")
        if any(not isinstance(c, int) or c <= 0 for c in self.caps):
            raise ValueError("caps must be positive integers")

    @staticmethod
    def from_lists(values: Iterable[Iterable[int]], caps: Iterable[int]) -> "NswInstance":
        vals = tuple(tuple(int(v) for v in row) for row in values)
        cps = tuple(int(c) for c in caps)
        return NswInstance(n=len(vals), m=len(vals[0]) if vals else 0, values=vals, caps=cps)

    def is_capped(self) -> bool:
        return all(v <= self.caps[i] for i, row in enumerate(self.values) for v in row)


@dataclass(frozen=True)
class MarketInstance:
    """Fisher market with buyer budgets/utility caps and seller earning caps."""

    n: int
    m: int
    budgets: tuple[int, ...]
    utils: tuple[tuple[int, ...], ...]
    ucaps: tuple[int, ...]
    ecaps: tuple[int, ...]

    def __post_init__(self):
        if self.n <= 0 or self.m <= 0:
            raise ValueError("need at least one buyer and one good")
        if len(self.budgets) != self.n or len(self.ucaps) != self.n:
            raise ValueError("budgets and ucaps must have one entry per buyer")
        if len(self.ecaps) != self.m:
            raise ValueError("ecaps must have one entry per good")
        if len(self.utils) != self.n or any(len(row) != self.m for row in self.utils):
            raise ValueError("utils must be an n x m matrix")
        if any(not isinstance(b, int) or b <= 0 for b in self.budgets):
            raise ValueError("budgets must be positive integers")
        if any(not isinstance(u, int) or u < 0 for row in self.utils for u in row):
            raise ValueError("utilities must be non-negative integers")
        if any(not isinstance(c, int) or c <= 0 for c in self.ucaps):
            raise ValueError("utility caps must be positive integers")
        if any(not isinstance(d, int) or d <= 0 for d in self.ecaps):
            raise ValueError("earning caps must be positive integers")

    @property
    def largest_param(self) -> int:
        """Largest integer appearing in the market description."""
        best = max(self.budgets)
        best = max(best, max(self.ucaps), max(self.ecaps))
        for row in self.utils:
            best = max(best, max(row))
        return best

    def valued_goods(self, buyer: int) -> list[int]:
        return [j for j in range(self.m) if self.utils[buyer][j] > 0]


@dataclass(frozen=True)
class PerturbedMarket:
    """Market whose non-zero utilities are rounded up to powers of (1 + eps).

    putils[i][j] = (1+eps)^exponents[i][j] for utils[i][j] > 0, else 0.
    """

    base: MarketInstance
    epsilon: Fraction
    exponents: tuple[tuple[int, ...], ...]
    putils: tuple[tuple[Fraction, ...], ...]
    umax: Fraction

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def m(self) -> int:
        return self.base.m

    def valued_goods(self, buyer: int) -> list[int]:
        return [j for j in range(self.m) if self.putils[buyer][j] > 0]


@dataclass(frozen=True)
class Allocation:
    """Fractional or integral assignment of goods to buyers, x[i][j] in [0,1]."""

    entries: tuple[tuple[Fraction, ...], ...]
    integral: bool = False

    def __post_init__(self):
        for row in self.entries:
            for x in row:
                if x < 0 or x > 1:
                    raise ValueError("allocation entries must lie in [0, 1]")
                if self.integral and x != 0 and x != 1:
                    raise ValueError("integral allocation must be 0/1")
        for j in range(self.m):
            total = sum(row[j] for row in self.entries)
            if total > 1:
                raise ValueError(f"good {j} overallocated: {total}")

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def m(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def owner(self, item: int) -> int | None:
        """Owning agent of an integrally assigned item, None if unassigned."""
        for i in range(self.n):
            if self.entries[i][item] == 1:
                return i
        return None

    @staticmethod
    def from_rows(rows, integral: bool = False) -> "Allocation":
        return Allocation(
            entries=tuple(tuple(as_frac(x) for x in row) for row in rows),
            integral=integral,
        )


def cap_valuations(inst: NswInstance) -> NswInstance:
    """Clamp every item value at the owner's utility cap; idempotent."""
    capped = tuple(
        tuple(min(v, inst.caps[i]) for v in row) for i, row in enumerate(inst.values)
    )
    return NswInstance(n=inst.n, m=inst.m, values=capped, caps=inst.caps)


def nsw_value(inst: NswInstance, alloc: Allocation) -> tuple[Fraction, int]:
    """Product of capped agent values under an integral allocation.

    Returns (prod_i min(c_i, sum_j v_ij x_ij), n); the geometric mean is the
    n-th root, which callers compare via n-th powers rather than real roots.
    """
    if not alloc.integral:
        raise ValueError("nsw_value requires an integral allocation")
    if alloc.n != inst.n or alloc.m != inst.m:
        raise ValueError("allocation shape does not match instance")
    product = ONE
    for i in range(inst.n):
        total = sum(
            inst.values[i][j] for j in range(inst.m) if alloc.entries[i][j] == 1
        )
        product *= min(inst.caps[i], total)
    return product, inst.n


def to_market(inst: NswInstance) -> MarketInstance:
    """Unit-budget, unit-earning-cap Fisher market for a capped NSW instance."""
    if not inst.is_capped():
        raise ValueError("instance has values above caps; run cap_valuations first")
    return MarketInstance(
        n=inst.n,
        m=inst.m,
        budgets=(1,) * inst.n,
        utils=inst.values,
        ucaps=inst.caps,
        ecaps=(1,) * inst.m,
    )


def perturb(market: MarketInstance, epsilon) -> PerturbedMarket:
    """Round every positive utility up to the least power of (1+eps) covering it.

    Exponents are forced to be >= 1, so a utility of exactly 1 becomes 1+eps.
    """
    eps = as_frac(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    base = ONE + eps
    exps: list[tuple[int, ...]] = []
    vals: list[tuple[Fraction, ...]] = []
    umax = ZERO
    for row in market.utils:
        erow = []
        vrow = []
        for u in row:
            if u == 0:
                erow.append(0)
                vrow.append(ZERO)
                continue
            k = 1
            power = base
            while power < u:
                power *= base
                k += 1
            erow.append(k)
            vrow.append(power)
            if power > umax:
                umax = power
        exps.append(tuple(erow))
        vals.append(tuple(vrow))
    return PerturbedMarket(
        base=market,
        epsilon=eps,
        exponents=tuple(exps),
        putils=tuple(vals),
        umax=umax,
    )
