"""Instance generators: seeded random NSW instances, the three reference
markets with known equilibria, and the equation-gadget family used for
hardness-style stress instances."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import CapMarketError
from .instances import MarketInstance, NswInstance


def gen_random(n: int, m: int, vmax: int, cmax: int, seed: int) -> NswInstance:
    """Seed-deterministic NSW instance; every agent values at least one item."""
    if n > m:
        raise ValueError("need at least as many items as agents")
    if vmax < 1 or cmax < 1:
        raise ValueError("vmax and cmax must be at least 1")
    rng = random.Random(seed)
    values = []
    for _ in range(n):
        while True:
            row = [rng.randint(0, vmax) for _ in range(m)]
            if any(row):
                break
        values.append(tuple(row))
    caps = tuple(rng.randint(1, cmax) for _ in range(n))
    return NswInstance(n=n, m=m, values=tuple(values), caps=caps)


@dataclass(frozen=True)
class FixtureData:
    """A reference market with its known equilibrium data.

    solve_epsilon is a perturbation parameter under which the solver's output
    is comparable against the published equilibria: for prop1/prop3 every
    utility is already a power of (1+eps) so the perturbation is the
    identity; for prop2 it keeps the second published price family exact.
    """

    name: str
    market: MarketInstance
    solve_epsilon: Fraction
    money_clearing: bool
    expected_prices: tuple[Fraction, ...] | None = None
    expected_alloc: tuple[tuple[Fraction, ...], ...] | None = None
    price_families: tuple[str, ...] = ()
    utility_scales: tuple[int, ...] = ()

    def in_published_family(self, prices) -> bool:
        """Membership in the published equilibrium price families (prop2)."""
        if self.name != "prop2":
            raise CapMarketError("price families are only defined for prop2")
        p1, p2 = prices
        if p1 == 1 and Fraction(3) <= p2 <= Fraction(6):
            return True
        if p1 >= 5 and p2 * 5 == p1 * 50:
            return True
        return False


def gen_fixture(name: str) -> FixtureData:
    """The three reference markets, integerized by per-buyer utility scaling.

    Scaling one buyer's utilities and utility cap by a common factor leaves
    equilibrium prices unchanged, so the published prices apply verbatim.
    Unbounded caps are encoded as one more than the total achievable value.
    """
    if name == "prop1":
        market = MarketInstance(
            n=1, m=1, budgets=(2,), utils=((2,),), ucaps=(1,), ecaps=(1,)
        )
        return FixtureData(
            name="prop1",
            market=market,
            solve_epsilon=Fraction(1),
            money_clearing=False,
            expected_prices=(Fraction(2),),
            expected_alloc=((Fraction(1, 2),),),
            utility_scales=(1,),
        )
    if name == "prop2":
        # buyer 1 scaled x10, buyer 2 scaled x100; caps scale along
        market = MarketInstance(
            n=2,
            m=2,
            budgets=(1, 10),
            utils=((10, 30), (10, 100)),
            ucaps=(41, 100),  # buyer 1's cap is unbounded: 10 + 30 + 1
            ecaps=(5, 6),
        )
        return FixtureData(
            name="prop2",
            market=market,
            solve_epsilon=Fraction(9),
            money_clearing=True,
            price_families=("(1, x) for 3 <= x <= 6", "(5y, 50y) for y >= 1"),
            utility_scales=(10, 100),
        )
    if name == "prop3":
        market = MarketInstance(
            n=2,
            m=2,
            budgets=(100, 11),
            utils=((10, 10), (10, 10)),
            ucaps=(9, 21),  # buyer 2's cap is unbounded: 10 + 10 + 1
            ecaps=(9, 112),  # good 2's cap is unbounded: 100 + 11 + 1
        )
        return FixtureData(
            name="prop3",
            market=market,
            solve_epsilon=Fraction(9),
            money_clearing=True,
            expected_prices=(Fraction(20), Fraction(20)),
            utility_scales=(10, 10),
        )
    raise CapMarketError(f"unknown fixture {name!r}")


@dataclass(frozen=True)
class E3Lin2Instance:
    """Linear equations x_i + x_j + x_k = rhs over GF(2), each variable
    occurring in exactly the same number of equations."""

    num_vars: int
    equations: tuple[tuple[int, int, int, int], ...]  # (i, j, k, rhs)

    def __post_init__(self):
        counts = [0] * self.num_vars
        for i, j, k, rhs in self.equations:
            if len({i, j, k}) != 3:
                raise ValueError("equation variables must be distinct")
            if not all(0 <= v < self.num_vars for v in (i, j, k)):
                raise ValueError("variable index out of range")
            if rhs not in (0, 1):
                raise ValueError("equation right-hand side must be 0 or 1")
            counts[i] += 1
            counts[j] += 1
            counts[k] += 1
        if len(set(counts)) != 1:
            raise ValueError(f"variables must occur equally often, got {counts}")

    @property
    def occurrences(self) -> int:
        return 3 * len(self.equations) // self.num_vars


def gen_hardness(lin: E3Lin2Instance) -> NswInstance:
    """Gadget instance: two agents per variable with a high-value switch item,
    and per equation four satisfying-assignment classes of three unit items.

    Agents 2v and 2v+1 stand for setting variable v to 0 and 1. The switch
    item for v is worth 4k to exactly those two agents; each equation item is
    worth 1 to the three agents matching its assignment class.
    """
    k = lin.occurrences
    n_agents = 2 * lin.num_vars
    switch_items = lin.num_vars
    eq_items = 12 * len(lin.equations)
    m_items = switch_items + eq_items
    values = [[0] * m_items for _ in range(n_agents)]

    def agent(var: int, bit: int) -> int:
        return 2 * var + bit

    for v in range(lin.num_vars):
        values[agent(v, 0)][v] = 4 * k
        values[agent(v, 1)][v] = 4 * k

    col = switch_items
    for i, j, kk, rhs in lin.equations:
        classes = [
            (a, b, c)
            for a in (0, 1)
            for b in (0, 1)
            for c in (0, 1)
            if (a + b + c) % 2 == rhs
        ]
        for bits in classes:
            for _copy in range(3):
                values[agent(i, bits[0])][col] = 1
                values[agent(j, bits[1])][col] = 1
                values[agent(kk, bits[2])][col] = 1
                col += 1
    caps = tuple(4 * k for _ in range(n_agents))
    return NswInstance(
        n=n_agents,
        m=m_items,
        values=tuple(tuple(row) for row in values),
        caps=caps,
    )
