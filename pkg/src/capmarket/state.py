"""Derived market state: bang-per-buck ratios, active budgets/prices,
surpluses, and the residual reachability used to pick price-decrease sets.

alpha (best utility per unit money) is None when a buyer values a zero-priced
good, standing in for an infinite ratio; unit_cost is its reciprocal and is 0
in that case. All helpers accept plain price/flow sequences so the solver can
use them without building full MarketState snapshots every iteration.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .instances import Allocation, PerturbedMarket, ONE, ZERO


def alpha_of(pm: PerturbedMarket, prices, i: int) -> Fraction | None:
    """Best perturbed-utility-per-money ratio of buyer i; None means infinite."""
    best: Fraction | None = None
    row = pm.putils[i]
    for j in range(pm.m):
        u = row[j]
        if u == 0:
            continue
        p = prices[j]
        if p == 0:
            return None
        r = u / p
        if best is None or r > best:
            best = r
    return best if best is not None else ZERO


def unit_cost_of(pm: PerturbedMarket, prices, i: int) -> Fraction:
    """Money needed per unit of perturbed utility at the best rate (0 if free)."""
    a = alpha_of(pm, prices, i)
    if a is None:
        return ZERO
    if a == 0:
        raise ValueError(f"buyer {i} values no good")
    return ONE / a


def mbb_goods(pm: PerturbedMarket, prices, i: int) -> list[int]:
    a = alpha_of(pm, prices, i)
    row = pm.putils[i]
    if a is None:
        return [j for j in range(pm.m) if row[j] > 0 and prices[j] == 0]
    return [j for j in range(pm.m) if row[j] > 0 and row[j] == a * prices[j]]


def mbb_edges(pm: PerturbedMarket, prices) -> list[tuple[int, int]]:
    return [(i, j) for i in range(pm.n) for j in mbb_goods(pm, prices, i)]


def is_capped_buyer(pm: PerturbedMarket, prices, i: int) -> bool:
    """Buyer i can afford its utility cap at the current best rate."""
    a = alpha_of(pm, prices, i)
    if a is None:
        return True
    return pm.base.budgets[i] * a >= pm.base.ucaps[i]


def active_budget(pm: PerturbedMarket, prices, i: int) -> Fraction:
    """Money buyer i actually needs to spend: min(budget, cap * unit cost)."""
    return min(
        Fraction(pm.base.budgets[i]),
        pm.base.ucaps[i] * unit_cost_of(pm, prices, i),
    )


def active_price(pm: PerturbedMarket, prices, j: int) -> Fraction:
    return min(prices[j], Fraction(pm.base.ecaps[j]))


def active_supply(pm: PerturbedMarket, prices, j: int) -> Fraction:
    if prices[j] == 0:
        return ONE
    return min(ONE, Fraction(pm.base.ecaps[j]) / prices[j])


def buyer_surplus(pm: PerturbedMarket, prices, flow, i: int) -> Fraction:
    return sum(flow[i], ZERO) - active_budget(pm, prices, i)


def good_surplus(pm: PerturbedMarket, prices, flow, j: int) -> Fraction:
    return active_price(pm, prices, j) - sum((flow[i][j] for i in range(pm.n)), ZERO)


def reach_sets(pm: PerturbedMarket, prices, flow, k: int) -> tuple[set[int], set[int]]:
    """Buyers and goods with a path to buyer k in the residual graph.

    Arcs: buyer->good for every MBB edge, good->buyer where money flows.
    Traversal follows arcs backwards from k, so the result is everything that
    can reach k. k itself is always included on the buyer side.
    """
    mbb: dict[int, list[int]] = {i: mbb_goods(pm, prices, i) for i in range(pm.n)}
    # reverse adjacency: who has an arc INTO this node
    into_good: dict[int, list[int]] = {j: [] for j in range(pm.m)}
    into_buyer: dict[int, list[int]] = {i: [] for i in range(pm.n)}
    for i in range(pm.n):
        for j in mbb[i]:
            into_good[j].append(i)
            if flow[i][j] > 0:
                into_buyer[i].append(j)
    buyers = {k}
    goods: set[int] = set()
    queue: deque = deque([("b", k)])
    while queue:
        side, v = queue.popleft()
        preds = into_buyer[v] if side == "b" else into_good[v]
        for u in preds:
            if side == "b":
                if u not in goods:
                    goods.add(u)
                    queue.append(("g", u))
            else:
                if u not in buyers:
                    buyers.add(u)
                    queue.append(("b", u))
    return buyers, goods


@dataclass(frozen=True)
class EventRecord:
    """One inner iteration of the price-descent loop, for traces and checks."""

    t: int
    buyer: int
    kind: str
    x: Fraction
    minprice: Fraction
    alpha_before: Fraction
    alpha_after: Fraction
    prices_before: tuple[Fraction, ...]
    prices: tuple[Fraction, ...]

    def line(self) -> str:
        """Trace record with 1-based buyer index, matching the file formats."""
        from .instances import frac_str

        return (
            f"iter {self.t} buyer {self.buyer + 1} event {self.kind} "
            f"x {frac_str(self.x)} minprice {frac_str(self.minprice)}"
        )


@dataclass(frozen=True)
class MarketState:
    """Snapshot of a solve: prices, money flow, frozen zero-price bundles, and
    everything derived from them."""

    pm: PerturbedMarket
    prices: tuple[Fraction, ...]
    flow: tuple[tuple[Fraction, ...], ...]
    zero_surplus: frozenset[int]
    frozen: tuple[tuple[int, tuple[Fraction, ...]], ...] = ()
    trace: tuple[EventRecord, ...] = ()

    @staticmethod
    def derive(pm, prices, flow, zero_surplus, frozen=(), trace=()) -> "MarketState":
        return MarketState(
            pm=pm,
            prices=tuple(prices),
            flow=tuple(tuple(row) for row in flow),
            zero_surplus=frozenset(zero_surplus),
            frozen=tuple(sorted((i, tuple(row)) for i, row in dict(frozen).items())),
            trace=tuple(trace),
        )

    @property
    def n(self) -> int:
        return self.pm.n

    @property
    def m(self) -> int:
        return self.pm.m

    def alpha(self, i: int) -> Fraction | None:
        return alpha_of(self.pm, self.prices, i)

    def unit_cost(self, i: int) -> Fraction:
        return unit_cost_of(self.pm, self.prices, i)

    def active_budget(self, i: int) -> Fraction:
        return active_budget(self.pm, self.prices, i)

    def active_price(self, j: int) -> Fraction:
        return active_price(self.pm, self.prices, j)

    def active_supply(self, j: int) -> Fraction:
        return active_supply(self.pm, self.prices, j)

    def buyer_surplus(self, i: int) -> Fraction:
        return buyer_surplus(self.pm, self.prices, self.flow, i)

    def good_surplus(self, j: int) -> Fraction:
        return good_surplus(self.pm, self.prices, self.flow, j)

    @property
    def capped_buyers(self) -> set[int]:
        return {i for i in range(self.n) if is_capped_buyer(self.pm, self.prices, i)}

    @property
    def capped_goods(self) -> set[int]:
        return {
            j for j in range(self.m)
            if self.prices[j] >= self.pm.base.ecaps[j]
        }

    def frozen_map(self) -> dict[int, tuple[Fraction, ...]]:
        return dict(self.frozen)

    def allocation(self) -> Allocation:
        """Allocation induced by money flow plus the frozen zero-price bundles."""
        frozen = self.frozen_map()
        rows = []
        for i in range(self.n):
            if i in frozen:
                rows.append(frozen[i])
                continue
            rows.append(
                tuple(
                    self.flow[i][j] / self.prices[j] if self.prices[j] > 0 else ZERO
                    for j in range(self.m)
                )
            )
        return Allocation(entries=tuple(rows), integral=False)
