"""Equilibrium checkers: exact (thrifty and modest) and approximate.

These are the acceptance gate for the solver, so they recompute everything
from first principles off the given prices and allocation; nothing is trusted
from solver internals.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .instances import Allocation, MarketInstance, PerturbedMarket, ONE, ZERO
from .state import MarketState


@dataclass
class CheckReport:
    ok: bool = True
    violations: list[str] = field(default_factory=list)

    def fail(self, msg: str):
        self.ok = False
        self.violations.append(msg)

    def __bool__(self) -> bool:
        return self.ok

    def lines(self) -> list[str]:
        if self.ok:
            return ["all equilibrium conditions hold"]
        return [f"violated: {v}" for v in self.violations]


def _alpha(utils_row, prices) -> Fraction | None:
    """Best utility-per-money ratio; None encodes infinity (free valued good)."""
    best: Fraction | None = None
    for j, u in enumerate(utils_row):
        if u == 0:
            continue
        if prices[j] == 0:
            return None
        r = Fraction(u) / prices[j]
        if best is None or r > best:
            best = r
    return best if best is not None else ZERO


def verify_equilibrium(
    pm: PerturbedMarket, prices, alloc: Allocation
) -> CheckReport:
    """Check that (alloc, prices) is an exact equilibrium of the perturbed
    market: modest supplies, no overallocation, thrifty and modest demands
    that exhaust active budgets, and no unsold positively-priced supply."""
    report = CheckReport()
    market = pm.base
    n, m = pm.n, pm.m
    if any(p < 0 for p in prices):
        report.fail("negative price")
    supply = [
        ONE if prices[j] == 0 else min(ONE, Fraction(market.ecaps[j]) / prices[j])
        for j in range(m)
    ]
    for j in range(m):
        sold = sum((alloc.entries[i][j] for i in range(n)), ZERO)
        if sold > supply[j]:
            report.fail(f"good {j}: sold {sold} exceeds modest supply {supply[j]}")
        if prices[j] > 0 and sold != supply[j]:
            report.fail(
                f"good {j}: price {prices[j]} > 0 but sold {sold} != supply {supply[j]}"
            )
    for i in range(n):
        a = _alpha(pm.putils[i], prices)
        util = sum(
            (pm.putils[i][j] * alloc.entries[i][j] for j in range(m)), ZERO
        )
        cap = Fraction(market.ucaps[i])
        spend = sum(
            (prices[j] * alloc.entries[i][j] for j in range(m)), ZERO
        )
        for j in range(m):
            if alloc.entries[i][j] == 0:
                continue
            if a is None:
                if prices[j] != 0 or pm.putils[i][j] == 0:
                    report.fail(f"buyer {i}: good {j} bought off the best rate")
            elif pm.putils[i][j] != a * prices[j]:
                report.fail(f"buyer {i}: good {j} bought off the best rate")
        if util > cap:
            report.fail(f"buyer {i}: utility {util} exceeds cap {cap}")
        if a is None:
            best_util = cap
            budget_needed = ZERO
        elif a == 0:
            best_util = ZERO
            budget_needed = ZERO
        else:
            best_util = min(cap, market.budgets[i] * a)
            budget_needed = best_util / a
        if util != best_util:
            report.fail(
                f"buyer {i}: utility {util} differs from optimum {best_util}"
            )
        if spend != budget_needed:
            report.fail(
                f"buyer {i}: spend {spend} differs from active budget {budget_needed}"
            )
    return report


def verify_state(state: MarketState) -> CheckReport:
    return verify_equilibrium(state.pm, state.prices, state.allocation())


def verify_approx_equilibrium(
    market: MarketInstance, prices, alloc: Allocation, epsilon
) -> CheckReport:
    """Check an approximate equilibrium against the true (unperturbed) market:
    supply-side conditions exact, demand relaxed to utility within (1-eps) of
    the best achievable and spending within the active budget."""
    eps = Fraction(epsilon)
    report = CheckReport()
    n, m = market.n, market.m
    if any(p < 0 for p in prices):
        report.fail("negative price")
    supply = [
        ONE if prices[j] == 0 else min(ONE, Fraction(market.ecaps[j]) / prices[j])
        for j in range(m)
    ]
    for j in range(m):
        sold = sum((alloc.entries[i][j] for i in range(n)), ZERO)
        if sold > supply[j]:
            report.fail(f"good {j}: sold {sold} exceeds modest supply {supply[j]}")
        if prices[j] > 0 and sold != supply[j]:
            report.fail(
                f"good {j}: price {prices[j]} > 0 but sold {sold} != supply {supply[j]}"
            )
    for i in range(n):
        a = _alpha(market.utils[i], prices)
        util = sum(
            (Fraction(market.utils[i][j]) * alloc.entries[i][j] for j in range(m)),
            ZERO,
        )
        cap = Fraction(market.ucaps[i])
        spend = sum((prices[j] * alloc.entries[i][j] for j in range(m)), ZERO)
        if util > cap:
            report.fail(f"buyer {i}: utility {util} exceeds cap {cap}")
        if a is None:
            best_util = cap
            active_budget = ZERO
        elif a == 0:
            best_util = ZERO
            active_budget = ZERO
        else:
            best_util = min(cap, market.budgets[i] * a)
            active_budget = min(Fraction(market.budgets[i]), cap / a)
        if spend > active_budget:
            report.fail(
                f"buyer {i}: spend {spend} exceeds active budget {active_budget}"
            )
        if util < (ONE - eps) * best_util:
            report.fail(
                f"buyer {i}: utility {util} below (1-eps) of optimum {best_util}"
            )
    return report
