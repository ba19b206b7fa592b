"""Equilibrium computation for cap-limited Fisher markets.

Two stages. solve_no_utility_caps finds the unique-up-to-flows equilibrium of
the market when every buyer's utility cap is ignored (earning caps only), by
ascending prices from a deliberately low start. run_fptas then descends
prices to re-balance the capped buyers, maintaining zero surplus on every
good, until every buyer's surplus is zero; goods whose price falls below a
hard floor are frozen at price zero with their buyers' bundles fixed.
"""
from __future__ import annotations

from fractions import Fraction

from .errors import InvariantError, NotMoneyClearing
from .flow import _MaxFlow, cancel_cycles, money_clearing
from .instances import Allocation, PerturbedMarket, ONE, ZERO
from .lp import feasible_flow, min_factor
from .simplex import EQ, GE, LE, LpSystem, solve_lp
from .state import (
    EventRecord,
    MarketState,
    alpha_of,
    buyer_surplus,
    is_capped_buyer,
    mbb_goods,
    reach_sets,
)

# priority order for trace labels when several events fire at the same factor
_EVENT_ORDER = ("MinFactorBinding", "NewMbbEdge", "GoodUncaps", "BuyerCaps", "PriceFloor")


def _max_iterations(pm: PerturbedMarket) -> int:
    # generous guard well above the expected polynomial bound at desk scale
    n, m = pm.n, pm.m
    return 10000 + 200 * (n + m) ** 3


def solve_no_utility_caps(pm: PerturbedMarket, lp_log=None):
    """Equilibrium (prices, money flow) of the perturbed market with utility
    caps ignored: every buyer spends its whole budget, every good earns
    exactly its active price, and all money moves on best-rate edges.
    """
    market = pm.base
    if not money_clearing(market):
        raise NotMoneyClearing("buyers' money exceeds reachable earning caps")
    n, m = pm.n, pm.m
    budgets = [Fraction(b) for b in market.budgets]
    ecaps = [Fraction(d) for d in market.ecaps]
    mu = [max((pm.putils[i][j] for i in range(n)), default=ZERO) for j in range(m)]
    valued = [j for j in range(m) if mu[j] > 0]
    theta = min(budgets) / sum(mu[j] for j in valued)
    prices = [theta * mu[j] if mu[j] > 0 else ZERO for j in range(m)]

    total_budget = sum(budgets)
    guard = _max_iterations(pm)
    for _ in range(guard):
        pa = [min(prices[j], ecaps[j]) for j in valued]
        target = sum(pa, ZERO)
        mf = _MaxFlow()
        src, snk = ("s",), ("t",)
        eids: dict[tuple[int, int], int] = {}
        for i in range(n):
            mf.add(src, ("b", i), budgets[i])
            for j in mbb_goods(pm, prices, i):
                eids[(i, j)] = len(mf.cap)
                mf.add(("b", i), ("g", j), total_budget)
        for idx, j in enumerate(valued):
            mf.add(("g", j), snk, pa[idx])
        value = mf.run(src, snk)
        if value != target:
            raise InvariantError("goods lost full earnings during the ascent")
        if value == total_budget:
            flow = [[ZERO] * m for _ in range(n)]
            for (i, j), eid in eids.items():
                flow[i][j] = total_budget - mf.cap[eid]
            return prices, flow

        reach = mf.reachable(src)
        bhat = {i for i in range(n) if ("b", i) in reach}
        ghat = {j for j in valued if ("g", j) in reach}
        if not ghat:
            raise InvariantError("surplus buyers with no reachable goods")

        factors = []
        # a best-rate edge from a raised buyer to an outside good appears
        for i in sorted(bhat):
            a = alpha_of(pm, prices, i)
            for g in range(m):
                if g in ghat or pm.putils[i][g] == 0:
                    continue
                factors.append(a * prices[g] / pm.putils[i][g])
        # a raised good hits its earning cap
        for j in sorted(ghat):
            if prices[j] < ecaps[j]:
                factors.append(ecaps[j] / prices[j])
        # the raise exhausts some buyer set's money
        x_lp = _max_raise_factor(pm, prices, bhat, ghat, lp_log)
        if x_lp is not None:
            factors.append(x_lp)
        if not factors:
            raise InvariantError("price ascent stalled with surplus remaining")
        x = min(factors)
        if x <= 1:
            raise InvariantError(f"price ascent made no progress (x={x})")
        for j in ghat:
            prices[j] *= x
    raise InvariantError("price ascent exceeded the iteration guard")


def _max_raise_factor(pm, prices, bhat, ghat, lp_log=None):
    """Largest x so the raised goods can still be fully paid for; None when
    every raised good is already at its earning cap (x never binds)."""
    blist = sorted(bhat)
    glist = sorted(ghat)
    edges = []
    for i in blist:
        for j in mbb_goods(pm, prices, i):
            if j in ghat:
                edges.append((i, j))
    if all(prices[j] >= pm.base.ecaps[j] for j in glist):
        return None
    nvar = len(edges) + 1
    xcol = nvar - 1
    rows = []
    for j in glist:
        coeffs = [ZERO] * nvar
        for idx, (bi, gj) in enumerate(edges):
            if gj == j:
                coeffs[idx] = ONE
        if prices[j] >= pm.base.ecaps[j]:
            rows.append((coeffs, EQ, Fraction(pm.base.ecaps[j])))
        else:
            coeffs[xcol] = -prices[j]
            rows.append((coeffs, EQ, ZERO))
    for i in blist:
        coeffs = [ZERO] * nvar
        for idx, (bi, gj) in enumerate(edges):
            if bi == i:
                coeffs[idx] = ONE
        rows.append((coeffs, LE, Fraction(pm.base.budgets[i])))
    objective = [ZERO] * nvar
    objective[xcol] = -ONE  # maximize x
    system = LpSystem(objective=objective, rows=rows,
                      names=[f"f_{i}_{j}" for i, j in edges] + ["x"])
    result = solve_lp(system)
    if lp_log is not None:
        lp_log.append(("max_raise", system, result))
    if result.status == "unbounded":
        return None
    if result.status != "optimal":
        raise InvariantError("raise-factor LP infeasible; ascent invariant broken")
    return result.solution[xcol]


def _capped_start(pm: PerturbedMarket, lp_log=None):
    """Fallback start for markets that are not money clearing.

    Looks for uniform-rate prices p_j = R * max_i u_ij at which every buyer is
    capped and a zero-good-surplus flow exists, taking the largest feasible R.
    Such a start satisfies the descent invariants, so the main loop can take
    over; when no R works the market is reported unsolvable.
    """
    n, m = pm.n, pm.m
    market = pm.base
    mu = [max((pm.putils[i][j] for i in range(n)), default=ZERO) for j in range(m)]
    valued = [j for j in range(m) if mu[j] > 0]
    if not valued or any(not pm.valued_goods(i) for i in range(n)):
        raise NotMoneyClearing("some buyer values no good at all")
    # relative best rate of each buyer at prices proportional to mu
    a_rel = [
        max(pm.putils[i][j] / mu[j] for j in valued if pm.putils[i][j] > 0)
        for i in range(n)
    ]
    # all buyers capped: R <= budget_i * a_rel_i / ucap_i
    r_cap = min(Fraction(market.budgets[i]) * a_rel[i] / market.ucaps[i] for i in range(n))
    # candidate breakpoints where a good crosses its earning cap
    breaks = sorted({Fraction(market.ecaps[j]) / mu[j] for j in valued} | {r_cap})
    breaks = [b for b in breaks if b <= r_cap]
    best = None
    intervals = []
    lo = ZERO
    for b in breaks:
        intervals.append((lo, b))
        lo = b
    for lo, hi in intervals:
        r = _max_start_rate(pm, mu, valued, a_rel, lo, hi)
        if r is not None and (best is None or r > best):
            best = r
    if best is None or best <= 0:
        raise NotMoneyClearing(
            "market is not money clearing and no capped-start prices exist"
        )
    prices = [best * mu[j] if mu[j] > 0 else ZERO for j in range(m)]
    flow = feasible_flow(pm, prices, set(), lp_log)
    return prices, flow


def _max_start_rate(pm, mu, valued, a_rel, lo, hi):
    """Max R in (lo, hi] with a feasible all-capped start flow, else None."""
    market = pm.base
    n = pm.n
    edges = []
    for i in range(n):
        for j in valued:
            if pm.putils[i][j] > 0 and pm.putils[i][j] == a_rel[i] * mu[j]:
                edges.append((i, j))
    nvar = len(edges) + 1
    rcol = nvar - 1
    rows = []
    for j in valued:
        coeffs = [ZERO] * nvar
        for idx, (bi, gj) in enumerate(edges):
            if gj == j:
                coeffs[idx] = ONE
        capped_at_hi = hi * mu[j] >= market.ecaps[j]
        if capped_at_hi:
            rows.append((coeffs, EQ, Fraction(market.ecaps[j])))
        else:
            coeffs[rcol] = -mu[j]
            rows.append((coeffs, EQ, ZERO))
    for i in range(n):
        coeffs = [ZERO] * nvar
        for idx, (bi, gj) in enumerate(edges):
            if bi == i:
                coeffs[idx] = ONE
        # capped buyer must spend at least ucap * unit cost = ucap * R / a_rel
        coeffs[rcol] = -Fraction(market.ucaps[i]) / a_rel[i]
        rows.append((coeffs, GE, ZERO))
    # keep R inside the interval
    lo_row = [ZERO] * nvar
    lo_row[rcol] = ONE
    rows.append((lo_row, GE, lo))
    hi_row = [ZERO] * nvar
    hi_row[rcol] = ONE
    rows.append((hi_row, LE, hi))
    objective = [ZERO] * nvar
    objective[rcol] = -ONE  # maximize R
    result = solve_lp(LpSystem(objective=objective, rows=rows))
    if result.status != "optimal":
        return None
    r = result.solution[rcol]
    return r if r > 0 else None


def detect_events(
    pm: PerturbedMarket, prices, flow, zero_surplus, bhat, ghat, floor, lp_log=None
) -> tuple[str, Fraction]:
    """Pick the price-decrease factor: the largest x at which any stop
    condition binds (feasibility, a new best-rate edge, a cap transition, or
    the positive-price floor)."""
    candidates: dict[str, Fraction] = {}
    candidates["MinFactorBinding"] = min_factor(
        pm, prices, bhat, ghat, zero_surplus, lp_log
    )
    best_edge = None
    for i in range(pm.n):
        if i in bhat:
            continue
        a = alpha_of(pm, prices, i)
        if a is None or a == 0:
            continue
        for j in sorted(ghat):
            if pm.putils[i][j] == 0:
                continue
            x = pm.putils[i][j] / (a * prices[j])
            if x >= 1:
                raise InvariantError("outside buyer already holds a best-rate edge")
            if best_edge is None or x > best_edge:
                best_edge = x
    if best_edge is not None:
        candidates["NewMbbEdge"] = best_edge
    unc = [
        Fraction(pm.base.ecaps[j]) / prices[j]
        for j in sorted(ghat)
        if prices[j] > pm.base.ecaps[j]
    ]
    if unc:
        candidates["GoodUncaps"] = max(unc)
    caps = []
    for i in sorted(bhat):
        if not is_capped_buyer(pm, prices, i):
            a = alpha_of(pm, prices, i)
            caps.append(Fraction(pm.base.budgets[i]) * a / pm.base.ucaps[i])
    if caps:
        candidates["BuyerCaps"] = max(caps)
    candidates["PriceFloor"] = floor / min(prices[j] for j in ghat)

    best_x = max(candidates.values())
    if best_x >= 1:
        # a capped good funded solely by capped zero-surplus buyers pins the
        # scale factor at 1: the descent cannot move this configuration
        raise InvariantError(
            "price descent is pinned at the current configuration "
            f"(stop factor {best_x}); no downward move preserves feasibility"
        )
    for kind in _EVENT_ORDER:
        if kind in candidates and candidates[kind] == best_x:
            return kind, best_x
    raise AssertionError("unreachable")


def _min_positive_price(prices) -> Fraction | None:
    positive = [p for p in prices if p > 0]
    return min(positive) if positive else None


def _freeze_component(pm, prices, flow, frozen):
    """Zero out the cheapest positive-price component and fix its bundles.

    Every buyer valuing a component good must be capped with all its money
    inside the component; its bundle is taken from the current flow, scaled
    down to hit the utility cap exactly, and recorded as final.
    """
    positive = [j for j in range(pm.m) if prices[j] > 0]
    anchor = min(positive, key=lambda j: (prices[j], j))
    goods = {anchor}
    queue = [anchor]
    buyers: set[int] = set()
    while queue:
        j = queue.pop()
        for i in range(pm.n):
            if i in frozen or pm.putils[i][j] == 0 or i in buyers:
                continue
            if j in mbb_goods(pm, prices, i):
                buyers.add(i)
                for g in mbb_goods(pm, prices, i):
                    if g not in goods:
                        goods.add(g)
                        queue.append(g)
    # widen to every interested buyer; the floor forces them all to be capped
    interested = {
        i for i in range(pm.n)
        if i not in frozen and any(pm.putils[i][j] > 0 for j in goods)
    }
    for i in sorted(interested):
        if not is_capped_buyer(pm, prices, i):
            raise InvariantError(
                f"buyer {i} interested in floor-priced goods is not capped"
            )
        if any(flow[i][j] > 0 for j in range(pm.m) if j not in goods):
            raise InvariantError(
                f"buyer {i} holds money outside the frozen component"
            )
    cancel_cycles(flow, interested, goods)
    for i in sorted(interested):
        util = sum((pm.putils[i][j] * flow[i][j] / prices[j] for j in goods), ZERO)
        cap = Fraction(pm.base.ucaps[i])
        if util < cap:
            raise InvariantError(f"frozen buyer {i} falls short of its cap")
        scale = cap / util
        row = [ZERO] * pm.m
        for j in goods:
            if flow[i][j] > 0:
                row[j] = scale * flow[i][j] / prices[j]
            flow[i][j] = ZERO
        frozen[i] = tuple(row)
    for j in goods:
        prices[j] = ZERO


def run_fptas(pm: PerturbedMarket, lp_log=None) -> tuple[MarketState, Allocation]:
    """Exact equilibrium of the perturbed market by descending prices.

    Starts from the caps-ignored equilibrium (or the capped start when the
    market does not clear), then repeatedly picks a positive-surplus buyer and
    scales down the prices it can reach until every surplus is zero.
    """
    n, m = pm.n, pm.m
    if money_clearing(pm.base):
        prices, flow = solve_no_utility_caps(pm, lp_log)
    else:
        prices, flow = _capped_start(pm, lp_log)
    frozen: dict[int, tuple[Fraction, ...]] = {}
    trace: list[EventRecord] = []
    floor = Fraction(1, n) / (pm.umax ** n)
    guard = _max_iterations(pm)

    def surplus(i):
        return buyer_surplus(pm, prices, flow, i)

    zero_surplus = {i for i in range(n) if surplus(i) == 0}
    t = 0
    while len(zero_surplus) < n:
        k = min(i for i in range(n) if i not in zero_surplus)
        if surplus(k) <= 0:
            raise InvariantError(f"buyer {k} outside Z has surplus {surplus(k)}")
        while surplus(k) > 0 and _min_positive_price(prices) > floor:
            t += 1
            if t > guard:
                raise InvariantError("price descent exceeded the iteration guard")
            bhat, ghat = reach_sets(pm, prices, flow, k)
            alpha_before = alpha_of(pm, prices, k)
            prices_before = tuple(prices)
            kind, x = detect_events(
                pm, prices, flow, zero_surplus, bhat, ghat, floor, lp_log
            )
            for j in ghat:
                prices[j] = x * prices[j]
            new_flow = feasible_flow(pm, prices, zero_surplus, lp_log)
            for i in range(n):
                flow[i] = new_flow[i]
            trace.append(
                EventRecord(
                    t=t,
                    buyer=k,
                    kind=kind,
                    x=x,
                    minprice=_min_positive_price(prices),
                    alpha_before=alpha_before,
                    alpha_after=alpha_of(pm, prices, k),
                    prices_before=prices_before,
                    prices=tuple(prices),
                )
            )
        minpos = _min_positive_price(prices)
        if minpos is not None and minpos <= floor:
            _freeze_component(pm, prices, flow, frozen)
        zero_surplus |= {i for i in range(n) if surplus(i) == 0}

    state = MarketState.derive(pm, prices, flow, zero_surplus, frozen, trace)
    for j in range(m):
        if state.good_surplus(j) != 0:
            raise InvariantError(f"good {j} ends with surplus {state.good_surplus(j)}")
    return state, state.allocation()
