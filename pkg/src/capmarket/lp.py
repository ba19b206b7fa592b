"""The two fixed LP shapes of the price-descent loop.

min_factor finds the smallest uniform factor by which the prices of a good
set can be scaled down while a feasible money flow still exists for the
current capped/uncapped configuration. feasible_flow recomputes a full money
flow at fixed prices: goods absorb exactly their active price, zero-surplus
buyers spend exactly their active budget, everyone else at least that.
"""
from __future__ import annotations

from fractions import Fraction

from .errors import InvariantError
from .instances import PerturbedMarket, ONE, ZERO
from .simplex import EQ, GE, LpResult, LpSystem, solve_lp
from .state import is_capped_buyer, mbb_goods, unit_cost_of


def _log(lp_log, tag: str, system: LpSystem, result: LpResult):
    if lp_log is not None:
        lp_log.append((tag, system, result))


def build_min_factor_system(
    pm: PerturbedMarket, prices, buyers: set[int], goods: set[int], zero_surplus
) -> tuple[LpSystem, list[tuple[int, int]]]:
    """LP over flow variables g_ij (MBB edges inside buyers x goods) and the
    scale factor x; minimizing x gives the deepest admissible price decrease."""
    blist = sorted(buyers)
    glist = sorted(goods)
    edges = []
    for i in blist:
        for j in mbb_goods(pm, prices, i):
            if j in goods:
                edges.append((i, j))
    nvar = len(edges) + 1  # x is the last column
    xcol = nvar - 1
    names = [f"g_{i}_{j}" for i, j in edges] + ["x"]
    rows: list[tuple[list[Fraction], int, Fraction]] = []

    ecaps = pm.base.ecaps
    for j in glist:
        coeffs = [ZERO] * nvar
        for idx, (bi, gj) in enumerate(edges):
            if gj == j:
                coeffs[idx] = ONE
        if prices[j] > ecaps[j]:  # stays at its earning cap while scaling down
            rows.append((coeffs, EQ, Fraction(ecaps[j])))
        else:
            coeffs[xcol] = -prices[j]
            rows.append((coeffs, EQ, ZERO))

    for i in blist:
        coeffs = [ZERO] * nvar
        for idx, (bi, gj) in enumerate(edges):
            if bi == i:
                coeffs[idx] = ONE
        sense = EQ if i in zero_surplus else GE
        if is_capped_buyer(pm, prices, i):
            coeffs[xcol] = -pm.base.ucaps[i] * unit_cost_of(pm, prices, i)
            rows.append((coeffs, sense, ZERO))
        else:
            rows.append((coeffs, sense, Fraction(pm.base.budgets[i])))

    objective = [ZERO] * nvar
    objective[xcol] = ONE
    return LpSystem(objective=objective, rows=rows, names=names), edges


def min_factor(
    pm: PerturbedMarket, prices, buyers, goods, zero_surplus, lp_log=None
) -> Fraction:
    """Smallest feasible price-scale factor x for the reach sets; exact."""
    system, _ = build_min_factor_system(pm, prices, set(buyers), set(goods), zero_surplus)
    result = solve_lp(system)
    _log(lp_log, "min_factor", system, result)
    if result.status != "optimal":
        raise InvariantError(
            f"min_factor LP {result.status}; the descent invariants are broken"
        )
    x = result.solution[-1]
    if x > 1:
        raise InvariantError(f"min_factor returned x={x} > 1; current flow infeasible")
    return x


def build_feasible_flow_system(
    pm: PerturbedMarket, prices, zero_surplus
) -> tuple[LpSystem, list[tuple[int, int]]]:
    """Feasibility LP for a full money flow at fixed prices.

    Variables are flows on MBB edges with positive prices; zero-priced goods
    carry no money. Goods absorb exactly min(p, ecap); zero-surplus buyers pay
    exactly their active budget, others at least that.
    """
    edges = []
    for i in range(pm.n):
        for j in mbb_goods(pm, prices, i):
            if prices[j] > 0:
                edges.append((i, j))
    nvar = len(edges)
    names = [f"f_{i}_{j}" for i, j in edges]
    rows: list[tuple[list[Fraction], int, Fraction]] = []
    for j in range(pm.m):
        if prices[j] == 0:
            continue
        coeffs = [ZERO] * nvar
        for idx, (bi, gj) in enumerate(edges):
            if gj == j:
                coeffs[idx] = ONE
        rows.append((coeffs, EQ, min(prices[j], Fraction(pm.base.ecaps[j]))))
    for i in range(pm.n):
        coeffs = [ZERO] * nvar
        support = False
        for idx, (bi, gj) in enumerate(edges):
            if bi == i:
                coeffs[idx] = ONE
                support = True
        if is_capped_buyer(pm, prices, i):
            target = pm.base.ucaps[i] * unit_cost_of(pm, prices, i)
        else:
            target = Fraction(pm.base.budgets[i])
        if not support and target == 0:
            continue  # frozen buyer: no money moves, nothing to constrain
        sense = EQ if i in zero_surplus else GE
        rows.append((coeffs, sense, target))
    return LpSystem(objective=[ZERO] * nvar, rows=rows, names=names), edges


def feasible_flow(pm: PerturbedMarket, prices, zero_surplus, lp_log=None):
    """Money flow matrix satisfying the fixed-price feasibility system."""
    system, edges = build_feasible_flow_system(pm, prices, zero_surplus)
    result = solve_lp(system)
    _log(lp_log, "feasible_flow", system, result)
    if result.status != "optimal":
        raise InvariantError(
            f"feasible_flow LP {result.status}; the descent invariants are broken"
        )
    flow = [[ZERO] * pm.m for _ in range(pm.n)]
    for idx, (i, j) in enumerate(edges):
        flow[i][j] = result.solution[idx]
    return flow
