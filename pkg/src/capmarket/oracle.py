"""Brute-force ground truth for desk-scale verification.

Every oracle here enumerates exhaustively and refuses inputs beyond its hard
guard instead of approximating.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from .errors import EnumerationGuard
from .instances import Allocation, MarketInstance, NswInstance, ONE, ZERO
from .simplex import EQ, GE, LE, LpSystem

BRUTE_NSW_LIMIT = 10**7
BRUTE_SUBSET_LIMIT = 20
ORACLE_VAR_LIMIT = 12
ORACLE_BASIS_LIMIT = 300_000


def brute_nsw(inst: NswInstance) -> tuple[Fraction, int, Allocation]:
    """Optimal Nash welfare product over all n^m integral assignments."""
    if inst.n ** inst.m > BRUTE_NSW_LIMIT:
        raise EnumerationGuard(
            f"{inst.n}^{inst.m} assignments exceed the enumeration guard"
        )
    n, m = inst.n, inst.m
    caps = inst.caps
    values = inst.values
    best = Fraction(-1)
    best_owner: list[int] = []
    owner = [0] * m
    totals = [0] * n

    def recurse(j: int):
        nonlocal best, best_owner
        if j == m:
            product = ONE
            for i in range(n):
                product *= min(caps[i], totals[i])
                if product == 0:
                    break
            if product > best:
                best = product
                best_owner = owner.copy()
            return
        for i in range(n):
            owner[j] = i
            totals[i] += values[i][j]
            recurse(j + 1)
            totals[i] -= values[i][j]

    recurse(0)
    rows = [[ZERO] * m for _ in range(n)]
    for j, i in enumerate(best_owner):
        rows[i][j] = ONE
    return best, n, Allocation.from_rows(rows, integral=True)


def brute_money_clearing(market: MarketInstance) -> bool:
    """Check the subset condition directly over all 2^n buyer sets."""
    if market.n > BRUTE_SUBSET_LIMIT:
        raise EnumerationGuard(f"{market.n} buyers exceed the subset guard")
    masks = []
    for i in range(market.n):
        mask = 0
        for j in range(market.m):
            if market.utils[i][j] > 0:
                mask |= 1 << j
        masks.append(mask)
    for sub in range(1, 1 << market.n):
        money = 0
        goods_mask = 0
        for i in range(market.n):
            if sub >> i & 1:
                money += market.budgets[i]
                goods_mask |= masks[i]
        caps = sum(
            market.ecaps[j] for j in range(market.m) if goods_mask >> j & 1
        )
        if money > caps:
            return False
    return True


def lp_oracle(system: LpSystem) -> tuple[str, Fraction | None]:
    """Exact LP optimum by enumerating candidate vertices.

    Every vertex satisfies all equality rows, so those planes are always kept
    active; candidate vertices intersect them with every choice of enough
    inequality planes (constraint rows at equality plus coordinate planes) to
    reach full dimension. Valid for LPs whose optimum is attained at a
    vertex, which holds for the bounded systems this package produces.
    """
    nvar = system.num_vars
    if nvar > ORACLE_VAR_LIMIT:
        raise EnumerationGuard(f"{nvar} variables exceed the oracle guard")
    eq_planes: list[tuple[list[Fraction], Fraction]] = []
    ineq_planes: list[tuple[list[Fraction], Fraction]] = []
    for coeffs, sense, rhs in system.rows:
        target = eq_planes if sense == EQ else ineq_planes
        target.append((list(coeffs), rhs))
    for v in range(nvar):
        unit = [ZERO] * nvar
        unit[v] = ONE
        ineq_planes.append((unit, ZERO))
    base = _independent_rows(eq_planes, nvar)
    need = nvar - len(base)
    count = 0
    best: Fraction | None = None
    for combo in combinations(range(len(ineq_planes)), need):
        count += 1
        if count > ORACLE_BASIS_LIMIT:
            raise EnumerationGuard("vertex enumeration exceeded the basis guard")
        active = base + [ineq_planes[idx] for idx in combo]
        point = _solve_square(active, nvar)
        if point is None:
            continue
        if any(x < 0 for x in point):
            continue
        if not _feasible(system, point):
            continue
        value = sum(
            (system.objective[v] * point[v] for v in range(nvar)), ZERO
        )
        if best is None or value < best:
            best = value
    if best is None:
        return "infeasible", None
    return "optimal", best


def oracle_cost(system: LpSystem) -> int:
    """Number of candidate active sets lp_oracle would enumerate."""
    from math import comb

    nvar = system.num_vars
    n_eq = 0
    n_ineq = nvar  # coordinate planes
    eq_planes = []
    for coeffs, sense, rhs in system.rows:
        if sense == EQ:
            eq_planes.append((list(coeffs), rhs))
        else:
            n_ineq += 1
    base = _independent_rows(eq_planes, nvar)
    return comb(n_ineq, nvar - len(base))


def _independent_rows(planes, nvar):
    """A maximal linearly independent subset of the given hyperplanes."""
    chosen: list[tuple[list[Fraction], Fraction]] = []
    basis: list[list[Fraction]] = []
    for coeffs, rhs in planes:
        vec = list(coeffs)
        for row in basis:
            lead = next((c for c in range(nvar) if row[c] != 0), None)
            if lead is not None and vec[lead] != 0:
                factor = vec[lead] / row[lead]
                vec = [a - factor * b for a, b in zip(vec, row)]
        if any(v != 0 for v in vec):
            basis.append(vec)
            chosen.append((list(coeffs), rhs))
            if len(chosen) == nvar:
                break
    return chosen


def _solve_square(planes, nvar):
    """Gaussian elimination on the active set; None when singular."""
    mat = [list(coeffs) + [rhs] for coeffs, rhs in planes]
    for col in range(nvar):
        piv = None
        for r in range(col, nvar):
            if mat[r][col] != 0:
                piv = r
                break
        if piv is None:
            return None
        mat[col], mat[piv] = mat[piv], mat[col]
        inv = ONE / mat[col][col]
        mat[col] = [a * inv for a in mat[col]]
        for r in range(nvar):
            if r != col and mat[r][col] != 0:
                factor = mat[r][col]
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[col])]
    return [mat[r][nvar] for r in range(nvar)]


def _feasible(system: LpSystem, point) -> bool:
    for coeffs, sense, rhs in system.rows:
        lhs = sum((c * x for c, x in zip(coeffs, point)), ZERO)
        if sense == EQ and lhs != rhs:
            return False
        if sense == GE and lhs < rhs:
            return False
        if sense == LE and lhs > rhs:
            return False
    return True
