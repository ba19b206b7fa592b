"""Rounding a fractional cap-market equilibrium to an integral allocation.

The stages: cancel flow cycles so the allocation support is a forest;
normalize valuations by each buyer's equilibrium bang-per-buck so every
non-frozen buyer has a best rate of exactly 1; preprocess each support tree
so every good keeps exactly one child agent; then round recursively, handing
the root its most valuable child good. Zero-price trees (frozen buyers) use
the same procedure driven by utility shares instead of prices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InvariantError
from .flow import cancel_cycles, money_clearing
from .instances import (
    Allocation,
    NswInstance,
    ONE,
    ZERO,
    as_frac,
    cap_valuations,
    frac_str,
    nsw_value,
    perturb,
    to_market,
)
from .solver import run_fptas
from .state import MarketState

HALF = Fraction(1, 2)
RATIO_BOUND = Fraction(2404, 1000)

BuyerNode = tuple[str, int]


def flow_to_forest(state: MarketState) -> Allocation:
    """Equilibrium allocation re-routed so its support graph is acyclic.

    Money cycles among positively priced goods are cancelled; frozen
    zero-price bundles are already cycle-free because the solver cancels
    their component before freezing.
    """
    n, m = state.n, state.m
    flow = [list(row) for row in state.flow]
    cancel_cycles(flow)
    frozen = state.frozen_map()
    rows = []
    for i in range(n):
        if i in frozen:
            rows.append(frozen[i])
        else:
            rows.append(
                tuple(
                    flow[i][j] / state.prices[j] if state.prices[j] > 0 else ZERO
                    for j in range(m)
                )
            )
    alloc = Allocation(entries=tuple(rows), integral=False)
    if _support_has_cycle(alloc):
        raise InvariantError("support graph still contains a cycle")
    return alloc


def _support_has_cycle(alloc: Allocation) -> bool:
    parent: dict = {}

    def find(v):
        while parent.get(v, v) != v:
            parent[v] = parent.get(parent[v], parent[v])
            v = parent[v]
        return v

    for i in range(alloc.n):
        for j in range(alloc.m):
            if alloc.entries[i][j] > 0:
                a, b = find(("b", i)), find(("g", j))
                if a == b:
                    return True
                parent[a] = b
    return False


@dataclass(frozen=True)
class NormalizedInstance:
    """Valuations rescaled so every non-frozen buyer's best rate is 1.

    Frozen buyers (positive utility on zero-priced goods) keep their raw
    perturbed values and caps; they are handled by the zero-price tree rules.
    """

    values: tuple[tuple[Fraction, ...], ...]
    caps: tuple[Fraction, ...]
    zero_buyers: frozenset[int]
    zero_goods: frozenset[int]
    capped_buyers: frozenset[int]
    uncapped_buyers: frozenset[int]
    unit_costs: tuple[Fraction, ...]  # 1/alpha per buyer, 0 for frozen buyers

    def scale_product(self) -> Fraction:
        """Factor converting raw-value products into normalized-value ones."""
        out = ONE
        for i, lam in enumerate(self.unit_costs):
            if i not in self.zero_buyers:
                out *= lam
        return out


def normalize(state: MarketState) -> NormalizedInstance:
    """Per-buyer rescaling by the equilibrium bang-per-buck ratio."""
    pm = state.pm
    n, m = state.n, state.m
    zero_goods = frozenset(j for j in range(m) if state.prices[j] == 0)
    zero_buyers = frozenset(
        i for i in range(n)
        if any(pm.putils[i][j] > 0 for j in zero_goods)
    )
    frozen = set(state.frozen_map())
    if zero_buyers != frozen:
        raise InvariantError(
            f"buyers valuing zero-priced goods {sorted(zero_buyers)} differ "
            f"from frozen buyers {sorted(frozen)}"
        )
    values = []
    caps = []
    unit_costs = []
    capped = set()
    for i in range(n):
        if i in zero_buyers:
            values.append(tuple(pm.putils[i]))
            caps.append(Fraction(pm.base.ucaps[i]))
            unit_costs.append(ZERO)
            capped.add(i)
            continue
        lam = state.unit_cost(i)
        unit_costs.append(lam)
        values.append(tuple(u * lam for u in pm.putils[i]))
        caps.append(pm.base.ucaps[i] * lam)
        a = state.alpha(i)
        if pm.base.budgets[i] * a >= pm.base.ucaps[i]:
            capped.add(i)
    norm = NormalizedInstance(
        values=tuple(values),
        caps=tuple(caps),
        zero_buyers=zero_buyers,
        zero_goods=zero_goods,
        capped_buyers=frozenset(capped),
        uncapped_buyers=frozenset(range(n)) - frozenset(capped),
        unit_costs=tuple(unit_costs),
    )
    for i in range(n):
        if i in zero_buyers:
            continue
        for j in range(m):
            if norm.values[i][j] > state.prices[j]:
                raise InvariantError(
                    f"normalized value of buyer {i} for good {j} exceeds its price"
                )
    return norm


def normalization_report(state: MarketState, norm: NormalizedInstance) -> list[str]:
    """Soft diagnostics: inequalities that hold exactly for unperturbed
    valuations but can slip by up to a (1+eps) factor after perturbation."""
    notes = []
    pm = state.pm
    for i in range(state.n):
        if i in norm.zero_buyers:
            continue
        for j in range(state.m):
            if norm.values[i][j] > min(state.prices[j], norm.caps[i]):
                notes.append(f"value[{i}][{j}] above min(price, cap)")
    for i in sorted(norm.capped_buyers - norm.zero_buyers):
        for j in range(state.m):
            if norm.values[i][j] > 0 and norm.values[i][j] == state.prices[j]:
                if state.prices[j] > 1:
                    notes.append(f"capped buyer {i} has best-rate good {j} above price 1")
    return notes


def upper_bound(norm: NormalizedInstance, state: MarketState) -> tuple[Fraction, int]:
    """Certified bound on the n-th power of the optimal Nash social welfare,
    in the normalized value scale: capped buyers contribute their caps and
    expensive goods their prices."""
    product = ONE
    for i in sorted(norm.capped_buyers):
        product *= norm.caps[i]
    for j in range(state.m):
        if state.prices[j] > 1:
            product *= state.prices[j]
    return product, state.n


@dataclass
class TreeStats:
    """Shape and outcome of one rounded tree, for the product-bound checks."""

    zero_price: bool
    agents: list[int]
    goods: list[int]
    k_t: int
    path_agents: list[int] = field(default_factory=list)
    path_goods: list[int] = field(default_factory=list)
    child_counts: list[int] = field(default_factory=list)


@dataclass
class RoundingForest:
    """Preprocessed support forest plus the assignments made on the way."""

    parent: dict
    children: dict
    roots: list[BuyerNode]
    zero_price: dict
    gifts: dict[int, int]  # good -> agent assigned during preprocessing
    alloc: Allocation
    norm: NormalizedInstance
    state: MarketState


def _build_forest(alloc: Allocation, zero_goods) -> tuple[dict, dict, list]:
    """Orient each support component from its lowest-index agent."""
    n, m = alloc.n, alloc.m
    adj: dict = {}
    for i in range(n):
        for j in range(m):
            if alloc.entries[i][j] > 0:
                adj.setdefault(("b", i), []).append(("g", j))
                adj.setdefault(("g", j), []).append(("b", i))
    seen: set = set()
    parent: dict = {}
    children: dict = {}
    roots: list[BuyerNode] = []
    for i in range(n):
        node = ("b", i)
        if node in seen or node not in adj:
            continue
        roots.append(node)
        parent[node] = None
        stack = [node]
        seen.add(node)
        while stack:
            cur = stack.pop()
            children.setdefault(cur, [])
            for nxt in sorted(adj.get(cur, ())):
                if nxt in seen:
                    continue
                seen.add(nxt)
                parent[nxt] = cur
                children[cur].append(nxt)
                stack.append(nxt)
    for j in range(m):
        node = ("g", j)
        if node in adj and node not in seen:
            raise InvariantError(f"good {j} has allocation but no owning agent")
    return parent, children, roots


def preprocess(
    alloc: Allocation, norm: NormalizedInstance, state: MarketState
) -> RoundingForest:
    """Trim the support forest so every remaining good has exactly one child.

    Childless goods go to their parent. Goods with several child agents keep
    the child buying the most. A good cheap relative to its child's stake
    (price at most half the child's active budget; utility share at most half
    the cap on zero-price trees) also goes to the parent. Detached children
    become roots of their own trees.
    """
    parent, children, roots = _build_forest(alloc, norm.zero_goods)
    gifts: dict[int, int] = {}

    def detach(node):
        p = parent[node]
        if p is not None:
            children[p].remove(node)
        parent[node] = None
        roots.append(node)

    def remove_good(gnode):
        p = parent[gnode]
        children[p].remove(gnode)
        parent[gnode] = None

    goods_nodes = sorted(node for node in parent if node[0] == "g")
    for gnode in goods_nodes:
        if not children.get(gnode):
            gifts[gnode[1]] = parent[gnode][1]
            remove_good(gnode)
    for gnode in goods_nodes:
        if parent[gnode] is None:
            continue
        kids = children[gnode]
        if len(kids) >= 2:
            j = gnode[1]
            keep = max(kids, key=lambda b: (alloc.entries[b[1]][j], -b[1]))
            for kid in list(kids):
                if kid is not keep:
                    detach(kid)
    for gnode in goods_nodes:
        if parent[gnode] is None:
            continue
        j = gnode[1]
        (child,) = children[gnode]
        i = child[1]
        if j in norm.zero_goods:
            give = norm.values[i][j] * alloc.entries[i][j] <= norm.caps[i] * HALF
        else:
            give = state.prices[j] <= state.active_budget(i) * HALF
        if give:
            gifts[j] = parent[gnode][1]
            remove_good(gnode)
            detach(child)

    zero_price: dict = {}
    for root in roots:
        comp = _collect(root, children)
        goods = [v[1] for v in comp if v[0] == "g"]
        agents = [v[1] for v in comp if v[0] == "b"]
        in_zero = [j in norm.zero_goods for j in goods]
        if any(in_zero) and not all(in_zero):
            raise InvariantError("tree mixes zero-price and positive-price goods")
        zero_price[root] = bool(goods) and all(in_zero)
        for j in goods:
            if len(children[("g", j)]) != 1:
                raise InvariantError(f"good {j} kept {len(children[('g', j)])} children")
        if len(agents) != len(goods) + 1:
            raise InvariantError("preprocessed tree is not an alternating tree")
    return RoundingForest(
        parent=parent,
        children=children,
        roots=sorted(roots),
        zero_price=zero_price,
        gifts=gifts,
        alloc=alloc,
        norm=norm,
        state=state,
    )


def _collect(root, children) -> list:
    out = [root]
    stack = [root]
    while stack:
        cur = stack.pop()
        for nxt in children.get(cur, ()):
            out.append(nxt)
            stack.append(nxt)
    return out


def round_forest(forest: RoundingForest) -> tuple[dict[int, int], list[TreeStats]]:
    """Integral assignment of every tree good, plus per-tree recursion stats.

    The root receives the child good worth the most to it in the fractional
    solution; all goods outside that child's subtree go to their child
    agents; the chosen good's child agent becomes the next root.
    """
    norm, alloc = forest.norm, forest.alloc
    assignment = dict(forest.gifts)
    stats: list[TreeStats] = []
    for root in forest.roots:
        comp = _collect(root, forest.children)
        goods = sorted(v[1] for v in comp if v[0] == "g")
        agents = sorted(v[1] for v in comp if v[0] == "b")
        st = TreeStats(
            zero_price=forest.zero_price[root],
            agents=agents,
            goods=goods,
            k_t=len(goods),
        )
        stats.append(st)
        if not goods:
            continue
        cur = root
        while True:
            kids = forest.children.get(cur, [])
            if not kids:
                break
            i = cur[1]
            st.path_agents.append(i)
            st.child_counts.append(len(kids))
            best = max(
                kids,
                key=lambda g: (norm.values[i][g[1]] * alloc.entries[i][g[1]], -g[1]),
            )
            j = best[1]
            st.path_goods.append(j)
            assignment[j] = i
            for node in _collect(cur, forest.children):
                if node is best or node == best:
                    continue
                if node[0] == "g" and node[1] != j and not _inside(node, best, forest):
                    (child,) = forest.children[node]
                    assignment[node[1]] = child[1]
            (next_root,) = forest.children[best]
            cur = next_root
        st.path_agents.append(cur[1])
    return assignment, stats


def _inside(node, ancestor, forest) -> bool:
    while node is not None:
        if node == ancestor:
            return True
        node = forest.parent[node]
    return False


_EXHAUSTIVE_TREE_LIMIT = 12


def improve_assignment(assignment: dict[int, int], forest: RoundingForest) -> int:
    """Re-optimize each tree's goods between their two adjacent agents.

    The recursive step can strand an agent: when the root's cap is already
    met by preprocessing gifts, taking the child's main good buys the root
    nothing, and a capped child whose single good moved up ends at zero. Each
    good still only makes sense for its tree-parent or tree-child, so for
    small trees the best of the 2^k adjacent assignments is taken (ties kept
    closest to the recursion's choice); large trees fall back to greedy
    single-good moves. The welfare product never decreases.
    """
    norm = forest.norm
    moves = 0
    for root in forest.roots:
        comp = _collect(root, forest.children)
        goods = []
        agents = []
        for node in comp:
            if node[0] == "b":
                agents.append(node[1])
            elif forest.children.get(node):
                goods.append(
                    (node[1], forest.parent[node][1], forest.children[node][0][1])
                )
        if not goods:
            continue
        goods.sort()
        base = {
            i: sum(
                (norm.values[i][j] for j, owner in assignment.items()
                 if owner == i and j not in {g[0] for g in goods}),
                ZERO,
            )
            for i in agents
        }
        current = tuple(
            0 if assignment[j] == parent else 1 for j, parent, child in goods
        )
        if len(goods) <= _EXHAUSTIVE_TREE_LIMIT:
            best = _best_tree_assignment(goods, agents, base, norm, current)
        else:
            best = _greedy_tree_assignment(goods, base, norm, current)
        for bit, (j, parent, child) in zip(best, goods):
            owner = child if bit else parent
            if assignment[j] != owner:
                assignment[j] = owner
                moves += 1
    return moves


def _tree_product(bits, goods, agents, base, norm) -> Fraction:
    totals = dict(base)
    for bit, (j, parent, child) in zip(bits, goods):
        owner = child if bit else parent
        totals[owner] += norm.values[owner][j]
    product = ONE
    for i in agents:
        product *= min(norm.caps[i], totals[i])
    return product


def _best_tree_assignment(goods, agents, base, norm, current):
    k = len(goods)
    best_bits = current
    best_key = (_tree_product(current, goods, agents, base, norm), k + 1)
    for mask in range(1 << k):
        bits = tuple(mask >> t & 1 for t in range(k))
        product = _tree_product(bits, goods, agents, base, norm)
        dist = sum(a != b for a, b in zip(bits, current))
        if product > best_key[0] or (product == best_key[0] and dist < best_key[1]):
            best_key = (product, dist)
            best_bits = bits
    return best_bits


def _greedy_tree_assignment(goods, base, norm, current):
    totals = dict(base)
    bits = list(current)
    for bit, (j, parent, child) in zip(bits, goods):
        owner = child if bit else parent
        totals[owner] += norm.values[owner][j]

    def contribution(i):
        return min(norm.caps[i], totals[i])

    changed = True
    while changed:
        changed = False
        for t, (j, parent, child) in enumerate(goods):
            owner = child if bits[t] else parent
            other = parent if bits[t] else child
            before = contribution(owner) * contribution(other)
            totals[owner] -= norm.values[owner][j]
            totals[other] += norm.values[other][j]
            if contribution(owner) * contribution(other) > before:
                bits[t] = 1 - bits[t]
                changed = True
            else:
                totals[other] -= norm.values[other][j]
                totals[owner] += norm.values[owner][j]
    return tuple(bits)


@dataclass
class TreeCheck:
    """Exact product-bound verdict for one rounded tree."""

    tree: TreeStats
    lhs: Fraction
    rhs: Fraction
    ok: bool
    relaxed_ok: bool


def _assignment_path(forest: RoundingForest, assignment, root):
    """Recursion path induced by the final assignment: the chain of agents
    each holding one of its child goods, following the held good downwards.
    Returns the path agents' child counts."""
    norm, alloc = forest.norm, forest.alloc
    counts = []
    cur = root
    while True:
        kids = forest.children.get(cur, [])
        held = [g for g in kids if assignment.get(g[1]) == cur[1]]
        if not held:
            return counts
        counts.append(len(kids))
        i = cur[1]
        best = max(
            held,
            key=lambda g: (norm.values[i][g[1]] * alloc.entries[i][g[1]], -g[1]),
        )
        (cur,) = forest.children[best]


def check_tree_bounds(
    stats: list[TreeStats],
    assignment: dict[int, int],
    norm: NormalizedInstance,
    state: MarketState,
    forest: RoundingForest | None = None,
) -> list[TreeCheck]:
    """Per-tree check: the product of rounded values beats
    (1/2)^(k-l+1) / (k_1...k_l) times caps-of-capped and prices-above-1.

    The path quantities (l, k_i) come from the delivered assignment when the
    forest is given (the local repair may have re-routed path goods to their
    child agents, which only shortens the path and weakens the target);
    otherwise the recorded recursion path is used. relaxed_ok divides the
    target by (1+eps)^(k+1), the slack utility perturbation can introduce
    into the per-agent half-bounds.
    """
    checks = []
    eps = state.pm.epsilon
    roots = {}
    if forest is not None:
        for root in forest.roots:
            comp = _collect(root, forest.children)
            agents = tuple(sorted(v[1] for v in comp if v[0] == "b"))
            roots[agents] = root
    for st in stats:
        if st.k_t == 0:
            continue
        lhs = ONE
        for i in st.agents:
            # full rounded value: tree goods plus preprocessing gifts
            got = sum(
                (norm.values[i][j] for j, owner in assignment.items() if owner == i),
                ZERO,
            )
            lhs *= min(norm.caps[i], got)
        child_counts = st.child_counts
        if forest is not None:
            child_counts = _assignment_path(
                forest, assignment, roots[tuple(st.agents)]
            )
        ell = len(child_counts)
        rhs = HALF ** (st.k_t - ell + 1)
        for k in child_counts:
            rhs /= k
        if st.zero_price:
            for i in st.agents:
                rhs *= norm.caps[i]
        else:
            for i in st.agents:
                if i in norm.capped_buyers:
                    rhs *= norm.caps[i]
            for j in st.goods:
                if state.prices[j] > 1:
                    rhs *= state.prices[j]
        slack = (ONE + eps) ** (st.k_t + 1)
        checks.append(
            TreeCheck(tree=st, lhs=lhs, rhs=rhs, ok=lhs >= rhs,
                      relaxed_ok=lhs * slack >= rhs)
        )
    return checks


def check_half_bound(
    forest: RoundingForest, assignment: dict[int, int]
) -> list[str]:
    """Each agent assigned its tree-parent good ends with at least half of
    its equilibrium value."""
    norm, alloc = forest.norm, forest.alloc
    problems = []
    for node in sorted(forest.parent):
        if node[0] != "g" or not forest.children.get(node):
            continue
        j = node[1]
        (child,) = forest.children[node]
        i = child[1]
        if assignment.get(j) != i:
            continue
        eq_value = min(
            norm.caps[i],
            sum((norm.values[i][g] * alloc.entries[i][g] for g in range(alloc.m)), ZERO),
        )
        got = min(
            norm.caps[i],
            sum((norm.values[i][g] for g, o in assignment.items() if o == i), ZERO),
        )
        if got * 2 < eq_value:
            problems.append(f"agent {i} got {got} of parent-good value {eq_value}")
    return problems


def check_retention(forest: RoundingForest) -> list[str]:
    """After preprocessing, roots keep at least half their equilibrium value
    in fractional terms (preprocessing gifts included); other agents all of it."""
    norm, alloc, state = forest.norm, forest.alloc, forest.state
    problems = []
    eq_value = {}
    for i in range(alloc.n):
        total = sum(
            (norm.values[i][j] * alloc.entries[i][j] for j in range(alloc.m)), ZERO
        )
        eq_value[i] = min(norm.caps[i], total)
    for root in forest.roots:
        comp = _collect(root, forest.children)
        for node in comp:
            if node[0] != "b":
                continue
            i = node[1]
            kept = sum(
                (
                    norm.values[i][g[1]] * alloc.entries[i][g[1]]
                    for g in forest.children.get(node, ())
                ),
                ZERO,
            )
            if forest.parent[node] is not None:
                g = forest.parent[node][1]
                kept += norm.values[i][g] * alloc.entries[i][g]
            kept += sum(
                (norm.values[i][j] for j, owner in forest.gifts.items() if owner == i),
                ZERO,
            )
            kept = min(norm.caps[i], kept)
            target = eq_value[i] if node != root else eq_value[i] * HALF
            if kept < target:
                problems.append(
                    f"agent {i}: retains {kept} of {eq_value[i]} (root={node == root})"
                )
    return problems


@dataclass
class Certificate:
    """Outcome of the full pipeline with the exact ratio check.

    ratio_ok certifies nsw_product * 2.404^n * (1+eps')^(n^2) >= the
    upper-bound product (both in the original value scale); opt_zero marks
    instances whose best Nash welfare is 0.
    """

    n: int
    epsilon_prime: Fraction
    nsw_product: Fraction
    upper_bound_product: Fraction
    ratio_ok: bool
    opt_zero: bool = False
    assignment: dict[int, int] = field(default_factory=dict)
    tree_checks: list[TreeCheck] = field(default_factory=list)
    retention_problems: list[str] = field(default_factory=list)
    half_problems: list[str] = field(default_factory=list)
    normalization_notes: list[str] = field(default_factory=list)
    iterations: int = 0

    def report_lines(self) -> list[str]:
        out = ["certificate"]
        out.append(f"n {self.n}")
        out.append(f"epsilon_prime {frac_str(self.epsilon_prime)}")
        out.append(f"nsw_product {frac_str(self.nsw_product)}")
        out.append(f"upper_bound_product {frac_str(self.upper_bound_product)}")
        if self.opt_zero:
            out.append("opt_zero true")
        out.append(f"ratio_check {'pass' if self.ratio_ok else 'fail'}")
        for j in sorted(self.assignment):
            out.append(f"assign {j + 1} {self.assignment[j] + 1}")
        return out


def pipeline(inst: NswInstance, epsilon, lp_log=None) -> tuple[Allocation, Certificate]:
    """Cap values, clear the market, solve the perturbed equilibrium, and
    round it to an integral allocation with a certified welfare ratio."""
    eps2 = as_frac(epsilon)
    if eps2 <= 0:
        raise ValueError("epsilon must be positive")
    capped = cap_valuations(inst)
    market = to_market(capped)
    n, m = inst.n, inst.m
    if not money_clearing(market):
        # some agent group cannot all receive a valued item: best welfare is 0
        rows = [[ZERO] * m for _ in range(n)]
        for j in range(m):
            rows[0][j] = ONE
        alloc = Allocation.from_rows(rows, integral=True)
        cert = Certificate(
            n=n,
            epsilon_prime=eps2 / n,
            nsw_product=ZERO,
            upper_bound_product=ZERO,
            ratio_ok=True,
            opt_zero=True,
            assignment={j: 0 for j in range(m)},
        )
        return alloc, cert
    eps_prime = eps2 / n
    pm = perturb(market, eps_prime)
    state, _ = run_fptas(pm, lp_log)
    forest_alloc = flow_to_forest(state)
    norm = normalize(state)
    forest = preprocess(forest_alloc, norm, state)
    assignment, stats = round_forest(forest)
    improve_assignment(assignment, forest)
    for j in range(m):
        if j not in assignment:
            best = max(range(n), key=lambda i: (capped.values[i][j], -i))
            assignment[j] = best

    rows = [[ZERO] * m for _ in range(n)]
    for j, i in assignment.items():
        rows[i][j] = ONE
    alloc = Allocation.from_rows(rows, integral=True)

    nsw_prod, _ = nsw_value(capped, alloc)
    if nsw_prod == 0:
        raise InvariantError("rounded allocation gives some agent zero value")
    ub_norm, _ = upper_bound(norm, state)
    scale = norm.scale_product()
    ub_raw = ub_norm / scale

    checks = check_tree_bounds(stats, assignment, norm, state, forest)
    for c in checks:
        if not c.relaxed_ok:
            raise InvariantError(
                f"tree product {c.lhs} far below bound {c.rhs}"
            )
    retention = check_retention(forest)
    half = check_half_bound(forest, assignment)
    total_tree_agents = sum(st.k_t + 1 for st in stats)
    total_children = sum(sum(st.child_counts) for st in stats)
    if total_tree_agents > n or total_children > n:
        raise InvariantError("tree decomposition exceeds the agent budget")

    ratio_ok = (
        nsw_prod * RATIO_BOUND ** n * (ONE + eps_prime) ** (n * n) >= ub_raw
    )
    cert = Certificate(
        n=n,
        epsilon_prime=eps_prime,
        nsw_product=nsw_prod,
        upper_bound_product=ub_raw,
        ratio_ok=ratio_ok,
        assignment=assignment,
        tree_checks=checks,
        retention_problems=retention,
        half_problems=half,
        normalization_notes=normalization_report(state, norm),
        iterations=len(state.trace),
    )
    return alloc, cert
