"""Max-flow over exact rationals, feasibility with arc lower bounds, and the
money-clearing test for cap-limited markets."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CapMarketError
from .instances import MarketInstance, ONE, ZERO


@dataclass
class FlowNetwork:
    """Nodes, capacitated arcs (lower/upper bounds), and node imbalances.

    supply[v] > 0 means v injects flow, < 0 means it absorbs. upper=None is
    an uncapacitated arc. Arcs are identified by their list position.
    """

    nodes: list
    arcs: list[tuple] = field(default_factory=list)  # (u, v, lower, upper|None)
    supply: dict = field(default_factory=dict)

    def add_arc(self, u, v, lower=ZERO, upper=None) -> int:
        lower = Fraction(lower)
        if upper is not None:
            upper = Fraction(upper)
            if lower > upper:
                raise CapMarketError(f"arc {u}->{v}: lower {lower} > upper {upper}")
        if lower < 0:
            raise CapMarketError("arc lower bounds must be non-negative")
        self.arcs.append((u, v, lower, upper))
        return len(self.arcs) - 1

    def set_supply(self, node, amount):
        self.supply[node] = Fraction(amount)


class _MaxFlow:
    """Edmonds-Karp on an adjacency structure of residual arcs."""

    def __init__(self):
        self.adj: dict = {}
        self.cap: list[Fraction] = []
        self.to: list = []

    def add(self, u, v, cap: Fraction):
        self.adj.setdefault(u, []).append(len(self.cap))
        self.to.append(v)
        self.cap.append(cap)
        self.adj.setdefault(v, []).append(len(self.cap))
        self.to.append(u)
        self.cap.append(ZERO)

    def run(self, s, t) -> Fraction:
        total = ZERO
        while True:
            parent: dict = {s: None}
            queue = deque([s])
            while queue:
                u = queue.popleft()
                if u == t:
                    break
                for eid in self.adj.get(u, ()):
                    v = self.to[eid]
                    if self.cap[eid] > 0 and v not in parent:
                        parent[v] = eid
                        queue.append(v)
            if t not in parent:
                return total
            bottleneck = None
            v = t
            while v != s:
                eid = parent[v]
                if bottleneck is None or self.cap[eid] < bottleneck:
                    bottleneck = self.cap[eid]
                v = self.to[eid ^ 1]
            v = t
            while v != s:
                eid = parent[v]
                self.cap[eid] -= bottleneck
                self.cap[eid ^ 1] += bottleneck
                v = self.to[eid ^ 1]
            total += bottleneck

    def reachable(self, s) -> set:
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for eid in self.adj.get(u, ()):
                v = self.to[eid]
                if self.cap[eid] > 0 and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen


def max_flow_with_lower_bounds(net: FlowNetwork):
    """Find a flow meeting all lower bounds and node imbalances.

    Returns (True, per-arc flows) or (False, violated node cut). Uses the
    standard reduction: route lower bounds unconditionally, then repair the
    induced imbalances through a super source/sink.
    """
    imbalance: dict = {v: net.supply.get(v, ZERO) for v in net.nodes}
    for u, v, lower, upper in net.arcs:
        if u not in imbalance or v not in imbalance:
            raise CapMarketError("arc endpoint not among nodes")
        if lower:
            imbalance[u] -= lower
            imbalance[v] += lower

    mf = _MaxFlow()
    src, snk = ("__source__",), ("__sink__",)
    arc_eids = []
    # any repair flow pushes at most the total positive imbalance through an arc
    inf_cap = sum((f for f in imbalance.values() if f > 0), ZERO) + ONE
    for u, v, lower, upper in net.arcs:
        room = inf_cap if upper is None else upper - lower
        arc_eids.append(len(mf.cap))
        mf.add(u, v, room)
    need = ZERO
    for v in net.nodes:
        bal = imbalance[v]
        if bal > 0:
            mf.add(src, v, bal)
            need += bal
        elif bal < 0:
            mf.add(v, snk, -bal)
    pushed = mf.run(src, snk)
    if pushed != need:
        cut = {v for v in mf.reachable(src) if v not in (src, snk)}
        return False, cut
    flows = []
    for idx, (u, v, lower, upper) in enumerate(net.arcs):
        eid = arc_eids[idx]
        room = inf_cap if upper is None else upper - lower
        flows.append(lower + (room - mf.cap[eid]))
    return True, flows


def cancel_cycles(flow, buyers=None, goods=None):
    """Break support cycles of a bipartite money-flow matrix in place.

    Shifts flow around each cycle, alternating +d/-d, until one edge hits
    zero; every buyer's row sum and every good's column sum is preserved
    exactly, so utilities and earnings are untouched.
    """
    n = len(flow)
    m = len(flow[0]) if n else 0
    buyers = range(n) if buyers is None else sorted(buyers)
    goods = range(m) if goods is None else sorted(goods)
    while True:
        adj: dict = {}
        for i in buyers:
            for j in goods:
                if flow[i][j] > 0:
                    adj.setdefault(("b", i), []).append(("g", j))
                    adj.setdefault(("g", j), []).append(("b", i))
        cycle = _find_cycle(adj)
        if cycle is None:
            return flow
        # cycle alternates buyer/good nodes; edge t sits between node t, t+1
        edges = []
        for t in range(len(cycle)):
            a, b = cycle[t], cycle[(t + 1) % len(cycle)]
            i = a[1] if a[0] == "b" else b[1]
            j = a[1] if a[0] == "g" else b[1]
            edges.append((i, j))
        minus = edges[1::2]
        delta = min(flow[i][j] for i, j in minus)
        for t, (i, j) in enumerate(edges):
            flow[i][j] = flow[i][j] + delta if t % 2 == 0 else flow[i][j] - delta
    return flow


def _find_cycle(adj):
    """Any simple cycle in an undirected graph, else None.

    Peels degree-<=1 nodes; in the remaining 2-core a walk that never
    immediately backtracks must revisit a node, closing a cycle.
    """
    degree = {v: len(set(nbrs)) for v, nbrs in adj.items()}
    alive = {v for v, d in degree.items() if d > 0}
    changed = True
    while changed:
        changed = False
        for v in list(alive):
            live_nbrs = [u for u in set(adj[v]) if u in alive]
            if len(live_nbrs) <= 1:
                alive.discard(v)
                changed = True
    if not alive:
        return None
    start = min(alive)
    walk = [start]
    positions = {start: 0}
    prev = None
    node = start
    while True:
        nxt = min(u for u in set(adj[node]) if u in alive and u != prev)
        if nxt in positions:
            return walk[positions[nxt]:]
        positions[nxt] = len(walk)
        walk.append(nxt)
        prev, node = node, nxt


def money_clearing(market: MarketInstance) -> bool:
    """Whether every buyer subset's money fits in its valued goods' earning caps.

    Implemented as one max flow: buyers supply their budgets, valued edges are
    uncapacitated, goods absorb up to their earning caps.
    """
    mf = _MaxFlow()
    total = sum(market.budgets)
    src, snk = ("s",), ("t",)
    for i in range(market.n):
        mf.add(src, ("b", i), Fraction(market.budgets[i]))
        for j in range(market.m):
            if market.utils[i][j] > 0:
                mf.add(("b", i), ("g", j), Fraction(total))
    for j in range(market.m):
        mf.add(("g", j), snk, Fraction(market.ecaps[j]))
    return mf.run(src, snk) == total
