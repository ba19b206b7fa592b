"""Line-oriented instance and state file formats.

Instance files ('#' comments, whitespace-separated, 1-based indices):

    nsw <n> <m>
    cap <i> <c_i>          one line per agent
    val <i> <j> <v_ij>     sparse; absent entries are 0

    market <n> <m>
    budget <i> <m_i>
    ucap <i> <c_i>
    ecap <j> <d_j>
    util <i> <j> <u_ij>    sparse

State files carry rationals as '<num>/<den>' (or plain integers):

    state <n> <m>
    price <j> <p>
    flow <i> <j> <f>
    alloc <i> <j> <x>
"""
from __future__ import annotations

from fractions import Fraction

from .errors import ParseError
from .instances import Allocation, MarketInstance, NswInstance, ZERO, as_frac, frac_str


def _tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        yield lineno, line.split()


def _to_int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"line {lineno}: expected integer, got {tok!r}") from None


def _to_frac(tok: str, lineno: int) -> Fraction:
    try:
        return as_frac(tok)
    except (ValueError, TypeError, ZeroDivisionError):
        raise ParseError(f"line {lineno}: expected rational, got {tok!r}") from None


def parse_instance(text: str) -> NswInstance | MarketInstance:
    """Parse an instance file, dispatching on its 'nsw'/'market' header."""
    lines = list(_tokens(text))
    if not lines:
        raise ParseError("empty instance file")
    lineno, head = lines[0]
    if head[0] == "nsw":
        return _parse_nsw(lines)
    if head[0] == "market":
        return _parse_market(lines)
    raise ParseError(f"line {lineno}: unknown header {head[0]!r}")


def _parse_header(lines) -> tuple[int, int]:
    lineno, head = lines[0]
    if len(head) != 3:
        raise ParseError(f"line {lineno}: header needs '<kind> <n> <m>'")
    n = _to_int(head[1], lineno)
    m = _to_int(head[2], lineno)
    if n <= 0 or m <= 0:
        raise ParseError(f"line {lineno}: n and m must be positive")
    return n, m


def _check_index(idx: int, bound: int, what: str, lineno: int) -> int:
    if not 1 <= idx <= bound:
        raise ParseError(f"line {lineno}: {what} index {idx} out of range 1..{bound}")
    return idx - 1


def _parse_nsw(lines) -> NswInstance:
    n, m = _parse_header(lines)
    caps: dict[int, int] = {}
    vals = [[0] * m for _ in range(n)]
    for lineno, toks in lines[1:]:
        kind = toks[0]
        if kind == "cap":
            if len(toks) != 3:
                raise ParseError(f"line {lineno}: cap needs '<i> <c>'")
            i = _check_index(_to_int(toks[1], lineno), n, "agent", lineno)
            caps[i] = _to_int(toks[2], lineno)
        elif kind == "val":
            if len(toks) != 4:
                raise ParseError(f"line {lineno}: val needs '<i> <j> <v>'")
            i = _check_index(_to_int(toks[1], lineno), n, "agent", lineno)
            j = _check_index(_to_int(toks[2], lineno), m, "item", lineno)
            vals[i][j] = _to_int(toks[3], lineno)
        else:
            raise ParseError(f"line {lineno}: unknown record {kind!r} in nsw file")
    missing = [i + 1 for i in range(n) if i not in caps]
    if missing:
        raise ParseError(f"missing cap line for agent(s) {missing}")
    try:
        return NswInstance(
            n=n, m=m,
            values=tuple(tuple(row) for row in vals),
            caps=tuple(caps[i] for i in range(n)),
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def _parse_market(lines) -> MarketInstance:
    n, m = _parse_header(lines)
    budgets: dict[int, int] = {}
    ucaps: dict[int, int] = {}
    ecaps: dict[int, int] = {}
    utils = [[0] * m for _ in range(n)]
    for lineno, toks in lines[1:]:
        kind = toks[0]
        if kind == "budget":
            i = _check_index(_to_int(toks[1], lineno), n, "buyer", lineno)
            budgets[i] = _to_int(toks[2], lineno)
        elif kind == "ucap":
            i = _check_index(_to_int(toks[1], lineno), n, "buyer", lineno)
            ucaps[i] = _to_int(toks[2], lineno)
        elif kind == "ecap":
            j = _check_index(_to_int(toks[1], lineno), m, "good", lineno)
            ecaps[j] = _to_int(toks[2], lineno)
        elif kind == "util":
            if len(toks) != 4:
                raise ParseError(f"line {lineno}: util needs '<i> <j> <u>'")
            i = _check_index(_to_int(toks[1], lineno), n, "buyer", lineno)
            j = _check_index(_to_int(toks[2], lineno), m, "good", lineno)
            utils[i][j] = _to_int(toks[3], lineno)
        else:
            raise ParseError(f"line {lineno}: unknown record {kind!r} in market file")
    for kind, got, cnt in (("budget", budgets, n), ("ucap", ucaps, n), ("ecap", ecaps, m)):
        missing = [i + 1 for i in range(cnt) if i not in got]
        if missing:
            raise ParseError(f"missing {kind} line for index(es) {missing}")
    try:
        return MarketInstance(
            n=n, m=m,
            budgets=tuple(budgets[i] for i in range(n)),
            utils=tuple(tuple(row) for row in utils),
            ucaps=tuple(ucaps[i] for i in range(n)),
            ecaps=tuple(ecaps[j] for j in range(m)),
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def serialize_nsw(inst: NswInstance) -> str:
    out = [f"nsw {inst.n} {inst.m}"]
    for i, c in enumerate(inst.caps):
        out.append(f"cap {i + 1} {c}")
    for i, row in enumerate(inst.values):
        for j, v in enumerate(row):
            if v:
                out.append(f"val {i + 1} {j + 1} {v}")
    return "\n".join(out) + "\n"


def serialize_market(mkt: MarketInstance) -> str:
    out = [f"market {mkt.n} {mkt.m}"]
    for i, b in enumerate(mkt.budgets):
        out.append(f"budget {i + 1} {b}")
    for i, c in enumerate(mkt.ucaps):
        out.append(f"ucap {i + 1} {c}")
    for j, d in enumerate(mkt.ecaps):
        out.append(f"ecap {j + 1} {d}")
    for i, row in enumerate(mkt.utils):
        for j, u in enumerate(row):
            if u:
                out.append(f"util {i + 1} {j + 1} {u}")
    return "\n".join(out) + "\n"


def serialize_state(prices, flow, alloc: Allocation | None) -> str:
    """Serialize (prices, money flow, allocation) to the state format."""
    n = len(flow)
    m = len(prices)
    out = [f"state {n} {m}"]
    for j, p in enumerate(prices):
        out.append(f"price {j + 1} {frac_str(p)}")
    for i in range(n):
        for j in range(m):
            if flow[i][j] != 0:
                out.append(f"flow {i + 1} {j + 1} {frac_str(flow[i][j])}")
    if alloc is not None:
        for i in range(alloc.n):
            for j in range(alloc.m):
                if alloc.entries[i][j] != 0:
                    out.append(f"alloc {i + 1} {j + 1} {frac_str(alloc.entries[i][j])}")
    return "\n".join(out) + "\n"


def parse_state(text: str):
    """Parse a state file into (prices, flow, Allocation-or-None)."""
    lines = list(_tokens(text))
    if not lines or lines[0][1][0] != "state":
        raise ParseError("state file must start with 'state <n> <m>'")
    n, m = _parse_header(lines)
    prices = [ZERO] * m
    flow = [[ZERO] * m for _ in range(n)]
    alloc = [[ZERO] * m for _ in range(n)]
    saw_alloc = False
    for lineno, toks in lines[1:]:
        kind = toks[0]
        if kind == "price":
            j = _check_index(_to_int(toks[1], lineno), m, "good", lineno)
            prices[j] = _to_frac(toks[2], lineno)
        elif kind == "flow":
            i = _check_index(_to_int(toks[1], lineno), n, "buyer", lineno)
            j = _check_index(_to_int(toks[2], lineno), m, "good", lineno)
            flow[i][j] = _to_frac(toks[3], lineno)
        elif kind == "alloc":
            i = _check_index(_to_int(toks[1], lineno), n, "buyer", lineno)
            j = _check_index(_to_int(toks[2], lineno), m, "good", lineno)
            alloc[i][j] = _to_frac(toks[3], lineno)
            saw_alloc = True
        else:
            raise ParseError(f"line {lineno}: unknown record {kind!r} in state file")
    allocation = Allocation.from_rows(alloc) if saw_alloc else None
    return prices, flow, allocation
