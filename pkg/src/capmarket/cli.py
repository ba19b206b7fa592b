"""Command-line interface.

Subcommands: solve, pipeline, round, verify, oracle, gen, bench. Exit codes:
0 success, 2 parse/usage error, 3 market cannot be solved for lack of money
clearing, 4 internal invariant breach. Rational flags accept 'p/q' or plain
integers. Reports are deterministic; the timestamp header line can be
suppressed with --no-timestamp.
"""
from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction

from .errors import (
    CapMarketError,
    EnumerationGuard,
    InvariantError,
    NotMoneyClearing,
    ParseError,
)
from .flow import money_clearing
from .gen import E3Lin2Instance, gen_fixture, gen_hardness, gen_random
from .instances import (
    Allocation,
    MarketInstance,
    NswInstance,
    ONE,
    ZERO,
    as_frac,
    cap_valuations,
    frac_float12,
    frac_str,
    nsw_value,
    perturb,
    to_market,
)
from .io import (
    parse_instance,
    parse_state,
    serialize_market,
    serialize_nsw,
    serialize_state,
)
from .oracle import brute_money_clearing, brute_nsw
from .rounding import (
    check_tree_bounds,
    flow_to_forest,
    improve_assignment,
    normalize,
    pipeline,
    preprocess,
    round_forest,
    upper_bound,
)
from .solver import run_fptas
from .state import MarketState
from .verify import verify_approx_equilibrium, verify_equilibrium


def _rational(text: str) -> Fraction:
    try:
        value = as_frac(text)
    except (ValueError, TypeError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}")
    return value


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None


def _write_out(path: str | None, text: str):
    if path is None:
        return
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def _header(args) -> list[str]:
    if getattr(args, "no_timestamp", False):
        return []
    return [f"# generated {time.strftime('%Y-%m-%d %H:%M:%S')}"]


def _market_of(inst) -> MarketInstance:
    if isinstance(inst, NswInstance):
        return to_market(cap_valuations(inst))
    return inst


def cmd_solve(args) -> int:
    inst = parse_instance(_read(args.instance))
    market = _market_of(inst)
    pm = perturb(market, args.epsilon)
    lines = _header(args)
    state, alloc = run_fptas(pm)
    report = verify_equilibrium(pm, state.prices, alloc)
    lines.append(f"solve n={market.n} m={market.m} epsilon={frac_str(pm.epsilon)}")
    lines.append(f"money_clearing {'true' if money_clearing(market) else 'false'}")
    for j, p in enumerate(state.prices):
        lines.append(f"price {j + 1} {frac_str(p)} ~ {frac_float12(p)}")
    for i in range(market.n):
        util = sum(
            (pm.putils[i][j] * alloc.entries[i][j] for j in range(market.m)),
            ZERO,
        )
        lines.append(f"utility {i + 1} {frac_str(util)} ~ {frac_float12(util)}")
    lines.append(f"iterations {len(state.trace)}")
    lines.append(f"verify {'pass' if report.ok else 'fail'}")
    lines.extend("  " + v for v in report.lines() if not report.ok)
    print("\n".join(lines))
    _write_out(args.out, serialize_state(state.prices, state.flow, alloc))
    if args.trace:
        _write_out(args.trace, "\n".join(r.line() for r in state.trace) + "\n")
    return 0 if report.ok else 4


def cmd_pipeline(args) -> int:
    inst = parse_instance(_read(args.instance))
    if not isinstance(inst, NswInstance):
        raise ParseError("pipeline requires an nsw instance file")
    alloc, cert = pipeline(inst, args.epsilon)
    lines = _header(args) + cert.report_lines()
    ratio = None
    if cert.nsw_product > 0:
        ratio = cert.upper_bound_product / cert.nsw_product
        lines.append(f"# ub/nsw product ratio ~ {frac_float12(ratio)}")
    print("\n".join(lines))
    _write_out(args.out, "\n".join(cert.report_lines()) + "\n")
    return 0 if cert.ratio_ok else 4


def _state_from_file(pm, prices, flow, alloc) -> MarketState:
    frozen = {}
    if alloc is not None:
        for i in range(pm.n):
            if any(
                prices[j] == 0 and alloc.entries[i][j] > 0 for j in range(pm.m)
            ):
                frozen[i] = alloc.entries[i]
    return MarketState.derive(
        pm, prices, flow, zero_surplus=range(pm.n), frozen=frozen
    )


def cmd_round(args) -> int:
    inst = parse_instance(_read(args.instance))
    if not isinstance(inst, NswInstance):
        raise ParseError("round requires an nsw instance file")
    capped = cap_valuations(inst)
    market = to_market(capped)
    pm = perturb(market, args.epsilon)
    prices, flow, alloc = parse_state(_read(args.state))
    state = _state_from_file(pm, prices, flow, alloc)
    forest_alloc = flow_to_forest(state)
    norm = normalize(state)
    forest = preprocess(forest_alloc, norm, state)
    assignment, stats = round_forest(forest)
    improve_assignment(assignment, forest)
    for j in range(inst.m):
        if j not in assignment:
            assignment[j] = max(
                range(inst.n), key=lambda i: (capped.values[i][j], -i)
            )
    rows = [[ZERO] * inst.m for _ in range(inst.n)]
    for j, i in assignment.items():
        rows[i][j] = ONE
    rounded = Allocation.from_rows(rows, integral=True)
    product, _ = nsw_value(capped, rounded)
    ub, _ = upper_bound(norm, state)
    checks = check_tree_bounds(stats, assignment, norm, state, forest)
    lines = _header(args)
    lines.append(f"nsw_product {frac_str(product)}")
    lines.append(f"upper_bound_product_normalized {frac_str(ub)}")
    lines.append(f"tree_checks {'pass' if all(c.ok for c in checks) else 'fail'}")
    for j in sorted(assignment):
        lines.append(f"assign {j + 1} {assignment[j] + 1}")
    print("\n".join(lines))
    _write_out(args.out, "\n".join(lines[-inst.m:]) + "\n")
    return 0


def cmd_verify(args) -> int:
    inst = parse_instance(_read(args.instance))
    market = _market_of(inst)
    pm = perturb(market, args.epsilon)
    prices, flow, alloc = parse_state(_read(args.state))
    if alloc is None:
        raise ParseError("state file carries no allocation to verify")
    exact = verify_equilibrium(pm, prices, alloc)
    approx = verify_approx_equilibrium(market, prices, alloc, args.epsilon)
    lines = _header(args)
    lines.append(f"verify_exact {'pass' if exact.ok else 'fail'}")
    lines.extend("  " + v for v in exact.violations)
    lines.append(f"verify_approx {'pass' if approx.ok else 'fail'}")
    lines.extend("  " + v for v in approx.violations)
    print("\n".join(lines))
    return 0 if exact.ok and approx.ok else 4


def cmd_oracle(args) -> int:
    inst = parse_instance(_read(args.instance))
    lines = _header(args)
    if isinstance(inst, NswInstance):
        product, n, best = brute_nsw(inst)
        lines.append(f"opt_product {frac_str(product)}")
        lines.append(f"n {n}")
        for j in range(inst.m):
            owner = best.owner(j)
            lines.append(f"assign {j + 1} {owner + 1}")
    else:
        ok = brute_money_clearing(inst)
        lines.append(f"money_clearing {'true' if ok else 'false'}")
    print("\n".join(lines))
    return 0


def _parse_equations(text: str) -> tuple[tuple[int, int, int, int], ...]:
    eqs = []
    for chunk in text.split(";"):
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 4:
            raise ParseError(f"equation needs 'i,j,k,rhs': {chunk!r}")
        i, j, k, rhs = (int(p) for p in parts)
        eqs.append((i - 1, j - 1, k - 1, rhs))
    return tuple(eqs)


def cmd_gen(args) -> int:
    if args.kind == "random":
        inst = gen_random(args.n, args.m, args.vmax, args.cmax, args.seed)
        text = serialize_nsw(inst)
    elif args.kind == "fixture":
        if not args.fixture:
            raise ParseError("--fixture <prop1|prop2|prop3> required")
        fx = gen_fixture(args.fixture)
        text = serialize_market(fx.market)
    elif args.kind == "e3lin2":
        eqs = _parse_equations(args.eqs) if args.eqs else ((0, 1, 2, 0),)
        nvars = max(max(e[:3]) for e in eqs) + 1
        lin = E3Lin2Instance(num_vars=nvars, equations=eqs)
        text = serialize_nsw(gen_hardness(lin))
    else:
        raise ParseError(f"unknown kind {args.kind!r}")
    sys.stdout.write(text)
    _write_out(args.out, text)
    return 0


def _bench_one(task):
    seed, n, m, vmax, cmax, eps = task
    inst = gen_random(n, m, vmax, cmax, seed)
    alloc, cert = pipeline(inst, eps)
    if cert.opt_zero:
        return (seed, 0, 0, "n/a", "n/a", "opt_zero")
    phases = cert.iterations // (inst.n * inst.n)
    try:
        opt, _, _ = brute_nsw(cap_valuations(inst))
        # geometric-mean ratio OPT/NSW, display only
        ratio = f"{float(opt / cert.nsw_product) ** (1.0 / cert.n):.12g}"
    except EnumerationGuard:
        ratio = "n/a"
    margin = (
        cert.nsw_product
        * Fraction(2404, 1000) ** cert.n
        * (ONE + cert.epsilon_prime) ** (cert.n * cert.n)
        / cert.upper_bound_product
    )
    return (
        seed,
        cert.iterations,
        phases,
        ratio,
        frac_float12(margin),
        "pass" if cert.ratio_ok else "fail",
    )


def cmd_bench(args) -> int:
    seeds = []
    for chunk in args.seeds.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" in chunk:
            lo, hi = chunk.split(":")
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(chunk))
    tasks = [(s, args.n, args.m, args.vmax, args.cmax, args.epsilon) for s in seeds]
    if args.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_bench_one, tasks))
    else:
        results = [_bench_one(t) for t in tasks]
    lines = _header(args)
    lines.append("seed iterations phases opt_over_nsw_product margin ratio_check")
    for row in results:
        lines.append(" ".join(str(c) for c in row))
    print("\n".join(lines))
    _write_out(args.out, "\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capmarket",
        description="Nash social welfare allocation via cap-limited Fisher markets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="write the main artifact here")
        p.add_argument("--no-timestamp", action="store_true")

    p = sub.add_parser("solve", help="compute a perturbed-market equilibrium")
    p.add_argument("instance")
    p.add_argument("--epsilon", type=_rational, required=True)
    p.add_argument("--trace", default=None, help="write the event trace here")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("pipeline", help="full rounding pipeline on an nsw instance")
    p.add_argument("instance")
    p.add_argument("--epsilon", type=_rational, required=True,
                   help="target slack; the solver runs at epsilon/n")
    common(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("round", help="round a solved state to an integral allocation")
    p.add_argument("instance")
    p.add_argument("--state", required=True)
    p.add_argument("--epsilon", type=_rational, required=True,
                   help="perturbation used when the state was solved")
    common(p)
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("verify", help="check a state file against an instance")
    p.add_argument("instance")
    p.add_argument("--state", required=True)
    p.add_argument("--epsilon", type=_rational, required=True)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="brute-force optimum or clearing check")
    p.add_argument("instance")
    common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="generate instances")
    p.add_argument("--kind", choices=("random", "fixture", "e3lin2"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--vmax", type=int, default=8)
    p.add_argument("--cmax", type=int, default=12)
    p.add_argument("--fixture", default=None)
    p.add_argument("--eqs", default=None,
                   help="semicolon-separated 'i,j,k,rhs' with 1-based variables")
    common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="batch pipeline runs over seeds")
    p.add_argument("--seeds", required=True, help="comma list and lo:hi ranges")
    p.add_argument("--epsilon", type=_rational, required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--vmax", type=int, default=8)
    p.add_argument("--cmax", type=int, default=12)
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, EnumerationGuard, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NotMoneyClearing as exc:
        print(f"error: market is not money clearing: {exc}", file=sys.stderr)
        return 3
    except (InvariantError, CapMarketError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
