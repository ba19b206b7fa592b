"""Acceptance criteria, one test per criterion, with a pass line printed each.

The corpus is 500 deterministic money-clearing instances (n <= 5, m <= 7,
values <= 8). Criterion runtimes are minutes in total; everything is checked
in exact rational arithmetic unless explicitly logged-only.
"""
import math
import random
import time
from fractions import Fraction

import pytest

from capmarket import (
    MarketInstance,
    brute_money_clearing,
    brute_nsw,
    cap_valuations,
    gen_fixture,
    gen_hardness,
    gen_random,
    lp_oracle,
    money_clearing,
    nsw_value,
    parse_state,
    perturb,
    pipeline,
    run_fptas,
    serialize_market,
    to_market,
    verify_approx_equilibrium,
    verify_equilibrium,
)
from capmarket.cli import main as cli_main
from capmarket.gen import E3Lin2Instance
from capmarket.instances import ONE
from capmarket.rounding import RATIO_BOUND

CORPUS_SIZE = 500
EPS_CYCLE = (Fraction(1), Fraction(1, 2), Fraction(1, 4))


def _print_result(criterion: str, ok: bool, detail: str = ""):
    tail = f" ({detail})" if detail else ""
    print(f"acceptance {criterion}: {'PASS' if ok else 'FAIL'}{tail}")


@pytest.fixture(scope="session")
def corpus():
    rng = random.Random(20260810)
    out = []
    attempt = 0
    while len(out) < CORPUS_SIZE:
        n = rng.randint(2, 5)
        m = rng.randint(n, 7)
        inst = gen_random(n, m, 8, 12, 90_000 + attempt)
        attempt += 1
        if money_clearing(to_market(cap_valuations(inst))):
            out.append(inst)
    return out


@pytest.fixture(scope="session")
def solve_results(corpus):
    """run_fptas on every corpus instance with eps cycling {1, 1/2, 1/4};
    the first runs also capture their LP subsystems for criterion 7."""
    results = []
    lp_log: list = []
    for idx, inst in enumerate(corpus):
        eps = EPS_CYCLE[idx % 3]
        market = to_market(cap_valuations(inst))
        pm = perturb(market, eps)
        log = lp_log if len(lp_log) < 1500 else None
        state, alloc = run_fptas(pm, lp_log=log)
        results.append((inst, market, pm, eps, state, alloc))
    return results, lp_log


@pytest.fixture(scope="session")
def brute_optima(corpus):
    return {
        id(inst): brute_nsw(cap_valuations(inst)) for inst in corpus
    }


@pytest.fixture(scope="session")
def pipeline_results(corpus):
    out = []
    for inst in corpus:
        alloc, cert = pipeline(inst, Fraction(1, 4))
        out.append((inst, alloc, cert))
    return out


def test_criterion_1_fixture_exactness(tmp_path, capsys):
    t0 = time.time()
    # prop1: the unique equilibrium (price 2, allocation 1/2), exactly
    fx1 = gen_fixture("prop1")
    f1 = tmp_path / "prop1.market"
    f1.write_text(serialize_market(fx1.market))
    s1 = tmp_path / "prop1.state"
    code = cli_main(
        ["solve", str(f1), "--epsilon", "1", "--out", str(s1), "--no-timestamp"]
    )
    assert code == 0
    prices, flow, alloc = parse_state(s1.read_text())
    assert prices == [2]
    assert alloc.entries[0][0] == Fraction(1, 2)

    # prop3: unique equilibrium prices (20, 20)
    fx3 = gen_fixture("prop3")
    f3 = tmp_path / "prop3.market"
    f3.write_text(serialize_market(fx3.market))
    s3 = tmp_path / "prop3.state"
    code = cli_main(
        ["solve", str(f3), "--epsilon", "9", "--out", str(s3), "--no-timestamp"]
    )
    assert code == 0
    prices, _, _ = parse_state(s3.read_text())
    assert prices == [20, 20]

    # prop2: output in one of the two published families; the midpoint of the
    # Pareto-optimal pair fails verification (the equilibrium set is not convex)
    fx2 = gen_fixture("prop2")
    pm2 = perturb(fx2.market, fx2.solve_epsilon)
    state2, alloc2 = run_fptas(pm2)
    assert fx2.in_published_family(state2.prices)
    assert verify_equilibrium(pm2, state2.prices, alloc2).ok
    midpoint = [Fraction(3), Fraction(28)]
    assert not verify_equilibrium(pm2, midpoint, alloc2).ok
    assert not verify_approx_equilibrium(fx2.market, midpoint, alloc2, 0).ok

    elapsed = time.time() - t0
    assert elapsed < 1.0
    capsys.readouterr()
    _print_result("1 fixture-exactness", True, f"{elapsed:.2f}s")


def test_criterion_2_equilibrium_verifier_gate(solve_results, capsys):
    results, _ = solve_results
    assert len(results) >= 500
    for inst, market, pm, eps, state, alloc in results:
        exact = verify_equilibrium(pm, state.prices, alloc)
        assert exact.ok, exact.violations
        approx = verify_approx_equilibrium(market, state.prices, alloc, eps)
        assert approx.ok, approx.violations
    capsys.readouterr()
    _print_result("2 equilibrium-verifier-gate", True, f"{len(results)} instances")


def test_criterion_3_approximation_ratio(pipeline_results, brute_optima, capsys):
    ratios = []
    for inst, alloc, cert in pipeline_results:
        opt, n, _ = brute_optima[id(inst)]
        lhs = (
            cert.nsw_product * RATIO_BOUND ** n
            * (ONE + cert.epsilon_prime) ** (n * n)
        )
        assert lhs >= opt
        assert cert.ratio_ok
        if cert.opt_zero:
            assert opt == 0
            continue
        got, _ = nsw_value(cap_valuations(inst), alloc)
        assert got == cert.nsw_product
        if got > 0:
            ratios.append(float(opt / got) ** (1.0 / n))
    capsys.readouterr()
    worst = max(ratios)
    mean = sum(ratios) / len(ratios)
    # logged, not asserted: observed ratios sit far below the 2.404 guarantee
    _print_result(
        "3 approximation-ratio",
        True,
        f"{len(ratios)} instances, OPT/NSW worst {worst:.4f} mean {mean:.4f}",
    )


def test_criterion_4_upper_bound_theorem(pipeline_results, brute_optima, capsys):
    checked = 0
    for inst, alloc, cert in pipeline_results:
        if cert.opt_zero:
            continue
        opt, n, _ = brute_optima[id(inst)]
        assert opt <= cert.upper_bound_product
        checked += 1
    capsys.readouterr()
    _print_result("4 upper-bound-theorem", True, f"{checked} instances")


def _runs_of(trace):
    """Split a trace into inner-loop runs: same buyer, contiguous prices."""
    runs = []
    current = []
    for rec in trace:
        if current and (
            rec.buyer != current[-1].buyer or rec.prices_before != current[-1].prices
        ):
            runs.append(current)
            current = []
        current.append(rec)
    if current:
        runs.append(current)
    return runs


def _window_rich_traces():
    """Instances whose single-buyer descents run past n*n iterations, so the
    phase-progress property is exercised on complete windows; the corpus's
    unit-budget markets converge too fast to produce them."""
    from capmarket import NswInstance

    shapes = [
        (((2, 2, 2, 2, 8, 8, 3), (9, 0, 11, 12, 6, 2, 0)), (24, 12)),
        (((64, 32, 16, 8, 4, 2, 1), (63, 33, 17, 9, 5, 3, 2)), (300, 9)),
        (((100, 90, 80, 70, 60, 50, 40), (99, 89, 79, 69, 59, 49, 39)), (600, 25)),
    ]
    out = []
    for vals, caps in shapes:
        inst = NswInstance.from_lists(vals, caps)
        market = to_market(cap_valuations(inst))
        for eps in (Fraction(1, 16), Fraction(1, 32)):
            pm = perturb(market, eps)
            state, alloc = run_fptas(pm)
            assert verify_equilibrium(pm, state.prices, alloc).ok
            out.append((market, pm, eps, state))
    return out


def test_criterion_5_inner_loop_lemmas(solve_results, capsys):
    results, _ = solve_results
    traces = [
        (market, pm, eps, state)
        for inst, market, pm, eps, state, alloc in results
    ]
    traces.extend(_window_rich_traces())
    total_windows = 0
    flagged = 0
    for market, pm, eps, state in traces:
        n = pm.n
        for rec in state.trace:
            assert rec.alpha_after > rec.alpha_before  # strict progress
        window = n * n
        for run in _runs_of(state.trace):
            for s in range(len(run) - window + 1):
                start = run[s].prices_before
                end = run[s + window - 1].prices
                total_windows += 1
                assert any(
                    e * (ONE + eps) <= b for b, e in zip(start, end) if b > 0
                ), "no good lost a (1+eps) factor within a window"
        # iteration budget: logged against 4 n^3 log_(1+eps)(n U^n sum m)
        budget_arg = float(pm.n * pm.umax ** pm.n * sum(market.budgets))
        budget = 4 * n**3 * math.log(budget_arg) / math.log(1 + float(eps))
        if len(state.trace) > budget:
            flagged += 1
    capsys.readouterr()
    _print_result(
        "5 inner-loop-lemmas",
        True,
        f"{total_windows} complete windows, {flagged} runs above the logged budget",
    )


def test_criterion_6_rounding_lemmas(pipeline_results, capsys):
    trees = 0
    for inst, alloc, cert in pipeline_results:
        assert cert.retention_problems == []
        assert cert.half_problems == []
        for check in cert.tree_checks:
            assert check.ok, (
                f"tree product {check.lhs} below bound {check.rhs}"
            )
            trees += 1
    capsys.readouterr()
    _print_result("6 rounding-lemmas", True, f"{trees} trees checked exactly")


def test_criterion_7_oracle_agreement(solve_results, capsys):
    rng = random.Random(1234)
    for _ in range(1000):
        mkt = MarketInstance(
            n=6,
            m=6,
            budgets=tuple(rng.randint(1, 9) for _ in range(6)),
            utils=tuple(
                tuple(rng.randint(0, 1) * rng.randint(1, 8) for _ in range(6))
                for _ in range(6)
            ),
            ucaps=tuple(rng.randint(1, 9) for _ in range(6)),
            ecaps=tuple(rng.randint(1, 9) for _ in range(6)),
        )
        assert money_clearing(mkt) == brute_money_clearing(mkt)

    _, lp_log = solve_results
    from capmarket.oracle import oracle_cost

    compared = 0
    for tag, system, result in lp_log:
        if tag not in ("min_factor", "feasible_flow"):
            continue
        if system.num_vars > 12 or oracle_cost(system) > 1500:
            continue
        if compared >= 220:
            break
        status, best = lp_oracle(system)
        assert status == result.status
        if status == "optimal":
            assert best == result.objective
        compared += 1
    assert compared >= 200
    capsys.readouterr()
    _print_result(
        "7 oracle-agreement", True, f"1000 markets, {compared} LP subsystems"
    )


def test_criterion_8_hardness_gadget_shape(capsys):
    lin = E3Lin2Instance(num_vars=3, equations=((0, 1, 2, 1),))
    inst = gen_hardness(lin)
    assert inst.n == 6
    assert inst.m == 15
    assert inst.caps == (4,) * 6
    for j in range(3, 15):
        owners = [i for i in range(6) if inst.values[i][j] > 0]
        assert len(owners) == 3
        assert all(inst.values[i][j] == 1 for i in owners)
    for v in range(3):
        owners = [i for i in range(6) if inst.values[i][v] > 0]
        assert owners == [2 * v, 2 * v + 1]
        assert all(inst.values[i][v] == 4 for i in owners)
    capsys.readouterr()
    _print_result("8 hardness-gadget-shape", True)
