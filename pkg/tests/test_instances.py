"""Core data model: capping, welfare products, market mapping, perturbation."""
from fractions import Fraction
from itertools import product as iproduct

import pytest
from hypothesis import given, settings, strategies as st

from capmarket import (
    Allocation,
    MarketInstance,
    NswInstance,
    as_frac,
    cap_valuations,
    frac_str,
    nsw_value,
    perturb,
    to_market,
)


def _brute_best_product(inst: NswInstance) -> Fraction:
    """Independent oracle: enumerate every integral assignment."""
    best = Fraction(0)
    for owners in iproduct(range(inst.n), repeat=inst.m):
        prod = Fraction(1)
        for i in range(inst.n):
            total = sum(inst.values[i][j] for j in range(inst.m) if owners[j] == i)
            prod *= min(inst.caps[i], total)
        best = max(best, prod)
    return best


def _one_hot(n, m, owners):
    rows = [[0] * m for _ in range(n)]
    for j, i in enumerate(owners):
        rows[i][j] = 1
    return Allocation.from_rows(rows, integral=True)


class TestRational:
    def test_parse_and_render_round_trip(self):
        for text in ["3/4", "-7/2", "5", "0", "123456789/987654321"]:
            assert frac_str(as_frac(text)) == frac_str(as_frac(frac_str(as_frac(text))))

    def test_lowest_terms(self):
        assert as_frac("6/4") == Fraction(3, 2)

    @given(st.integers(-10**9, 10**9), st.integers(1, 10**9))
    def test_round_trip_property(self, num, den):
        f = Fraction(num, den)
        assert as_frac(frac_str(f)) == f


class TestInstanceValidation:
    def test_rejects_more_agents_than_items(self):
        with pytest.raises(ValueError):
            NswInstance(n=3, m=2, values=((1, 1), (1, 1), (1, 1)), caps=(1, 1, 1))

    def test_rejects_zero_cap(self):
        with pytest.raises(ValueError):
            NswInstance(n=1, m=1, values=((1,),), caps=(0,))

    def test_rejects_negative_value(self):
        with pytest.raises(ValueError):
            NswInstance(n=1, m=2, values=((1, -1),), caps=(1,))

    def test_market_largest_param(self):
        mkt = MarketInstance(
            n=1, m=2, budgets=(3,), utils=((7, 2),), ucaps=(5,), ecaps=(1, 9)
        )
        assert mkt.largest_param == 9


class TestCapValuations:
    def test_clamps_above_cap(self):
        inst = NswInstance(n=1, m=1, values=((5,),), caps=(3,))
        assert cap_valuations(inst).values[0][0] == 3

    def test_keeps_below_cap(self):
        inst = NswInstance(n=1, m=1, values=((2,),), caps=(3,))
        assert cap_valuations(inst).values[0][0] == 2

    def test_idempotent(self):
        inst = NswInstance(
            n=2, m=3, values=((5, 1, 9), (2, 8, 3)), caps=(4, 6)
        )
        once = cap_valuations(inst)
        assert cap_valuations(once) == once

    def test_optimum_unchanged_by_capping(self):
        # brute-force oracle agrees before and after capping on a 2x2 instance
        inst = NswInstance(n=2, m=2, values=((7, 1), (2, 9)), caps=(3, 4))
        assert _brute_best_product(inst) == _brute_best_product(cap_valuations(inst))

    @given(
        st.lists(st.lists(st.integers(0, 9), min_size=2, max_size=2),
                 min_size=2, max_size=2),
        st.lists(st.integers(1, 6), min_size=2, max_size=2),
    )
    @settings(max_examples=60)
    def test_optimum_unchanged_property(self, vals, caps):
        inst = NswInstance.from_lists(vals, caps)
        assert _brute_best_product(inst) == _brute_best_product(cap_valuations(inst))


class TestNswValue:
    def test_single_agent(self):
        inst = NswInstance(n=1, m=1, values=((2,),), caps=(5,))
        prod, n = nsw_value(inst, _one_hot(1, 1, [0]))
        assert (prod, n) == (2, 1)

    def test_zero_value_annihilates(self):
        inst = NswInstance(n=2, m=2, values=((2, 2), (0, 0)), caps=(5, 5))
        prod, _ = nsw_value(inst, _one_hot(2, 2, [0, 1]))
        assert prod == 0

    def test_diagonal_beats_all_assignments(self):
        inst = NswInstance(n=2, m=2, values=((3, 1), (1, 3)), caps=(10, 10))
        prod, n = nsw_value(inst, _one_hot(2, 2, [0, 1]))
        assert (prod, n) == (9, 2)
        assert _brute_best_product(inst) == 9

    def test_rejects_fractional_allocation(self):
        inst = NswInstance(n=1, m=1, values=((2,),), caps=(5,))
        with pytest.raises(ValueError):
            nsw_value(inst, Allocation.from_rows([["1/2"]]))

    @given(st.data())
    @settings(max_examples=40)
    def test_adding_an_item_never_hurts(self, data):
        n, m = 2, 3
        vals = data.draw(
            st.lists(st.lists(st.integers(0, 8), min_size=m, max_size=m),
                     min_size=n, max_size=n)
        )
        caps = data.draw(st.lists(st.integers(1, 9), min_size=n, max_size=n))
        inst = NswInstance.from_lists(vals, caps)
        owners = data.draw(st.lists(st.integers(0, n - 1), min_size=m, max_size=m))
        drop = data.draw(st.integers(0, m - 1))
        full, _ = nsw_value(inst, _one_hot(n, m, owners))
        rows = [[0] * m for _ in range(n)]
        for j, i in enumerate(owners):
            if j != drop:
                rows[i][j] = 1
        partial, _ = nsw_value(inst, Allocation.from_rows(rows, integral=True))
        assert full >= partial


class TestToMarket:
    def test_unit_budgets_and_earning_caps(self):
        inst = NswInstance(n=2, m=3, values=((1, 2, 0), (0, 1, 2)), caps=(3, 3))
        mkt = to_market(inst)
        assert mkt.budgets == (1, 1)
        assert mkt.ecaps == (1, 1, 1)
        assert mkt.utils == inst.values
        assert mkt.ucaps == inst.caps

    def test_rejects_uncapped_instance(self):
        inst = NswInstance(n=1, m=1, values=((5,),), caps=(3,))
        with pytest.raises(ValueError):
            to_market(inst)

    def test_zero_row_is_allowed_here(self):
        # rejection happens downstream at the money-clearing stage
        inst = NswInstance(n=2, m=2, values=((1, 1), (0, 0)), caps=(2, 2))
        assert to_market(inst).utils[1] == (0, 0)


class TestPerturb:
    def test_rounds_three_up_to_four(self):
        mkt = MarketInstance(n=1, m=1, budgets=(1,), utils=((3,),), ucaps=(9,), ecaps=(1,))
        pm = perturb(mkt, 1)
        assert pm.putils[0][0] == 4
        assert pm.exponents[0][0] == 2

    def test_keeps_exact_power(self):
        mkt = MarketInstance(n=1, m=1, budgets=(1,), utils=((4,),), ucaps=(9,), ecaps=(1,))
        pm = perturb(mkt, 1)
        assert pm.putils[0][0] == 4
        assert pm.exponents[0][0] == 2

    def test_unit_utility_forced_up(self):
        # exponents start at 1, so a utility of 1 becomes 1 + eps
        mkt = MarketInstance(n=1, m=1, budgets=(1,), utils=((1,),), ucaps=(9,), ecaps=(1,))
        pm = perturb(mkt, Fraction(1, 2))
        assert pm.putils[0][0] == Fraction(3, 2)
        assert pm.exponents[0][0] == 1

    def test_zero_utility_stays_zero(self):
        mkt = MarketInstance(n=1, m=2, budgets=(1,), utils=((0, 2),), ucaps=(9,), ecaps=(1, 1))
        pm = perturb(mkt, 1)
        assert pm.putils[0][0] == 0

    def test_rejects_nonpositive_epsilon(self):
        mkt = MarketInstance(n=1, m=1, budgets=(1,), utils=((1,),), ucaps=(1,), ecaps=(1,))
        with pytest.raises(ValueError):
            perturb(mkt, 0)

    @given(st.integers(1, 500), st.fractions(min_value="1/10", max_value=3))
    @settings(max_examples=120)
    def test_bracketing_property(self, u, eps):
        if eps <= 0:
            return
        mkt = MarketInstance(n=1, m=1, budgets=(1,), utils=((u,),), ucaps=(u + 1,), ecaps=(1,))
        pm = perturb(mkt, eps)
        pu = pm.putils[0][0]
        assert u <= pu
        if u > 1:
            assert pu / (1 + eps) < u
        assert pu == (1 + eps) ** pm.exponents[0][0]
        assert pm.exponents[0][0] >= 1
        assert pm.umax == pu
