from fractions import Fraction as F

import pytest
from hypothesis import given

from adauction.budget import KeywordQueryGraph
from adauction.instances import budget_instance_from_json
from adauction.landscape import (
    QueryAuction,
    best_distribution_for_budget,
    build_landscape,
    evaluate_distribution,
)
from adauction.oracles import (
    DeviationGrid,
    SizeGuardError,
    brute_budget_opt,
    brute_slot_revenue_max,
    click_utility,
    epsilon_nash_violations,
    gfp_equilibrium_profile,
    truthfulness_audit,
)
from adauction.scheduling import SlotSupply
from adauction.slots import SlotBidder, gfp_multi, make_bidders

from strategies import fixture, slot_instances

WITNESS = make_bidders([("1", 2, 100), ("2", 1, 50)])
ONE_SLOT = make_bidders([("1", 2, 100), ("2", 1, 50), ("3", "0.25", 80)])


class TestGrid:
    def test_default_levels(self):
        g = DeviationGrid()
        assert len(g.multipliers) == 8 and 1 in g.multipliers

    def test_needs_truth(self):
        with pytest.raises(ValueError):
            DeviationGrid(multipliers=(0, 2))

    def test_candidates(self):
        g = DeviationGrid(multipliers=(0, 1), iota=F(1, 10))
        assert g.candidates(F(2), [F(1)]) == [0, F(9, 10), 1, F(11, 10), 2]

    def test_candidates_drop_negatives(self):
        g = DeviationGrid(multipliers=(1,), iota=1)
        assert g.candidates(F(3), [F(1, 2)]) == [F(1, 2), F(3, 2), 3]


class TestClickUtility:
    def test_cases(self):
        assert click_utility(F(10), F(1), F(2), F(10)) == 10
        assert click_utility(F(10), F(3), F(2), F(100)) == float("-inf")
        assert click_utility(F(10), F(2), F(2), F(19)) == float("-inf")
        assert click_utility(F(10), F(5), None, F(50)) == 10
        assert click_utility(F(0), F(9), F(1), F(0)) == 0


class TestSlotRevenueOracle:
    def test_first_price_witness(self):
        assert brute_slot_revenue_max(WITNESS, [120]) == 150

    def test_zero_budgets(self):
        assert brute_slot_revenue_max(make_bidders([("a", 1, 0), ("b", 2, 0)]), [10, 5]) == 0

    def test_four_bidder_blocks_rich_bids(self):
        bidders = make_bidders([("1", 10, 80), ("2", 10, 70), ("3", 10, 20), ("4", 10, 1)])
        assert brute_slot_revenue_max(bidders, [100, 50, 25, 0]) == 171

    def test_no_bidders(self):
        assert brute_slot_revenue_max([], [10]) == 0

    def test_size_guard(self):
        with pytest.raises(SizeGuardError):
            brute_slot_revenue_max(make_bidders([(str(i), 1, 1) for i in range(5)]), [5, 4, 3, 2, 1])

    @given(slot_instances())
    def test_gfp_hits_the_maximum(self, inst):
        bidders, sup = inst
        assert gfp_multi(bidders, sup).revenue == brute_slot_revenue_max(bidders, sup)


class TestBudgetOracle:
    def test_small_example(self):
        graph, _ = budget_instance_from_json(fixture("shared_query"))
        assert brute_budget_opt(graph, 10) == 2
        assert brute_budget_opt(graph, 0) == 0

    def test_single_query_matches_landscape(self):
        land = build_landscape(QueryAuction(["0.5", "0.45", "0.25", "0.2"], ["2.60", "2.00", "1.60", "0.50"]))
        graph = KeywordQueryGraph(["k"], {"q": land}, [("k", "q")])
        for budget in (F(1, 20), F(1, 2), 1, 2):
            want = evaluate_distribution(land, best_distribution_for_budget(land, budget))[1]
            assert brute_budget_opt(graph, budget) == want

    def test_size_guards(self):
        land = build_landscape(QueryAuction([1], [1]))
        kws = [f"k{i}" for i in range(5)]
        graph = KeywordQueryGraph(kws, {"q": land}, [(k, "q") for k in kws])
        with pytest.raises(SizeGuardError):
            brute_budget_opt(graph, 1)
        small = KeywordQueryGraph(["k"], {"q": land}, [("k", "q")])
        with pytest.raises(SizeGuardError):
            brute_budget_opt(small, 1, bid_grid=range(9))


class TestAudit:
    def test_ps_single_one_slot_split_clean(self):
        assert truthfulness_audit("ps_single", ONE_SLOT, [300]) == []

    def test_gfp_first_price_witness_witness(self):
        found = truthfulness_audit("gfp_single", WITNESS, [120])
        hits = [d for d in found if d.bidder == "1" and d.declared_bid == F(101, 100)]
        assert hits
        assert max(d.clicks for d in hits) >= 99
        assert all(d.truthful_utility == 50 for d in hits)

    @pytest.mark.parametrize("name", ["ps_single", "ps_multi_budgets_only", "ps_general"])
    def test_lone_bidder_cannot_gain(self, name):
        assert truthfulness_audit(name, [SlotBidder("a", 2, 30)], [40]) == []

    @pytest.mark.parametrize("name", ["gfp_single", "gfp_multi"])
    def test_lone_bidder_shades_under_first_price(self, name):
        found = truthfulness_audit(name, [SlotBidder("a", 2, 30)], [40])
        assert max(d.clicks for d in found) == 40
        assert all(d.price < 2 for d in found)

    def test_lone_markov_bidder(self):
        from adauction.markov import MarkovBidder
        assert truthfulness_audit("markov_vcg", [MarkovBidder("a", 1, F(1, 2), 3)], k=2) == []

    def test_argument_errors(self):
        with pytest.raises(ValueError):
            truthfulness_audit("nope", WITNESS, [10])
        with pytest.raises(ValueError):
            truthfulness_audit("markov_vcg", [])

    def test_true_values_separate_from_declarations(self):
        # declaring above the true max-cpc: the truthful point is the better one
        declared = [SlotBidder("1", 3, 100, 0), WITNESS[1]]
        truth = {"1": (F(2), F(100)), "2": (F(1), F(50))}
        found = truthfulness_audit("gfp_single", declared, [120], truth)
        assert any(d.bidder == "1" for d in found)

    def test_deterministic(self):
        a = truthfulness_audit("gfp_single", WITNESS, [120])
        b = truthfulness_audit("gfp_single", WITNESS, [120])
        assert a == b


class TestEquilibrium:
    def test_profile_one_slot_split(self):
        iota = F(1, 10**6)
        profile, ps = gfp_equilibrium_profile(ONE_SLOT, [300], iota)
        assert [b.bid for b in profile] == [F(1, 2) + iota, F(1, 2) + iota, F("0.25")]
        out = gfp_multi(profile, [300])
        for b in ONE_SLOT:
            assert abs(out.clicks[b.id] - ps.clicks[b.id]) < F(1, 1000)

    def test_profile_threshold_bids_price(self):
        bidders = make_bidders([("1", 2, 100), ("2", "0.40", 50), ("3", "0.25", 80)])
        profile, _ = gfp_equilibrium_profile(bidders, [300])
        assert profile[1].bid == F(2, 5)

    def test_one_slot_split_no_violation(self):
        bad, ps, at = epsilon_nash_violations(ONE_SLOT, [300], F(1))
        assert bad == []
