import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from adauction.budget import (
    E_UPPER,
    KeywordQueryGraph,
    aggregate_landscape,
    best_uniform_single_bid,
    best_uniform_two_bid,
    daily_adjustment_step,
    effective_bid,
    evaluate_uniform,
    per_query_knapsack_opt,
    single_bid_bound_holds,
    spend_traffic,
    two_bid_bound_holds,
)
from adauction.instances import budget_instance_from_json, random_budget_instance
from adauction.landscape import QueryAuction, build_landscape, check_landscape, evaluate_distribution
from adauction.oracles import SizeGuardError, brute_budget_opt, brute_query_opt

from strategies import auctions, fixture, landscapes

FOUR_POSITION = build_landscape(QueryAuction(["0.5", "0.45", "0.25", "0.2"], ["2.60", "2.00", "1.60", "0.50"]))
EPS = F(1, 100)


def small_example():
    graph, _ = budget_instance_from_json(fixture("shared_query"))
    return graph


def one_query(land=FOUR_POSITION):
    return KeywordQueryGraph(["k"], {"q": land}, [("k", "q")])


class TestGraph:
    def test_unknown_edge_endpoint(self):
        with pytest.raises(ValueError):
            KeywordQueryGraph(["k"], {"q": FOUR_POSITION}, [("k", "zz")])
        with pytest.raises(ValueError):
            KeywordQueryGraph(["k"], {"q": FOUR_POSITION}, [("zz", "q")])

    def test_neighbors_and_reach(self):
        g = KeywordQueryGraph(["u"], {"x": FOUR_POSITION, "y": FOUR_POSITION}, [("u", "x")])
        assert g.neighbors("x") == ["u"]
        assert g.neighbors("y") == []
        assert g.reachable_queries() == ["x"]


class TestEffectiveBid:
    def test_max_over_neighbors(self):
        g = small_example()
        v = {"u": 1, "v": 0}
        assert effective_bid(g, v, "x") == 1
        assert effective_bid(g, v, "y") == 1

    def test_zero_vector(self):
        g = small_example()
        assert all(effective_bid(g, {"u": 0, "v": 0}, q) == 0 for q in g.queries)

    def test_cheap_keyword_only(self):
        g = small_example()
        v = {"u": 0, "v": EPS}
        assert (effective_bid(g, v, "x"), effective_bid(g, v, "y")) == (0, EPS)

    def test_unknown_query(self):
        with pytest.raises(KeyError):
            effective_bid(small_example(), {"u": 0, "v": 0}, "zz")


class TestSpendTraffic:
    def test_small_example_full_bid(self):
        assert spend_traffic(small_example(), {"u": 1, "v": 0}) == (2, 2)

    def test_small_example_bargain(self):
        # only v bids: the y click comes at the bottom price
        assert spend_traffic(small_example(), {"u": 0, "v": EPS}) == (EPS, 1)

    def test_zero(self):
        assert spend_traffic(small_example(), {"u": 0, "v": 0}) == (0, 0)

    def test_four_position_alone(self):
        assert spend_traffic(one_query(), {"k": F("2.10")}) == (F(9, 10), F(9, 20))

    def test_vector_must_cover_keywords(self):
        with pytest.raises(ValueError):
            spend_traffic(small_example(), {"u": 1})
        with pytest.raises(ValueError):
            spend_traffic(small_example(), {"u": -1, "v": 0})


class TestKnapsack:
    def test_single_query_matches_hull(self):
        res = per_query_knapsack_opt([FOUR_POSITION], 1)
        assert (res.traffic, res.spend) == (F(37, 80), 1)
        assert res.distributions["0"].atoms == ((2, F(3, 4)), (F(13, 5), F(1, 4)))

    def test_unconstrained(self):
        res = per_query_knapsack_opt({"a": FOUR_POSITION, "b": FOUR_POSITION}, 10)
        assert res.traffic == 1 and res.spend == F(13, 5)

    def test_two_copies_small_budget(self):
        res = per_query_knapsack_opt([FOUR_POSITION, FOUR_POSITION], F("0.20"))
        assert (res.traffic, res.spend) == (F(2, 5), F(1, 5))

    def test_distributions_realize_the_value(self):
        lands = {"a": FOUR_POSITION, "b": build_landscape(QueryAuction([1, F(1, 2)], [3, 1]))}
        res = per_query_knapsack_opt(lands, F(3, 2))
        spent = sum(evaluate_distribution(lands[q], d)[0] for q, d in res.distributions.items())
        got = sum(evaluate_distribution(lands[q], d)[1] for q, d in res.distributions.items())
        assert (spent, got) == (res.spend, res.traffic)

    def test_negative_budget(self):
        with pytest.raises(ValueError):
            per_query_knapsack_opt([FOUR_POSITION], -1)

    @given(st.lists(auctions(max_positions=3), min_size=1, max_size=3), st.integers(0, 300))
    def test_matches_vertex_oracle(self, auctions_, cents):
        lands = [build_landscape(a) for a in auctions_]
        budget = F(cents, 100)
        res = per_query_knapsack_opt(lands, budget)
        assert res.spend <= budget
        assert res.traffic == brute_query_opt(lands, budget)

    def test_oracle_size_guard(self):
        with pytest.raises(SizeGuardError):
            brute_query_opt([FOUR_POSITION] * 4, 1)


class TestAggregate:
    def test_identity(self):
        assert aggregate_landscape([FOUR_POSITION]) == FOUR_POSITION

    def test_doubled(self):
        agg = aggregate_landscape([FOUR_POSITION, FOUR_POSITION])
        assert [(p.cost, p.clicks) for p in agg.points] == [(2 * p.cost, 2 * p.clicks) for p in FOUR_POSITION.points]
        assert agg.thresholds == FOUR_POSITION.thresholds

    def test_with_one_point_landscape(self):
        agg = aggregate_landscape([FOUR_POSITION, build_landscape(QueryAuction([1], [1]))])
        assert agg.evaluate("1.60") == (F(7, 5), F(5, 4))
        check_landscape(agg)

    @given(st.lists(landscapes, min_size=1, max_size=4), st.integers(0, 50))
    def test_pointwise_sum(self, lands, tenths):
        agg = aggregate_landscape(lands)
        check_landscape(agg)
        bid = F(tenths, 10)
        assert agg.evaluate(bid) == (
            sum(l.evaluate(bid)[0] for l in lands),
            sum(l.evaluate(bid)[1] for l in lands),
        )


class TestUniform:
    def test_two_bid_four_position(self):
        s = best_uniform_two_bid(one_query(), 1)
        assert s.atoms == ((2, F(3, 4)), (F(13, 5), F(1, 4)))
        assert (s.spend, s.traffic) == (1, F(37, 80))

    def test_zero_budget(self):
        assert best_uniform_two_bid(one_query(), 0).atoms == ((0, 1),)
        assert best_uniform_single_bid(one_query(), 0).traffic == 0

    def test_single_bid_four_position(self):
        # point mass at [2.00, 2.60) beats mixing zero with 2.60
        s = best_uniform_single_bid(one_query(), 1)
        assert s.atoms == ((2, 1),)
        assert (s.spend, s.traffic) == (F(9, 10), F(9, 20))
        assert F(10, 13) * F(1, 2) < s.traffic

    def test_single_bid_mix_branch(self):
        s = best_uniform_single_bid(one_query(), F(1, 20))
        assert s.atoms == ((0, F(1, 2)), (F(1, 2), F(1, 2)))
        assert (s.spend, s.traffic) == (F(1, 20), F(1, 10))

    def test_single_bid_above_max(self):
        s = best_uniform_single_bid(one_query(), 9)
        assert s.atoms == ((F(13, 5), 1),)

    def test_strategies_evaluate_on_the_graph(self):
        g = small_example()
        for B in (0, F(1, 2), 1, F(3, 2), 2, 3):
            for pick in (best_uniform_two_bid, best_uniform_single_bid):
                s = pick(g, B)
                assert evaluate_uniform(g, s.atoms) == (s.spend, s.traffic)
                assert s.spend <= B

    def test_unreachable_queries_ignored(self):
        big = build_landscape(QueryAuction([1], [F(1, 10)]))
        g = KeywordQueryGraph(["k"], {"q": FOUR_POSITION, "lonely": big}, [("k", "q")])
        assert best_uniform_two_bid(g, 1) == best_uniform_two_bid(one_query(), 1)

    def test_small_example(self):
        g = small_example()
        s = best_uniform_two_bid(g, 2)
        assert s.traffic == 2
        assert brute_budget_opt(g, 2) == 2


def _random_graph(seed):
    rng = random.Random(seed)
    doc = random_budget_instance(rng, rng.randint(1, 4), rng.randint(1, 3), 3)
    graph, budget = budget_instance_from_json(doc)
    return rng, graph, budget


class TestBounds:
    def test_e_upper_is_an_upper_bound(self):
        # partial sums of 1/n! approach e from below; the tail after n=25 is < 1e-25
        from math import factorial
        partial = sum(F(1, factorial(n)) for n in range(26))
        assert partial < E_UPPER
        assert E_UPPER - partial < F(1, 10**20)

    def test_bound_helpers(self):
        assert two_bid_bound_holds(F(633, 1000), 1)
        assert not two_bid_bound_holds(F(632, 1000), 1)
        assert single_bid_bound_holds(F(1, 2), 1) and not single_bid_bound_holds(F(49, 100), 1)

    @pytest.mark.parametrize("seed", range(40))
    def test_random_instances(self, seed):
        rng, g, budget = _random_graph(seed)
        opt = per_query_knapsack_opt(g.landscapes, budget).traffic
        two = best_uniform_two_bid(g, budget).traffic
        single = best_uniform_single_bid(g, budget).traffic
        assert single <= two <= opt
        assert two_bid_bound_holds(two, opt)
        assert single_bid_bound_holds(single, opt)
        if len(g.keywords) <= 3:
            brute = brute_budget_opt(g, budget, max_levels=16)
            assert two <= brute <= opt

    @pytest.mark.parametrize("seed", range(20))
    def test_uniform_ignores_wiring(self, seed):
        rng, g, budget = _random_graph(seed)
        edges = [(rng.choice(g.keywords), q) for q in g.queries]
        edges += [(k, q) for k in g.keywords for q in g.queries if rng.random() < 0.3]
        h = g.rewired(edges)
        assert best_uniform_two_bid(h, budget) == best_uniform_two_bid(g, budget)
        assert best_uniform_single_bid(h, budget) == best_uniform_single_bid(g, budget)


class TestDailyAdjustment:
    def test_fixed_point(self):
        assert daily_adjustment_step(1, 5, 5) == 1

    def test_underspent(self):
        assert daily_adjustment_step(1, 3, 5) == F(11, 10)

    def test_overspent(self):
        assert daily_adjustment_step(F(11, 10), 7, 5) == 1

    def test_custom_delta(self):
        assert daily_adjustment_step(2, 0, 1, F(1, 2)) == 3

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            daily_adjustment_step(1, 1, 1, 0)
        with pytest.raises(ValueError):
            daily_adjustment_step(-1, 1, 1)
