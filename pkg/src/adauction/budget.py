"""Budget optimization for an advertiser bidding across many queries.

Keywords map onto queries through a bipartite graph; the bid that enters a
query auction is the largest bid among the keywords matching it.  The
optimizers here pick uniform strategies (the same bid on every keyword,
possibly randomized over two levels) and compare them against the
fractional-knapsack optimum of bidding on each query independently.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .landscape import (
    BidDistribution,
    Landscape,
    LandscapePoint,
    best_distribution_for_budget,
    convex_hull,
    evaluate_distribution,
)
from .rational import ONE, ZERO, Number, frac

__all__ = [
    "KeywordQueryGraph",
    "UniformStrategy",
    "KnapsackResult",
    "effective_bid",
    "spend_traffic",
    "per_query_knapsack_opt",
    "aggregate_landscape",
    "best_uniform_two_bid",
    "best_uniform_single_bid",
    "evaluate_uniform",
    "daily_adjustment_step",
    "E_UPPER",
    "two_bid_bound_holds",
    "single_bid_bound_holds",
]

# e = 2.71828182845904523536028..., so this is a rational upper bound on e
# and 1 - 1/E_UPPER is an upper bound on 1 - 1/e.  Checking against it can
# only be stricter than the true bound.
E_UPPER = Fraction("2.718281828459045235361")


@dataclass(frozen=True)
class KeywordQueryGraph:
    keywords: tuple[str, ...]
    landscapes: Mapping[str, Landscape]
    edges: frozenset[tuple[str, str]]

    def __init__(
        self,
        keywords: Iterable[str],
        landscapes: Mapping[str, Landscape],
        edges: Iterable[tuple[str, str]],
    ):
        kws = tuple(keywords)
        if len(set(kws)) != len(kws):
            raise ValueError("duplicate keyword")
        ls = dict(landscapes)
        es = frozenset((k, q) for k, q in edges)
        for k, q in es:
            if k not in kws:
                raise ValueError(f"edge ({k}, {q}) names unknown keyword {k!r}")
            if q not in ls:
                raise ValueError(f"edge ({k}, {q}) names unknown query {q!r}")
        object.__setattr__(self, "keywords", kws)
        object.__setattr__(self, "landscapes", ls)
        object.__setattr__(self, "edges", es)

    @property
    def queries(self) -> tuple[str, ...]:
        return tuple(self.landscapes)

    def neighbors(self, query: str) -> list[str]:
        return [k for k in self.keywords if (k, query) in self.edges]

    def reachable_queries(self) -> list[str]:
        """Queries matched by at least one keyword, in insertion order."""
        hit = {q for _, q in self.edges}
        return [q for q in self.landscapes if q in hit]

    def rewired(self, edges: Iterable[tuple[str, str]]) -> "KeywordQueryGraph":
        return KeywordQueryGraph(self.keywords, self.landscapes, edges)


@dataclass(frozen=True)
class UniformStrategy:
    """One or two bid levels applied to every keyword at once."""

    atoms: tuple[tuple[Fraction, Fraction], ...]
    spend: Fraction
    traffic: Fraction

    @property
    def distribution(self) -> BidDistribution:
        return BidDistribution(self.atoms)


@dataclass(frozen=True)
class KnapsackResult:
    traffic: Fraction
    spend: Fraction
    distributions: dict[str, BidDistribution] = field(default_factory=dict)


def effective_bid(graph: KeywordQueryGraph, v: Mapping[str, Number], query: str) -> Fraction:
    if query not in graph.landscapes:
        raise KeyError(f"unknown query {query!r}")
    bids = [frac(v[k]) for k in graph.neighbors(query)]
    return max(bids, default=ZERO)


def spend_traffic(graph: KeywordQueryGraph, v: Mapping[str, Number]) -> tuple[Fraction, Fraction]:
    missing = set(graph.keywords) - set(v)
    if missing:
        raise ValueError(f"bid vector misses keywords {sorted(missing)}")
    for k, b in v.items():
        if frac(b) < 0:
            raise ValueError(f"negative bid on {k!r}")
    spend = traffic = ZERO
    for q, land in graph.landscapes.items():
        c, k = land.evaluate(effective_bid(graph, v, q))
        spend += c
        traffic += k
    return spend, traffic


def evaluate_uniform(graph: KeywordQueryGraph, atoms: Iterable[tuple[Number, Number]]) -> tuple[Fraction, Fraction]:
    """Expected (spend, traffic) of bidding each level on all keywords."""
    spend = traffic = ZERO
    for bid, w in atoms:
        s, t = spend_traffic(graph, {k: bid for k in graph.keywords})
        spend += frac(w) * s
        traffic += frac(w) * t
    return spend, traffic


def per_query_knapsack_opt(
    landscapes: Sequence[Landscape] | Mapping[str, Landscape], budget: Number
) -> KnapsackResult:
    """Most traffic obtainable by bidding on each query separately.

    Every hull segment becomes a fractional-knapsack item; items are taken
    cheapest cost-per-click first (ties: more clicks first, then input
    order) and the last one is split.  Per query this takes a prefix of
    the hull, so the result maps back to a two-bid mix per query.
    """
    budget = frac(budget)
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if isinstance(landscapes, Mapping):
        named = list(landscapes.items())
    else:
        named = [(str(i), land) for i, land in enumerate(landscapes)]

    hulls = [convex_hull(land).points for _, land in named]
    items = []
    for qi, hull in enumerate(hulls):
        for s, (lo, hi) in enumerate(zip(hull, hull[1:])):
            d_clicks, d_cost = hi.clicks - lo.clicks, hi.cost - lo.cost
            items.append((d_cost / d_clicks, -d_clicks, qi, s, d_cost, d_clicks))
    items.sort(key=lambda it: it[:4])

    # progress[qi] = (segments fully taken, fraction of the next one)
    progress = [(0, ZERO) for _ in hulls]
    left = budget
    spend = traffic = ZERO
    for _, _, qi, s, d_cost, d_clicks in items:
        if left <= 0:
            break
        if d_cost <= left:
            progress[qi] = (s + 1, ZERO)
            left -= d_cost
            spend += d_cost
            traffic += d_clicks
        else:
            t = left / d_cost
            progress[qi] = (s, t)
            spend += left
            traffic += t * d_clicks
            left = ZERO

    dists = {}
    for (name, _), hull, (s, t) in zip(named, hulls, progress):
        if t == 0:
            dists[name] = BidDistribution.point_mass(hull[s].bid_low)
        else:
            dists[name] = BidDistribution.mix(hull[s].bid_low, hull[s + 1].bid_low, t)
    return KnapsackResult(traffic, spend, dists)


def aggregate_landscape(landscapes: Sequence[Landscape]) -> Landscape:
    """Landscape of bidding the same amount on every query at once."""
    if not landscapes:
        raise ValueError("need at least one landscape")
    thresholds = sorted({t for land in landscapes for t in land.thresholds})
    pts: list[LandscapePoint] = []
    for i, t in enumerate(thresholds):
        upper = thresholds[i + 1] if i + 1 < len(thresholds) else None
        cost = sum((land.evaluate(t)[0] for land in landscapes), ZERO)
        clicks = sum((land.evaluate(t)[1] for land in landscapes), ZERO)
        if pts and (pts[-1].cost, pts[-1].clicks) == (cost, clicks):
            prev = pts[-1]
            pts[-1] = LandscapePoint(cost, clicks, prev.bid_low, upper)
        else:
            pts.append(LandscapePoint(cost, clicks, t, upper))
    return Landscape(tuple(pts))


def _uniform_landscape(graph: KeywordQueryGraph) -> Landscape:
    # Queries no keyword matches never see a bid, uniform or not.
    reach = graph.reachable_queries()
    if not reach:
        return Landscape((LandscapePoint(ZERO, ZERO, ZERO, None),))
    return aggregate_landscape([graph.landscapes[q] for q in reach])


def best_uniform_two_bid(graph: KeywordQueryGraph, budget: Number) -> UniformStrategy:
    agg = _uniform_landscape(graph)
    dist = best_distribution_for_budget(agg, budget)
    spend, traffic = evaluate_distribution(agg, dist)
    return UniformStrategy(dist.atoms, spend, traffic)


def best_uniform_single_bid(graph: KeywordQueryGraph, budget: Number) -> UniformStrategy:
    """Best strategy mixing one bid level with not bidding at all.

    Either the largest affordable bid outright, or the cheapest unaffordable
    bid played just often enough to spend the budget in expectation.
    """
    budget = frac(budget)
    if budget < 0:
        raise ValueError("budget must be non-negative")
    agg = _uniform_landscape(graph)
    below = [p for p in agg.points if p.cost <= budget]
    above = [p for p in agg.points if p.cost > budget]
    x = below[-1]
    best = UniformStrategy(((x.bid_low, ONE),), x.cost, x.clicks)
    if above:
        y = above[0]
        w = budget / y.cost
        clicks = w * y.clicks
        if clicks > best.traffic:
            best = UniformStrategy(((ZERO, ONE - w), (y.bid_low, w)), budget, clicks)
    return best


def daily_adjustment_step(
    bid: Number, spend: Number, budget: Number, delta: Number = Fraction(1, 10)
) -> Fraction:
    """One day of the raise-if-underspent, lower-if-overspent heuristic."""
    bid, spend, budget, delta = frac(bid), frac(spend), frac(budget), frac(delta)
    if min(bid, spend, budget) < 0 or delta <= 0:
        raise ValueError("inputs must be non-negative and delta positive")
    if spend < budget:
        return bid * (1 + delta)
    if spend > budget:
        return bid / (1 + delta)
    return bid


def two_bid_bound_holds(traffic: Number, opt: Number) -> bool:
    """``traffic >= (1 - 1/e) * opt``, decided conservatively in exact arithmetic."""
    return frac(traffic) >= (1 - 1 / E_UPPER) * frac(opt)


def single_bid_bound_holds(traffic: Number, opt: Number) -> bool:
    return 2 * frac(traffic) >= frac(opt)
