"""Reading, writing and generating problem instances.

Instances are JSON documents.  Numbers may be JSON numbers or strings such
as ``"2.60"`` or ``"21/25"``; either way they are parsed to exact
fractions.  Output writes every number as a reduced ``"num/den"`` string.
"""
from __future__ import annotations

import json
import random
from fractions import Fraction
from typing import Any

from .budget import KeywordQueryGraph
from .landscape import QueryAuction, build_landscape
from .markov import MarkovBidder
from .rational import fmt, frac
from .scheduling import SlotSupply
from .slots import SlotBidder

__all__ = [
    "InstanceError",
    "loads",
    "auction_from_json",
    "budget_instance_from_json",
    "slot_instance_from_json",
    "markov_instance_from_json",
    "random_auction",
    "random_budget_instance",
    "random_slot_instance",
    "random_markov_instance",
    "GENERATORS",
]


class InstanceError(ValueError):
    """Malformed instance document; the message names the offending field."""


def loads(text: str) -> Any:
    try:
        return json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _num(obj: dict, key: str, where: str, default=None) -> Fraction:
    if key not in obj:
        if default is not None:
            return frac(default)
        raise InstanceError(f"{where}: missing field {key!r}")
    try:
        return frac(obj[key])
    except (TypeError, ValueError, ZeroDivisionError):
        raise InstanceError(f"{where}.{key}: not a number: {obj[key]!r}") from None


def _list(obj: dict, key: str, where: str) -> list:
    val = obj.get(key)
    if not isinstance(val, list):
        raise InstanceError(f"{where}: field {key!r} must be a list")
    return val


def auction_from_json(obj: dict, where: str = "auction") -> QueryAuction:
    """``{"positions": [{"ctr", "bid"}, ...], "ad_ctr": optional}``"""
    rows = _list(obj, "positions", where)
    ctrs = [_num(r, "ctr", f"{where}.positions[{i}]") for i, r in enumerate(rows)]
    bids = [_num(r, "bid", f"{where}.positions[{i}]") for i, r in enumerate(rows)]
    try:
        auction = QueryAuction(ctrs, bids)
    except ValueError as exc:
        raise InstanceError(f"{where}: {exc}") from None
    if "ad_ctr" in obj:
        auction = auction.scaled(_num(obj, "ad_ctr", where))
    return auction


def budget_instance_from_json(obj: dict) -> tuple[KeywordQueryGraph, Fraction | None]:
    keywords = [str(k) for k in _list(obj, "keywords", "instance")]
    landscapes = {}
    for i, q in enumerate(_list(obj, "queries", "instance")):
        where = f"queries[{i}]"
        if "id" not in q:
            raise InstanceError(f"{where}: missing field 'id'")
        land = build_landscape(auction_from_json(q.get("landscape", {}), f"{where}.landscape"))
        if "weight" in q:
            land = land.weighted(_num(q, "weight", where))
        landscapes[str(q["id"])] = land
    edges = []
    for i, e in enumerate(obj.get("edges", [])):
        if not (isinstance(e, list) and len(e) == 2):
            raise InstanceError(f"edges[{i}]: expected [keyword, query]")
        edges.append((str(e[0]), str(e[1])))
    try:
        graph = KeywordQueryGraph(keywords, landscapes, edges)
    except ValueError as exc:
        raise InstanceError(str(exc)) from None
    budget = _num(obj, "budget", "instance") if "budget" in obj else None
    return graph, budget


def slot_instance_from_json(obj: dict) -> tuple[list[SlotBidder], SlotSupply, dict, dict]:
    """Returns declared bidders, supply, true values ``{id: (max_cpc, budget)}`` and ctrs."""
    bidders, truth, ctrs = [], {}, {}
    for i, row in enumerate(_list(obj, "bidders", "instance")):
        where = f"bidders[{i}]"
        bid = _num(row, "bid", where)
        budget = _num(row, "budget", where)
        bidder_id = row.get("id", str(i + 1))
        try:
            bidders.append(SlotBidder(bidder_id, bid, budget, i))
        except ValueError as exc:
            raise InstanceError(f"{where}: {exc}") from None
        truth[bidder_id] = (
            _num(row, "true_bid", where, bid),
            _num(row, "true_budget", where, budget),
        )
        if "ctr" in row:
            ctrs[bidder_id] = _num(row, "ctr", where)
    try:
        supply = SlotSupply([frac(x) for x in _list(obj, "slots", "instance")])
    except (ValueError, TypeError) as exc:
        raise InstanceError(f"slots: {exc}") from None
    return bidders, supply, truth, ctrs


def markov_instance_from_json(obj: dict) -> tuple[list[MarkovBidder], int]:
    bidders = []
    for i, row in enumerate(_list(obj, "bidders", "instance")):
        where = f"bidders[{i}]"
        bidder_id = row.get("id", str(i + 1))
        try:
            if "e" in row:
                bidders.append(MarkovBidder.from_ecpm(bidder_id, _num(row, "e", where), _num(row, "q", where), i))
            else:
                bidders.append(MarkovBidder(
                    bidder_id, _num(row, "ctr", where), _num(row, "q", where), _num(row, "bid", where), i
                ))
        except ValueError as exc:
            raise InstanceError(f"{where}: {exc}") from None
    k = obj.get("k")
    if not isinstance(k, int) or k < 1:
        raise InstanceError("instance: 'k' must be a positive integer")
    return bidders, k


# -- random instances -------------------------------------------------------

def _distinct_desc(rng: random.Random, n: int, lo: int, hi: int, den: int) -> list[Fraction]:
    return [Fraction(x, den) for x in sorted(rng.sample(range(lo, hi + 1), n), reverse=True)]


def random_auction(rng: random.Random, max_positions: int = 4) -> QueryAuction:
    p = rng.randint(1, max_positions)
    ctrs = sorted((Fraction(rng.randint(1, 100), 100) for _ in range(p)), reverse=True)
    bids = _distinct_desc(rng, p, 1, 400, 100)
    return QueryAuction(ctrs, bids)


def random_budget_instance(rng: random.Random, n_queries: int = 5, n_keywords: int = 3, max_positions: int = 4) -> dict:
    """Budget instance document; every query gets at least one keyword."""
    kws = [f"k{i + 1}" for i in range(n_keywords)]
    queries, edges = [], []
    for qi in range(n_queries):
        a = random_auction(rng, max_positions)
        qid = f"q{qi + 1}"
        queries.append({"id": qid, "landscape": {"positions": [
            {"ctr": fmt(c), "bid": fmt(b)} for c, b in zip(a.position_ctrs, a.competitor_bids)
        ]}})
        hits = rng.sample(kws, rng.randint(1, n_keywords))
        edges += [[k, qid] for k in sorted(hits)]
    total = sum(
        max(Fraction(p["ctr"]) * Fraction(p["bid"]) for p in q["landscape"]["positions"]) for q in queries
    )
    budget = total * Fraction(rng.randint(0, 110), 100)
    return {"keywords": kws, "queries": queries, "edges": edges, "budget": fmt(budget)}


def random_slot_instance(rng: random.Random, n_bidders: int = 3, n_slots: int | None = None) -> dict:
    """Slot instance with pairwise distinct bids and budgets (no exact ties)."""
    n_slots = n_bidders if n_slots is None else n_slots
    slots = [fmt(x) for x in _distinct_desc(rng, n_slots, 1, 200, 1)]
    bids = rng.sample(range(1, 41), n_bidders)
    budgets = rng.sample(range(1, 201), n_bidders)
    bidders = [
        {"id": str(i + 1), "bid": fmt(Fraction(bids[i], 8)), "budget": fmt(Fraction(budgets[i]))}
        for i in range(n_bidders)
    ]
    return {"bidders": bidders, "slots": slots}


def random_markov_instance(rng: random.Random, n_bidders: int = 5, k: int = 3) -> dict:
    bidders = [
        {
            "id": str(i + 1),
            "ctr": fmt(Fraction(rng.randint(1, 20), 20)),
            "q": fmt(Fraction(rng.randint(0, 19), 20)),
            "bid": fmt(Fraction(rng.randint(1, 200), 20)),
        }
        for i in range(n_bidders)
    ]
    return {"bidders": bidders, "k": k}


GENERATORS = {
    "budget": random_budget_instance,
    "slots": random_slot_instance,
    "markov": random_markov_instance,
}
