"""Offline ad slot scheduling mechanisms.

Bidders declare a max cost-per-click (``bid``) and a daily ``budget``; the
day offers slots with click supplies ``D_1 > D_2 > ...``.  Two mechanism
families live here:

* greedy first-price (GFP): rank by bid, give each bidder as many clicks
  as still fit, charge the bid;
* price-setting (PS): a descending-price auction that stops whenever a
  prefix of the bidders, ranked by budget, exactly exhausts a prefix of the
  slots, and allocates that prefix as one price block.

Bids compare with the ``≻`` order: higher bid first, ties by ``lex_rank``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

from .rational import ZERO, Number, frac
from .scheduling import Schedule, ScheduleEntry, SlotSupply, build_schedule

__all__ = [
    "SlotBidder",
    "PriceBlock",
    "Outcome",
    "make_bidders",
    "find_price_block",
    "gfp_single",
    "gfp_multi",
    "ps_single",
    "ps_multi_budgets_only",
    "ps_general",
    "revenue",
    "schedule_outcome",
    "scale_bids_for_ctr",
    "unscale_outcome",
    "MECHANISMS",
]


@dataclass(frozen=True)
class SlotBidder:
    id: Hashable
    bid: Fraction
    budget: Fraction
    lex_rank: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bid", frac(self.bid))
        object.__setattr__(self, "budget", frac(self.budget))
        if self.bid < 0 or self.budget < 0:
            raise ValueError(f"bidder {self.id!r}: bid and budget must be non-negative")


def make_bidders(rows: Iterable[tuple[Hashable, Number, Number]]) -> list[SlotBidder]:
    """Bidders from ``(id, bid, budget)`` rows, lex rank = input order."""
    return [SlotBidder(i, frac(b), frac(B), rank) for rank, (i, b, B) in enumerate(rows)]


@dataclass(frozen=True)
class PriceBlock:
    price: Fraction
    bidders: tuple[Hashable, ...]
    slots: tuple[int, ...]  # 1-based slot numbers
    threshold: Hashable | None = None
    threshold_budget: Fraction | None = None


@dataclass(frozen=True)
class Outcome:
    clicks: dict
    prices: dict
    blocks: tuple[PriceBlock, ...] = ()
    bidder_order: tuple[Hashable, ...] = field(default=(), compare=False)

    @property
    def revenue(self) -> Fraction:
        return revenue(self)

    def spend(self, bidder) -> Fraction:
        return self.clicks[bidder] * self.prices[bidder]


def revenue(outcome: Outcome) -> Fraction:
    return sum((outcome.prices[i] * c for i, c in outcome.clicks.items()), ZERO)


def _succ_key(b: SlotBidder):
    return (-b.bid, b.lex_rank)


def _budget_key(b: SlotBidder):
    return (-b.budget, b.lex_rank)


def _check_ids(bidders: Sequence[SlotBidder]) -> None:
    ids = [b.id for b in bidders]
    if len(set(ids)) != len(ids):
        raise ValueError("bidder ids must be unique")
    ranks = [b.lex_rank for b in bidders]
    if len(set(ranks)) != len(ranks):
        raise ValueError("lex ranks must be unique")


class _Dummy(str):
    """Id type for padding bidders, never returned to callers."""


def _pad(bidders: Sequence[SlotBidder], supply: SlotSupply) -> tuple[list[SlotBidder], tuple[Fraction, ...]]:
    _check_ids(bidders)
    n = max(len(bidders), len(supply), 2)
    top = max((b.lex_rank for b in bidders), default=-1)
    padded = list(bidders) + [
        SlotBidder(_Dummy(f"dummy{j}"), ZERO, ZERO, top + 1 + j) for j in range(n - len(bidders))
    ]
    return padded, supply.padded(n).clicks_per_slot


def _finish(bidders: Sequence[SlotBidder], clicks: dict, prices: dict, blocks: list[PriceBlock]) -> Outcome:
    real = [b.id for b in bidders if not isinstance(b.id, _Dummy)]
    for i in real:
        clicks.setdefault(i, ZERO)
        prices.setdefault(i, ZERO)
        if clicks[i] == 0:
            prices[i] = ZERO
    clean = []
    for blk in blocks:
        members = tuple(i for i in blk.bidders if not isinstance(i, _Dummy))
        if members:
            clean.append(replace(blk, bidders=members))
    return Outcome(
        {i: clicks[i] for i in real}, {i: prices[i] for i in real}, tuple(clean), tuple(real)
    )


def _as_supply(supply) -> SlotSupply:
    if isinstance(supply, SlotSupply):
        return supply
    if isinstance(supply, (int, str, Fraction, float)):
        return SlotSupply([supply])
    return SlotSupply(supply)


def find_price_block(budgets: Sequence[Fraction], supply: Sequence[Fraction]) -> tuple[Fraction, int]:
    """Price ``max_l r_l`` with ``r_l = (B_1+..+B_l)/(D_1+..+D_l)`` and the largest arg max.

    ``budgets`` must already be sorted largest first and be no longer than
    ``supply``; ``D_1`` must be positive.
    """
    best, best_ell = None, 0
    s_b = s_d = ZERO
    for ell, (b, d) in enumerate(zip(budgets, supply), start=1):
        s_b += b
        s_d += d
        r = s_b / s_d
        if best is None or r >= best:
            best, best_ell = r, ell
    return best, best_ell


# -- greedy first price -----------------------------------------------------

def gfp_single(bidders: Sequence[SlotBidder], clicks: Number) -> Outcome:
    """Single-slot GFP: fill ``clicks`` in bid order at each bidder's own bid."""
    _check_ids(bidders)
    left = frac(clicks)
    got, prices = {}, {}
    for b in sorted(bidders, key=_succ_key):
        if b.bid == 0 or left == 0:
            continue
        c = min(b.budget / b.bid, left)
        got[b.id], prices[b.id] = c, b.bid
        left -= c
    return _finish(bidders, got, prices, [])


def gfp_multi(bidders: Sequence[SlotBidder], supply) -> Outcome:
    """Multi-slot GFP: each bidder in bid order takes the most clicks that
    keep the commitments so far schedulable, capped by budget / bid."""
    sup = _as_supply(supply)
    padded, d = _pad(bidders, sup)
    prefix_d = [ZERO]
    for x in d:
        prefix_d.append(prefix_d[-1] + x)
    committed: list[Fraction] = []
    got, prices = {}, {}
    for b in sorted(padded, key=_succ_key):
        if b.bid == 0:
            continue
        # Adding x keeps every sorted prefix within supply iff
        # x <= (D_1 + .. + D_l) - (sum of the l-1 largest commitments) for all l.
        top = sorted(committed, reverse=True)
        room, s = None, ZERO
        for ell in range(1, len(committed) + 2):
            cap = prefix_d[min(ell, len(d))] - s
            room = cap if room is None else min(room, cap)
            if ell - 1 < len(top):
                s += top[ell - 1]
        c = min(b.budget / b.bid, room)
        committed.append(c)
        got[b.id], prices[b.id] = c, b.bid
    return _finish(bidders, got, prices, [])


# -- price setting ----------------------------------------------------------

def ps_single(bidders: Sequence[SlotBidder], clicks: Number) -> Outcome:
    """Single-slot price-setting mechanism.

    With bidders in ``≻`` order, ``k`` is the first bidder for which
    ``b_{k+1} <= (B_1 + .. + B_k) / D``; the price is that ratio capped at
    ``b_k``.  Bidders before ``k`` spend their whole budget; ``k`` spends
    whatever buys the rest of the clicks at that price.
    """
    _check_ids(bidders)
    total = frac(clicks)
    order = sorted(bidders, key=_succ_key)
    if total == 0 or not order:
        return _finish(bidders, {}, {}, [])
    s = ZERO
    for k, b in enumerate(order):
        s += b.budget
        nxt = order[k + 1].bid if k + 1 < len(order) else ZERO
        if nxt <= s / total:
            break
    price = min(s / total, order[k].bid)
    if price == 0:
        return _finish(bidders, {}, {}, [])
    got, prices = {}, {}
    for b in order[:k]:
        got[b.id], prices[b.id] = b.budget / price, price
    last = order[k]
    spent = price * total - (s - last.budget)
    got[last.id], prices[last.id] = spent / price, price
    threshold = last.id if spent < last.budget else None
    block = PriceBlock(
        price,
        tuple(b.id for b in order[: k + 1]),
        (1,),
        threshold,
        spent if threshold is not None else None,
    )
    return _finish(bidders, got, prices, [block])


def _zero_block(pool: Sequence[SlotBidder], first_slot: int) -> PriceBlock:
    return PriceBlock(
        ZERO,
        tuple(b.id for b in pool),
        tuple(range(first_slot + 1, first_slot + 1 + len(pool))),
    )


def ps_multi_budgets_only(bidders: Sequence[SlotBidder], supply) -> Outcome:
    """Budgets-only price-setting mechanism; declared bids are ignored.

    Repeatedly rank the remaining bidders by budget, find the price block
    (the prefix with the highest budget-to-supply ratio, longest on ties),
    and let its members spend their whole budgets at that price.
    """
    sup = _as_supply(supply)
    padded, d = _pad(bidders, sup)
    pool = sorted(padded, key=_budget_key)
    s0 = 0
    got, prices, blocks = {}, {}, []
    while pool:
        if d[s0] == 0 or pool[0].budget == 0:
            blocks.append(_zero_block(pool, s0))
            break
        price, ell = find_price_block([b.budget for b in pool], d[s0:])
        members = pool[:ell]
        for b in members:
            got[b.id], prices[b.id] = b.budget / price, price
        blocks.append(PriceBlock(price, tuple(b.id for b in members), tuple(range(s0 + 1, s0 + ell + 1))))
        pool = pool[ell:]
        s0 += ell
    return _finish(bidders, got, prices, blocks)


def _threshold_budget(others: Sequence[Fraction], bid: Fraction, supply: Sequence[Fraction]) -> Fraction:
    """Largest budget ``x`` for the newest active bidder keeping the block price at ``bid``.

    With the others' budgets sorted descending as ``S_l`` prefix sums, the
    block price is ``max_l max(S_l, S_{l-1} + x) / (D_1 + .. + D_l)``; it
    equals ``bid`` at ``x = min_l (bid * (D_1 + .. + D_l) - S_{l-1})``.
    """
    best = None
    s = ZERO
    dsum = ZERO
    for ell in range(1, len(others) + 2):
        dsum += supply[ell - 1]
        cand = bid * dsum - s
        best = cand if best is None else min(best, cand)
        if ell - 1 < len(others):
            s += others[ell - 1]
    return best


def ps_general(bidders: Sequence[SlotBidder], supply) -> Outcome:
    """Price-setting mechanism with both bids and budgets.

    The price descends; bidders become active (in ``≻`` order) once it
    reaches their bid.  The active set, ranked by budget, is run through
    the price-block search.  As soon as the block price is at least the
    next inactive bid, the block is allocated, except that when the price
    would exceed the newest bidder's own bid, her budget is cut down until
    the price equals that bid.  Allocated bidders and slots are removed and
    the search restarts on the rest.
    """
    sup = _as_supply(supply)
    padded, d = _pad(bidders, sup)
    pool = sorted(padded, key=_succ_key)
    s0 = 0
    got, prices, blocks = {}, {}, []
    while pool:
        if d[s0] == 0:
            blocks.append(_zero_block(pool, s0))
            break
        for k in range(1, len(pool) + 1):
            active = sorted(pool[:k], key=_budget_key)
            if active[0].budget == 0:
                price, ell = ZERO, k
            else:
                price, ell = find_price_block([b.budget for b in active], d[s0:])
            nxt = pool[k].bid if k < len(pool) else ZERO
            if price >= nxt:
                break
        newest = pool[k - 1]
        budgets = {b.id: b.budget for b in active}
        threshold = None
        if price > newest.bid:
            others = [b.budget for b in active if b.id != newest.id]
            cut = _threshold_budget(others, newest.bid, d[s0:])
            budgets[newest.id] = cut
            threshold = newest.id
            active = sorted(
                active, key=lambda b: (-budgets[b.id], b.lex_rank)
            )
            if budgets[active[0].id] == 0:
                price, ell = ZERO, k
            else:
                price, ell = find_price_block([budgets[b.id] for b in active], d[s0:])
            assert price == newest.bid, (price, newest.bid)
        if price == 0:
            blocks.append(_zero_block(pool, s0))
            break
        members = active[:ell]
        for b in members:
            got[b.id], prices[b.id] = budgets[b.id] / price, price
        in_block = threshold is not None and any(b.id == threshold for b in members)
        blocks.append(PriceBlock(
            price,
            tuple(b.id for b in members),
            tuple(range(s0 + 1, s0 + ell + 1)),
            threshold if in_block else None,
            budgets[threshold] if in_block else None,
        ))
        taken = {b.id for b in members}
        pool = [b for b in pool if b.id not in taken]
        s0 += ell
    return _finish(bidders, got, prices, blocks)


MECHANISMS = {
    "gfp": gfp_multi,
    "ps": ps_general,
    "ps-budgets": ps_multi_budgets_only,
}


def schedule_outcome(outcome: Outcome, supply) -> Schedule:
    """Explicit schedule for an outcome.

    Price-block outcomes are scheduled block by block on the block's own
    slots; block-free (GFP) outcomes are scheduled over all slots at once.
    """
    sup = _as_supply(supply)
    positive = {i: c for i, c in outcome.clicks.items() if c > 0}
    if not outcome.blocks:
        return build_schedule(positive, sup)
    entries: list[ScheduleEntry] = []
    covered = set()
    for blk in outcome.blocks:
        demand = {i: outcome.clicks[i] for i in blk.bidders if outcome.clicks[i] > 0}
        if not demand:
            continue
        slots = [sup[j - 1] if j <= len(sup) else ZERO for j in blk.slots]
        sub = build_schedule(demand, SlotSupply(slots))
        offset = blk.slots[0] - 1
        entries.extend(replace(e, slot=e.slot + offset) for e in sub.entries)
        covered.update(demand)
    if set(positive) - covered:
        raise ValueError("outcome gives clicks to bidders outside every block")
    return Schedule(tuple(entries))


def scale_bids_for_ctr(bidders: Sequence[SlotBidder], ctrs: dict) -> list[SlotBidder]:
    """Fold bidder-specific click-through rates into the bids.

    A bidder with rate ``ctr`` placed in slot ``j`` for time ``t`` gets
    ``t * ctr * D_j`` clicks; running a mechanism on bids ``bid * ctr``
    over raw slot units and then calling ``unscale_outcome`` handles that.
    """
    return [replace(b, bid=b.bid * frac(ctrs.get(b.id, 1))) for b in bidders]


def unscale_outcome(outcome: Outcome, ctrs: dict) -> Outcome:
    clicks, prices = {}, {}
    for i, units in outcome.clicks.items():
        r = frac(ctrs.get(i, 1))
        clicks[i] = units * r
        prices[i] = outcome.prices[i] / r if r else ZERO
    return Outcome(clicks, prices, outcome.blocks, outcome.bidder_order)
