"""Brute-force references for small instances.

Nothing here shares code paths with the optimizers it certifies beyond
the plain evaluation functions (landscape lookup, ``spend_traffic``,
``efficiency``).  Every search is exhaustive and deterministic, and each
refuses instances above its size cap instead of truncating.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .budget import KeywordQueryGraph, spend_traffic
from .landscape import Landscape
from .markov import MarkovBidder, efficiency, run_auction, with_bid
from .rational import ONE, ZERO, Number, frac
from .scheduling import SlotSupply
from .slots import (
    Outcome,
    SlotBidder,
    gfp_multi,
    gfp_single,
    ps_general,
    ps_multi_budgets_only,
    ps_single,
)

__all__ = [
    "SizeGuardError",
    "DeviationGrid",
    "Deviation",
    "brute_two_point_best",
    "brute_query_opt",
    "brute_budget_opt",
    "brute_slot_revenue_max",
    "brute_markov_opt",
    "click_utility",
    "truthfulness_audit",
    "gfp_equilibrium_profile",
    "epsilon_nash_violations",
    "SLOT_MECHANISMS",
]

NEG_INF = float("-inf")


class SizeGuardError(ValueError):
    """Instance too large for exhaustive search."""


def _guard(what: str, size: int, cap: int) -> None:
    if size > cap:
        raise SizeGuardError(f"{what} = {size} exceeds oracle cap {cap}")


# -- budget optimization ----------------------------------------------------

def _best_mix(points: Iterable[tuple[Fraction, Fraction]], budget: Fraction) -> Fraction:
    """Most clicks from a single point or a two-point mix with expected cost <= budget."""
    pts = sorted(set(points))
    best = ZERO
    for c, k in pts:
        if c <= budget:
            best = max(best, k)
    for (c1, k1), (c2, k2) in combinations(pts, 2):
        lo, hi = ((c1, k1), (c2, k2)) if c1 <= c2 else ((c2, k2), (c1, k1))
        if lo[0] <= budget < hi[0]:
            w = (budget - lo[0]) / (hi[0] - lo[0])
            best = max(best, lo[1] + w * (hi[1] - lo[1]))
    return best


def brute_two_point_best(landscape: Landscape, budget: Number) -> Fraction:
    """Max clicks over all distributions on at most two landscape points."""
    return _best_mix(((p.cost, p.clicks) for p in landscape.points), frac(budget))


def brute_query_opt(landscapes: Sequence[Landscape], budget: Number, max_queries: int = 3, max_points: int = 5) -> Fraction:
    """Exact optimum of bidding independently per query, by vertex enumeration.

    An optimal randomized per-query strategy mixes at most two points in at
    most one query (one budget row plus one convexity row per query), so it
    suffices to try every pure point choice plus every single two-point mix.
    """
    budget = frac(budget)
    _guard("queries", len(landscapes), max_queries)
    pts = [[(p.cost, p.clicks) for p in land.points] for land in landscapes]
    for p in pts:
        _guard("landscape points", len(p), max_points)
    best = ZERO
    for choice in product(*pts):
        cost = sum((c for c, _ in choice), ZERO)
        if cost <= budget:
            best = max(best, sum((k for _, k in choice), ZERO))
    for qi, options in enumerate(pts):
        rest = pts[:qi] + pts[qi + 1 :]
        for choice in product(*rest):
            base_c = sum((c for c, _ in choice), ZERO)
            base_k = sum((k for _, k in choice), ZERO)
            room = budget - base_c
            if room < 0:
                continue
            best = max(best, base_k + _best_mix(options, room))
    return best


def brute_budget_opt(
    graph: KeywordQueryGraph,
    budget: Number,
    bid_grid: Sequence[Number] | None = None,
    max_keywords: int = 4,
    max_levels: int = 8,
) -> Fraction:
    """Best traffic over keyword bid vectors on a grid and two-vector mixes.

    The default grid is zero plus every competitor threshold, which must
    then fit the level cap.  This is a lower bound on the true optimum.
    """
    budget = frac(budget)
    _guard("keywords", len(graph.keywords), max_keywords)
    if bid_grid is None:
        levels = {t for land in graph.landscapes.values() for t in land.thresholds}
        bid_grid = sorted(levels | {ZERO})
    grid = sorted({frac(b) for b in bid_grid})
    _guard("grid levels", len(grid), max_levels)
    outcomes = set()
    for vec in product(grid, repeat=len(graph.keywords)):
        outcomes.add(spend_traffic(graph, dict(zip(graph.keywords, vec))))
    return _best_mix(outcomes, budget)


# -- slot scheduling --------------------------------------------------------

def _exact_solve(a: list[list[Fraction]], h: list[Fraction]) -> list[Fraction] | None:
    n = len(a)
    m = [row[:] + [rhs] for row, rhs in zip(a, h)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


def brute_slot_revenue_max(bidders: Sequence[SlotBidder], supply, max_bidders: int = 4) -> Fraction:
    """Max of sum(bid_i * c_i) over the schedulable click polytope, by vertex enumeration.

    Constraints: ``0 <= c_i <= budget_i / bid_i`` and, for every bidder set
    ``S``, ``sum_S c_i <= D_1 + .. + D_|S|``.  Candidate vertices are
    screened in floating point and then re-solved and re-checked exactly.
    """
    _guard("bidders", len(bidders), max_bidders)
    sup = supply if isinstance(supply, SlotSupply) else SlotSupply(supply)
    n = len(bidders)
    if n == 0:
        return ZERO
    d = sup.padded(n).clicks_per_slot
    prefix = [ZERO]
    for x in d:
        prefix.append(prefix[-1] + x)
    rows: list[list[int]] = []
    rhs: list[Fraction] = []
    for i, b in enumerate(bidders):
        e = [0] * n
        e[i] = 1
        rows.append(e)
        rhs.append(b.budget / b.bid if b.bid > 0 else ZERO)
        rows.append([-x for x in e])
        rhs.append(ZERO)
    for size in range(1, n + 1):
        for group in combinations(range(n), size):
            rows.append([1 if i in group else 0 for i in range(n)])
            rhs.append(prefix[size])
    A = np.array(rows, dtype=float)
    hf = np.array([float(x) for x in rhs])
    combos = np.array(list(combinations(range(len(rows)), n)))
    subs = A[combos]
    dets = np.linalg.det(subs)
    ok = np.abs(dets) > 0.5  # 0/±1 matrices have integer determinants
    combos, subs = combos[ok], subs[ok]
    xs = np.linalg.solve(subs, hf[combos][..., None])[..., 0]
    slack = hf[None, :] - xs @ A.T
    scale = 1e-7 * (1 + np.abs(hf).max())
    near = np.all(slack >= -scale, axis=1)
    bids = [b.bid for b in bidders]
    best = ZERO
    for combo in combos[near]:
        x = _exact_solve([[Fraction(v) for v in rows[r]] for r in combo], [rhs[r] for r in combo])
        if x is None:
            continue
        if all(sum((row[j] * x[j] for j in range(n)), ZERO) <= h for row, h in zip(rows, rhs)):
            best = max(best, sum((bi * xi for bi, xi in zip(bids, x)), ZERO))
    return best


# -- Markov assignment ------------------------------------------------------

def brute_markov_opt(bidders: Sequence[MarkovBidder], k: int, max_bidders: int = 8, max_slots: int = 4) -> tuple[Fraction, list[tuple]]:
    """Best efficiency over every ordered list of at most ``k`` ads, and all lists attaining it."""
    _guard("bidders", len(bidders), max_bidders)
    _guard("slots", k, max_slots)
    ids = [b.id for b in bidders]
    best, winners = None, []
    for size in range(0, min(k, len(ids)) + 1):
        for arr in permutations(ids, size):
            v = efficiency(bidders, arr)
            if best is None or v > best:
                best, winners = v, [arr]
            elif v == best:
                winners.append(arr)
    return best, winners


# -- deviation search -------------------------------------------------------

@dataclass(frozen=True)
class DeviationGrid:
    """Finite set of misreports tried for each bidder.

    Bids and budgets are scaled by each multiplier of the true value; each
    competitor's declared value is also tried exactly and offset by
    ``iota`` either way.
    """

    multipliers: tuple[Fraction, ...] = tuple(
        Fraction(x) for x in ("0", "1/4", "1/2", "3/4", "1", "5/4", "3/2", "2")
    )
    iota: Fraction = Fraction(1, 100)

    def __post_init__(self):
        ms = tuple(sorted({frac(m) for m in self.multipliers}))
        if ONE not in ms:
            raise ValueError("grid must contain the truthful multiplier 1")
        object.__setattr__(self, "multipliers", ms)
        object.__setattr__(self, "iota", frac(self.iota))

    def candidates(self, truth: Fraction, competitors: Iterable[Fraction]) -> list[Fraction]:
        vals = {m * truth for m in self.multipliers}
        for c in competitors:
            vals.update({c, c + self.iota, c - self.iota})
        return sorted(v for v in vals if v >= 0)


@dataclass(frozen=True)
class Deviation:
    mechanism: str
    bidder: Hashable
    declared_bid: Fraction
    declared_budget: Fraction | None
    truthful_utility: object
    deviant_utility: object
    clicks: Fraction
    price: Fraction
    details: dict = field(default_factory=dict, compare=False)


def click_utility(clicks: Fraction, price: Fraction, max_cpc: Fraction | None, budget: Fraction) -> Fraction | float:
    """Clicks if the true max-cpc and budget are respected, else minus infinity.

    ``max_cpc=None`` means no per-click cap (budgets-only setting).
    """
    if clicks == 0:
        return ZERO
    if max_cpc is not None and price > max_cpc:
        return NEG_INF
    if price * clicks > budget:
        return NEG_INF
    return clicks


def _single(fn):
    def run(bidders, supply):
        sup = supply if isinstance(supply, SlotSupply) else SlotSupply(supply)
        if len(sup) != 1 and any(x != 0 for x in sup.clicks_per_slot[1:]):
            raise ValueError("single-slot mechanism given several slots")
        return fn(bidders, sup[0])
    return run


SLOT_MECHANISMS: dict[str, tuple[Callable[..., Outcome], bool]] = {
    # name -> (runner(bidders, supply), uses declared bids)
    "ps_single": (_single(ps_single), True),
    "ps_multi_budgets_only": (ps_multi_budgets_only, False),
    "ps_general": (ps_general, True),
    "gfp_single": (_single(gfp_single), True),
    "gfp_multi": (gfp_multi, True),
}


def _replace_declared(bidders, i, bid, budget):
    out = list(bidders)
    out[i] = replace(out[i], bid=bid, budget=budget)
    return out


def truthfulness_audit(
    mechanism: str,
    bidders: Sequence,
    supply=None,
    true_values: Mapping | None = None,
    grid: DeviationGrid | None = None,
    *,
    k: int | None = None,
    slack: Fraction = ZERO,
) -> list[Deviation]:
    """Every grid misreport that beats the bidder's utility at ``bidders``.

    For slot mechanisms ``bidders`` are the declarations (``SlotBidder``)
    and ``true_values`` maps id to ``(max_cpc, budget)``; by default the
    declarations are the truth.  Utilities are click-maximizing.  For
    ``"markov_vcg"`` the bidders are ``MarkovBidder`` with true bids,
    ``k`` is the slot count, and utility is value minus payment.

    A deviation is reported when it beats the baseline by more than
    ``slack``.
    """
    grid = grid or DeviationGrid()
    if mechanism == "markov_vcg":
        if k is None:
            raise ValueError("markov_vcg audit needs k")
        return _audit_markov(list(bidders), k, grid, slack)
    if mechanism not in SLOT_MECHANISMS:
        raise ValueError(f"unknown mechanism {mechanism!r}")
    run, uses_bids = SLOT_MECHANISMS[mechanism]
    bidders = list(bidders)
    truth = dict(true_values or {b.id: (b.bid, b.budget) for b in bidders})
    base = run(bidders, supply)
    found = []
    for i, b in enumerate(bidders):
        m_true, B_true = (frac(x) for x in truth[b.id])
        cap = m_true if uses_bids else None
        u0 = click_utility(base.clicks[b.id], base.prices[b.id], cap, B_true)
        others = [o for o in bidders if o.id != b.id]
        bids = grid.candidates(m_true, [o.bid for o in others]) if uses_bids else [b.bid]
        budgets = grid.candidates(B_true, [o.budget for o in others])
        for bid, budget in product(bids, budgets):
            if (bid, budget) == (b.bid, b.budget):
                continue
            out = run(_replace_declared(bidders, i, bid, budget), supply)
            u = click_utility(out.clicks[b.id], out.prices[b.id], cap, B_true)
            if u > u0 + slack:
                found.append(Deviation(
                    mechanism, b.id, bid, budget, u0, u, out.clicks[b.id], out.prices[b.id],
                    {"truthful_clicks": base.clicks[b.id], "truthful_price": base.prices[b.id]},
                ))
    return found


def _audit_markov(bidders: list[MarkovBidder], k: int, grid: DeviationGrid, slack: Fraction) -> list[Deviation]:
    base = run_auction(bidders, k)
    found = []
    for b in bidders:
        u0 = b.bid * base.click_probabilities[b.id] - base.payments[b.id]
        competitors = []
        if b.ctr > 0:
            for o in bidders:
                if o.id == b.id:
                    continue
                competitors.append(o.e / b.ctr)  # equal ecpm
                if o.a is not None and b.q < 1:
                    competitors.append(o.a * (1 - b.q) / b.ctr)  # equal adjusted ecpm
        for bid in grid.candidates(b.bid, competitors):
            if bid == b.bid:
                continue
            out = run_auction(with_bid(bidders, b.id, bid), k)
            u = b.bid * out.click_probabilities[b.id] - out.payments[b.id]
            if u > u0 + slack:
                found.append(Deviation(
                    "markov_vcg", b.id, bid, None, u0, u,
                    out.click_probabilities[b.id], out.prices[b.id],
                ))
    return found


# -- GFP equilibrium check --------------------------------------------------

def gfp_equilibrium_profile(bidders: Sequence[SlotBidder], supply, iota: Fraction = Fraction(1, 10**7)) -> tuple[list[SlotBidder], Outcome]:
    """Declarations that make GFP mimic the truthful PS outcome.

    Members of a PS price block bid the block price plus ``iota`` (never
    above their true bid); the block's threshold bidder bids exactly the
    price, which is her true bid.  Everyone else reports truthfully.
    Returns the profile and the PS outcome it was built from.
    """
    ps = ps_general(bidders, supply)
    declared = {}
    for blk in ps.blocks:
        if blk.price == 0:
            continue
        for i in blk.bidders:
            declared[i] = blk.price if i == blk.threshold else blk.price + iota
    profile = [
        replace(b, bid=min(b.bid, declared[b.id])) if b.id in declared else b for b in bidders
    ]
    return profile, ps


def epsilon_nash_violations(
    bidders: Sequence[SlotBidder],
    supply,
    eps: Fraction,
    grid: DeviationGrid | None = None,
    iota: Fraction = Fraction(1, 10**7),
) -> tuple[list[Deviation], Outcome, Outcome]:
    """GFP misreports gaining more than ``eps`` clicks from the PS-derived profile.

    ``bidders`` carry the true values.  Also returns the PS outcome and the
    GFP outcome at the profile.  A profile that itself breaks some bidder's
    true constraints is reported as a deviation of that bidder to the truth.
    """
    grid = grid or DeviationGrid(iota=iota)
    profile, ps = gfp_equilibrium_profile(bidders, supply, iota)
    truth = {b.id: (b.bid, b.budget) for b in bidders}
    at_profile = gfp_multi(profile, supply)
    bad = []
    for b in profile:
        m, B = truth[b.id]
        if click_utility(at_profile.clicks[b.id], at_profile.prices[b.id], m, B) == NEG_INF:
            bad.append(Deviation("gfp_multi", b.id, m, B, NEG_INF, ZERO, ZERO, ZERO, {"profile_infeasible": True}))
    bad += truthfulness_audit("gfp_multi", profile, supply, truth, grid, slack=eps)
    return bad, ps, at_profile
