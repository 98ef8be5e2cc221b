"""Single-query GSP auctions seen from one advertiser.

A ``QueryAuction`` holds the competing bids ``b[1..p]`` and the position
click probabilities ``beta[1..p]``.  Bidding ``x`` wins the highest position
``i`` with ``b[i] <= x`` and pays ``b[i]`` per click, so the expected
outcome is ``(beta[i] * b[i], beta[i])``.  The finite set of such outcomes,
together with the zero outcome of not placing at all, is the landscape.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .rational import ONE, ZERO, Number, frac

__all__ = [
    "QueryAuction",
    "LandscapePoint",
    "Landscape",
    "BidDistribution",
    "position_for_bid",
    "build_landscape",
    "convex_hull",
    "evaluate_distribution",
    "best_distribution_for_budget",
    "check_landscape",
]


@dataclass(frozen=True)
class QueryAuction:
    """Competitor bids and position click probabilities, top position first."""

    position_ctrs: tuple[Fraction, ...]
    competitor_bids: tuple[Fraction, ...]

    def __init__(self, position_ctrs: Iterable[Number], competitor_bids: Iterable[Number]):
        ctrs = tuple(frac(c) for c in position_ctrs)
        bids = tuple(frac(b) for b in competitor_bids)
        if len(ctrs) != len(bids):
            raise ValueError(
                f"{len(ctrs)} position ctrs but {len(bids)} competitor bids"
            )
        for i, c in enumerate(ctrs):
            if not ZERO <= c <= ONE:
                raise ValueError(f"position {i + 1}: ctr {c} outside [0, 1]")
        for i, b in enumerate(bids):
            # A zero competitor bid would hand out clicks for free at bid 0.
            if b <= 0:
                raise ValueError(f"position {i + 1}: competitor bid must be positive, got {b}")
        for i in range(len(ctrs) - 1):
            if ctrs[i] < ctrs[i + 1]:
                raise ValueError(f"ctrs must be non-increasing (positions {i + 1}, {i + 2})")
            if bids[i] < bids[i + 1]:
                raise ValueError(f"bids must be non-increasing (positions {i + 1}, {i + 2})")
        object.__setattr__(self, "position_ctrs", ctrs)
        object.__setattr__(self, "competitor_bids", bids)

    @property
    def n_positions(self) -> int:
        return len(self.position_ctrs)

    def scaled(self, ad_ctr: Number) -> "QueryAuction":
        """Fold an ad-specific click factor into every position ctr."""
        f = frac(ad_ctr)
        return QueryAuction([c * f for c in self.position_ctrs], self.competitor_bids)


@dataclass(frozen=True)
class LandscapePoint:
    """One attainable outcome; reached by any bid in ``[bid_low, bid_high)``.

    ``bid_high`` is ``None`` for the top point, whose range is unbounded.
    """

    cost: Fraction
    clicks: Fraction
    bid_low: Fraction
    bid_high: Fraction | None = None

    @property
    def cpc(self) -> Fraction:
        return self.cost / self.clicks if self.clicks else ZERO

    def covers(self, bid: Fraction) -> bool:
        return self.bid_low <= bid and (self.bid_high is None or bid < self.bid_high)


@dataclass(frozen=True)
class Landscape:
    """Outcomes ordered by increasing bid; the first point is always ``(0, 0)``."""

    points: tuple[LandscapePoint, ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError("a landscape has at least the zero point")

    def at(self, bid: Number) -> LandscapePoint:
        """The point reached by bidding ``bid`` (the zero point below every range)."""
        x = frac(bid)
        if x < 0:
            raise ValueError("bids are non-negative")
        for p in self.points:
            if p.covers(x):
                return p
        # Hulled landscapes keep their original ranges, which leave gaps.
        raise ValueError(f"bid {x} falls in a gap of this landscape")

    def evaluate(self, bid: Number) -> tuple[Fraction, Fraction]:
        p = self.at(bid)
        return p.cost, p.clicks

    @property
    def max_cost(self) -> Fraction:
        return max(p.cost for p in self.points)

    @property
    def max_clicks(self) -> Fraction:
        return max(p.clicks for p in self.points)

    @property
    def thresholds(self) -> tuple[Fraction, ...]:
        return tuple(p.bid_low for p in self.points)

    def weighted(self, weight: Number) -> "Landscape":
        """Multiply clicks by ``weight`` (e.g. a conversion value per click)."""
        w = frac(weight)
        if w < 0:
            raise ValueError("click weight must be non-negative")
        return Landscape(tuple(
            LandscapePoint(p.cost, p.clicks * w, p.bid_low, p.bid_high) for p in self.points
        ))


@dataclass(frozen=True)
class BidDistribution:
    """A finite distribution over bids, as ``(bid, weight)`` atoms."""

    atoms: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("distribution needs at least one atom")
        total = ZERO
        for bid, w in self.atoms:
            if bid < 0 or w < 0:
                raise ValueError(f"bad atom ({bid}, {w})")
            total += w
        if total != 1:
            raise ValueError(f"weights sum to {total}, not 1")

    @classmethod
    def point_mass(cls, bid: Number) -> "BidDistribution":
        return cls(((frac(bid), ONE),))

    @classmethod
    def mix(cls, low_bid: Fraction, high_bid: Fraction, high_weight: Fraction) -> "BidDistribution":
        """Bid ``high_bid`` with probability ``high_weight``, else ``low_bid``."""
        if high_weight == 0:
            return cls.point_mass(low_bid)
        if high_weight == 1:
            return cls.point_mass(high_bid)
        return cls(((low_bid, ONE - high_weight), (high_bid, high_weight)))


def position_for_bid(auction: QueryAuction, bid: Number) -> int | None:
    """1-based position won by ``bid``, or ``None`` when it is below every competitor.

    Bidding exactly ``b[i]`` wins position ``i``; among equal competitor bids
    the higher position wins.
    """
    x = frac(bid)
    if x < 0:
        raise ValueError("bids are non-negative")
    for i, b in enumerate(auction.competitor_bids):
        if b <= x:
            return i + 1
    return None


def build_landscape(auction: QueryAuction) -> Landscape:
    bids = auction.competitor_bids
    ctrs = auction.position_ctrs
    # Walk from the bottom position upward so points come out in bid order.
    raw: list[LandscapePoint] = []
    lowest = bids[-1] if bids else None
    raw.append(LandscapePoint(ZERO, ZERO, ZERO, lowest))
    for i in reversed(range(len(bids))):
        upper = bids[i - 1] if i > 0 else None
        if upper is not None and upper == bids[i]:
            continue  # empty range: the position above takes this bid
        raw.append(LandscapePoint(ctrs[i] * bids[i], ctrs[i], bids[i], upper))

    merged: list[LandscapePoint] = []
    for p in raw:
        if merged and (merged[-1].cost, merged[-1].clicks) == (p.cost, p.clicks):
            prev = merged[-1]
            merged[-1] = LandscapePoint(prev.cost, prev.clicks, prev.bid_low, p.bid_high)
        else:
            merged.append(p)
    return Landscape(tuple(merged))


def _cross(o: LandscapePoint, a: LandscapePoint, b: LandscapePoint) -> Fraction:
    return (a.cost - o.cost) * (b.clicks - o.clicks) - (a.clicks - o.clicks) * (b.cost - o.cost)


def convex_hull(landscape: Landscape) -> Landscape:
    """Points on the upper-left hull of clicks against cost.

    The zero point is always kept; collinear interior points are dropped, as
    are points that cost more without buying more clicks.
    """
    pts = sorted(landscape.points, key=lambda p: (p.cost, -p.clicks, p.bid_low))
    useful: list[LandscapePoint] = []
    for p in pts:
        if useful and p.clicks <= useful[-1].clicks:
            continue
        useful.append(p)
    hull: list[LandscapePoint] = []
    for p in useful:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) >= 0:
            hull.pop()
        hull.append(p)
    zero = landscape.points[0]
    if hull[0] is not zero and (hull[0].cost, hull[0].clicks) == (ZERO, ZERO):
        hull[0] = zero
    return Landscape(tuple(hull))


def evaluate_distribution(landscape: Landscape, dist: BidDistribution) -> tuple[Fraction, Fraction]:
    cost = clicks = ZERO
    for bid, w in dist.atoms:
        c, k = landscape.evaluate(bid)
        cost += w * c
        clicks += w * k
    return cost, clicks


def best_distribution_for_budget(landscape: Landscape, budget: Number) -> BidDistribution:
    """Best (at most) two-bid randomization with expected cost within ``budget``."""
    budget = frac(budget)
    if budget < 0:
        raise ValueError("budget must be non-negative")
    hull = convex_hull(landscape).points
    if budget >= hull[-1].cost:
        return BidDistribution.point_mass(hull[-1].bid_low)
    for lo, hi in zip(hull, hull[1:]):
        if lo.cost <= budget < hi.cost:
            w = (budget - lo.cost) / (hi.cost - lo.cost)
            return BidDistribution.mix(lo.bid_low, hi.bid_low, w)
    raise AssertionError("hull does not start at cost zero")


def hull_height(hull: Sequence[LandscapePoint], cost: Fraction) -> Fraction:
    """Clicks on the hull polyline at ``cost`` (clamped to the top point)."""
    if cost >= hull[-1].cost:
        return hull[-1].clicks
    for lo, hi in zip(hull, hull[1:]):
        if lo.cost <= cost < hi.cost:
            return lo.clicks + (hi.clicks - lo.clicks) * (cost - lo.cost) / (hi.cost - lo.cost)
    return hull[0].clicks


def check_landscape(landscape: Landscape, *, weighted: bool = False) -> None:
    """Raise ``ValueError`` unless cost, clicks and cpc rise with the bid.

    Unless ``weighted``, also require each point's cpc to be at most the
    smallest bid reaching it.
    """
    pts = landscape.points
    if (pts[0].cost, pts[0].clicks, pts[0].bid_low) != (ZERO, ZERO, ZERO):
        raise ValueError("first point must be the zero outcome at bid 0")
    for a, b in zip(pts, pts[1:]):
        if b.cost < a.cost or b.clicks < a.clicks:
            raise ValueError(f"cost/clicks decrease between bids {a.bid_low} and {b.bid_low}")
        if b.cpc < a.cpc:
            raise ValueError(f"cpc decreases between bids {a.bid_low} and {b.bid_low}")
        if a.bid_high != b.bid_low:
            raise ValueError(f"bid ranges do not tile at {a.bid_high} / {b.bid_low}")
    if pts[-1].bid_high is not None:
        raise ValueError("top range must be unbounded")
    if not weighted:
        for p in pts:
            if p.cpc > p.bid_low:
                raise ValueError(f"cpc {p.cpc} exceeds bid {p.bid_low}")
