"""Ad assignment for a user who scans the ads top-down like a Markov chain.

On reaching ad ``i`` the user clicks with probability ``ctr_i`` and moves
on to the next ad with probability ``q_i``.  An assignment's value is the
nested sum ``e_1 + q_1 (e_2 + q_2 (e_3 + ...))`` with ``e_i = ctr_i * bid_i``.
The best assignment lists its ads by adjusted ecpm ``e_i / (1 - q_i)``, so
after sorting a small dynamic program picks which ads to show.  Prices are
VCG payments.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from typing import Hashable, Iterable, Sequence

from .rational import ONE, ZERO, Number, frac

__all__ = [
    "MarkovBidder",
    "MarkovOutcome",
    "efficiency",
    "click_probability",
    "position_factors",
    "a_ecpm_order",
    "optimal_assignment",
    "all_optimal_sets",
    "vcg_prices",
    "run_auction",
    "substitution_check",
    "with_bid",
]


@dataclass(frozen=True)
class MarkovBidder:
    id: Hashable
    ctr: Fraction
    q: Fraction
    bid: Fraction
    lex_rank: int = 0

    def __post_init__(self):
        for name in ("ctr", "q", "bid"):
            object.__setattr__(self, name, frac(getattr(self, name)))
        if not ZERO <= self.ctr <= ONE:
            raise ValueError(f"bidder {self.id!r}: ctr {self.ctr} outside [0, 1]")
        if not ZERO <= self.q <= ONE:
            raise ValueError(f"bidder {self.id!r}: continuation {self.q} outside [0, 1]")
        if self.bid < 0:
            raise ValueError(f"bidder {self.id!r}: negative bid")

    @classmethod
    def from_ecpm(cls, id: Hashable, e: Number, q: Number, lex_rank: int = 0) -> "MarkovBidder":
        """Bidder given by impression value directly (ctr fixed at 1)."""
        return cls(id, ONE, frac(q), frac(e), lex_rank)

    @property
    def e(self) -> Fraction:
        return self.ctr * self.bid

    @property
    def a(self) -> Fraction | None:
        """Adjusted ecpm; ``None`` stands for +infinity (``q == 1``)."""
        if self.q == 1:
            return None
        return self.e / (1 - self.q)


@dataclass(frozen=True)
class MarkovOutcome:
    assignment: tuple[Hashable, ...]
    efficiency: Fraction
    click_probabilities: dict = field(default_factory=dict)
    payments: dict = field(default_factory=dict)
    prices: dict = field(default_factory=dict)


def _by_id(bidders: Iterable[MarkovBidder]) -> dict:
    out = {}
    for b in bidders:
        if b.id in out:
            raise ValueError(f"duplicate bidder id {b.id!r}")
        out[b.id] = b
    return out


def _check_assignment(table: dict, assignment: Sequence[Hashable]) -> None:
    if len(set(assignment)) != len(assignment):
        raise ValueError("assignment repeats a bidder")
    for x in assignment:
        if x not in table:
            raise ValueError(f"unknown bidder {x!r}")


def efficiency(bidders: Iterable[MarkovBidder], assignment: Sequence[Hashable]) -> Fraction:
    table = _by_id(bidders)
    _check_assignment(table, assignment)
    value = ZERO
    for x in reversed(assignment):
        value = table[x].e + table[x].q * value
    return value


def position_factors(bidders: Iterable[MarkovBidder], assignment: Sequence[Hashable]) -> list[Fraction]:
    """Probability the user reaches each position of ``assignment``."""
    table = _by_id(bidders)
    _check_assignment(table, assignment)
    out, reach = [], ONE
    for x in assignment:
        out.append(reach)
        reach *= table[x].q
    return out


def click_probability(bidders: Iterable[MarkovBidder], assignment: Sequence[Hashable], bidder: Hashable) -> Fraction:
    bidders = list(bidders)
    if bidder not in assignment:
        return ZERO
    reach = position_factors(bidders, assignment)[list(assignment).index(bidder)]
    return _by_id(bidders)[bidder].ctr * reach


def _a_key(b: MarkovBidder):
    if b.q == 1:
        return (0, ZERO, -b.e, b.lex_rank)
    return (1, -b.a, -b.e, b.lex_rank)


def a_ecpm_order(bidders: Iterable[MarkovBidder]) -> list[MarkovBidder]:
    """Decreasing adjusted ecpm; ties go to the larger ecpm, then lex rank."""
    return sorted(bidders, key=_a_key)


def _dp(order: Sequence[MarkovBidder], k: int) -> tuple[Fraction, list[Hashable]]:
    n = len(order)
    # F[i][j]: best value from bidders i.. filling slots j.. once slot j is reached
    F = [[ZERO] * (k + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        b = order[i]
        for j in range(k - 1, -1, -1):
            F[i][j] = max(F[i + 1][j + 1] * b.q + b.e, F[i + 1][j])
    chosen, j = [], 0
    for i in range(n):
        if j == k:
            break
        b = order[i]
        # ties skip the ad: show it only when it strictly helps
        if F[i + 1][j + 1] * b.q + b.e > F[i + 1][j]:
            chosen.append(b.id)
            j += 1
    return F[0][0], chosen


def optimal_assignment(bidders: Iterable[MarkovBidder], k: int) -> MarkovOutcome:
    """Most efficient assignment of at most ``k`` ads, in O(n k) after sorting."""
    if k < 1:
        raise ValueError("need at least one slot")
    bidders = list(bidders)
    _by_id(bidders)
    value, chosen = _dp(a_ecpm_order(bidders), k)
    reach = position_factors(bidders, chosen)
    table = _by_id(bidders)
    probs = {b.id: ZERO for b in bidders}
    for x, r in zip(chosen, reach):
        probs[x] = table[x].ctr * r
    return MarkovOutcome(tuple(chosen), value, probs)


def vcg_prices(bidders: Iterable[MarkovBidder], k: int, outcome: MarkovOutcome | None = None) -> tuple[dict, dict]:
    """VCG payments and per-click prices for the optimal assignment.

    A shown bidder pays the value the others would get without her minus
    the value they get with her; dividing by her click probability gives
    the price per click.  Unshown bidders pay nothing.
    """
    bidders = list(bidders)
    if outcome is None:
        outcome = optimal_assignment(bidders, k)
    table = _by_id(bidders)
    payments = {b.id: ZERO for b in bidders}
    prices = {b.id: ZERO for b in bidders}
    for x in outcome.assignment:
        rest = [b for b in bidders if b.id != x]
        without = _dp(a_ecpm_order(rest), k)[0] if rest else ZERO
        own = table[x].bid * outcome.click_probabilities[x]
        pay = without - (outcome.efficiency - own)
        payments[x] = pay
        p = outcome.click_probabilities[x]
        if p == 0:
            if pay != 0:
                raise ArithmeticError(f"bidder {x!r} pays {pay} for zero clicks")
        else:
            prices[x] = pay / p
    return payments, prices


def run_auction(bidders: Iterable[MarkovBidder], k: int) -> MarkovOutcome:
    """Optimal assignment plus VCG payments and prices."""
    bidders = list(bidders)
    out = optimal_assignment(bidders, k)
    payments, prices = vcg_prices(bidders, k, out)
    return replace(out, payments=payments, prices=prices)


def all_optimal_sets(bidders: Iterable[MarkovBidder], k: int, max_bidders: int = 12) -> list[frozenset]:
    """Every bidder set of size at most ``k`` that is optimal when shown in a-ecpm order.

    Exhaustive; refuses instances with more than ``max_bidders`` bidders.
    """
    bidders = list(bidders)
    if len(bidders) > max_bidders:
        raise ValueError(f"{len(bidders)} bidders exceeds the enumeration cap of {max_bidders}")
    best, sets = None, []
    for size in range(0, min(k, len(bidders)) + 1):
        for group in combinations(bidders, size):
            v = efficiency(group, [b.id for b in a_ecpm_order(group)])
            if best is None or v > best:
                best, sets = v, [frozenset(b.id for b in group)]
            elif v == best:
                sets.append(frozenset(b.id for b in group))
    return sets


def substitution_check(bidders: Iterable[MarkovBidder], assignment: Sequence[Hashable], i_in: Hashable, j_out: Hashable) -> bool:
    """Whether swapping shown bidder ``i_in`` for unshown ``j_out`` loses nothing.

    Requires ``j_out`` to match or beat ``i_in`` on both ecpm and adjusted
    ecpm; the swapped set is re-sorted by adjusted ecpm before comparing.
    """
    bidders = list(bidders)
    table = _by_id(bidders)
    _check_assignment(table, assignment)
    if i_in not in assignment:
        raise ValueError(f"{i_in!r} is not in the assignment")
    if j_out in assignment:
        raise ValueError(f"{j_out!r} is already in the assignment")
    bi, bj = table[i_in], table[j_out]
    if bj.e < bi.e or _a_less(bj, bi):
        raise ValueError(f"{j_out!r} does not dominate {i_in!r} in both ecpm and adjusted ecpm")
    before = efficiency(bidders, assignment)
    swapped = [table[x] for x in assignment if x != i_in] + [bj]
    after = efficiency(bidders, [b.id for b in a_ecpm_order(swapped)])
    return after >= before


def _a_less(x: MarkovBidder, y: MarkovBidder) -> bool:
    if x.a is None:
        return False
    if y.a is None:
        return True
    return x.a < y.a


def with_bid(bidders: Sequence[MarkovBidder], bidder: Hashable, bid: Number) -> list[MarkovBidder]:
    """Copy of ``bidders`` with one bid changed."""
    return [replace(b, bid=frac(bid)) if b.id == bidder else b for b in bidders]
