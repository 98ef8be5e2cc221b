"""Preemptive schedules of bidders into ad slots over the unit time interval.

Slot ``j`` delivers ``D_j`` clicks per unit time.  A click allocation is
schedulable iff every prefix of the demands sorted largest-first fits in
the matching prefix of the supplies.  ``build_schedule`` realizes such an
allocation by the composite-machine method for preemptive scheduling on
uniform machines: the largest remaining demand is placed on the first
composite machine that can hold it, wrapped onto the next one at a split
time, and the two leftovers are fused into a new composite machine.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .rational import ONE, ZERO, Number, frac

__all__ = [
    "SlotSupply",
    "ScheduleEntry",
    "Schedule",
    "InfeasibleAllocation",
    "feasible",
    "first_violated_prefix",
    "build_schedule",
    "validate_schedule",
]


class InfeasibleAllocation(ValueError):
    """Raised when click demands cannot be packed into the slots."""


@dataclass(frozen=True)
class SlotSupply:
    """Clicks per slot over ``[0, 1]``, top slot first.

    Positive supplies must strictly decrease; zero-click padding slots may
    only appear at the end.
    """

    clicks_per_slot: tuple[Fraction, ...]

    def __init__(self, clicks_per_slot: Iterable[Number]):
        d = tuple(frac(x) for x in clicks_per_slot)
        for j, x in enumerate(d):
            if x < 0:
                raise ValueError(f"slot {j + 1}: negative supply {x}")
        for j in range(len(d) - 1):
            if d[j + 1] > 0 and d[j] <= d[j + 1]:
                raise ValueError(
                    f"slot supplies must strictly decrease: D{j + 1}={d[j]}, D{j + 2}={d[j + 1]}"
                )
            if d[j] == 0 and d[j + 1] != 0:
                raise ValueError("zero-click slots must come last")
        object.__setattr__(self, "clicks_per_slot", d)

    def __len__(self) -> int:
        return len(self.clicks_per_slot)

    def __getitem__(self, j):
        return self.clicks_per_slot[j]

    def padded(self, n: int) -> "SlotSupply":
        extra = max(0, n - len(self.clicks_per_slot))
        return SlotSupply(self.clicks_per_slot + (ZERO,) * extra)

    @property
    def total(self) -> Fraction:
        return sum(self.clicks_per_slot, ZERO)


@dataclass(frozen=True)
class ScheduleEntry:
    bidder: Hashable
    slot: int  # 1-based
    start: Fraction
    end: Fraction


@dataclass(frozen=True)
class Schedule:
    entries: tuple[ScheduleEntry, ...]

    def delivered(self, supply: SlotSupply) -> dict:
        out: dict = {}
        for e in self.entries:
            out[e.bidder] = out.get(e.bidder, ZERO) + (e.end - e.start) * supply[e.slot - 1]
        return out

    def preemptions(self) -> int:
        """Extra pieces beyond one per scheduled bidder."""
        pieces: dict = {}
        for e in self.entries:
            pieces[e.bidder] = pieces.get(e.bidder, 0) + 1
        return sum(n - 1 for n in pieces.values())


def _as_supply(supply) -> SlotSupply:
    return supply if isinstance(supply, SlotSupply) else SlotSupply(supply)


def first_violated_prefix(clicks: Sequence[Number], supply) -> int | None:
    """1-based length of the first prefix where demand exceeds supply."""
    d = _as_supply(supply).clicks_per_slot
    c = [frac(x) for x in clicks]
    if any(a < b for a, b in zip(c, c[1:])):
        raise ValueError("click vector must be sorted non-increasing")
    if any(x < 0 for x in c):
        raise ValueError("clicks must be non-negative")
    if len(c) > len(d):
        raise ValueError(f"{len(c)} bidders but only {len(d)} slots; pad with empty slots")
    demand = offer = ZERO
    for ell, (x, s) in enumerate(zip(c, d), start=1):
        demand += x
        offer += s
        if demand > offer:
            return ell
    return None


def feasible(clicks: Sequence[Number], supply) -> bool:
    return first_violated_prefix(clicks, supply) is None


# A composite machine is a list of (start, end, slot index) pieces that are
# pairwise disjoint in time.
_Piece = tuple[Fraction, Fraction, int]


def _capacity(comp: list[_Piece], d: Sequence[Fraction], a: Fraction = ZERO, b: Fraction = ONE) -> Fraction:
    total = ZERO
    for s, e, j in comp:
        lo, hi = max(s, a), min(e, b)
        if lo < hi:
            total += (hi - lo) * d[j]
    return total


def _clip(comp: list[_Piece], a: Fraction, b: Fraction) -> list[_Piece]:
    out = []
    for s, e, j in comp:
        lo, hi = max(s, a), min(e, b)
        if lo < hi:
            out.append((lo, hi, j))
    return out


def _split_time(upper: list[_Piece], lower: list[_Piece], d: Sequence[Fraction], target: Fraction) -> Fraction:
    """Time t with cap(upper on [0,t]) + cap(lower on [t,1]) == target.

    The left side runs continuously from cap(lower) at t=0 to cap(upper) at
    t=1, and is linear between piece boundaries.
    """
    marks = sorted({ZERO, ONE} | {x for s, e, _ in upper + lower for x in (s, e)})

    def g(t):
        return _capacity(upper, d, ZERO, t) + _capacity(lower, d, t, ONE)

    prev_t, prev_g = marks[0], g(marks[0])
    if prev_g == target:
        return prev_t
    for t in marks[1:]:
        gt = g(t)
        if gt == target:
            return t
        if (prev_g - target) * (gt - target) < 0:
            return prev_t + (target - prev_g) * (t - prev_t) / (gt - prev_g)
        prev_t, prev_g = t, gt
    raise AssertionError("split time not bracketed")


def build_schedule(clicks: Mapping[Hashable, Number] | Sequence[Number], supply) -> Schedule:
    """Explicit preemptive schedule delivering exactly ``clicks`` to each bidder.

    ``clicks`` is a mapping from bidder to demand, or a sequence (bidders are
    then the indices).  Raises ``InfeasibleAllocation`` naming the first
    violated prefix when no schedule exists.
    """
    sup = _as_supply(supply)
    items = list(clicks.items()) if isinstance(clicks, Mapping) else list(enumerate(clicks))
    items = [(b, frac(c)) for b, c in items]
    order = sorted(range(len(items)), key=lambda i: -items[i][1])
    demands = [items[i][1] for i in order]
    bad = first_violated_prefix(demands, sup.padded(len(demands)))
    if bad is not None:
        raise InfeasibleAllocation(
            f"the {bad} largest demands need {sum(demands[:bad])} clicks but the top {bad} "
            f"slots supply only {sum(sup.padded(bad).clicks_per_slot[:bad])}"
        )

    d = sup.clicks_per_slot
    comps: list[list[_Piece]] = [[(ZERO, ONE, j)] for j in range(len(d)) if d[j] > 0]
    caps = [d[j] for j in range(len(d)) if d[j] > 0]
    pieces: dict[Hashable, list[_Piece]] = {}

    for i in order:
        bidder, need = items[i]
        if need == 0:
            continue
        # comps stays sorted by capacity, largest first
        ell = max(m for m in range(len(comps)) if caps[m] >= need)
        if caps[ell] == need:
            pieces[bidder] = comps[ell]
            del comps[ell], caps[ell]
            continue
        upper = comps[ell]
        lower = comps[ell + 1] if ell + 1 < len(comps) else []
        t = _split_time(upper, lower, d, need)
        pieces[bidder] = _clip(upper, ZERO, t) + _clip(lower, t, ONE)
        rest = _clip(lower, ZERO, t) + _clip(upper, t, ONE)
        rest_cap = caps[ell] + (caps[ell + 1] if lower else ZERO) - need
        del comps[ell : ell + 2], caps[ell : ell + 2]
        pos = 0
        while pos < len(caps) and caps[pos] >= rest_cap:
            pos += 1
        comps.insert(pos, rest)
        caps.insert(pos, rest_cap)

    entries = []
    for bidder, _ in items:
        merged: list[_Piece] = []
        for s, e, j in sorted(pieces.get(bidder, []), key=lambda p: (p[0], p[2])):
            if merged and merged[-1][2] == j and merged[-1][1] == s:
                merged[-1] = (merged[-1][0], e, j)
            else:
                merged.append((s, e, j))
        entries.extend(ScheduleEntry(bidder, j + 1, s, e) for s, e, j in merged)
    return Schedule(tuple(entries))


def validate_schedule(schedule: Schedule, clicks: Mapping[Hashable, Number], supply) -> None:
    """Raise ``ValueError`` unless the schedule is feasible and delivers ``clicks`` exactly."""
    sup = _as_supply(supply)
    by_slot: dict[int, list[tuple[Fraction, Fraction]]] = {}
    by_bidder: dict[Hashable, list[tuple[Fraction, Fraction]]] = {}
    for e in schedule.entries:
        if not (ZERO <= e.start < e.end <= ONE):
            raise ValueError(f"bad interval [{e.start}, {e.end}) for {e.bidder!r}")
        if not 1 <= e.slot <= len(sup):
            raise ValueError(f"unknown slot {e.slot}")
        by_slot.setdefault(e.slot, []).append((e.start, e.end))
        by_bidder.setdefault(e.bidder, []).append((e.start, e.end))
    for what, groups in (("slot", by_slot), ("bidder", by_bidder)):
        for key, ivs in groups.items():
            ivs.sort()
            for (s1, e1), (s2, _) in zip(ivs, ivs[1:]):
                if s2 < e1:
                    raise ValueError(f"{what} {key!r} has overlapping intervals at {s2}")
    got = schedule.delivered(sup)
    for bidder, want in clicks.items():
        if got.get(bidder, ZERO) != frac(want):
            raise ValueError(f"bidder {bidder!r} gets {got.get(bidder, ZERO)} clicks, wants {want}")
    extra = set(got) - set(clicks)
    if extra:
        raise ValueError(f"schedule serves unknown bidders {sorted(map(str, extra))}")
