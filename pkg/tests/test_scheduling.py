from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from adauction.scheduling import (
    InfeasibleAllocation,
    Schedule,
    ScheduleEntry,
    SlotSupply,
    build_schedule,
    feasible,
    first_violated_prefix,
    validate_schedule,
)


class TestSupply:
    def test_strictly_decreasing(self):
        with pytest.raises(ValueError):
            SlotSupply([50, 50])
        with pytest.raises(ValueError):
            SlotSupply([10, 0, 5])
        with pytest.raises(ValueError):
            SlotSupply([-1])

    def test_zero_padding_allowed(self):
        s = SlotSupply([100, 50, 0, 0])
        assert s.total == 150 and len(s) == 4
        assert SlotSupply([3]).padded(3).clicks_per_slot == (3, 0, 0)


class TestFeasible:
    def test_four_bidder_blocks_first_block(self):
        assert feasible([80, 70], [100, 50])

    def test_equal_demands(self):
        assert feasible([60, 60], [100, 50])

    def test_first_prefix_violated(self):
        assert not feasible([120, 40], [100, 50])
        assert first_violated_prefix([120, 40], [100, 50]) == 1

    def test_second_prefix_violated(self):
        assert first_violated_prefix([90, 61], [100, 50]) == 2

    def test_empty(self):
        assert feasible([], [100])

    def test_unsorted_rejected(self):
        with pytest.raises(ValueError):
            feasible([40, 80], [100, 50])

    def test_too_many_bidders(self):
        with pytest.raises(ValueError):
            feasible([1, 1, 1], [100, 50])


class TestValidator:
    def test_bidder_in_two_slots_at_once(self):
        # right totals (80 and 20 + 50) but bidder b holds both slots during [0.8, 1)
        bad = Schedule((
            ScheduleEntry("a", 1, F(0), F(4, 5)),
            ScheduleEntry("b", 1, F(4, 5), F(1)),
            ScheduleEntry("b", 2, F(0), F(1)),
        ))
        assert bad.delivered(SlotSupply([100, 50])) == {"a": 80, "b": 70}
        with pytest.raises(ValueError, match="overlapping"):
            validate_schedule(bad, {"a": 80, "b": 70}, [100, 50])

    def test_slot_double_booked(self):
        bad = Schedule((ScheduleEntry("a", 1, F(0), F(1, 2)), ScheduleEntry("b", 1, F(1, 4), F(3, 4))))
        with pytest.raises(ValueError):
            validate_schedule(bad, {"a": 50, "b": 50}, [100])

    def test_wrong_totals(self):
        s = Schedule((ScheduleEntry("a", 1, F(0), F(1, 2)),))
        with pytest.raises(ValueError):
            validate_schedule(s, {"a": 60}, [100])
        with pytest.raises(ValueError):
            validate_schedule(s, {}, [100])

    def test_bad_interval(self):
        s = Schedule((ScheduleEntry("a", 1, F(1, 2), F(1, 2)),))
        with pytest.raises(ValueError):
            validate_schedule(s, {"a": 0}, [100])


class TestBuild:
    def test_four_bidder_blocks_first_block(self):
        s = build_schedule({"1": 80, "2": 70}, [100, 50])
        validate_schedule(s, {"1": 80, "2": 70}, [100, 50])
        assert s.entries == (
            ScheduleEntry("1", 1, F(0), F(3, 5)),
            ScheduleEntry("1", 2, F(3, 5), F(1)),
            ScheduleEntry("2", 2, F(0), F(3, 5)),
            ScheduleEntry("2", 1, F(3, 5), F(1)),
        )

    def test_single_slot_full(self):
        s = build_schedule([F(7)], [7])
        assert s.entries == (ScheduleEntry(0, 1, F(0), F(1)),)

    def test_tight_two_slots(self):
        s = build_schedule({"a": 100, "b": 50}, [100, 50])
        validate_schedule(s, {"a": 100, "b": 50}, [100, 50])
        assert s.preemptions() == 0

    def test_zero_demand_gets_nothing(self):
        s = build_schedule({"a": 10, "b": 0}, [100, 50])
        assert {e.bidder for e in s.entries} == {"a"}

    def test_infeasible_names_prefix(self):
        with pytest.raises(InfeasibleAllocation, match="the 1 largest"):
            build_schedule({"a": 120, "b": 10}, [100, 50])
        with pytest.raises(InfeasibleAllocation, match="the 2 largest"):
            build_schedule([90, 61], [100, 50])

    def test_more_bidders_than_slots(self):
        s = build_schedule([30, 30, 30], [100])
        validate_schedule(s, {0: 30, 1: 30, 2: 30}, [100])


@st.composite
def feasible_demands(draw):
    m = draw(st.integers(1, 5))
    supply = sorted(draw(st.lists(st.integers(1, 90), min_size=m, max_size=m, unique=True)), reverse=True)
    n = draw(st.integers(1, 6))
    raw = sorted(draw(st.lists(st.integers(0, 90), min_size=n, max_size=n)), reverse=True)
    sup = SlotSupply(supply).padded(n)
    ratio = F(0)
    demand = offer = F(0)
    for x, s in zip(raw, sup.clicks_per_slot):
        demand += x
        offer += s
        if demand:
            ratio = max(ratio, demand / offer)
    scale = draw(st.sampled_from([F(1), F(1), F(9, 10), F(1, 2), F(1, 7)]))
    clicks = [x * scale / ratio if ratio else F(0) for x in raw]
    return clicks, sup, m


@given(feasible_demands())
def test_constructor_meets_the_contract(case):
    clicks, sup, m = case
    assert feasible(clicks, sup)
    s = build_schedule(clicks, sup)
    validate_schedule(s, dict(enumerate(clicks)), sup)
    # at most 2(m - 1) preemptions for m real slots
    assert s.preemptions() <= 2 * (m - 1)
