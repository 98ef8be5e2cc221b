"""Hypothesis strategies and seeded generators shared by the tests."""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from hypothesis import strategies as st

from adauction.landscape import QueryAuction, build_landscape
from adauction.markov import MarkovBidder
from adauction.slots import SlotBidder
from adauction.scheduling import SlotSupply

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "adauction" / "fixtures"


def fixture(name: str) -> dict:
    from adauction.instances import loads
    return loads((FIXTURES / f"{name}.json").read_text())


def fractions(lo: int, hi: int, den: int):
    return st.integers(lo, hi).map(lambda n: Fraction(n, den))


@st.composite
def auctions(draw, max_positions: int = 4):
    p = draw(st.integers(0, max_positions))
    ctrs = sorted(draw(st.lists(fractions(0, 20, 20), min_size=p, max_size=p)), reverse=True)
    bids = sorted(draw(st.lists(fractions(1, 40, 10), min_size=p, max_size=p)), reverse=True)
    return QueryAuction(ctrs, bids)


landscapes = auctions().map(build_landscape)


@st.composite
def supplies(draw, n: int):
    vals = draw(st.lists(st.integers(1, 60), min_size=n, max_size=n, unique=True))
    return SlotSupply(sorted(vals, reverse=True))


@st.composite
def slot_instances(draw, max_bidders: int = 4, single_slot: bool = False):
    n = draw(st.integers(1, max_bidders))
    bids = draw(st.lists(st.integers(1, 24), min_size=n, max_size=n, unique=True))
    budgets = draw(st.lists(st.integers(1, 80), min_size=n, max_size=n, unique=True))
    bidders = [SlotBidder(str(i + 1), Fraction(bids[i], 4), budgets[i], i) for i in range(n)]
    m = 1 if single_slot else draw(st.integers(1, max_bidders))
    return bidders, draw(supplies(m))


@st.composite
def markov_instances(draw, max_bidders: int = 6, max_k: int = 3):
    n = draw(st.integers(1, max_bidders))
    bidders = [
        MarkovBidder(
            str(i + 1),
            draw(fractions(1, 10, 10)),
            draw(fractions(0, 10, 10)),
            draw(fractions(0, 20, 4)),
            i,
        )
        for i in range(n)
    ]
    return bidders, draw(st.integers(1, max_k))


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True)
