"""Command-line front end.

    adauction landscape --input four_position
    adauction budget --input shared_query --strategy two --budget 3/2
    adauction slots --input four_bidder_blocks --mechanism ps
    adauction markov --input markov_k2
    adauction audit --input first_price_witness --mechanism gfp_single
    adauction gen --kind slots --seed 0 --bidders 3

``--input`` is a path, or the name of a bundled fixture (looked up in
``$ADAUCTION_FIXTURES`` when set).  Output is an aligned text table by
default, or one JSON record per line with ``--format jsonl``.  Numbers are
exact ``num/den`` strings unless ``--decimals`` is given.

Exit status: 0 on success, 1 when an audit finds a profitable deviation,
2 on bad input.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from . import instances
from .budget import (
    best_uniform_single_bid,
    best_uniform_two_bid,
    daily_adjustment_step,
    evaluate_uniform,
    per_query_knapsack_opt,
    single_bid_bound_holds,
    two_bid_bound_holds,
)
from .landscape import build_landscape, convex_hull
from .markov import run_auction
from .oracles import DeviationGrid, SLOT_MECHANISMS, truthfulness_audit
from .rational import ZERO, fmt, frac
from .scheduling import InfeasibleAllocation
from .slots import MECHANISMS, schedule_outcome, scale_bids_for_ctr, unscale_outcome

FIXTURE_DIR = Path(__file__).parent / "fixtures"


class CliError(Exception):
    pass


def fixture_dir() -> Path:
    env = os.environ.get("ADAUCTION_FIXTURES")
    return Path(env) if env else FIXTURE_DIR


def resolve_input(name: str) -> Path:
    p = Path(name)
    if p.is_file():
        return p
    for cand in (fixture_dir() / name, fixture_dir() / f"{name}.json"):
        if cand.is_file():
            return cand
    raise CliError(f"no such input file or fixture: {name}")


def read_instance(name: str):
    path = resolve_input(name)
    try:
        return instances.loads(path.read_text())
    except instances.InstanceError as exc:
        raise CliError(f"{path}: {exc}") from None


# -- output -----------------------------------------------------------------

class Emitter:
    def __init__(self, decimals: int | None):
        self.decimals = decimals
        self.records: list[dict] = []

    def num(self, x) -> str | None:
        if x is None:
            return None
        return fmt(x, self.decimals)

    def add(self, kind: str, **fields) -> None:
        self.records.append({"type": kind, **fields})

    def jsonl(self) -> str:
        return "".join(json.dumps(r) + "\n" for r in self.records)

    def human(self) -> str:
        out, i = [], 0
        while i < len(self.records):
            kind = self.records[i]["type"]
            j = i
            while j < len(self.records) and self.records[j]["type"] == kind:
                j += 1
            out.append(_table(kind, self.records[i:j]))
            i = j
        return "\n".join(out)


def _cell(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, (list, dict)):
        return json.dumps(v, separators=(",", ":"))
    return str(v)


def _table(kind: str, rows: list[dict]) -> str:
    cols = [c for c in rows[0] if c != "type"]
    cells = [[_cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[k]) for row in cells)) for k, c in enumerate(cols)]
    lines = [f"# {kind}", "  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
    for row in cells:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


# -- subcommands ------------------------------------------------------------

def cmd_landscape(args, em: Emitter) -> int:
    doc = read_instance(args.input)
    try:
        auction = instances.auction_from_json(doc)
    except instances.InstanceError as exc:
        raise CliError(str(exc)) from None
    land = build_landscape(auction)
    on_hull = {(p.cost, p.clicks) for p in convex_hull(land).points}
    for p in land.points:
        em.add(
            "point",
            bid_low=em.num(p.bid_low),
            bid_high=em.num(p.bid_high),
            cpc=em.num(p.cpc),
            cost=em.num(p.cost),
            clicks=em.num(p.clicks),
            on_hull=(p.cost, p.clicks) in on_hull,
        )
    return 0


def _atoms(em: Emitter, atoms) -> list[dict]:
    return [{"bid": em.num(b), "weight": em.num(w)} for b, w in atoms]


def _budgets(args, graph, doc_budget) -> list[Fraction]:
    if args.sweep is not None:
        if args.sweep < 1:
            raise CliError("--sweep needs at least one step")
        top = sum((land.max_cost for land in graph.landscapes.values()), ZERO)
        return [top * i / args.sweep for i in range(args.sweep + 1)]
    if args.budget is not None:
        try:
            vals = [frac(x) for x in args.budget.split(",")]
        except (ValueError, ZeroDivisionError):
            raise CliError(f"bad --budget {args.budget!r}") from None
    elif doc_budget is not None:
        vals = [doc_budget]
    else:
        raise CliError("no budget: give --budget or put one in the instance")
    if any(v < 0 for v in vals):
        raise CliError("budgets must be non-negative")
    return vals


def _ratio(em: Emitter, a: Fraction, b: Fraction):
    return em.num(a / b) if b else None


def cmd_budget(args, em: Emitter) -> int:
    try:
        graph, doc_budget = instances.budget_instance_from_json(read_instance(args.input))
    except instances.InstanceError as exc:
        raise CliError(str(exc)) from None
    budgets = _budgets(args, graph, doc_budget)
    strategy = args.strategy or ("sweep" if len(budgets) > 1 else "two")

    if strategy == "adjust":
        return _adjust(args, em, graph, budgets)
    if strategy == "sweep":
        for B in budgets:
            single = best_uniform_single_bid(graph, B).traffic
            two = best_uniform_two_bid(graph, B).traffic
            opt = per_query_knapsack_opt(graph.landscapes, B).traffic
            em.add(
                "sweep",
                budget=em.num(B),
                single=em.num(single),
                two=em.num(two),
                opt=em.num(opt),
                two_over_opt=_ratio(em, two, opt),
                single_over_opt=_ratio(em, single, opt),
                bounds_hold=two_bid_bound_holds(two, opt) and single_bid_bound_holds(single, opt),
            )
        return 0
    for B in budgets:
        if strategy == "knapsack-opt":
            res = per_query_knapsack_opt(graph.landscapes, B)
            em.add(
                "strategy",
                strategy=strategy,
                budget=em.num(B),
                expected_spend=em.num(res.spend),
                expected_traffic=em.num(res.traffic),
                per_query={q: _atoms(em, d.atoms) for q, d in res.distributions.items()},
            )
            continue
        pick = best_uniform_two_bid if strategy == "two" else best_uniform_single_bid
        s = pick(graph, B)
        em.add(
            "strategy",
            strategy=strategy,
            budget=em.num(B),
            atoms=_atoms(em, s.atoms),
            expected_spend=em.num(s.spend),
            expected_traffic=em.num(s.traffic),
        )
    return 0


def _adjust(args, em: Emitter, graph, budgets) -> int:
    if len(budgets) != 1:
        raise CliError("--strategy adjust takes a single budget")
    (B,) = budgets
    delta = frac(args.delta)
    if delta <= 0:
        raise CliError("--delta must be positive")
    bid = frac(args.start_bid)
    for day in range(args.days):
        spend, traffic = evaluate_uniform(graph, [(bid, 1)])
        em.add("day", day=day, bid=em.num(bid), spend=em.num(spend), traffic=em.num(traffic))
        bid = daily_adjustment_step(bid, spend, B, delta)
    return 0


def _slot_input(args):
    try:
        return instances.slot_instance_from_json(read_instance(args.input))
    except instances.InstanceError as exc:
        raise CliError(str(exc)) from None


def cmd_slots(args, em: Emitter) -> int:
    bidders, supply, _, ctrs = _slot_input(args)
    mech = args.mechanism or "ps"
    if mech not in MECHANISMS:
        raise CliError(f"unknown slot mechanism {mech!r}; pick from {', '.join(MECHANISMS)}")
    run = MECHANISMS[mech]
    scaled = scale_bids_for_ctr(bidders, ctrs) if ctrs else bidders
    raw = run(scaled, supply)
    try:
        sched = schedule_outcome(raw, supply.padded(len(bidders)))
    except InfeasibleAllocation as exc:
        raise CliError(f"mechanism produced an unschedulable allocation: {exc}") from None
    out = unscale_outcome(raw, ctrs) if ctrs else raw
    for i in out.bidder_order:
        em.add(
            "bidder",
            id=str(i),
            clicks=em.num(out.clicks[i]),
            price=em.num(out.prices[i]),
            spend=em.num(out.spend(i)),
        )
    for n, blk in enumerate(out.blocks, start=1):
        em.add(
            "block",
            block=n,
            price=em.num(blk.price),
            bidders=[str(i) for i in blk.bidders],
            slots=list(blk.slots),
            threshold=None if blk.threshold is None else str(blk.threshold),
            threshold_budget=em.num(blk.threshold_budget),
        )
    for e in sched.entries:
        em.add("schedule", bidder=str(e.bidder), slot=e.slot, start=em.num(e.start), end=em.num(e.end))
    em.add("summary", mechanism=mech, revenue=em.num(out.revenue))
    return 0


def _markov_input(args):
    try:
        bidders, k = instances.markov_instance_from_json(read_instance(args.input))
    except instances.InstanceError as exc:
        raise CliError(str(exc)) from None
    if args.k is not None:
        if args.k < 1:
            raise CliError("--k must be positive")
        k = args.k
    return bidders, k


def cmd_markov(args, em: Emitter) -> int:
    bidders, k = _markov_input(args)
    out = run_auction(bidders, k)
    for pos, i in enumerate(out.assignment, start=1):
        em.add(
            "slot",
            position=pos,
            id=str(i),
            click_probability=em.num(out.click_probabilities[i]),
            payment=em.num(out.payments[i]),
            price=em.num(out.prices[i]),
        )
    em.add("summary", k=k, assignment=[str(i) for i in out.assignment], efficiency=em.num(out.efficiency))
    return 0


def _grid(args) -> DeviationGrid:
    kw = {}
    if args.grid:
        try:
            kw["multipliers"] = tuple(frac(x) for x in args.grid.split(","))
        except (ValueError, ZeroDivisionError):
            raise CliError(f"bad --grid {args.grid!r}") from None
    if args.iota is not None:
        kw["iota"] = frac(args.iota)
    try:
        return DeviationGrid(**kw)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def cmd_audit(args, em: Emitter) -> int:
    mech = args.mechanism or "ps_general"
    grid = _grid(args)
    if mech == "markov_vcg":
        bidders, k = _markov_input(args)
        found = truthfulness_audit(mech, bidders, grid=grid, k=k)
        checked = len(bidders)
    elif mech in SLOT_MECHANISMS:
        bidders, supply, truth, _ = _slot_input(args)
        try:
            found = truthfulness_audit(mech, bidders, supply, truth, grid)
        except ValueError as exc:
            raise CliError(str(exc)) from None
        checked = len(bidders)
    else:
        names = ", ".join([*SLOT_MECHANISMS, "markov_vcg"])
        raise CliError(f"unknown audit mechanism {mech!r}; pick from {names}")

    def util(u):
        return "-inf" if u == float("-inf") else em.num(u)

    for d in found:
        em.add(
            "deviation",
            bidder=str(d.bidder),
            declared_bid=em.num(d.declared_bid),
            declared_budget=em.num(d.declared_budget),
            truthful_utility=util(d.truthful_utility),
            deviant_utility=util(d.deviant_utility),
            clicks=em.num(d.clicks),
            price=em.num(d.price),
        )
    em.add(
        "summary",
        mechanism=mech,
        bidders=checked,
        grid=[em.num(m) for m in grid.multipliers],
        iota=em.num(grid.iota),
        deviations=len(found),
    )
    return 1 if found else 0


def cmd_gen(args) -> str:
    if args.seed is None:
        raise CliError("gen needs --seed")
    rng = random.Random(args.seed)
    try:
        if args.kind == "slots":
            n = 3 if args.bidders is None else args.bidders
            if n < 1 or (args.slots is not None and args.slots < 1):
                raise CliError("need at least one bidder and one slot")
            doc = instances.random_slot_instance(rng, n, args.slots)
        elif args.kind == "markov":
            n = 5 if args.bidders is None else args.bidders
            k = 3 if args.k is None else args.k
            if n < 1 or k < 1:
                raise CliError("need at least one bidder and one slot")
            doc = instances.random_markov_instance(rng, n, k)
        else:
            if args.queries < 1 or args.keywords < 1:
                raise CliError("need at least one query and one keyword")
            doc = instances.random_budget_instance(rng, args.queries, args.keywords)
    except ValueError as exc:
        raise CliError(f"invalid shape: {exc}") from None
    return json.dumps(doc, indent=2) + "\n"


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adauction", description="Sponsored-search auction toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("--input", "-i", required=True, help="instance file or fixture name")
        sp.add_argument("--output", "-o", help="write here instead of stdout")
        sp.add_argument("--format", choices=["human", "jsonl"], default="human")
        sp.add_argument("--decimals", type=int, help="round numbers to N places instead of exact fractions")
        return sp

    common(sub.add_parser("landscape", help="bid landscape and its convex hull"))

    b = common(sub.add_parser("budget", help="uniform bidding under a budget"))
    b.add_argument("--budget", help="budget, or comma-separated budgets for a sweep table")
    b.add_argument("--strategy", choices=["single", "two", "knapsack-opt", "sweep", "adjust"])
    b.add_argument("--sweep", type=int, metavar="N", help="sweep N+1 budgets from 0 to the total max cost")
    b.add_argument("--delta", default="1/10", help="daily adjustment step (strategy adjust)")
    b.add_argument("--days", type=int, default=20, help="days to simulate (strategy adjust)")
    b.add_argument("--start-bid", default="1", help="initial bid (strategy adjust)")

    s = common(sub.add_parser("slots", help="run a slot scheduling mechanism"))
    s.add_argument("--mechanism", "-m", choices=sorted(MECHANISMS))

    m = common(sub.add_parser("markov", help="optimal assignment with VCG prices"))
    m.add_argument("--k", type=int, help="override the slot count")

    a = common(sub.add_parser("audit", help="search for profitable misreports"))
    a.add_argument("--mechanism", "-m", help="ps_single, ps_multi_budgets_only, ps_general, gfp_single, gfp_multi, markov_vcg")
    a.add_argument("--grid", help="comma-separated multipliers of the true value")
    a.add_argument("--iota", help="offset around competitor values")
    a.add_argument("--k", type=int, help="override the slot count (markov_vcg)")

    g = sub.add_parser("gen", help="write a seeded random instance")
    g.add_argument("--seed", type=int)
    g.add_argument("--kind", choices=["budget", "slots", "markov"], default="slots")
    g.add_argument("--bidders", type=int)
    g.add_argument("--slots", type=int)
    g.add_argument("--k", type=int)
    g.add_argument("--queries", type=int, default=5)
    g.add_argument("--keywords", type=int, default=3)
    g.add_argument("--output", "-o")
    return p


COMMANDS = {
    "landscape": cmd_landscape,
    "budget": cmd_budget,
    "slots": cmd_slots,
    "markov": cmd_markov,
    "audit": cmd_audit,
}


def _write(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Iterable[str] | None = None) -> int:
    args = build_parser().parse_args(None if argv is None else list(argv))
    try:
        if args.command == "gen":
            _write(cmd_gen(args), args.output)
            return 0
        if getattr(args, "decimals", None) is not None and args.decimals < 0:
            raise CliError("--decimals must be non-negative")
        em = Emitter(args.decimals)
        code = COMMANDS[args.command](args, em)
        _write(em.jsonl() if args.format == "jsonl" else em.human(), args.output)
        return code
    except (CliError, OSError, ValueError) as exc:
        print(f"adauction: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
