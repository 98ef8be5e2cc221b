"""Sponsored-search auction toolkit.

Modules:

- ``landscape``: one GSP query auction as a bid -> (cost, clicks) step function
- ``budget``: uniform bidding strategies for a budget across many queries
- ``scheduling``: preemptive slot schedules and their feasibility test
- ``slots``: greedy first-price and price-setting click allocation
- ``markov``: ad assignment for a top-down scanning user, with VCG prices
- ``oracles``: brute-force checks for all of the above
"""

__version__ = "0.1.0"
