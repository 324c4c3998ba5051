"""Best-first top-K substitute search over the upper-bound queue.

Pops candidates from the root queue, scores each exactly, and stops once
the K-th best score strictly clears the bound on everything unseen. The
bound is admissible, so the returned scores equal the exhaustive oracle's;
draining continues through bound ties at the cutoff so that word ids match
the oracle's (score descending, id ascending) order as well.
"""
from __future__ import annotations

import time
from bisect import insort
from dataclasses import dataclass

from .lm import NgramLM
from .scorer import Query, Substitute, build_term_tree, rank, substitute_logp
from .ubqueue import FillerIndex, build_root

# Slack applied wherever a score meets the bound: scores and bounds sum the
# same terms in different groupings, so allow for last-ulp drift.
TIE_EPS = 1e-9


@dataclass
class SearchStats:
    """Work done by one query: raw pops, bound at exit, scored words, wall ns."""
    pops: int
    final_sup: float
    candidates: int
    nanos: int


def topk_substitutes(lm: NgramLM, index: FillerIndex, query: Query,
                     include_unk: bool = False,
                     exclude: frozenset = frozenset()) -> tuple[list[Substitute], SearchStats]:
    """Exact top-K substitutes plus the search statistics.

    Result lists are identical to oracle_topk on the same arguments. With K
    at or above the eligible vocabulary size this degrades to a full drain
    and returns every eligible word, ranked.
    """
    started = time.perf_counter_ns()
    tree = build_term_tree(lm, query)
    banned = lm.ineligible_ids(include_unk)
    if exclude:
        banned = banned | frozenset(exclude)
    root = build_root(tree, index, banned)
    k = query.k
    scores: dict[int, float] = {}
    ordered: list[float] = []
    while True:
        if len(ordered) >= k and root.bound < ordered[-k] - TIE_EPS:
            break
        word = root.pop()
        if word is None:
            break
        score = substitute_logp(lm, tree, word)
        scores[word] = score
        insort(ordered, score)
    subs = rank(scores.items(), k)
    stats = SearchStats(root.pops, root.bound, len(scores),
                        time.perf_counter_ns() - started)
    return subs, stats
