"""Substitute scoring: the per-position term tree and the exhaustive oracle.

Replacing one token of a padded sentence changes the conditional of its own
position and of the following order-1 positions; everything else cancels
when ranking candidates. The term tree freezes that structure for a target
position: one block per affected conditional, one branch per back-off
alternative, with the candidate's slot marked by a hole. Scoring a word is
then: per block, take the first branch whose probability argument is
stored, and sum back-off weights plus that probability.

Summation order is pinned (blocks in order; within a branch, back-off terms
left to right, probability last) so the fast engine, the oracle, and plain
sequence scoring all produce bit-identical floats.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .lm import ABSENT, BOS_ID, EOS_ID, WORD_BITS, NgramLM, pack

# Marks the candidate slot inside term arguments and histories.
HOLE = -1


@dataclass(frozen=True, slots=True)
class Query:
    """A padded sentence, the target position, and how many substitutes."""
    words: tuple
    target: int
    k: int

    def __post_init__(self):
        if len(self.words) < 3:
            raise ValueError("padded sentence needs at least boundary tokens and a target")
        if self.words[0] != BOS_ID or self.words[-1] != EOS_ID:
            raise ValueError("sentence must be padded with <s> and </s>")
        if not 1 <= self.target <= len(self.words) - 2:
            raise ValueError(f"target {self.target} points at a boundary token")
        if self.k < 1:
            raise ValueError(f"substitute count must be >= 1, got {self.k}")


@dataclass(frozen=True, slots=True)
class Term:
    """One primitive argument; hole-bearing terms pre-pack their code."""
    gram: tuple
    hole: int | None
    size: int
    value: float       # exact stored value when hole is None
    context: tuple     # gram without the hole slot
    base_code: int     # packed code with a zero at the hole
    shift: int         # left shift that drops a candidate id into the code


@dataclass(frozen=True, slots=True)
class Branch:
    betas: tuple
    alpha: Term


@dataclass(frozen=True, slots=True)
class Block:
    predicted: int     # HOLE for the target's own conditional
    history: tuple     # with HOLE where the target sits
    branches: tuple


@dataclass(frozen=True, slots=True)
class TermTree:
    blocks: tuple
    query: Query


class Substitute(NamedTuple):
    word: int
    score: float


def _make_term(lm: NgramLM, gram: tuple, backoff: bool) -> Term:
    size = len(gram)
    if HOLE in gram:
        hole = gram.index(HOLE)
        context = gram[:hole] + gram[hole + 1:]
        base_code = pack(tuple(0 if w == HOLE else w for w in gram))
        shift = WORD_BITS * (size - 1 - hole)
        return Term(gram, hole, size, 0.0, context, base_code, shift)
    value = lm.backoff(gram) if backoff else lm.logprob(gram)
    return Term(gram, None, size, value, gram, pack(gram), 0)


def build_term_tree(lm: NgramLM, query: Query) -> TermTree:
    """Blocks for positions target..target+order-1, clipped at </s>.

    Block j predicts the word at padded index target+j from the preceding
    min(order-1, index) words, with the hole standing in at the target.
    Every block's last branch bottoms out at a unigram, so scoring is total.
    """
    order = lm.order
    words = query.words
    t = query.target
    last = len(words) - 1
    holed = list(words)
    holed[t] = HOLE
    blocks = []
    for j in range(order):
        pos = t + j
        if pos > last:
            break
        lo = max(0, pos - (order - 1))
        history = tuple(holed[lo:pos])
        predicted = HOLE if j == 0 else words[pos]
        branches = []
        for m in range(len(history) + 1):
            betas = tuple(_make_term(lm, history[i:], backoff=True) for i in range(m))
            alpha = _make_term(lm, history[m:] + (predicted,), backoff=False)
            branches.append(Branch(betas, alpha))
        blocks.append(Block(predicted, history, tuple(branches)))
    return TermTree(tuple(blocks), query)


def substitute_logp(lm: NgramLM, tree: TermTree, x: int) -> float:
    """Exact unnormalized score of candidate x for the tree's position.

    Equals the sum over blocks of the back-off conditional with x
    substituted, term for term and float for float.
    """
    logprob = lm._logprob
    backoff = lm._backoff
    total = 0.0
    for block in tree.blocks:
        value = ABSENT
        branch = None
        for branch in block.branches:
            at = branch.alpha
            if at.hole is None:
                value = at.value
            else:
                value = logprob[at.size].get(at.base_code | (x << at.shift), ABSENT)
            if value != ABSENT:
                break
        acc = 0.0
        for bt in branch.betas:
            if bt.hole is None:
                acc += bt.value
            else:
                acc += backoff[bt.size].get(bt.base_code | (x << bt.shift), 0.0)
        total += acc + value
    return total


def rank(scored: Iterable[tuple[int, float]], k: int) -> list[Substitute]:
    """Order (word, score) pairs by score descending, id ascending; keep k."""
    best = sorted(scored, key=lambda ws: (-ws[1], ws[0]))
    return [Substitute(w, s) for w, s in best[:k]]


def oracle_topk(lm: NgramLM, query: Query, include_unk: bool = False,
                exclude: frozenset = frozenset()) -> list[Substitute]:
    """Score every eligible word; the ground truth the fast engine must match."""
    tree = build_term_tree(lm, query)
    banned = lm.ineligible_ids(include_unk)
    if exclude:
        banned = banned | frozenset(exclude)
    scored = [(x, substitute_logp(lm, tree, x))
              for x in range(len(lm.vocab)) if x not in banned]
    return rank(scored, query.k)
