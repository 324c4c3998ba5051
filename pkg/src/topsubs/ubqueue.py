"""Upper-bound queues over pre-sorted filler lists.

An upper bound queue hands out candidate words in a loose order while
maintaining a `sup` that never understates the value of anything still
inside it. Primitive queues are cursors over lists of (word, logprob)
pairs sorted descending, built once per model for every "context with a
gap" pattern; compound queues combine children by summing bounds (sums),
taking the max bound (back-off alternatives), or summing block bounds with
duplicate suppression (the per-query root).

The required invariants are: sup never increases over a queue's lifetime,
and every word a queue emits had a true value no larger than sup at the
moment before it was popped.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .lm import ABSENT, WORD_BITS, _WORD_MASK, NgramLM
from .scorer import Term, TermTree


@dataclass(frozen=True)
class GapPattern:
    """An n-gram shape with one open slot: length, slot position, fixed words."""
    length: int
    gap: int
    context: tuple

    def __post_init__(self):
        if not 0 <= self.gap < self.length or len(self.context) != self.length - 1:
            raise ValueError(f"inconsistent gap pattern {self}")


class FillerList:
    """Words observed in a gap pattern with their logprobs, best first.

    A read-only view into the index's backing arrays; ordering is
    (logprob descending, word id ascending) and ids are unique.
    """

    __slots__ = ("_words", "_vals", "_start", "_stop")

    def __init__(self, words: np.ndarray, vals: np.ndarray, start: int, stop: int):
        self._words = words
        self._vals = vals
        self._start = start
        self._stop = stop

    def __len__(self) -> int:
        return self._stop - self._start

    def word(self, i: int) -> int:
        return self._words.item(self._start + i)

    def logprob(self, i: int) -> float:
        return self._vals.item(self._start + i)

    def pairs(self) -> Iterator[tuple[int, float]]:
        for i in range(len(self)):
            yield self.word(i), self.logprob(i)


_EMPTY = FillerList(np.empty(0, dtype=np.int64), np.empty(0), 0, 0)


class _PatternTable:
    """All filler lists for one (length, gap) shape, keyed by context code."""

    __slots__ = ("keys", "starts", "words", "vals")

    def __init__(self, keys, starts, words, vals):
        self.keys = keys       # sorted context codes
        self.starts = starts   # len(keys)+1 offsets into words/vals
        self.words = words
        self.vals = vals

    def get(self, code: int) -> FillerList:
        i = int(np.searchsorted(self.keys, code))
        if i < len(self.keys) and self.keys[i] == code:
            return FillerList(self.words, self.vals,
                              int(self.starts[i]), int(self.starts[i + 1]))
        return _EMPTY


class _BoundTable:
    """Per-context maximum positive back-off weight for one (length, gap)."""

    __slots__ = ("keys", "vals")

    def __init__(self, keys, vals):
        self.keys = keys
        self.vals = vals

    def get(self, code: int) -> float:
        i = int(np.searchsorted(self.keys, code))
        if i < len(self.keys) and self.keys[i] == code:
            return self.vals.item(i)
        return 0.0


class FillerIndex:
    """Sorted filler lists for every gap pattern realizable over a model.

    For every stored k-gram and every position p in it, the word at p is
    listed under the pattern (k, p, other words). Built once, shared by all
    queries; per-query state lives in the queue cursors, never here. Also
    carries, per pattern, the maximum positive back-off weight seen, which
    upper-bounds gap-dependent back-off terms (0 when none is positive).
    """

    def __init__(self, order: int, base: int,
                 tables: dict[tuple[int, int], _PatternTable],
                 bounds: dict[tuple[int, int], _BoundTable]):
        self.order = order
        self.base = base
        self._tables = tables
        self._bounds = bounds

    def _ctx_code(self, context: tuple) -> int:
        code = 0
        for w in context:
            code = code * self.base + w
        return code

    def fillers(self, length: int, gap: int, context: tuple) -> FillerList:
        table = self._tables.get((length, gap))
        if table is None:
            return _EMPTY
        return table.get(self._ctx_code(context))

    def fillers_for(self, pattern: GapPattern) -> FillerList:
        return self.fillers(pattern.length, pattern.gap, pattern.context)

    def max_backoff(self, length: int, gap: int, context: tuple) -> float:
        table = self._bounds.get((length, gap))
        if table is None:
            return 0.0
        return table.get(self._ctx_code(context))

    def patterns(self) -> Iterator[tuple[GapPattern, FillerList]]:
        """Every (pattern, filler list) entry; test/debug iteration."""
        for (length, gap), table in sorted(self._tables.items()):
            for i, key in enumerate(table.keys):
                ctx = _decode(int(key), length - 1, self.base)
                fl = FillerList(table.words, table.vals,
                                int(table.starts[i]), int(table.starts[i + 1]))
                yield GapPattern(length, gap, ctx), fl

    @property
    def total_pairs(self) -> int:
        return sum(len(t.words) for t in self._tables.values())


def _decode(code: int, length: int, base: int) -> tuple:
    out = [0] * length
    for i in range(length - 1, -1, -1):
        code, out[i] = divmod(code, base)
    return tuple(out)


def _columns(table: dict[int, float], k: int) -> tuple[np.ndarray, np.ndarray]:
    """Split packed n-gram codes into per-position id columns plus values."""
    n = len(table)
    cols = np.empty((k, n), dtype=np.int64)
    vals = np.empty(n, dtype=np.float64)
    buf = [0] * k
    for i, (code, v) in enumerate(table.items()):
        vals[i] = v
        for j in range(k - 1, -1, -1):
            buf[j] = code & _WORD_MASK
            code >>= WORD_BITS
        cols[:, i] = buf
    return cols, vals


def _group_table(ctx: np.ndarray, words: np.ndarray, vals: np.ndarray) -> _PatternTable:
    """Sort one pattern's rows by (context, logprob desc, id asc) and group."""
    idx = np.lexsort((words, -vals, ctx))
    ctx, words, vals = ctx[idx], words[idx], vals[idx]
    head = np.r_[True, ctx[1:] != ctx[:-1]]
    starts = np.r_[np.flatnonzero(head), len(ctx)].astype(np.int64)
    return _PatternTable(ctx[head], starts, words.astype(np.int32), vals)


def build_filler_index(lm: NgramLM) -> FillerIndex:
    """One pass over the model's tables; memory on the order of the model."""
    base = len(lm.vocab)
    if lm.order > 1 and base ** (lm.order - 1) >= 2 ** 62:
        raise ValueError("model too large to index with 64-bit context codes")
    tables: dict[tuple[int, int], _PatternTable] = {}
    bounds: dict[tuple[int, int], _BoundTable] = {}
    for k in range(1, lm.order + 1):
        if lm._logprob[k]:
            cols, vals = _columns(lm._logprob[k], k)
            finite = vals != ABSENT
            cols, vals = cols[:, finite], vals[finite]
            for p in range(k):
                ctx = np.zeros(cols.shape[1], dtype=np.int64)
                for j in range(k):
                    if j != p:
                        ctx = ctx * base + cols[j]
                tables[(k, p)] = _group_table(ctx, cols[p], vals)
        if lm._backoff[k]:
            cols, vals = _columns(lm._backoff[k], k)
            positive = vals > 0.0
            if not positive.any():
                continue
            cols, vals = cols[:, positive], vals[positive]
            for p in range(k):
                ctx = np.zeros(cols.shape[1], dtype=np.int64)
                for j in range(k):
                    if j != p:
                        ctx = ctx * base + cols[j]
                idx = np.lexsort((-vals, ctx))
                sctx, svals = ctx[idx], vals[idx]
                head = np.r_[True, sctx[1:] != sctx[:-1]]
                bounds[(k, p)] = _BoundTable(sctx[head], svals[head])
    return FillerIndex(lm.order, base, tables, bounds)


# -- queue nodes ------------------------------------------------------------
#
# Every node caches its bound in `.bound`; pop() refreshes the caches along
# the popped path only. recompute_sup() redoes the arithmetic from scratch
# for differential testing.


class Constant:
    """Fixed-value term: contributes a bound, holds nothing to pop."""

    __slots__ = ("bound",)

    def __init__(self, value: float):
        self.bound = value

    def sup(self) -> float:
        return self.bound

    def top(self) -> int | None:
        return None

    def pop(self) -> int | None:
        return None

    def recompute_sup(self) -> float:
        return self.bound


class BackoffBound(Constant):
    """Bound for a back-off term whose argument contains the gap.

    Unseen sequences have back-off weight 0, so 0 bounds almost every
    candidate; when the model stores positive weights for this pattern the
    bound is their maximum instead, which keeps the bound valid.
    """

    def __init__(self, value: float = 0.0):
        super().__init__(value if value > 0.0 else 0.0)


class FillerQueue:
    """Cursor over one FillerList; sup is exact (the list head)."""

    __slots__ = ("fillers", "cursor", "bound")

    def __init__(self, fillers: FillerList):
        self.fillers = fillers
        self.cursor = 0
        self.bound = fillers.logprob(0) if len(fillers) else ABSENT

    def sup(self) -> float:
        return self.bound

    def top(self) -> int | None:
        if self.cursor >= len(self.fillers):
            return None
        return self.fillers.word(self.cursor)

    def pop(self) -> int | None:
        cur = self.cursor
        if cur >= len(self.fillers):
            return None
        word = self.fillers.word(cur)
        self.cursor = cur + 1
        self.bound = self.fillers.logprob(cur + 1) if cur + 1 < len(self.fillers) else ABSENT
        return word

    def recompute_sup(self) -> float:
        if self.cursor >= len(self.fillers):
            return ABSENT
        return self.fillers.logprob(self.cursor)


class SumNode:
    """Sum of primitive terms; candidates come only from the gap's filler queue."""

    __slots__ = ("children", "filler", "bound")

    def __init__(self, children: Iterable, filler: FillerQueue | None):
        self.children = tuple(children)
        self.filler = filler
        self.bound = 0.0
        for c in self.children:
            self.bound += c.bound

    def sup(self) -> float:
        return self.bound

    def top(self) -> int | None:
        return self.filler.top() if self.filler is not None else None

    def pop(self) -> int | None:
        if self.filler is None:
            return None
        word = self.filler.pop()
        bound = 0.0
        for c in self.children:
            bound += c.bound
        self.bound = bound
        return word

    def recompute_sup(self) -> float:
        total = 0.0
        for c in self.children:
            total += c.recompute_sup()
        return total


class CondNode:
    """Back-off alternatives of one predicted position; bound is the max."""

    __slots__ = ("branches", "bound")

    def __init__(self, branches: Iterable[SumNode]):
        self.branches = tuple(branches)
        self.bound = max(b.bound for b in self.branches)

    def _select(self) -> SumNode | None:
        best = None
        best_bound = ABSENT
        for br in self.branches:
            if br.bound > best_bound and br.top() is not None:
                best, best_bound = br, br.bound
        return best

    def sup(self) -> float:
        return self.bound

    def top(self) -> int | None:
        br = self._select()
        return br.top() if br is not None else None

    def pop(self) -> int | None:
        br = self._select()
        if br is None:
            return None
        word = br.pop()
        self.bound = max(b.bound for b in self.branches)
        return word

    def recompute_sup(self) -> float:
        return max(b.recompute_sup() for b in self.branches)


class RootNode:
    """Per-query top level: sums block bounds, yields distinct usable words.

    pop() keeps drawing from the best available block until it sees a word
    that was neither emitted before nor banned, returning None only once
    every reachable filler queue is exhausted. `pops` counts raw draws,
    including the suppressed ones.
    """

    __slots__ = ("blocks", "banned", "seen", "pops", "bound")

    def __init__(self, blocks: Iterable[CondNode], banned: frozenset[int] = frozenset()):
        self.blocks = tuple(blocks)
        self.banned = banned
        self.seen: set[int] = set()
        self.pops = 0
        self.bound = 0.0
        for b in self.blocks:
            self.bound += b.bound

    def _select(self) -> CondNode | None:
        best = None
        best_bound = ABSENT
        for blk in self.blocks:
            if blk.bound > best_bound and blk.top() is not None:
                best, best_bound = blk, blk.bound
        return best

    def sup(self) -> float:
        return self.bound

    def top(self) -> int | None:
        blk = self._select()
        return blk.top() if blk is not None else None

    def pop(self) -> int | None:
        while True:
            blk = self._select()
            if blk is None:
                return None
            word = blk.pop()
            bound = 0.0
            for b in self.blocks:
                bound += b.bound
            self.bound = bound
            self.pops += 1
            if word not in self.seen and word not in self.banned:
                self.seen.add(word)
                return word

    def recompute_sup(self) -> float:
        total = 0.0
        for b in self.blocks:
            total += b.recompute_sup()
        return total


def _term_node(term: Term, index: FillerIndex, is_backoff: bool):
    if term.hole is None:
        return Constant(term.value), None
    if is_backoff:
        return BackoffBound(index.max_backoff(term.size, term.hole, term.context)), None
    queue = FillerQueue(index.fillers(term.size, term.hole, term.context))
    return queue, queue


def build_root(tree: TermTree, index: FillerIndex,
               banned: frozenset[int] = frozenset()) -> RootNode:
    """Instantiate the queue tree mirroring a term tree's blocks/branches."""
    blocks = []
    for block in tree.blocks:
        branches = []
        for br in block.branches:
            children = []
            filler = None
            for bt in br.betas:
                node, _ = _term_node(bt, index, is_backoff=True)
                children.append(node)
            node, queue = _term_node(br.alpha, index, is_backoff=False)
            children.append(node)
            if queue is not None:
                filler = queue
            branches.append(SumNode(children, filler))
        blocks.append(CondNode(branches))
    return RootNode(blocks, banned)
