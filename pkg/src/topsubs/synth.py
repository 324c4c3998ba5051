"""Synthetic Zipfian corpora and a toy back-off model estimator.

Desk-scale stand-ins for real training pipelines: sentence lengths are
geometric, tokens are drawn from a Zipf distribution, and models use plain
absolute discounting with a single discount. That is the simplest estimator
that produces genuine back-off structure (missing n-grams, nonzero
back-off weights), which is everything the search engine exercises.

Every emitted value is quantized to its serialized 10-decimal form before
back-off weights are derived from it, so the written file and the model in
memory agree bit for bit and conditionals on the parsed file still sum
to one.
"""
from __future__ import annotations

import io
import itertools
import math
import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from .lm import BOS, BOS_ID, EOS, EOS_ID, UNK, UNK_ID


@dataclass(frozen=True)
class SynthConfig:
    """Corpus/model recipe; same seed means byte-identical output."""
    vocab_size: int          # includes the three reserved tokens
    tokens: int
    exponent: float = 1.0    # Zipf exponent; 0 is uniform
    order: int = 3
    discount: float = 0.75
    seed: int = 0
    mean_sentence_len: float = 20.0

    def __post_init__(self):
        if self.vocab_size < 4:
            raise ValueError("vocab_size must be >= 4 (three ids are reserved)")
        if self.tokens < 1:
            raise ValueError("need at least one token")
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must be in (0, 1)")
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.mean_sentence_len < 1.0:
            raise ValueError("mean sentence length must be >= 1")


def gen_corpus(cfg: SynthConfig) -> Iterator[list[str]]:
    """Yield sentences (token lists) totalling exactly cfg.tokens tokens."""
    rng = random.Random(cfg.seed)
    n = cfg.vocab_size - 3
    width = max(2, len(str(n - 1)))
    words = [f"w{i:0{width}d}" for i in range(n)]
    cum = list(itertools.accumulate((r + 1) ** -cfg.exponent for r in range(n)))
    log_q = math.log(1.0 - 1.0 / cfg.mean_sentence_len) if cfg.mean_sentence_len > 1.0 else None
    left = cfg.tokens
    while left > 0:
        if log_q is None:
            length = 1
        else:
            length = 1 + int(math.log(1.0 - rng.random()) / log_q)
        length = min(length, left)
        yield rng.choices(words, cum_weights=cum, k=length)
        left -= length


def _quantize(arr: np.ndarray) -> np.ndarray:
    """Round every value to the double its 10-decimal serialization parses to."""
    return np.fromiter((float(f"{v:.10f}") for v in arr), np.float64, count=len(arr))


def estimate_arpa(sentences: Iterable[Sequence[str] | str], order: int,
                  discount: float, out: TextIO | None = None) -> str | None:
    """Count n-grams and emit an absolute-discounted back-off model.

    Observed conditionals get log10((count - discount) / context_count);
    each context's back-off weight is chosen so its conditionals sum to
    one, with the freed unigram mass going to <unk>. <s> carries no
    probability of its own (stored as -99) but keeps its back-off weight.
    Returns the ARPA text, or writes it to `out` when given.
    """
    if not 0.0 < discount < 1.0:
        raise ValueError("discount must be in (0, 1)")
    if order < 1:
        raise ValueError("order must be >= 1")

    vocab: dict[str, int] = {UNK: UNK_ID, BOS: BOS_ID, EOS: EOS_ID}
    flat: list[int] = []
    lens: list[int] = []
    for sent in sentences:
        toks = sent.split() if isinstance(sent, str) else list(sent)
        if not toks:
            continue
        flat.append(BOS_ID)
        for tok in toks:
            wid = vocab.get(tok)
            if wid is None:
                wid = len(vocab)
                vocab[tok] = wid
            flat.append(wid)
        flat.append(EOS_ID)
        lens.append(len(toks) + 2)
    if not lens:
        raise ValueError("empty corpus")

    V = len(vocab)
    if order > 1 and V ** order >= 2 ** 62:
        raise ValueError("vocabulary too large for packed 64-bit counting")
    ids = np.array(flat, dtype=np.int64)
    sid = np.repeat(np.arange(len(lens), dtype=np.int64), lens)
    d = discount

    # Sorted unique packed codes and counts, per order. Windows never cross
    # sentence boundaries.
    uniq: list[np.ndarray] = [np.empty(0, dtype=np.int64)] * (order + 1)
    cnts: list[np.ndarray] = [np.empty(0, dtype=np.int64)] * (order + 1)
    for k in range(1, order + 1):
        m = len(ids) - k + 1
        if m <= 0:
            continue
        codes = ids[:m].copy()
        for j in range(1, k):
            codes *= V
            codes += ids[j:m + j]
        if k > 1:
            codes = codes[sid[:m] == sid[k - 1:]]
        uniq[k], cnts[k] = np.unique(codes, return_counts=True)

    alphas: list[np.ndarray] = [np.empty(0)] * (order + 1)
    bows: list[np.ndarray] = [np.zeros(len(uniq[k])) for k in range(order + 1)]

    # Unigrams: discounted relative frequency over everything but <s>; the
    # freed mass becomes the <unk> probability.
    u1, c1 = uniq[1], cnts[1]
    pred = u1 != BOS_ID
    total = float(c1[pred].sum())
    n_types = int(pred.sum())
    alpha1 = np.full(len(u1), -99.0)
    alpha1[pred] = np.log10((c1[pred] - d) / total)
    leftover = d * n_types / total
    pos = int(np.searchsorted(u1, UNK_ID))
    if pos < len(u1) and u1[pos] == UNK_ID:
        alpha1[pos] = math.log10(10.0 ** alpha1[pos] + leftover)
    else:
        uniq[1] = np.insert(u1, pos, UNK_ID)
        cnts[1] = np.insert(c1, pos, 0)
        alpha1 = np.insert(alpha1, pos, math.log10(leftover))
        bows[1] = np.zeros(len(uniq[1]))
    alphas[1] = _quantize(alpha1)

    for k in range(2, order + 1):
        u, c = uniq[k], cnts[k]
        if len(u) == 0:
            continue
        prefix = u // V
        head = np.r_[True, prefix[1:] != prefix[:-1]]
        starts = np.flatnonzero(head)
        group_sizes = np.diff(np.r_[starts, len(c)])
        ctx_total = np.repeat(np.add.reduceat(c, starts), group_sizes)
        alphas[k] = _quantize(np.log10((c - d) / ctx_total))

        # Back-off weight per context: leftover discounted mass over the
        # lower-order mass of the unseen continuations. Both sums run over
        # this context's observed continuations, whose shorter windows are
        # necessarily observed too, so the lower conditionals are lookups.
        numer = 1.0 - np.add.reduceat(10.0 ** alphas[k], starts)
        suffix = u % (V ** (k - 1))
        spos = np.searchsorted(uniq[k - 1], suffix)
        assert np.array_equal(uniq[k - 1][spos], suffix)
        denom = 1.0 - np.add.reduceat(10.0 ** alphas[k - 1][spos], starts)
        assert numer.min() > 0.0 and denom.min() > 0.0
        ppos = np.searchsorted(uniq[k - 1], prefix[head])
        assert np.array_equal(uniq[k - 1][ppos], prefix[head])
        bows[k - 1][ppos] = _quantize(np.log10(numer / denom))

    inv = list(vocab)
    buf = out if out is not None else io.StringIO()
    buf.write("\n\\data\\\n")
    for k in range(1, order + 1):
        buf.write(f"ngram {k}={len(uniq[k])}\n")
    for k in range(1, order + 1):
        buf.write(f"\n\\{k}-grams:\n")
        u, alpha = uniq[k], alphas[k]
        bow = bows[k] if k < order else None
        cols = []
        tmp = u.copy()
        for _ in range(k):
            tmp, rem = np.divmod(tmp, V)
            cols.append(rem)
        cols.reverse()
        for i in range(len(u)):
            words = " ".join(inv[col.item(i)] for col in cols)
            a = alpha.item(i)
            a_s = "-99" if a == -99.0 else f"{a:.10f}"
            b = bow.item(i) if bow is not None else 0.0
            if b != 0.0:
                buf.write(f"{a_s}\t{words}\t{b:.10f}\n")
            else:
                buf.write(f"{a_s}\t{words}\n")
    buf.write("\n\\end\\\n")
    if out is None:
        return buf.getvalue()
    return None
