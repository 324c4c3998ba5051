"""Back-off n-gram language models in ARPA text format.

Loads a model into an immutable in-memory store and answers the three
queries everything else is built on: the stored log10 probability of an
n-gram, the stored back-off weight of a context, and the back-off
conditional/sequence log probabilities. All values are base-10 logs, as
stored in ARPA files.
"""
from __future__ import annotations

import math
import re
from typing import Iterable, Iterator, Sequence, TextIO

# Sentinel for "no probability stored": strictly below every finite log prob.
ABSENT = float("-inf")

UNK, BOS, EOS = "<unk>", "<s>", "</s>"
UNK_ID, BOS_ID, EOS_ID = 0, 1, 2

# n-grams are packed into single ints, WORD_BITS per word. Dense ids start
# at 0, so any vocabulary below 2**WORD_BITS packs losslessly.
WORD_BITS = 20
_WORD_MASK = (1 << WORD_BITS) - 1

Ngram = tuple  # tuple of word ids, length 1..order


class ArpaParseError(ValueError):
    """Raised for structurally invalid ARPA input; message names the line."""


def pack(ids: Sequence[int]) -> int:
    """Fold a word-id sequence into one int key (order implied by table)."""
    code = 0
    for w in ids:
        code = (code << WORD_BITS) | w
    return code


def unpack(code: int, length: int) -> Ngram:
    return tuple((code >> (WORD_BITS * (length - 1 - i))) & _WORD_MASK for i in range(length))


class Vocab:
    """Dense word<->id bijection with reserved slots for <unk>, <s>, </s>.

    Out-of-vocabulary words map to <unk> at query time; the reserved tokens
    are always present even when the model file omits them.
    """

    __slots__ = ("_words", "_ids")

    def __init__(self) -> None:
        self._words: list[str] = [UNK, BOS, EOS]
        self._ids: dict[str, int] = {UNK: UNK_ID, BOS: BOS_ID, EOS: EOS_ID}

    def add(self, word: str) -> int:
        wid = self._ids.get(word)
        if wid is None:
            wid = len(self._words)
            if wid > _WORD_MASK:
                raise ArpaParseError(f"vocabulary exceeds {_WORD_MASK + 1} words")
            self._ids[word] = wid
            self._words.append(word)
        return wid

    def id(self, word: str) -> int:
        """Id of `word`, or the <unk> id if out of vocabulary."""
        return self._ids.get(word, UNK_ID)

    def try_id(self, word: str) -> int | None:
        return self._ids.get(word)

    def word(self, wid: int) -> str:
        return self._words[wid]

    def __contains__(self, word: str) -> bool:
        return word in self._ids

    def __len__(self) -> int:
        return len(self._words)

    def __iter__(self) -> Iterator[str]:
        return iter(self._words)


class NgramLM:
    """Immutable back-off model: per-order tables of (logprob, backoff).

    Tables are keyed by packed n-gram codes. A missing logprob reads as
    ABSENT; a missing backoff reads as 0.0 (unseen contexts do not scale
    the lower-order estimate). Entries whose file logprob is -99 (the
    SRILM stand-in for log 0) are kept with ABSENT logprob so that their
    backoff weight still applies.
    """

    __slots__ = ("order", "vocab", "_logprob", "_backoff", "_ineligible")

    def __init__(self, order: int, vocab: Vocab,
                 logprob: list[dict[int, float]], backoff: list[dict[int, float]]):
        self.order = order
        self.vocab = vocab
        self._logprob = logprob   # index k: codes of k-grams -> log10 prob
        self._backoff = backoff   # index k: codes of k-grams -> backoff weight
        self._ineligible: tuple[frozenset[int], frozenset[int]] | None = None

    # -- raw lookups ------------------------------------------------------

    def logprob(self, gram: Sequence[int]) -> float:
        """Stored log10 probability of `gram`, ABSENT if not stored finite."""
        k = len(gram)
        if not 1 <= k <= self.order:
            return ABSENT
        return self._logprob[k].get(pack(gram), ABSENT)

    def backoff(self, gram: Sequence[int]) -> float:
        """Back-off weight of `gram`; 0.0 whenever none is stored."""
        k = len(gram)
        if not 1 <= k <= self.order:
            return 0.0
        return self._backoff[k].get(pack(gram), 0.0)

    def has(self, gram: Sequence[int]) -> bool:
        """True when `gram` has a finite stored logprob (was observed)."""
        return self.logprob(gram) != ABSENT

    # -- conditional / sequence scores ------------------------------------

    def cond_logp(self, word: int, history: Sequence[int]) -> float:
        """Back-off conditional log10 p(word | history).

        Uses the stored probability of the longest matching extension, adding
        the back-off weights of the skipped contexts. Accumulation is
        left-to-right (longest skipped context first) so that term-tree
        scoring can reproduce these sums bit for bit.
        """
        h = tuple(history[-(self.order - 1):]) if self.order > 1 else ()
        n = len(h)
        lp = ABSENT
        m = 0
        for m in range(n + 1):
            lp = self._logprob[n - m + 1].get(pack(h[m:]) << WORD_BITS | word, ABSENT)
            if lp != ABSENT:
                break
        total = 0.0
        for i in range(m):
            total += self._backoff[n - i].get(pack(h[i:]), 0.0)
        return total + lp

    def seq_logp(self, words: Sequence[int]) -> float:
        """Log10 probability of a word-id sequence under the model.

        A leading <s> anchors the first history and is not itself scored;
        histories near the start are truncated to the available words.
        """
        if not words:
            raise ValueError("empty sequence")
        start = 1 if words[0] == BOS_ID else 0
        ctx = self.order - 1
        total = 0.0
        for i in range(start, len(words)):
            total += self.cond_logp(words[i], words[max(0, i - ctx):i])
        return total

    # -- iteration / bookkeeping ------------------------------------------

    def ngrams(self, k: int) -> Iterator[tuple[Ngram, float, float]]:
        """Yield (ids, logprob, backoff) for every stored k-gram, sorted."""
        probs, backs = self._logprob[k], self._backoff[k]
        for code in sorted(probs):
            yield unpack(code, k), probs[code], backs.get(code, 0.0)

    def count(self, k: int) -> int:
        return len(self._logprob[k])

    def candidate_ids(self, include_unk: bool = False,
                      exclude: Iterable[int] = ()) -> list[int]:
        """Word ids eligible as substitutes, ascending.

        Boundary tokens are never candidates; <unk> only on request; words
        without a finite unigram probability can never surface from the
        sorted filler lists and score -inf anyway, so they are ineligible.
        """
        banned = self.ineligible_ids(include_unk)
        extra = set(exclude)
        return [w for w in range(len(self.vocab)) if w not in banned and w not in extra]

    def ineligible_ids(self, include_unk: bool = False) -> frozenset[int]:
        if self._ineligible is None:
            bad = {BOS_ID, EOS_ID}
            uni = self._logprob[1]
            bad.update(w for w in range(len(self.vocab))
                       if uni.get(w, ABSENT) == ABSENT)
            self._ineligible = (frozenset(bad | {UNK_ID}), frozenset(bad - {UNK_ID}))
        return self._ineligible[include_unk]


# -- ARPA input/output -----------------------------------------------------

_NGRAM_DECL = re.compile(r"ngram\s+(\d+)\s*=\s*(\d+)$")
_SECTION = re.compile(r"\\(\d+)-grams:$")


def _parse_value(field: str, lineno: int, column: str) -> float:
    try:
        value = float(field)
    except ValueError:
        raise ArpaParseError(f"line {lineno}: non-numeric {column} {field!r}") from None
    if math.isnan(value):
        raise ArpaParseError(f"line {lineno}: non-numeric {column} {field!r}")
    return value


def parse_arpa(lines: Iterable[str]) -> NgramLM:
    """Parse an ARPA text stream into an NgramLM.

    Accepts the format as written by SRILM/KenLM: free comment/blank lines
    before the header, `ngram k=count` declarations, one section per order
    with `logprob<ws>w1 .. wk[<ws>backoff]` entries, and a final terminator.
    Structural problems raise ArpaParseError naming the offending line.
    """
    it = iter(enumerate(lines, start=1))

    lineno = 0
    for lineno, raw in it:
        if raw.strip() == "\\data\\":
            break
    else:
        raise ArpaParseError(f"line {lineno}: missing \\data\\ header")

    declared: dict[int, int] = {}
    section_after_header = None
    for lineno, raw in it:
        line = raw.strip()
        if not line:
            continue
        m = _NGRAM_DECL.match(line)
        if m:
            k = int(m.group(1))
            if k < 1 or k in declared:
                raise ArpaParseError(f"line {lineno}: bad ngram declaration {line!r}")
            declared[k] = int(m.group(2))
            continue
        section_after_header = (lineno, line)
        break
    if not declared:
        raise ArpaParseError(f"line {lineno}: no ngram count declarations")

    order = max(declared)
    vocab = Vocab()
    logprob: list[dict[int, float]] = [{} for _ in range(order + 1)]
    backoff: list[dict[int, float]] = [{} for _ in range(order + 1)]
    seen_counts = {k: 0 for k in declared}

    def enter_section(lineno: int, line: str) -> int:
        m = _SECTION.match(line)
        if not m:
            raise ArpaParseError(f"line {lineno}: expected a k-grams section, got {line!r}")
        k = int(m.group(1))
        if k not in declared:
            raise ArpaParseError(f"line {lineno}: section \\{k}-grams: was not declared")
        return k

    if section_after_header is None:
        raise ArpaParseError(f"line {lineno}: truncated file, no sections")
    current = enter_section(*section_after_header)
    ended = False

    for lineno, raw in it:
        line = raw.strip()
        if not line:
            continue
        if line == "\\end\\":
            ended = True
            break
        if line.startswith("\\"):
            current = enter_section(lineno, line)
            continue
        fields = line.split()
        nf = len(fields)
        if nf == current + 1:
            has_bow = False
        elif nf == current + 2:
            has_bow = True
        else:
            raise ArpaParseError(
                f"line {lineno}: expected {current}-gram entry, got {nf - 1} trailing fields")
        lp = _parse_value(fields[0], lineno, "logprob")
        code = 0
        for word in fields[1:current + 1]:
            code = (code << WORD_BITS) | vocab.add(word)
        logprob[current][code] = ABSENT if lp == -99.0 else lp
        if has_bow:
            bow = _parse_value(fields[-1], lineno, "backoff")
            if bow != 0.0:
                backoff[current][code] = bow
        seen_counts[current] += 1

    if not ended:
        raise ArpaParseError(f"line {lineno}: missing \\end\\ terminator")
    for k, want in sorted(declared.items()):
        got = seen_counts[k]
        if got != want:
            raise ArpaParseError(
                f"line {lineno}: count mismatch for {k}-grams: declared {want}, found {got}")

    return NgramLM(order, vocab, logprob, backoff)


def load_arpa(path: str) -> NgramLM:
    with open(path, encoding="utf-8") as fh:
        return parse_arpa(fh)


def write_arpa(lm: NgramLM, out: TextIO) -> None:
    """Serialize a model back to ARPA text (debug dump / round-trips)."""
    out.write("\n\\data\\\n")
    for k in range(1, lm.order + 1):
        out.write(f"ngram {k}={lm.count(k)}\n")
    for k in range(1, lm.order + 1):
        out.write(f"\n\\{k}-grams:\n")
        for ids, lp, bow in lm.ngrams(k):
            words = " ".join(lm.vocab.word(w) for w in ids)
            lp_s = "-99" if lp == ABSENT else f"{lp:.12g}"
            if bow != 0.0:
                out.write(f"{lp_s}\t{words}\t{bow:.12g}\n")
            else:
                out.write(f"{lp_s}\t{words}\n")
    out.write("\n\\end\\\n")
