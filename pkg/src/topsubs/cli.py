"""Command-line front end.

Subcommands: `subs` writes ranked substitutes for every token of a corpus,
`check` diffs the fast engine against the exhaustive oracle, `bench` emits
pop-count scaling data as CSV, `synth` generates Zipfian corpora and toy
models. Exit codes: 0 ok, 1 usage, 2 I/O or parse failure, 3 differential
mismatch. Diagnostics go to stderr; results go to stdout.
"""
from __future__ import annotations

import argparse
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence, TextIO

import numpy as np

from .lm import BOS_ID, EOS_ID, ArpaParseError, NgramLM, load_arpa
from .scorer import Query, oracle_topk
from .search import topk_substitutes
from .synth import SynthConfig, estimate_arpa, gen_corpus
from .ubqueue import FillerIndex, build_filler_index

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_MISMATCH = 3


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for I/O."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    """Bad arguments detected after parsing; maps to the usage exit code."""


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _k_list(text: str) -> list[int]:
    try:
        ks = [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad K list {text!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise argparse.ArgumentTypeError("K values must be integers >= 1")
    return ks


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topsubs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("subs", help="top-K substitutes for every token position")
    p.add_argument("model", help="ARPA model file")
    p.add_argument("input", help="text file, one tokenized sentence per line")
    p.add_argument("-k", type=_positive_int, default=10, help="substitutes per position")
    p.add_argument("--oracle", action="store_true",
                   help="use the exhaustive scorer instead of the search engine")
    p.add_argument("--include-unk", action="store_true")
    p.add_argument("--exclude-target", action="store_true",
                   help="never propose the original token as its own substitute")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--order-check", action="store_true",
                   help="warn when the model order is below 2")
    p.set_defaults(func=cmd_subs)

    p = sub.add_parser("check", help="diff the engine against the oracle")
    p.add_argument("model")
    p.add_argument("corpus")
    p.add_argument("--k-list", type=_k_list, default=[1, 5, 20])
    p.add_argument("--sample", type=int, default=100,
                   help="number of query positions to sample")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--include-unk", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="pop-count scaling measurements as CSV")
    p.add_argument("model")
    p.add_argument("corpus")
    p.add_argument("--k-list", type=_k_list, default=[1, 4, 16, 64, 256, 1024, 4096])
    p.add_argument("--sample", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a Zipfian corpus and/or toy model")
    p.add_argument("--vocab", type=int, required=True,
                   help="vocabulary size including the reserved tokens")
    p.add_argument("--tokens", type=int, required=True)
    p.add_argument("--exponent", type=float, default=1.0)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--discount", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mean-len", type=float, default=20.0)
    p.add_argument("--corpus-out")
    p.add_argument("--model-out")
    p.set_defaults(func=cmd_synth)
    return parser


def _load(path: str) -> tuple[NgramLM, FillerIndex]:
    lm = load_arpa(path)
    return lm, build_filler_index(lm)


def _read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def _padded(lm: NgramLM, tokens: Sequence[str]) -> tuple:
    wid = lm.vocab.id
    return (BOS_ID, *(wid(tok) for tok in tokens), EOS_ID)


def cmd_subs(args, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    lm, index = _load(args.model)
    if args.order_check and lm.order < 2:
        print(f"warning: model order is {lm.order}; substitutes will ignore context",
              file=sys.stderr)
    if args.threads < 1:
        args.threads = 1
    lines = _read_lines(args.input)
    vocab = lm.vocab

    def work(item: tuple[int, str]) -> list[str] | None:
        sent_idx, raw = item
        tokens = raw.split()
        if not tokens:
            return None
        padded = _padded(lm, tokens)
        rows = []
        for pos, tok in enumerate(tokens):
            query = Query(padded, pos + 1, args.k)
            exclude = frozenset((padded[pos + 1],)) if args.exclude_target else frozenset()
            if args.oracle:
                subs = oracle_topk(lm, query, args.include_unk, exclude)
            else:
                subs, _ = topk_substitutes(lm, index, query, args.include_unk, exclude)
            pairs = "\t".join(f"{vocab.word(w)} {score:.6f}" for w, score in subs)
            rows.append(f"{sent_idx}\t{pos}\t{tok}\t{pairs}")
        return rows

    items = list(enumerate(lines))
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        for item, rows in zip(items, pool.map(work, items)):
            if rows is None:
                print(f"warning: line {item[0]} is empty, skipped", file=sys.stderr)
                continue
            out.write("\n".join(rows) + "\n")
    return EXIT_OK


def _sample_positions(lm: NgramLM, lines: list[str], sample: int,
                      seed: int) -> list[tuple[int, tuple, int]]:
    """Sampled (sentence index, padded ids, token position) triples."""
    padded = {}
    positions = []
    for si, raw in enumerate(lines):
        tokens = raw.split()
        if not tokens:
            continue
        padded[si] = _padded(lm, tokens)
        positions.extend((si, pos) for pos in range(len(tokens)))
    rng = random.Random(seed)
    chosen = rng.sample(positions, min(sample, len(positions)))
    return [(si, padded[si], pos) for si, pos in chosen]


def cmd_check(args, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    lm, index = _load(args.model)
    lines = _read_lines(args.corpus)
    queries = _sample_positions(lm, lines, args.sample, args.seed)
    checked = 0
    for si, padded, pos in queries:
        for k in args.k_list:
            query = Query(padded, pos + 1, k)
            got, _ = topk_substitutes(lm, index, query, args.include_unk)
            want = oracle_topk(lm, query, args.include_unk)
            if got != want:
                print(f"MISMATCH model={args.model} sentence={si} token={pos} K={k}",
                      file=sys.stderr)
                print(f"  padded ids: {padded}", file=sys.stderr)
                print(f"  engine: {[(lm.vocab.word(w), s) for w, s in got]}", file=sys.stderr)
                print(f"  oracle: {[(lm.vocab.word(w), s) for w, s in want]}", file=sys.stderr)
                return EXIT_MISMATCH
            checked += 1
    out.write(f"checked {checked} query/K pairs over {len(queries)} positions: all exact\n")
    return EXIT_OK


def cmd_bench(args, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    lm, index = _load(args.model)
    lines = _read_lines(args.corpus)
    queries = _sample_positions(lm, lines, args.sample, args.seed)
    vocab_size = len(lm.vocab)
    out.write("V,K,query,pops,nanos\n")
    means = []
    for k in args.k_list:
        total = 0
        for qi, (_, padded, pos) in enumerate(queries):
            _, stats = topk_substitutes(lm, index, Query(padded, pos + 1, k))
            out.write(f"{vocab_size},{k},{qi},{stats.pops},{stats.nanos}\n")
            total += stats.pops
        if queries:
            means.append(total / len(queries))
    for k, mean in zip(args.k_list, means):
        out.write(f"# mean_pops K={k} {mean:.3f}\n")
    if len(means) >= 2:
        slope = float(np.polyfit(np.log(args.k_list), np.log(means), 1)[0])
        out.write(f"# loglog_slope {slope:.4f}\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    if not args.corpus_out and not args.model_out:
        raise UsageError("synth needs --corpus-out and/or --model-out")
    cfg = SynthConfig(vocab_size=args.vocab, tokens=args.tokens,
                      exponent=args.exponent, order=args.order,
                      discount=args.discount, seed=args.seed,
                      mean_sentence_len=args.mean_len)
    sentences = list(gen_corpus(cfg))
    if args.corpus_out:
        with open(args.corpus_out, "w", encoding="utf-8") as fh:
            for sent in sentences:
                fh.write(" ".join(sent) + "\n")
    if args.model_out:
        with open(args.model_out, "w", encoding="utf-8") as fh:
            estimate_arpa(sentences, cfg.order, cfg.discount, out=fh)
    print(f"generated {len(sentences)} sentences, {cfg.tokens} tokens", file=sys.stderr)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
