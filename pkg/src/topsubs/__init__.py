"""Exact top-K lexical substitutes from back-off n-gram language models."""

from .lm import (
    ABSENT, BOS, BOS_ID, EOS, EOS_ID, UNK, UNK_ID,
    ArpaParseError, NgramLM, Vocab, load_arpa, parse_arpa, write_arpa,
)
from .scorer import (
    HOLE, Query, Substitute, TermTree,
    build_term_tree, oracle_topk, substitute_logp,
)
from .search import SearchStats, topk_substitutes
from .synth import SynthConfig, estimate_arpa, gen_corpus
from .ubqueue import FillerIndex, FillerList, GapPattern, build_filler_index, build_root

__all__ = [
    "ABSENT", "BOS", "BOS_ID", "EOS", "EOS_ID", "UNK", "UNK_ID",
    "ArpaParseError", "NgramLM", "Vocab", "load_arpa", "parse_arpa", "write_arpa",
    "HOLE", "Query", "Substitute", "TermTree",
    "build_term_tree", "oracle_topk", "substitute_logp",
    "SearchStats", "topk_substitutes",
    "SynthConfig", "estimate_arpa", "gen_corpus",
    "FillerIndex", "FillerList", "GapPattern", "build_filler_index", "build_root",
]
