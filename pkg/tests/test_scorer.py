import io

import pytest

from topsubs.lm import ABSENT, BOS_ID, EOS_ID, UNK_ID, parse_arpa
from topsubs.scorer import (
    HOLE, Query, Substitute, build_term_tree, oracle_topk, substitute_logp,
)


def ids(lm, *words):
    return tuple(lm.vocab.id(w) for w in words)


def make_query(lm, sentence, target, k=3):
    """Build a Query from surface tokens with '_' marking the target."""
    toks = sentence.split()
    t = toks.index("_")
    toks[t] = toks[t - 1] if t else toks[t + 1]  # placeholder, substituted anyway
    return Query(ids(lm, *toks), t, k)


def manual_score(lm, query, x):
    """Independent scoring path: substitute x, sum the affected conditionals."""
    words = list(query.words)
    words[query.target] = x
    total = 0.0
    for j in range(lm.order):
        pos = query.target + j
        if pos > len(words) - 1:
            break
        lo = max(0, pos - (lm.order - 1))
        total += lm.cond_logp(words[pos], words[lo:pos])
    return total


def grams(terms):
    return tuple(t.gram for t in terms)


class TestTermTreeShape:
    def test_three_blocks_mid_sentence(self, tri_lm):
        x, y, z = ids(tri_lm, "x", "y", "z")
        q = Query((BOS_ID, x, y, z, z, x, EOS_ID), 3, 1)
        tree = build_term_tree(tri_lm, q)
        assert len(tree.blocks) == 3
        b0, b1, b2 = tree.blocks
        assert b0.history == (x, y) and b0.predicted == HOLE
        assert b1.history == (y, HOLE) and b1.predicted == z
        assert b2.history == (HOLE, z) and b2.predicted == x
        # block 0: hole is always the final word of the probability argument
        assert grams(br.alpha for br in b0.branches) == ((x, y, HOLE), (y, HOLE), (HOLE,))
        assert grams(b0.branches[2].betas) == ((x, y), (y,))
        # block 1: hole in the middle, then leading, then gone
        assert grams(br.alpha for br in b1.branches) == ((y, HOLE, z), (HOLE, z), (z,))
        assert grams(b1.branches[1].betas) == ((y, HOLE),)
        assert grams(b1.branches[2].betas) == ((y, HOLE), (HOLE,))
        # block 2: final branch conditions on fixed words only
        assert grams(br.alpha for br in b2.branches) == ((HOLE, z, x), (z, x), (x,))
        assert b2.branches[1].alpha.hole is None

    def test_left_edge_history_truncated(self, tri_lm):
        x, = ids(tri_lm, "x")
        q = Query((BOS_ID, x, x, EOS_ID), 1, 1)
        tree = build_term_tree(tri_lm, q)
        # target right after <s>: only <s> is available as history
        assert tree.blocks[0].history == (BOS_ID,)
        assert len(tree.blocks[0].branches) == 2

    def test_right_edge_drops_blocks(self, tri_lm):
        x, y = ids(tri_lm, "x", "y")
        q = Query((BOS_ID, x, y, x, EOS_ID), 3, 1)
        tree = build_term_tree(tri_lm, q)
        # hole on the last content word: the block past </s> is dropped
        assert len(tree.blocks) == 2
        assert tree.blocks[1].predicted == EOS_ID

    def test_unigram_model_single_block(self, uni_lm):
        u1, u2 = ids(uni_lm, "u1", "u2")
        q = Query((BOS_ID, u1, u2, EOS_ID), 2, 1)
        tree = build_term_tree(uni_lm, q)
        assert len(tree.blocks) == 1
        assert len(tree.blocks[0].branches) == 1
        assert tree.blocks[0].branches[0].alpha.gram == (HOLE,)
        assert tree.blocks[0].branches[0].betas == ()

    def test_fixed_beta_terms_hold_stored_weights(self, tri_lm):
        x, y, z = ids(tri_lm, "x", "y", "z")
        q = Query((BOS_ID, x, y, z, z, x, EOS_ID), 3, 1)
        tree = build_term_tree(tri_lm, q)
        last = tree.blocks[0].branches[2]
        assert last.betas[0].value == tri_lm.backoff((x, y))
        assert last.betas[1].value == tri_lm.backoff((y,))


class TestSubstituteScore:
    def test_matches_conditional_composition_everywhere(self, tri_lm):
        sents = [(BOS_ID, *ids(tri_lm, "x", "y", "z", "x"), EOS_ID),
                 (BOS_ID, *ids(tri_lm, "z", "z"), EOS_ID),
                 (BOS_ID, *ids(tri_lm, "y"), EOS_ID)]
        for words in sents:
            for t in range(1, len(words) - 1):
                q = Query(words, t, 1)
                tree = build_term_tree(tri_lm, q)
                for x in range(len(tri_lm.vocab)):
                    assert substitute_logp(tri_lm, tree, x) == manual_score(tri_lm, q, x)

    def test_toy_cross_check(self, toy_lm):
        a, b, c = ids(toy_lm, "a", "b", "c")
        q = Query((BOS_ID, a, b, b, EOS_ID), 2, 1)
        tree = build_term_tree(toy_lm, q)
        got = substitute_logp(toy_lm, tree, c)
        assert got == toy_lm.cond_logp(c, (a,)) + toy_lm.cond_logp(b, (c,))

    def test_original_word_reproduces_sentence_terms(self, toy_lm):
        a, b, c = ids(toy_lm, "a", "b", "c")
        words = (BOS_ID, a, c, b, EOS_ID)
        q = Query(words, 2, 1)
        tree = build_term_tree(toy_lm, q)
        # substituting the sentence's own word recovers those seq_logp terms
        expected = toy_lm.cond_logp(c, (a,)) + toy_lm.cond_logp(b, (c,))
        assert substitute_logp(toy_lm, tree, c) == expected

    def test_all_first_branches_present_sums_stored_probs(self, tri_lm):
        x, y, z = ids(tri_lm, "x", "y", "z")
        q = Query((BOS_ID, x, z, EOS_ID), 2, 1)
        tree = build_term_tree(tri_lm, q)
        # candidate y: trigrams "<s> x y" and "x y z"... second block is
        # (x, HOLE) -> z with trigram "x y z" stored, third "y z </s>" stored
        got = substitute_logp(tri_lm, tree, y)
        want = tri_lm.logprob((BOS_ID, x, y)) + tri_lm.logprob((x, y, z)) \
            + tri_lm.logprob((y, z, EOS_ID))
        assert got == want


class TestOracle:
    def test_full_ranking_when_k_covers_vocab(self, toy_lm):
        a, b = ids(toy_lm, "a", "b")
        q = Query((BOS_ID, a, a, b, EOS_ID), 2, 99)
        subs = oracle_topk(toy_lm, q)
        assert [s.word for s in subs] == sorted(
            (s.word for s in subs),
            key=lambda w: (-dict((x.word, x.score) for x in subs)[w], w))
        assert len(subs) == 3  # a, b, c are the eligible words

    def test_matches_brute_force(self, toy_lm):
        a, b = ids(toy_lm, "a", "b")
        q = Query((BOS_ID, a, a, b, EOS_ID), 2, 2)
        scored = sorted(
            ((manual_score(toy_lm, q, x), x) for x in toy_lm.candidate_ids()),
            key=lambda sx: (-sx[0], sx[1]))
        want = [Substitute(x, s) for s, x in scored[:2]]
        assert oracle_topk(toy_lm, q) == want

    def test_boundary_tokens_never_candidates(self, toy_lm):
        a, = ids(toy_lm, "a")
        q = Query((BOS_ID, a, a, EOS_ID), 2, 99)
        words = {s.word for s in oracle_topk(toy_lm, q)}
        assert BOS_ID not in words and EOS_ID not in words
        assert UNK_ID not in words

    def test_include_unk_flag(self, toy_lm):
        a, = ids(toy_lm, "a")
        q = Query((BOS_ID, a, a, EOS_ID), 2, 99)
        words = {s.word for s in oracle_topk(toy_lm, q, include_unk=True)}
        assert UNK_ID in words

    def test_exclude_ids(self, toy_lm):
        a, c = ids(toy_lm, "a", "c")
        q = Query((BOS_ID, a, a, EOS_ID), 2, 99)
        words = {s.word for s in oracle_topk(toy_lm, q, exclude=frozenset((c,)))}
        assert c not in words

    def test_score_ties_break_by_ascending_id(self):
        text = ("\\data\\\nngram 1=5\n\n\\1-grams:\n"
                "-99\t<s>\n-1.0\t</s>\n-2.0\t<unk>\n-0.4\tsame1\n-0.4\tsame2\n"
                "\n\\end\\\n")
        lm = parse_arpa(io.StringIO(text))
        s1, s2 = lm.vocab.id("same1"), lm.vocab.id("same2")
        q = Query((BOS_ID, s1, EOS_ID), 1, 2)
        subs = oracle_topk(lm, q)
        assert [s.word for s in subs] == [min(s1, s2), max(s1, s2)]
        assert subs[0].score == subs[1].score == -0.4

    def test_words_without_probability_ineligible(self):
        text = ("\\data\\\nngram 1=5\n\n\\1-grams:\n"
                "-99\t<s>\n-1.0\t</s>\n-2.0\t<unk>\n-0.4\tok\n-99\tghost\n"
                "\n\\end\\\n")
        lm = parse_arpa(io.StringIO(text))
        q = Query((BOS_ID, lm.vocab.id("ok"), EOS_ID), 1, 99)
        words = {s.word for s in oracle_topk(lm, q)}
        assert lm.vocab.id("ghost") not in words
        assert words == {lm.vocab.id("ok")}


class TestQueryValidation:
    def test_target_on_boundary_rejected(self, toy_lm):
        a, = ids(toy_lm, "a")
        with pytest.raises(ValueError):
            Query((BOS_ID, a, EOS_ID), 0, 1)
        with pytest.raises(ValueError):
            Query((BOS_ID, a, EOS_ID), 2, 1)

    def test_k_below_one_rejected(self, toy_lm):
        a, = ids(toy_lm, "a")
        with pytest.raises(ValueError):
            Query((BOS_ID, a, EOS_ID), 1, 0)

    def test_unpadded_sentence_rejected(self, toy_lm):
        a, b = ids(toy_lm, "a", "b")
        with pytest.raises(ValueError):
            Query((a, b, a), 1, 1)
        with pytest.raises(ValueError):
            Query((BOS_ID, EOS_ID), 1, 1)
