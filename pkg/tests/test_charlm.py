import math

import numpy as np
import pytest

from linerec import charlm
from linerec.charlm import (
    BOS,
    EOS,
    UNK,
    ArpaError,
    LexiconTrie,
    NGramLM,
    estimate,
    load_arpa,
    save_arpa,
)


def test_witten_bell_bigram_hand_computed():
    # corpus "ab ab", characters: a b space a b
    lm = estimate([list("ab ab")], order=2)
    # unigrams: a:2 b:2 space:1 </s>:1 -> N=6, T=4, denom 10
    assert 10 ** lm.logprob("a") == pytest.approx(0.2)
    assert 10 ** lm.logprob(UNK) == pytest.approx(0.4)
    # p(b|a) = (2 + T(a)*p1(b)) / (c(a)+T(a)) = (2 + 0.2)/3
    assert 10 ** lm.logprob("b", ("a",)) == pytest.approx(2.2 / 3)
    # backoff: alpha(a) = (1 - 2.2/3)/(1 - 0.2); p(space|a) = alpha * 0.1
    alpha = (1 - 2.2 / 3) / 0.8
    assert 10 ** lm.logprob(" ", ("a",)) == pytest.approx(alpha * 0.1)


def test_unigram_single_token_normalizes():
    lm = estimate([["a"]], order=1)
    assert lm.logprob("a") < 0
    total = sum(10 ** lp for lp in lm.next_logprobs(()).values())
    assert total == pytest.approx(1.0, abs=1e-9)


def test_empty_history_falls_back_to_unigram():
    lm = estimate([list("abcabc")], order=3)
    assert lm.logprob("a", ()) == lm.logprob("a")


def test_conditionals_sum_to_one_over_random_histories():
    rng = np.random.default_rng(0)
    text = "the cat sat on the mat and the dog ran off to the sea again"
    lm = estimate([list(line) for line in [text, text[::-1], "a bc de"]],
                  order=3)
    vocab = lm.vocab
    for _ in range(100):
        hist = tuple(rng.choice(vocab + [BOS])
                     for _ in range(int(rng.integers(0, 3))))
        dist = lm.next_logprobs(hist)
        total = sum(10 ** lp for lp in dist.values())
        assert abs(total - 1.0) < 1e-4, hist


def test_higher_order_does_not_hurt_training_perplexity():
    rng = np.random.default_rng(1)
    words = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"]
    lines = [" ".join(rng.choice(words, size=8)) for _ in range(200)]
    corpus = [list(ln) for ln in lines]
    ppl = {n: estimate(corpus, n).perplexity(corpus) for n in (5, 6, 7)}
    assert ppl[7] <= ppl[6] <= ppl[5]


def test_training_perplexity_below_shuffled():
    rng = np.random.default_rng(2)
    text = ("she sells sea shells on the sea shore and the shells "
            "she sells are sea shells for sure")
    corpus = [list(text)]
    chars = list(text)
    rng.shuffle(chars)
    shuffled = [chars]
    lm = estimate(corpus, order=5)
    assert lm.perplexity(corpus) < lm.perplexity(shuffled)


def test_order_too_large_rejected():
    with pytest.raises(ValueError, match="order"):
        estimate([list("ab")], order=9)


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        estimate([], order=2)


# ---------------------------------------------------------------------------
# ARPA round trip

def test_arpa_roundtrip_identity():
    rng = np.random.default_rng(3)
    corpus = [list("the quick brown fox"), list("the lazy dog jumps"),
              list("pack my box with jugs")]
    lm = estimate(corpus, order=3)
    text = save_arpa(lm)
    lm2 = load_arpa(text)
    assert lm2.order == lm.order
    assert set(lm2.entries) == set(lm.entries)
    vocab = lm.vocab
    for _ in range(100):
        tok = rng.choice(vocab)
        hist = tuple(rng.choice(vocab, size=int(rng.integers(0, 3))))
        assert lm2.logprob(tok, hist) == pytest.approx(
            lm.logprob(tok, hist), abs=1e-5)


def test_arpa_missing_end_rejected():
    lm = estimate([list("abc")], order=2)
    text = save_arpa(lm).replace("\\end\\", "")
    with pytest.raises(ArpaError, match="end"):
        load_arpa(text)


def test_arpa_count_mismatch_reports_line():
    lm = estimate([list("abc")], order=2)
    lines = save_arpa(lm).splitlines()
    # drop one body entry so a declared count no longer matches
    drop = next(i for i, ln in enumerate(lines)
                if ln and ln[0] not in "\\n" and "\t" in ln)
    del lines[drop]
    with pytest.raises(ArpaError, match="line"):
        load_arpa("\n".join(lines))


def test_hand_written_arpa_backoff_queries():
    text = """\\data\\
ngram 1=3
ngram 2=2

\\1-grams:
-0.500000\ta\t-0.301030
-0.700000\tb\t-0.200000
-1.000000\t<unk>

\\2-grams:
-0.100000\ta b
-0.900000\tb a

\\end\\
"""
    lm = load_arpa(text)
    assert lm.logprob("b", ("a",)) == pytest.approx(-0.1)
    assert lm.logprob("a", ("b",)) == pytest.approx(-0.9)
    # unseen bigram: backoff(b) + p1(b)
    assert lm.logprob("b", ("b",)) == pytest.approx(-0.2 + -0.7)
    # token outside vocab maps to <unk>: backoff(a) + p1(unk)
    assert lm.logprob("zzz", ("a",)) == pytest.approx(-0.30103 - 1.0)


# ---------------------------------------------------------------------------
# normalization and tokenization

def test_normalize_folds_typographic_chars():
    assert charlm.normalize_text("cœur") == "coeur"
    assert charlm.normalize_text("it’s") == "it's"
    assert charlm.normalize_text("a–b—c") == "a-b-c"


def test_filter_modeled_drops_unmodeled_lines():
    lines = ["good line", "bad ý line", "cœur"]
    kept = charlm.filter_modeled(lines, set("abcdegilnoru "))
    assert kept == ["good line", "coeur"]


def test_word_tokenizer_splits_digits():
    assert charlm.tokenize_words("call 911 now") == \
        ["call", "9", "1", "1", "now"]
    assert charlm.tokenize_words("a1b") == ["a", "1", "b"]


# ---------------------------------------------------------------------------
# lexicon trie

def test_trie_membership():
    trie = LexiconTrie(["cat", "car", "dog"])
    assert trie.has_word("cat") and trie.has_word("car")
    assert not trie.has_word("ca")
    assert trie.has_prefix("ca")
    assert not trie.has_prefix("x")
    assert trie.n_words == 3


def test_trie_word_cap():
    trie = LexiconTrie(["a", "b", "c"], max_words=2)
    assert trie.n_words == 2
    assert not trie.has_word("c")
