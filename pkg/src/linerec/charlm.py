"""Backoff n-gram language models over characters or words.

Estimation uses Witten-Bell smoothing (closed form, no cutoffs to tune),
stored in standard backoff form: explicit log10 probabilities for seen
n-grams plus a log10 backoff weight per seen history, so models round-trip
through the ARPA text format and score exactly like any external toolkit's
output would.

Character mode treats the inter-word space as a regular token.  Word mode
splits digits into single tokens.  A few typographic characters are folded
onto modeled equivalents before tokenization; lines still containing
unmodeled characters are meant to be skipped (see `filter_modeled`).
"""

import math
import re
from collections import Counter
from functools import lru_cache

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

_LOG10_ZERO = -99.0  # conventional stand-in for "never predicted"

_CHAR_FOLDS = {
    "\u0153": "oe",   # oe ligature
    "\u0152": "OE",
    "\u2019": "'",    # right single quotation mark
    "\u2018": "'",
    "\u2013": "-",    # en dash
    "\u2014": "-",    # em dash
}


def normalize_text(text):
    """Fold typographic variants onto their modeled equivalents."""
    for src, dst in _CHAR_FOLDS.items():
        text = text.replace(src, dst)
    return text


def filter_modeled(lines, charset):
    """Normalize, then drop lines with characters outside `charset`."""
    allowed = set(charset)
    kept = []
    for line in lines:
        line = normalize_text(line)
        if set(line) <= allowed:
            kept.append(line)
    return kept


def tokenize_chars(line):
    return list(line)


_WORD_SPLIT = re.compile(r"\d|\D+")


def tokenize_words(line):
    """Whitespace tokens, with digits split out as single tokens."""
    out = []
    for tok in line.split():
        out.extend(_WORD_SPLIT.findall(tok))
    return out


class NGramLM:
    """Backoff model: entries map n-gram tuples to (log10 p, log10 bow).

    The backoff weight is None for entries that never occur as a history.
    Scoring follows the Katz convention: an explicit entry wins, otherwise
    backoff(history) * p(token | shortened history).
    """

    def __init__(self, order, entries):
        self.order = order
        self.entries = entries
        self.vocab = sorted(
            g[0] for g in entries if len(g) == 1 and g[0] != BOS)
        self._vocab_set = set(self.vocab)
        self._next_cache = lru_cache(maxsize=65536)(self._next_logprobs)

    def _lookup(self, gram):
        return self.entries.get(gram)

    def _trim(self, history):
        history = tuple(history)
        if len(history) > self.order - 1:
            history = history[-(self.order - 1):]
        return history

    def _map_token(self, token):
        return token if token in self._vocab_set or token == BOS else UNK

    def logprob(self, token, history=()):
        """log10 p(token | history) through the backoff chain."""
        token = self._map_token(token)
        history = tuple(self._map_token(t) for t in self._trim(history))
        acc = 0.0
        while True:
            hit = self._lookup(history + (token,))
            if hit is not None:
                return acc + hit[0]
            if not history:
                return acc + _LOG10_ZERO  # unreachable when UNK is modeled
            hist_entry = self._lookup(history)
            if hist_entry is not None and hist_entry[1] is not None:
                acc += hist_entry[1]
            history = history[1:]

    def next_logprobs(self, history=()):
        """Full conditional distribution {token: log10 p} for one history."""
        history = tuple(self._map_token(t) for t in self._trim(history))
        return self._next_cache(history)

    def _next_logprobs(self, history):
        if not history:
            return {w: self.entries[(w,)][0] for w in self.vocab}
        lower = dict(self._next_cache(history[1:]))
        hist_entry = self._lookup(history)
        bow = (hist_entry[1] if hist_entry is not None
               and hist_entry[1] is not None else 0.0)
        for w in lower:
            hit = self._lookup(history + (w,))
            lower[w] = hit[0] if hit is not None else bow + lower[w]
        return lower

    def unk_logprob(self, history=()):
        return self.logprob(UNK, history)

    def sentence_logprob(self, tokens):
        """log10 p(tokens </s>) with <s> padding, summed per token."""
        hist = (BOS,) * (self.order - 1)
        total = 0.0
        for tok in list(tokens) + [EOS]:
            total += self.logprob(tok, hist)
            hist = (hist + (self._map_token(tok),))[-(self.order - 1):] \
                if self.order > 1 else ()
        return total

    def perplexity(self, corpus):
        """10^(-avg log10 p) over all tokens plus one </s> per sentence."""
        total, count = 0.0, 0
        for tokens in corpus:
            total += self.sentence_logprob(tokens)
            count += len(tokens) + 1
        if count == 0:
            raise ValueError("empty corpus")
        return 10.0 ** (-total / count)


def estimate(corpus, order, smoothing="witten-bell"):
    """Witten-Bell backoff model from a corpus of token sequences."""
    if smoothing != "witten-bell":
        raise ValueError("unsupported smoothing %r" % (smoothing,))
    corpus = [list(s) for s in corpus]
    if not corpus or all(len(s) == 0 for s in corpus):
        raise ValueError("empty corpus")
    if order < 1:
        raise ValueError("order must be >= 1")
    longest = max(len(s) for s in corpus)
    if order > longest + 2:
        raise ValueError(
            "order %d exceeds longest sentence plus boundaries (%d)"
            % (order, longest + 2))

    counts = [Counter() for _ in range(order + 1)]  # counts[k]: k-grams
    for sent in corpus:
        padded = [BOS] * (order - 1) + sent + [EOS]
        start = order - 1
        for i in range(start, len(padded)):
            for k in range(1, order + 1):
                if i - k + 1 < 0:
                    break
                counts[k][tuple(padded[i - k + 1 : i + 1])] += 1

    # distinct continuation types and totals per history
    types = [None] * (order + 1)
    totals = [None] * (order + 1)
    for k in range(1, order + 1):
        tp, tot = Counter(), Counter()
        for gram, c in counts[k].items():
            tp[gram[:-1]] += 1
            tot[gram[:-1]] += c
        types[k] = tp
        totals[k] = tot

    # interpolated Witten-Bell probabilities, lowest order first
    probs = [dict() for _ in range(order + 1)]
    n_tokens = totals[1][()]
    n_types = types[1][()]
    uni_denom = n_tokens + n_types
    for gram, c in counts[1].items():
        probs[1][gram] = c / uni_denom
    probs[1][(UNK,)] = n_types / uni_denom
    for k in range(2, order + 1):
        for gram, c in counts[k].items():
            hist = gram[:-1]
            lam_num = types[k][hist]
            lower = _lower_prob(probs, gram)
            probs[k][gram] = (c + lam_num * lower) / (totals[k][hist] + lam_num)

    # backoff weights per seen history
    entries = {}
    for k in range(1, order + 1):
        for gram, p in probs[k].items():
            entries[gram] = [math.log10(p) if p > 0 else _LOG10_ZERO, None]
    if (BOS,) not in entries and order > 1:
        entries[(BOS,)] = [_LOG10_ZERO, None]
    for k in range(2, order + 1):
        by_hist = {}
        for gram in probs[k]:
            by_hist.setdefault(gram[:-1], []).append(gram)
        for hist, grams in by_hist.items():
            seen_mass = sum(probs[k][g] for g in grams)
            lower_mass = sum(_lower_prob(probs, g) for g in grams)
            num = max(1.0 - seen_mass, 0.0)
            den = max(1.0 - lower_mass, 1e-12)
            bow = math.log10(max(num, 1e-12) / den)
            if hist not in entries:  # histories made only of <s>
                entries[hist] = [_LOG10_ZERO, None]
            entries[hist][1] = bow

    entries = {g: (p, b) for g, (p, b) in entries.items()}
    return NGramLM(order, entries)


def _lower_prob(probs, gram):
    """Interpolated probability of gram's token under the shorter history."""
    if len(gram) == 1:
        return probs[1][gram]
    shorter = gram[1:]
    while len(shorter) > 1 and shorter not in probs[len(shorter)]:
        shorter = shorter[1:]
    if shorter in probs[len(shorter)]:
        return probs[len(shorter)][shorter]
    return probs[1].get((gram[-1],), probs[1][(UNK,)])


# ---------------------------------------------------------------------------
# ARPA persistence

# the literal space token of character models cannot survive ARPA's
# space-separated fields; escape it the way character LM toolkits do
_SPACE_TOKEN = "<space>"


def _escape(token):
    return _SPACE_TOKEN if token == " " else token


def _unescape(token):
    return " " if token == _SPACE_TOKEN else token


def save_arpa(lm):
    by_order = [dict() for _ in range(lm.order + 1)]
    for gram, pb in lm.entries.items():
        by_order[len(gram)][gram] = pb
    out = ["\\data\\"]
    for k in range(1, lm.order + 1):
        out.append("ngram %d=%d" % (k, len(by_order[k])))
    for k in range(1, lm.order + 1):
        out.append("")
        out.append("\\%d-grams:" % k)
        for gram in sorted(by_order[k]):
            p, bow = by_order[k][gram]
            line = "%.6f\t%s" % (p, " ".join(_escape(t) for t in gram))
            if bow is not None:
                line += "\t%.6f" % bow
            out.append(line)
    out.append("")
    out.append("\\end\\")
    return "\n".join(out) + "\n"


class ArpaError(ValueError):
    def __init__(self, message, line_no):
        super().__init__("%s (line %d)" % (message, line_no))
        self.line_no = line_no


def load_arpa(text):
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].strip() != "\\data\\":
        i += 1
    if i == len(lines):
        raise ArpaError("missing \\data\\ header", 1)
    i += 1
    declared = {}
    while i < len(lines) and lines[i].strip():
        m = re.match(r"ngram (\d+)=(\d+)", lines[i].strip())
        if not m:
            raise ArpaError("bad count line %r" % lines[i], i + 1)
        declared[int(m.group(1))] = int(m.group(2))
        i += 1
    order = max(declared) if declared else 0
    if order == 0:
        raise ArpaError("no ngram counts declared", i)
    entries = {}
    found = Counter()
    section = None
    saw_end = False
    for j in range(i, len(lines)):
        line = lines[j].strip()
        if not line:
            continue
        if line == "\\end\\":
            saw_end = True
            break
        m = re.match(r"\\(\d+)-grams:$", line)
        if m:
            section = int(m.group(1))
            if section not in declared:
                raise ArpaError("section %d not declared" % section, j + 1)
            continue
        if section is None:
            raise ArpaError("entry outside any section", j + 1)
        parts = line.split("\t")
        if len(parts) == 1:
            parts = line.split()
            parts = [parts[0], " ".join(parts[1 : 1 + section]),
                     *parts[1 + section :]]
        if len(parts) not in (2, 3):
            raise ArpaError("malformed entry %r" % line, j + 1)
        gram = tuple(_unescape(t) for t in parts[1].split())
        if len(gram) != section:
            raise ArpaError("%d-gram of wrong length %r" % (section, gram),
                            j + 1)
        bow = float(parts[2]) if len(parts) == 3 else None
        entries[gram] = (float(parts[0]), bow)
        found[section] += 1
    if not saw_end:
        raise ArpaError("missing \\end\\ marker", len(lines))
    for k, n in declared.items():
        if found[k] != n:
            raise ArpaError(
                "declared %d %d-grams, found %d" % (n, k, found[k]),
                len(lines))
    return NGramLM(order, entries)


# ---------------------------------------------------------------------------
# lexicon trie

class TrieNode:
    __slots__ = ("children", "terminal")

    def __init__(self):
        self.children = {}
        self.terminal = False


class LexiconTrie:
    """Prefix tree over vocabulary words; OOV words are unreachable."""

    def __init__(self, words, max_words=None):
        self.root = TrieNode()
        self.n_words = 0
        for word in words:
            if max_words is not None and self.n_words >= max_words:
                break
            self.add(word)

    def add(self, word):
        if not word:
            return
        node = self.root
        for ch in word:
            node = node.children.setdefault(ch, TrieNode())
        if not node.terminal:
            node.terminal = True
            self.n_words += 1

    def has_word(self, word):
        node = self._walk(word)
        return node is not None and node.terminal

    def has_prefix(self, prefix):
        return self._walk(prefix) is not None

    def _walk(self, text):
        node = self.root
        for ch in text:
            node = node.children.get(ch)
            if node is None:
                return None
        return node
