"""CTC loss, greedy decoding, and prefix beam search with LM fusion.

The loss marginalizes over all blank-augmented alignments with a log-space
forward-backward pass over the (T, 2L+1) label lattice; its gradient with
respect to the logits is softmax(logits) minus the lattice occupancy.

The beam search is the standard prefix search over (blank, non-blank)
prefix probabilities.  Per step it is vectorized over (prefix, class):
a target prefix can receive mass from at most three sources (its own
blank-stay, its own repeat-stay, and one extension from its parent), so
exact merging needs no unbounded hashing and pruning reduces to a top-k
over candidate scores.  Emission scores are prior-scaled posteriors
p(c|x)/prior(c)^w; an optional n-gram LM adds shallow-fusion scores on
character emission, or at word boundaries when a lexicon trie constrains
the prefixes.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .autodiff import ShapeError, Tensor, record, _log_softmax, _softmax

LN10 = np.log(10.0)
NEG_INF = -np.inf

BLANK = 0


class PosteriorMatrix:
    """Per-timestep class probabilities, blank at class index 0."""

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.ndim != 2:
            raise ShapeError("posterior matrix must be 2-D, got %r"
                             % (probs.shape,))
        if probs.min() < 0.0 or probs.max() > 1.0:
            raise ValueError("posterior entries must lie in [0, 1]")
        rowsum = probs.sum(axis=1)
        if np.abs(rowsum - 1.0).max() > 1e-5:
            raise ValueError("posterior rows must sum to 1 (max deviation %g)"
                             % np.abs(rowsum - 1.0).max())
        self.probs = probs

    @property
    def T(self):
        return self.probs.shape[0]

    @property
    def C(self):
        return self.probs.shape[1]

    @classmethod
    def from_logits(cls, logits):
        data = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
        return cls(_softmax(data.astype(np.float64), axis=1))

    def to_text(self):
        lines = ["%d %d" % (self.T, self.C)]
        for row in self.probs:
            lines.append(" ".join("%.8f" % v for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        t, c = (int(v) for v in lines[0].split())
        if len(lines) - 1 != t:
            raise ValueError("posterior header declares %d rows, found %d"
                             % (t, len(lines) - 1))
        rows = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
        if rows.shape != (t, c):
            raise ValueError("posterior body shape %r does not match header"
                             % (rows.shape,))
        # renormalize away the serialization rounding
        return cls(rows / rows.sum(axis=1, keepdims=True))


class LabelSequence:
    """Blank-free label indices with an optional alphabet for display."""

    def __init__(self, indices, alphabet=None):
        indices = [int(i) for i in indices]
        if any(i < 1 for i in indices):
            raise ValueError("label indices must be >= 1 (0 is the blank)")
        self.indices = indices
        self.alphabet = alphabet

    def __len__(self):
        return len(self.indices)

    def __eq__(self, other):
        if isinstance(other, LabelSequence):
            return self.indices == other.indices
        return NotImplemented

    def __iter__(self):
        return iter(self.indices)

    def to_text(self):
        if self.alphabet is None:
            raise ValueError("label sequence carries no alphabet")
        return "".join(self.alphabet[i] for i in self.indices)

    def __repr__(self):
        return "LabelSequence(%r)" % (self.indices,)


class UnalignableError(ValueError):
    """Label sequence needs more output frames than the network produced."""


def min_frames(labels):
    """Shortest alignment: one frame per label plus a separating blank
    between adjacent repeats."""
    idx = list(labels)
    repeats = sum(1 for a, b in zip(idx, idx[1:]) if a == b)
    return len(idx) + repeats


def ctc_loss(logits, labels):
    """Negative log marginal probability of `labels` plus its gradient.

    Returns (loss Tensor, gradient ndarray wrt logits).  When a tape is
    active the loss node is recorded, so training flows through it.
    The lattice runs at float64 regardless of the logits dtype.
    """
    t_len, n_classes = logits.shape
    idx = list(labels)
    need = min_frames(idx)
    if t_len < need:
        raise UnalignableError(
            "unalignable: %d frames but label sequence needs at least %d"
            % (t_len, need))
    logp = _log_softmax(logits.data.astype(np.float64), axis=1)
    ext = np.zeros(2 * len(idx) + 1, dtype=int)
    ext[1::2] = idx
    s_len = len(ext)

    alpha = np.full((t_len, s_len), NEG_INF)
    alpha[0, 0] = logp[0, ext[0]]
    if s_len > 1:
        alpha[0, 1] = logp[0, ext[1]]
    skip_ok = np.zeros(s_len, dtype=bool)
    skip_ok[2:] = (ext[2:] != BLANK) & (ext[2:] != ext[:-2])
    for t in range(1, t_len):
        prev = alpha[t - 1]
        step = np.full(s_len, NEG_INF)
        step[1:] = prev[:-1]
        skip = np.full(s_len, NEG_INF)
        skip[2:] = prev[:-2]
        skip = np.where(skip_ok, skip, NEG_INF)
        alpha[t] = np.logaddexp(np.logaddexp(prev, step), skip) + logp[t, ext]

    if s_len > 1:
        log_z = np.logaddexp(alpha[-1, -1], alpha[-1, -2])
    else:
        log_z = alpha[-1, -1]

    beta = np.full((t_len, s_len), NEG_INF)
    beta[-1, -1] = logp[-1, ext[-1]]
    if s_len > 1:
        beta[-1, -2] = logp[-1, ext[-2]]
    for t in range(t_len - 2, -1, -1):
        nxt = beta[t + 1]
        step = np.full(s_len, NEG_INF)
        step[:-1] = nxt[1:]
        skip = np.full(s_len, NEG_INF)
        # a skip from s lands on s+2, legal when s+2 may skip back to s
        skip[:-2] = np.where(skip_ok[2:], nxt[2:], NEG_INF)
        beta[t] = np.logaddexp(np.logaddexp(nxt, step), skip) + logp[t, ext]

    # occupancy: alpha and beta both include the emission at t, divide once
    gamma = alpha + beta - logp[:, ext] - log_z
    occupancy = np.zeros((t_len, n_classes))
    np.add.at(occupancy.T, (ext, slice(None)), np.exp(gamma).T)
    grad = (_softmax(logits.data.astype(np.float64), axis=1)
            - occupancy).astype(logits.dtype)

    loss = Tensor(np.asarray(-log_z, dtype=np.float64))

    def backward(g):
        return (g * grad,)

    record(loss, (logits,), backward)
    return loss, grad


def greedy_decode(post, alphabet=None):
    """Per-frame argmax, collapse adjacent repeats, drop blanks.

    Ties break toward the lower class index (argmax convention).
    """
    frames = post.probs.argmax(axis=1)
    out = []
    prev = -1
    for f in frames:
        if f != prev and f != BLANK:
            out.append(int(f))
        prev = f
    return LabelSequence(out, alphabet)


def priors_from_transcripts(label_seqs, n_classes):
    """Normalized non-blank class frequencies over training transcripts."""
    counts = np.zeros(n_classes)
    for seq in label_seqs:
        for i in seq:
            counts[i] += 1
    counts[BLANK] = 0.0
    total = counts.sum()
    if total == 0:
        raise ValueError("no labels to estimate priors from")
    return counts / total


@dataclass
class FusionConfig:
    """Decoder-side fusion knobs.

    `lm` scores characters directly, or words when `word_lexicon` is set
    (then prefixes are constrained to lexicon paths and LM scores apply at
    space boundaries).  `priors` is a distribution over non-blank classes;
    emissions are divided by prior^prior_weight before decoding.
    """

    lm: object = None
    lm_weight: float = 1.0
    prior_weight: float = 0.7
    priors: np.ndarray = None
    beam_width: int = 16
    word_lexicon: object = None
    alphabet: tuple = None
    lm_state: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.lm_weight < 0:
            raise ValueError("lm_weight must be >= 0")
        if self.priors is not None:
            p = np.asarray(self.priors, dtype=np.float64)
            nb = p[1:]
            if abs(nb.sum() - 1.0) > 1e-6 or (nb < 0).any():
                raise ValueError(
                    "priors must form a distribution over non-blank classes")
            self.priors = p


class _Hyp:
    __slots__ = ("prefix", "lpb", "lpnb", "lm_total", "lm_vec", "mask",
                 "node", "cur_word", "word_hist")

    def __init__(self, prefix, lpb, lpnb, lm_total, lm_vec, mask,
                 node, cur_word, word_hist):
        self.prefix = prefix
        self.lpb = lpb
        self.lpnb = lpnb
        self.lm_total = lm_total
        self.lm_vec = lm_vec
        self.mask = mask
        self.node = node
        self.cur_word = cur_word
        self.word_hist = word_hist

    def score(self):
        return np.logaddexp(self.lpb, self.lpnb) + self.lm_total


def prefix_beam_decode(post, cfg):
    """Highest-scoring label sequence under CTC + fusion scores."""
    t_len, n_classes = post.T, post.C
    with np.errstate(divide="ignore"):
        lnp = np.log(post.probs)
        emit = lnp[:, 1:].copy()
        if cfg.priors is not None and cfg.prior_weight != 0.0:
            emit -= cfg.prior_weight * np.log(
                np.maximum(cfg.priors[1:], 1e-12))

    char_lm = cfg.lm if cfg.lm is not None and cfg.word_lexicon is None else None
    word_lm = cfg.lm if cfg.word_lexicon is not None else None
    space_idx = None
    if word_lm is not None:
        if cfg.alphabet is None:
            raise ValueError("word-lexicon fusion needs an alphabet")
        space_idx = cfg.alphabet.index(" ")

    root = _Hyp((), 0.0, NEG_INF, 0.0,
                _char_lm_vec(char_lm, (), cfg) if char_lm else None,
                _lexicon_mask(cfg, cfg.word_lexicon.root, "")
                if word_lm else None,
                cfg.word_lexicon.root if word_lm else None, "", ())
    beam = [root]

    for t in range(t_len):
        eb = lnp[t, BLANK]
        et = emit[t]
        n = len(beam)
        lpb = np.array([h.lpb for h in beam])
        lpnb = np.array([h.lpnb for h in beam])
        both = np.logaddexp(lpb, lpnb)
        last = np.array([h.prefix[-1] if h.prefix else 0 for h in beam])

        new_lpb = both + eb
        new_lpnb_stay = np.where(
            last > 0, lpnb + et[np.maximum(last - 1, 0)], NEG_INF)

        # extension matrix (prefix x class); repeating the last char may
        # only consume the blank-terminated mass
        base = np.repeat(both[:, None], n_classes - 1, axis=1)
        has_last = last > 0
        base[np.arange(n)[has_last], last[has_last] - 1] = lpb[has_last]
        ext = base + et[None, :]
        lm_add = np.zeros_like(ext)
        for i, h in enumerate(beam):
            if h.lm_vec is not None:
                lm_add[i] = cfg.lm_weight * h.lm_vec
            if h.mask is not None:
                ext[i][~h.mask] = NEG_INF

        # merge child-in-beam stays with their parent's extension
        index = {h.prefix: i for i, h in enumerate(beam)}
        merged = np.zeros((n, n_classes - 1), dtype=bool)
        for i, h in enumerate(beam):
            if h.prefix:
                j = index.get(h.prefix[:-1])
                if j is not None:
                    c = h.prefix[-1] - 1
                    new_lpnb_stay[i] = np.logaddexp(new_lpnb_stay[i],
                                                    ext[j, c])
                    merged[j, c] = True

        lm_totals = np.array([h.lm_total for h in beam])
        stay_scores = (np.logaddexp(new_lpb, new_lpnb_stay) + lm_totals)
        ext_scores = ext + lm_add + lm_totals[:, None]
        ext_scores[merged] = NEG_INF

        k = cfg.beam_width
        cand = np.concatenate([stay_scores, ext_scores.reshape(-1)])
        live = np.flatnonzero(cand > NEG_INF)
        if live.size == 0:
            warnings.warn("prefix beam emptied; falling back to greedy decode")
            return greedy_decode(post, cfg.alphabet)
        # stable sort with ties toward the lower candidate index, which
        # matches the greedy decoder's low-class tie rule
        order = live[np.argsort(-cand[live], kind="stable")[:k]]

        nxt = []
        for flat in order:
            if flat < n:
                h = beam[flat]
                nxt.append(_Hyp(h.prefix, new_lpb[flat], new_lpnb_stay[flat],
                                h.lm_total, h.lm_vec, h.mask, h.node,
                                h.cur_word, h.word_hist))
            else:
                i, c = divmod(flat - n, n_classes - 1)
                h = beam[i]
                cls = c + 1
                nxt.append(_extend(h, cls, ext[i, c], lm_add[i, c], cfg,
                                   char_lm, word_lm, space_idx))
        beam = nxt

    best = max(beam, key=lambda h: _final_score(h, cfg, word_lm))
    return LabelSequence(best.prefix, cfg.alphabet)


def _extend(h, cls, lpnb, lm_add, cfg, char_lm, word_lm, space_idx):
    prefix = h.prefix + (cls,)
    lm_total = h.lm_total + lm_add
    lm_vec = mask = node = None
    cur_word, word_hist = h.cur_word, h.word_hist
    if char_lm is not None:
        lm_vec = _char_lm_vec(char_lm, prefix, cfg)
    elif word_lm is not None:
        if cls == space_idx:
            word = h.cur_word
            lm_total += cfg.lm_weight * LN10 * word_lm.logprob(
                word, h.word_hist)
            word_hist = (h.word_hist + (word,))[-(word_lm.order - 1):] \
                if word_lm.order > 1 else ()
            cur_word = ""
            node = cfg.word_lexicon.root
        else:
            cur_word = h.cur_word + cfg.alphabet[cls]
            node = h.node.children[cfg.alphabet[cls]]
        mask = _lexicon_mask(cfg, node, cur_word)
    return _Hyp(prefix, NEG_INF, lpnb, lm_total, lm_vec, mask, node,
                cur_word, word_hist)


def _final_score(h, cfg, word_lm):
    score = h.score()
    if word_lm is not None and h.cur_word and h.node.terminal:
        score += cfg.lm_weight * LN10 * word_lm.logprob(h.cur_word,
                                                        h.word_hist)
    return score


def _char_lm_vec(lm, prefix, cfg):
    """Shallow-fusion increments (natural log) for every next class."""
    history = tuple(cfg.alphabet[i] for i in prefix)
    vec = lm.next_logprobs(history)
    out = np.empty(len(cfg.alphabet) - 1)
    for c in range(1, len(cfg.alphabet)):
        out[c - 1] = vec.get(cfg.alphabet[c], lm.unk_logprob(history))
    return out * LN10


def _lexicon_mask(cfg, node, cur_word):
    """Admissible next classes under the lexicon trie."""
    mask = np.zeros(len(cfg.alphabet) - 1, dtype=bool)
    for ch in node.children:
        try:
            mask[cfg.alphabet.index(ch) - 1] = True
        except ValueError:
            pass
    if node.terminal and cur_word:
        mask[cfg.alphabet.index(" ") - 1] = True
    return mask
