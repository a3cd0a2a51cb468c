"""Synthetic text-line images with graded difficulty.

Lines are rendered from the built-in stroke font onto a white canvas with
dark ink.  Difficulty presets control style jitter (slant, thickness,
baseline wobble) and noise: hard mode adds background speckle plus clipped
ascender/descender fragments of phantom neighbor lines poking into the
top/bottom margins, the classic nuisance of loosely segmented pages.

Everything derives from numpy Generators seeded per line as
(corpus seed, line index), so corpora are bit-reproducible and rendering
order independent.  Images are 8-bit PGM (P5); a corpus manifest is UTF-8
TSV, "relative/image/path<TAB>transcript" per line.
"""

import os
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from . import strokefont

DEFAULT_CHARS = (
    " abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~"
    "àâäçèéêë"
    "îïôöùû"
)

DIFFICULTIES = ("easy", "medium", "hard")


class Charset:
    """Ordered characters; CTC class index = position + 1 (0 is blank)."""

    def __init__(self, chars=DEFAULT_CHARS):
        chars = list(chars)
        if len(set(chars)) != len(chars):
            raise ValueError("charset contains duplicate characters")
        if " " not in chars:
            raise ValueError("charset must contain the space character")
        self.chars = chars
        self._index = {c: i + 1 for i, c in enumerate(chars)}

    def __len__(self):
        return len(self.chars)

    def __contains__(self, ch):
        return ch in self._index

    @property
    def n_classes(self):
        """Including the CTC blank."""
        return len(self.chars) + 1

    def alphabet(self):
        """Class index -> char, blank stub at index 0 (for decoders)."""
        return ("",) + tuple(self.chars)

    def encode(self, text):
        try:
            return [self._index[c] for c in text]
        except KeyError as e:
            raise ValueError("character %r outside charset" % (e.args[0],))

    def decode(self, indices):
        return "".join(self.chars[i - 1] for i in indices)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(self.chars) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8", newline="") as f:
            lines = f.read().split("\n")
        chars = [ln for ln in lines if ln != ""]
        return cls(chars)


@dataclass
class StyleParams:
    slant: float = 0.0          # shear per unit height, +/- jitter
    slant_jitter: float = 0.0
    thickness: float = 1.0      # stroke radius scale
    thickness_jitter: float = 0.0
    wobble_amp: float = 0.0     # baseline wobble, fraction of height
    size_jitter: float = 0.0    # per-char glyph size variation


@dataclass
class NoiseParams:
    speckle_density: float = 0.0   # fraction of pixels hit by dots
    neighbor_clutter: bool = False


_PRESETS = {
    "easy": (StyleParams(),
             NoiseParams()),
    "medium": (StyleParams(slant=0.12, slant_jitter=0.08, thickness_jitter=0.3,
                           wobble_amp=0.015, size_jitter=0.08),
               NoiseParams(speckle_density=0.001)),
    "hard": (StyleParams(slant=0.2, slant_jitter=0.18, thickness_jitter=0.5,
                         wobble_amp=0.035, size_jitter=0.16),
             NoiseParams(speckle_density=0.005, neighbor_clutter=True)),
}


def difficulty_params(difficulty):
    if difficulty not in _PRESETS:
        raise ValueError("unknown difficulty %r" % (difficulty,))
    return _PRESETS[difficulty]


@dataclass
class LineSample:
    image: np.ndarray      # uint8 (H, W), white background
    transcript: str
    difficulty: str
    seed: int


def _stamp(canvas, px, py, radius):
    """Max-compose a soft disc at a float position."""
    h, w = canvas.shape
    r = int(np.ceil(radius))
    x0, x1 = int(np.floor(px)) - r, int(np.floor(px)) + r + 2
    y0, y1 = int(np.floor(py)) - r, int(np.floor(py)) + r + 2
    x0c, x1c = max(x0, 0), min(x1, w)
    y0c, y1c = max(y0, 0), min(y1, h)
    if x0c >= x1c or y0c >= y1c:
        return
    ys = np.arange(y0c, y1c)[:, None] - py
    xs = np.arange(x0c, x1c)[None, :] - px
    d = np.sqrt(ys * ys + xs * xs)
    ink = np.clip(1.4 * (1.0 - d / radius), 0.0, 1.0)
    np.maximum(canvas[y0c:y1c, x0c:x1c], ink, out=canvas[y0c:y1c, x0c:x1c])


def _draw_stroke(canvas, pts, radius):
    pts = np.asarray(pts)
    for (xa, ya), (xb, yb) in zip(pts[:-1], pts[1:]):
        steps = max(2, int(np.hypot(xb - xa, yb - ya) / 0.45) + 1)
        for t in np.linspace(0.0, 1.0, steps):
            _stamp(canvas, xa + (xb - xa) * t, ya + (yb - ya) * t, radius)


def _draw_glyph(canvas, ch, x0, baseline, size, radius, slant, wobble_fn):
    for stroke in strokefont.GLYPHS[ch]:
        pts = []
        for gx, gy in stroke:
            px = x0 + gx * strokefont.glyph_width(ch) * size
            py = baseline + (gy - 1.0) * size
            px += slant * (baseline - py)
            py += wobble_fn(px)
            pts.append((px, py))
        _draw_stroke(canvas, pts, radius)


def render_line(text, style=None, noise=None, seed=0, height=64,
                charset=None, difficulty="custom"):
    """Render one transcript to a grayscale line image.

    `style` and `noise` default to the easy preset; use
    `difficulty_params(name)` for the graded presets.
    """
    charset = charset or Charset()
    if len(text) < 1:
        raise ValueError("transcript must be non-empty")
    for ch in text:
        if ch not in charset:
            raise ValueError("character %r outside charset" % (ch,))
    style = style or StyleParams()
    noise = noise or NoiseParams()
    rng = np.random.default_rng(seed)

    size = 0.26 * height
    baseline = 0.62 * height
    base_radius = height / 26.0
    gap = 0.14 * size
    margin = 0.5 * size
    advances = [strokefont.glyph_width(c) * size + gap for c in text]
    width = int(np.ceil(2 * margin + sum(advances)))
    canvas = np.zeros((height, width), dtype=np.float64)

    if style.wobble_amp > 0:
        amp = style.wobble_amp * height
        freq = rng.uniform(0.5, 1.5) * 2 * np.pi / width
        phase = rng.uniform(0, 2 * np.pi)

        def wobble(px):
            return amp * np.sin(freq * px + phase)
    else:
        def wobble(px):
            return 0.0

    x = margin
    for ch, adv in zip(text, advances):
        g_size = size * (1.0 + style.size_jitter * rng.uniform(-1, 1))
        radius = base_radius * style.thickness * (
            1.0 + style.thickness_jitter * rng.uniform(-0.5, 1.0))
        slant = style.slant + style.slant_jitter * rng.uniform(-1, 1)
        _draw_glyph(canvas, ch, x, baseline, g_size, radius, slant, wobble)
        x += adv

    if noise.neighbor_clutter:
        _add_neighbor_fragments(canvas, rng, size, base_radius)
    if noise.speckle_density > 0:
        k = int(noise.speckle_density * canvas.size)
        ys = rng.integers(0, height, k)
        xs = rng.integers(0, width, k)
        np.maximum.at(canvas, (ys, xs), rng.uniform(0.25, 0.7, k))

    image = np.clip(255.0 * (1.0 - canvas), 0, 255).astype(np.uint8)
    return LineSample(image, text, difficulty, seed)


_DESCENDER_CHARS = "gjpqy"
_ASCENDER_CHARS = "bdfhklt"


def _add_neighbor_fragments(canvas, rng, size, radius):
    """Clipped strokes of phantom lines above and below the written band."""
    height, width = canvas.shape
    n = 2 + int(rng.integers(0, 4))
    for _ in range(n):  # descenders of the line above dip into the top band
        ch = _DESCENDER_CHARS[rng.integers(0, len(_DESCENDER_CHARS))]
        x0 = rng.uniform(0, max(1.0, width - size))
        base = 0.02 * height
        _draw_glyph(canvas, ch, x0, base, size, radius, 0.0, lambda p: 0.0)
    for _ in range(n):  # ascenders of the line below poke into the bottom
        ch = _ASCENDER_CHARS[rng.integers(0, len(_ASCENDER_CHARS))]
        x0 = rng.uniform(0, max(1.0, width - size))
        base = height + 0.7 * size
        _draw_glyph(canvas, ch, x0, base, size, radius, 0.0, lambda p: 0.0)


def ink_entropy(image):
    """Mean per-pixel binary entropy of the ink fraction."""
    p = np.clip(1.0 - image.astype(np.float64) / 255.0, 1e-9, 1 - 1e-9)
    return float(np.mean(-p * np.log2(p) - (1 - p) * np.log2(1 - p)))


# ---------------------------------------------------------------------------
# text source

# Public-domain prose snippet (Lewis Carroll, 1865) used only to give the
# character Markov chain natural statistics for the LM experiments.
_SNIPPET = """
alice was beginning to get very tired of sitting by her sister on the
bank and of having nothing to do once or twice she had peeped into the
book her sister was reading but it had no pictures or conversations in
it and what is the use of a book thought alice without pictures or
conversations so she was considering in her own mind as well as she
could for the hot day made her feel very sleepy and stupid whether the
pleasure of making a daisy chain would be worth the trouble of getting
up and picking the daisies when suddenly a white rabbit with pink eyes
ran close by her there was nothing so very remarkable in that nor did
alice think it so very much out of the way to hear the rabbit say to
itself oh dear oh dear i shall be late when she thought it over
afterwards it occurred to her that she ought to have wondered at this
but at the time it all seemed quite natural
"""


class MarkovText:
    """Character-level Markov chain over a bundled text snippet."""

    def __init__(self, order=3, text=None, charset=None):
        charset = charset or Charset()
        text = " ".join((text or _SNIPPET).split())
        text = "".join(c for c in text if c in charset)
        self.order = order
        self.table = {}
        for i in range(len(text) - order):
            self.table.setdefault(text[i : i + order], []).append(
                text[i + order])
        self.starts = [text[i : i + order] for i in range(len(text) - order)
                       if (i == 0 or text[i - 1] == " ") and text[i] != " "]

    def sample(self, rng, target_len):
        """A word-like string of roughly target_len characters."""
        state = self.starts[rng.integers(0, len(self.starts))]
        out = list(state)
        while len(out) < target_len + 8:
            nexts = self.table.get("".join(out[-self.order:]))
            if not nexts:
                state = self.starts[rng.integers(0, len(self.starts))]
                out.append(" ")
                out.extend(state)
                continue
            out.append(nexts[rng.integers(0, len(nexts))])
        text = "".join(out[:target_len + 8])
        cut = text.rfind(" ", max(1, target_len - 8), target_len + 8)
        if cut > 0:
            text = text[:cut]
        return text.strip() or "a"


# ---------------------------------------------------------------------------
# corpus

def make_corpus(out_dir, n_lines, difficulty, charset=None, text_source=None,
                seed=0, min_chars=4, max_chars=24, height=64):
    """Render a manifest of synthetic lines; returns the manifest path."""
    if n_lines < 1:
        raise ValueError("need at least one line")
    charset = charset or Charset()
    style, noise = difficulty_params(difficulty)
    source = text_source or MarkovText(charset=charset).sample
    img_dir = os.path.join(out_dir, "images")
    os.makedirs(img_dir, exist_ok=True)
    root = np.random.SeedSequence(seed)
    rows = []
    for i, child in enumerate(root.spawn(n_lines)):
        rng = np.random.default_rng(child)
        target = int(rng.integers(min_chars, max_chars + 1))
        text = source(rng, target)
        sample = render_line(text, style, noise,
                             seed=int(rng.integers(0, 2 ** 31)),
                             height=height, charset=charset,
                             difficulty=difficulty)
        rel = os.path.join("images", "%05d.pgm" % i)
        write_pgm(sample.image, os.path.join(out_dir, rel))
        rows.append("%s\t%s" % (rel, text))
    charset.save(os.path.join(out_dir, "charset.txt"))
    manifest = os.path.join(out_dir, "manifest.tsv")
    with open(manifest, "w", encoding="utf-8") as f:
        f.write("\n".join(rows) + "\n")
    return manifest


def load_manifest(manifest_path):
    """[(absolute image path, transcript)] for one manifest."""
    base = os.path.dirname(os.path.abspath(manifest_path))
    out = []
    with open(manifest_path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            rel, transcript = line.split("\t", 1)
            out.append((os.path.join(base, rel), transcript))
    return out


def split_by_length(manifest_path):
    """Split a manifest into short (<8), medium (8-19) and long (>19)
    transcript-length groups, mirroring the line-length protocol."""
    rows = {"short": [], "medium": [], "long": []}
    base = os.path.dirname(os.path.abspath(manifest_path))
    with open(manifest_path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            transcript = line.split("\t", 1)[1]
            if len(transcript) < 8:
                rows["short"].append(line)
            elif len(transcript) <= 19:
                rows["medium"].append(line)
            else:
                rows["long"].append(line)
    out = {}
    for name, lines in rows.items():
        path = os.path.join(base, "manifest_%s.tsv" % name)
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + ("\n" if lines else ""))
        out[name] = path
    return out


# ---------------------------------------------------------------------------
# preprocessing

def _resize_bilinear(img, out_h, out_w):
    h, w = img.shape
    ys = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    img = img.astype(np.float64)
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bot = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    return top * (1 - wy) + bot * wy


def preprocess(image, target_height=128, dtype=np.float32):
    """Isotropic rescale to the target height, then standardize.

    Returns a (1, target_height, W') Tensor with mean 0 and standard
    deviation 1; a zero-variance image standardizes to zeros (with a
    warning) instead of dividing by zero.
    """
    h, w = image.shape
    if h < 8:
        raise ValueError("image height %d too small to rescale" % h)
    out_w = max(1, int(round(w * target_height / h)))
    resized = _resize_bilinear(image, target_height, out_w)
    mu = resized.mean()
    sigma = resized.std()
    if sigma < 1e-6:
        import warnings

        warnings.warn("zero-variance image; standardizing with unit scale")
    norm = (resized - mu) / max(sigma, 1e-6)
    return Tensor(norm[None, :, :].astype(dtype))


# ---------------------------------------------------------------------------
# PGM / PPM

def write_pgm(image, path):
    image = np.asarray(image, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (image.shape[1], image.shape[0]))
        f.write(image.tobytes())


def read_pgm(path):
    with open(path, "rb") as f:
        blob = f.read()
    if not blob.startswith(b"P5"):
        raise ValueError("not a binary PGM file: %s" % (path,))
    fields, pos = [], 2
    while len(fields) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if blob[pos : pos + 1] == b"#":
            while blob[pos : pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(blob[start:pos]))
    pos += 1
    w, h, maxval = fields
    data = np.frombuffer(blob[pos : pos + w * h], dtype=np.uint8)
    if data.size != w * h:
        raise ValueError("truncated PGM payload in %s" % (path,))
    return data.reshape(h, w).copy()


def write_ppm(image_rgb, path):
    image_rgb = np.asarray(image_rgb, dtype=np.uint8)
    h, w, _ = image_rgb.shape
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(image_rgb.tobytes())
