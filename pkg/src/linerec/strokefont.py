"""Parametric stroke skeletons for the synthetic line renderer.

Each glyph is a list of polylines in a unit box: x runs 0..1 across the
glyph's advance width, y runs top-down with 0 at the x-height line and
1 at the baseline.  Ascenders reach up to y = -0.45, descenders down to
y = +1.45.  Glyphs are deliberately plain skeletons (no outlines); the
renderer adds thickness, slant and wobble.

No external font assets: everything a corpus needs is defined here, so
rendering is bit-reproducible across platforms.
"""

import math

ASC = -0.45   # ascender / capital top
DESC = 1.45   # descender bottom


def _arc(cx, cy, rx, ry, a0, a1, n=12):
    """Polyline along an ellipse arc; angles in degrees, y grows downward."""
    pts = []
    for i in range(n + 1):
        t = math.radians(a0 + (a1 - a0) * i / n)
        pts.append((cx + rx * math.cos(t), cy + ry * math.sin(t)))
    return pts


def _l(*pts):
    return list(pts)


_BOWL = dict(cx=0.5, cy=0.5, rx=0.42, ry=0.5)


def _glyphs():
    g = {}
    # --- lowercase ----------------------------------------------------
    g["a"] = [_arc(**_BOWL, a0=0, a1=360), _l((0.92, 0.15), (0.92, 1.0))]
    g["b"] = [_l((0.08, ASC), (0.08, 1.0)), _arc(**_BOWL, a0=-90, a1=90)]
    g["c"] = [_arc(**_BOWL, a0=45, a1=315)]
    g["d"] = [_l((0.92, ASC), (0.92, 1.0)), _arc(**_BOWL, a0=90, a1=270)]
    g["e"] = [_l((0.08, 0.5), (0.92, 0.5)), _arc(**_BOWL, a0=0, a1=315)]
    g["f"] = [_arc(0.75, ASC + 0.2, 0.3, 0.2, 180, 270),
              _l((0.45, ASC + 0.2), (0.45, 1.0)), _l((0.15, 0.1), (0.8, 0.1))]
    g["g"] = [_arc(**_BOWL, a0=0, a1=360), _l((0.92, 0.15), (0.92, 1.25)),
              _arc(0.5, 1.25, 0.42, 0.2, 0, 180)]
    g["h"] = [_l((0.08, ASC), (0.08, 1.0)), _arc(0.5, 0.45, 0.42, 0.45, 180, 360),
              _l((0.92, 0.45), (0.92, 1.0))]
    g["i"] = [_l((0.5, 0.05), (0.5, 1.0)), _l((0.5, -0.3), (0.5, -0.22))]
    g["j"] = [_l((0.6, 0.05), (0.6, 1.2)), _arc(0.35, 1.2, 0.25, 0.25, 0, 140),
              _l((0.6, -0.3), (0.6, -0.22))]
    g["k"] = [_l((0.1, ASC), (0.1, 1.0)), _l((0.85, 0.05), (0.1, 0.6)),
              _l((0.4, 0.42), (0.9, 1.0))]
    g["l"] = [_l((0.5, ASC), (0.5, 1.0))]
    g["m"] = [_l((0.06, 0.05), (0.06, 1.0)),
              _arc(0.28, 0.3, 0.22, 0.3, 180, 360), _l((0.5, 0.3), (0.5, 1.0)),
              _arc(0.72, 0.3, 0.22, 0.3, 180, 360), _l((0.94, 0.3), (0.94, 1.0))]
    g["n"] = [_l((0.1, 0.05), (0.1, 1.0)), _arc(0.5, 0.45, 0.4, 0.45, 180, 360),
              _l((0.9, 0.45), (0.9, 1.0))]
    g["o"] = [_arc(**_BOWL, a0=0, a1=360)]
    g["p"] = [_l((0.08, 0.05), (0.08, DESC)), _arc(**_BOWL, a0=-90, a1=90)]
    g["q"] = [_arc(**_BOWL, a0=90, a1=270), _l((0.92, 0.05), (0.92, DESC))]
    g["r"] = [_l((0.15, 0.05), (0.15, 1.0)), _arc(0.55, 0.45, 0.4, 0.4, 180, 320)]
    g["s"] = [_arc(0.5, 0.27, 0.38, 0.25, -40, 200),
              _arc(0.5, 0.75, 0.38, 0.25, 140, 380)]
    g["t"] = [_l((0.45, ASC + 0.2), (0.45, 0.85)),
              _arc(0.66, 0.85, 0.21, 0.15, 90, 180), _l((0.1, 0.05), (0.85, 0.05))]
    g["u"] = [_l((0.1, 0.05), (0.1, 0.55)), _arc(0.5, 0.55, 0.4, 0.45, 180, 0, 12),
              _l((0.9, 0.05), (0.9, 1.0))]
    g["v"] = [_l((0.08, 0.05), (0.5, 1.0)), _l((0.5, 1.0), (0.92, 0.05))]
    g["w"] = [_l((0.04, 0.05), (0.27, 1.0)), _l((0.27, 1.0), (0.5, 0.25)),
              _l((0.5, 0.25), (0.73, 1.0)), _l((0.73, 1.0), (0.96, 0.05))]
    g["x"] = [_l((0.08, 0.05), (0.92, 1.0)), _l((0.92, 0.05), (0.08, 1.0))]
    g["y"] = [_l((0.08, 0.05), (0.5, 1.0)),
              _l((0.92, 0.05), (0.3, DESC))]
    g["z"] = [_l((0.1, 0.05), (0.9, 0.05)), _l((0.9, 0.05), (0.1, 1.0)),
              _l((0.1, 1.0), (0.9, 1.0))]
    # --- uppercase (cap height = ascender line) -----------------------
    cap = ASC
    g["A"] = [_l((0.08, 1.0), (0.5, cap)), _l((0.5, cap), (0.92, 1.0)),
              _l((0.25, 0.45), (0.75, 0.45))]
    g["B"] = [_l((0.1, cap), (0.1, 1.0)),
              _arc(0.45, cap / 2 + 0.14, 0.4, 0.36, -90, 90),
              _arc(0.5, 0.64, 0.42, 0.37, -90, 90), _l((0.1, cap), (0.45, cap)),
              _l((0.1, 0.27), (0.5, 0.27)), _l((0.1, 1.0), (0.5, 1.0))]
    g["C"] = [_arc(0.5, 0.27, 0.43, 0.73, 40, 320)]
    g["D"] = [_l((0.1, cap), (0.1, 1.0)), _arc(0.3, 0.27, 0.62, 0.73, -90, 90),
              _l((0.1, cap), (0.3, cap)), _l((0.1, 1.0), (0.3, 1.0))]
    g["E"] = [_l((0.12, cap), (0.12, 1.0)), _l((0.12, cap), (0.9, cap)),
              _l((0.12, 0.27), (0.75, 0.27)), _l((0.12, 1.0), (0.9, 1.0))]
    g["F"] = [_l((0.12, cap), (0.12, 1.0)), _l((0.12, cap), (0.9, cap)),
              _l((0.12, 0.3), (0.75, 0.3))]
    g["G"] = [_arc(0.5, 0.27, 0.43, 0.73, 40, 340),
              _l((0.93, 0.45), (0.55, 0.45))]
    g["H"] = [_l((0.1, cap), (0.1, 1.0)), _l((0.9, cap), (0.9, 1.0)),
              _l((0.1, 0.3), (0.9, 0.3))]
    g["I"] = [_l((0.5, cap), (0.5, 1.0)), _l((0.2, cap), (0.8, cap)),
              _l((0.2, 1.0), (0.8, 1.0))]
    g["J"] = [_l((0.7, cap), (0.7, 0.7)), _arc(0.45, 0.7, 0.25, 0.3, 0, 160)]
    g["K"] = [_l((0.1, cap), (0.1, 1.0)), _l((0.9, cap), (0.1, 0.45)),
              _l((0.38, 0.22), (0.92, 1.0))]
    g["L"] = [_l((0.15, cap), (0.15, 1.0)), _l((0.15, 1.0), (0.9, 1.0))]
    g["M"] = [_l((0.06, 1.0), (0.06, cap)), _l((0.06, cap), (0.5, 0.55)),
              _l((0.5, 0.55), (0.94, cap)), _l((0.94, cap), (0.94, 1.0))]
    g["N"] = [_l((0.1, 1.0), (0.1, cap)), _l((0.1, cap), (0.9, 1.0)),
              _l((0.9, 1.0), (0.9, cap))]
    g["O"] = [_arc(0.5, 0.27, 0.44, 0.73, 0, 360, 16)]
    g["P"] = [_l((0.12, cap), (0.12, 1.0)),
              _arc(0.45, cap / 2 + 0.12, 0.42, 0.35, -90, 90),
              _l((0.12, cap), (0.45, cap)), _l((0.12, 0.25), (0.5, 0.25))]
    g["Q"] = [_arc(0.5, 0.27, 0.44, 0.73, 0, 360, 16),
              _l((0.6, 0.6), (0.95, 1.1))]
    g["R"] = [_l((0.12, cap), (0.12, 1.0)),
              _arc(0.45, cap / 2 + 0.12, 0.42, 0.35, -90, 90),
              _l((0.12, cap), (0.45, cap)), _l((0.12, 0.25), (0.5, 0.25)),
              _l((0.45, 0.3), (0.92, 1.0))]
    g["S"] = [_arc(0.5, -0.1, 0.4, 0.35, -40, 200),
              _arc(0.5, 0.63, 0.4, 0.37, 140, 380)]
    g["T"] = [_l((0.5, cap), (0.5, 1.0)), _l((0.08, cap), (0.92, cap))]
    g["U"] = [_l((0.1, cap), (0.1, 0.6)), _arc(0.5, 0.6, 0.4, 0.4, 180, 360, 12)[::-1],
              _l((0.9, 0.6), (0.9, cap))]
    g["V"] = [_l((0.06, cap), (0.5, 1.0)), _l((0.5, 1.0), (0.94, cap))]
    g["W"] = [_l((0.03, cap), (0.25, 1.0)), _l((0.25, 1.0), (0.5, 0.0)),
              _l((0.5, 0.0), (0.75, 1.0)), _l((0.75, 1.0), (0.97, cap))]
    g["X"] = [_l((0.08, cap), (0.92, 1.0)), _l((0.92, cap), (0.08, 1.0))]
    g["Y"] = [_l((0.08, cap), (0.5, 0.3)), _l((0.92, cap), (0.5, 0.3)),
              _l((0.5, 0.3), (0.5, 1.0))]
    g["Z"] = [_l((0.1, cap), (0.9, cap)), _l((0.9, cap), (0.1, 1.0)),
              _l((0.1, 1.0), (0.9, 1.0))]
    # --- digits (between cap line and baseline) -----------------------
    g["0"] = [_arc(0.5, 0.27, 0.4, 0.72, 0, 360, 16)]
    g["1"] = [_l((0.3, cap + 0.25), (0.55, cap)), _l((0.55, cap), (0.55, 1.0)),
              _l((0.25, 1.0), (0.85, 1.0))]
    g["2"] = [_arc(0.5, cap + 0.35, 0.38, 0.35, 160, 360),
              _l((0.88, cap + 0.35), (0.12, 1.0)), _l((0.12, 1.0), (0.9, 1.0))]
    g["3"] = [_arc(0.48, cap + 0.33, 0.38, 0.33, 150, 430),
              _arc(0.48, 0.65, 0.4, 0.36, -70, 190)]
    g["4"] = [_l((0.7, 1.0), (0.7, cap)), _l((0.7, cap), (0.1, 0.55)),
              _l((0.1, 0.55), (0.92, 0.55))]
    g["5"] = [_l((0.85, cap), (0.2, cap)), _l((0.2, cap), (0.15, 0.3)),
              _arc(0.5, 0.6, 0.4, 0.4, -90, 140)]
    g["6"] = [_arc(0.5, 0.55, 0.4, 0.44, 0, 360, 14),
              _arc(0.62, cap + 0.1, 0.5, 0.95, 230, 285)]
    g["7"] = [_l((0.1, cap), (0.9, cap)), _l((0.9, cap), (0.35, 1.0))]
    g["8"] = [_arc(0.5, cap + 0.32, 0.34, 0.32, 0, 360, 14),
              _arc(0.5, 0.62, 0.4, 0.38, 0, 360, 14)]
    g["9"] = [_arc(0.5, 0.0, 0.4, 0.44, 0, 360, 14),
              _arc(0.38, 0.9, 0.5, 0.95, 305, 360)]
    # --- punctuation ---------------------------------------------------
    g[" "] = []
    g["."] = [_l((0.45, 0.92), (0.55, 0.92), (0.55, 1.0), (0.45, 1.0),
                 (0.45, 0.92))]
    g[","] = [_l((0.55, 0.9), (0.5, 1.25))]
    g["'"] = [_l((0.5, ASC), (0.45, ASC + 0.3))]
    g['"'] = [_l((0.35, ASC), (0.32, ASC + 0.28)), _l((0.65, ASC), (0.62, ASC + 0.28))]
    g["!"] = [_l((0.5, ASC), (0.5, 0.6)), _l((0.5, 0.88), (0.5, 1.0))]
    g["?"] = [_arc(0.5, ASC + 0.3, 0.35, 0.3, 140, 400),
              _l((0.5, 0.2), (0.5, 0.6)), _l((0.5, 0.88), (0.5, 1.0))]
    g[":"] = [_l((0.5, 0.2), (0.5, 0.33)), _l((0.5, 0.75), (0.5, 0.88))]
    g[";"] = [_l((0.5, 0.2), (0.5, 0.33)), _l((0.55, 0.8), (0.48, 1.2))]
    g["-"] = [_l((0.15, 0.5), (0.85, 0.5))]
    g["_"] = [_l((0.05, 1.0), (0.95, 1.0))]
    g["+"] = [_l((0.15, 0.5), (0.85, 0.5)), _l((0.5, 0.15), (0.5, 0.85))]
    g["="] = [_l((0.15, 0.35), (0.85, 0.35)), _l((0.15, 0.65), (0.85, 0.65))]
    g["*"] = [_l((0.5, 0.1), (0.5, 0.7)), _l((0.2, 0.22), (0.8, 0.58)),
              _l((0.8, 0.22), (0.2, 0.58))]
    g["/"] = [_l((0.85, ASC), (0.15, 1.1))]
    g["\\"] = [_l((0.15, ASC), (0.85, 1.1))]
    g["("] = [_arc(1.1, 0.5, 0.75, 1.05, 140, 220)]
    g[")"] = [_arc(-0.1, 0.5, 0.75, 1.05, -40, 40)]
    g["["] = [_l((0.65, ASC), (0.35, ASC)), _l((0.35, ASC), (0.35, 1.15)),
              _l((0.35, 1.15), (0.65, 1.15))]
    g["]"] = [_l((0.35, ASC), (0.65, ASC)), _l((0.65, ASC), (0.65, 1.15)),
              _l((0.65, 1.15), (0.35, 1.15))]
    g["{"] = [_arc(0.95, ASC + 0.3, 0.45, 0.3, 180, 270),
              _l((0.5, ASC + 0.3), (0.5, 0.25)), _l((0.5, 0.25), (0.3, 0.4)),
              _l((0.3, 0.4), (0.5, 0.55)), _l((0.5, 0.55), (0.5, 0.9)),
              _arc(0.95, 0.9, 0.45, 0.25, 90, 180)]
    g["}"] = [_arc(0.05, ASC + 0.3, 0.45, 0.3, 270, 360),
              _l((0.5, ASC + 0.3), (0.5, 0.25)), _l((0.5, 0.25), (0.7, 0.4)),
              _l((0.7, 0.4), (0.5, 0.55)), _l((0.5, 0.55), (0.5, 0.9)),
              _arc(0.05, 0.9, 0.45, 0.25, 0, 90)]
    g["|"] = [_l((0.5, ASC), (0.5, 1.2))]
    g["<"] = [_l((0.8, 0.1), (0.2, 0.5)), _l((0.2, 0.5), (0.8, 0.9))]
    g[">"] = [_l((0.2, 0.1), (0.8, 0.5)), _l((0.8, 0.5), (0.2, 0.9))]
    g["`"] = [_l((0.4, ASC), (0.6, ASC + 0.25))]
    g["~"] = [_arc(0.3, 0.5, 0.2, 0.12, 180, 300), _arc(0.7, 0.5, 0.2, 0.12, 0, 120)]
    g["^"] = [_l((0.3, ASC + 0.25), (0.5, ASC)), _l((0.5, ASC), (0.7, ASC + 0.25))]
    g["#"] = [_l((0.35, 0.1), (0.3, 0.9)), _l((0.7, 0.1), (0.65, 0.9)),
              _l((0.15, 0.35), (0.85, 0.35)), _l((0.15, 0.65), (0.85, 0.65))]
    g["$"] = [_arc(0.5, 0.1, 0.35, 0.3, -40, 200), _arc(0.5, 0.67, 0.35, 0.3, 140, 380),
              _l((0.5, -0.2), (0.5, 1.2))]
    g["%"] = [_arc(0.25, 0.2, 0.18, 0.18, 0, 360), _l((0.85, 0.05), (0.15, 0.95)),
              _arc(0.75, 0.8, 0.18, 0.18, 0, 360)]
    g["&"] = [_arc(0.45, 0.2, 0.25, 0.22, 0, 360, 10),
              _arc(0.4, 0.7, 0.32, 0.3, 0, 360, 10), _l((0.6, 0.55), (0.95, 1.0))]
    g["@"] = [_arc(0.5, 0.5, 0.45, 0.5, 30, 330, 16),
              _arc(0.55, 0.5, 0.2, 0.22, 0, 360, 10), _l((0.75, 0.5), (0.75, 0.7))]
    # --- accented letters ---------------------------------------------
    grave = [_l((0.35, -0.42), (0.55, -0.2))]
    acute = [_l((0.65, -0.42), (0.45, -0.2))]
    cflex = [_l((0.3, -0.2), (0.5, -0.42)), _l((0.5, -0.42), (0.7, -0.2))]
    trema = [_l((0.3, -0.38), (0.3, -0.28)), _l((0.7, -0.38), (0.7, -0.28))]
    cedilla = [_l((0.5, 1.0), (0.45, 1.35)), _l((0.45, 1.35), (0.62, 1.3))]
    g["à"] = g["a"] + grave       # a grave
    g["â"] = g["a"] + cflex      # a circumflex
    g["ä"] = g["a"] + trema       # a diaeresis
    g["ç"] = g["c"] + cedilla     # c cedilla
    g["è"] = g["e"] + grave
    g["é"] = g["e"] + acute
    g["ê"] = g["e"] + cflex
    g["ë"] = g["e"] + trema
    g["î"] = [_l((0.5, 0.05), (0.5, 1.0))] + cflex  # i circumflex
    g["ï"] = [_l((0.5, 0.05), (0.5, 1.0))] + trema
    g["ô"] = g["o"] + cflex
    g["ö"] = g["o"] + trema
    g["ù"] = g["u"] + grave
    g["û"] = g["u"] + cflex
    return g


GLYPHS = _glyphs()

_WIDE = set("mwMWQO08@#$%&")
_NARROW = set("ijl.,'|!;:()[]`1 ")


def glyph_width(ch):
    """Advance width in glyph-box units."""
    if ch in _WIDE:
        return 0.82
    if ch in _NARROW:
        return 0.38
    return 0.58


def has_descender(ch):
    return any(y > 1.05 for stroke in GLYPHS.get(ch, ())
               for _, y in stroke)


def has_ascender(ch):
    return any(y < -0.05 for stroke in GLYPHS.get(ch, ())
               for _, y in stroke)
