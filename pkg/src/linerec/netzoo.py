"""Architecture catalog: builders, parameter/MAC audits, checkpoints.

Seven reference line-recognition architectures are described as ordered
layer-descriptor lists and built into runnable networks:

* puigcerver  -- 5 conv/maxpool stages, height-concat collapse, 5 BLSTMs.
* gnn1dlstm   -- tiling, strided convs with multiplicative gates, height
                 max-pool collapse, 2 BLSTMs with per-direction linears.
* cnn1dlstm   -- gnn1dlstm without the gates.
* cnn / gnn   -- the two above without the recurrent decoder.
* mdlstm2d    -- convs interleaved with four-direction MDLSTM layers; the
                 strided convs after the first MDLSTM are direction-grouped
                 (with bias), later MDLSTMs read their own direction block.
* mdlstm2d_x2 -- mdlstm2d with all feature depths doubled.

Audits are closed-form walks over the descriptors (no allocation): one MAC
is one weight-input product, so biases and nonlinearities do not count.
For mdlstm2d the published rounded totals assume a per-row accounting that
is not self-consistent; the audit reports this catalog's convention and
the delta against the published numbers.

Checkpoint file: magic "MDLZOO01", little-endian u64 header length, UTF-8
JSON header (network spec + tensor directory), raw little-endian float
payloads.  A checkpoint embeds its NetworkSpec and is self-describing.
"""

import json
import struct
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import layers as L
from . import recurrent as R
from .autodiff import ShapeError, Tensor, record
from .ctc import PosteriorMatrix

ARCHITECTURES = ("cnn", "gnn", "cnn1dlstm", "gnn1dlstm", "mdlstm2d",
                 "mdlstm2d_x2", "puigcerver")

# published rounded totals (params, MACs at 128x1000) for context lines in
# audit output; mdlstm2d's row accounting is not reproducible under one
# convention, so audits print the delta rather than asserting it
REFERENCE_TOTALS = {
    "puigcerver": (9.6e6, 1609e6),
    "gnn1dlstm": (799e3, 216e6),
    "mdlstm2d": (836e3, 344e6),
    "mdlstm2d_x2": (3.3e6, 1340e6),
}

MAXPOOL = "maxpool"
CONCAT = "concat"

DROPOUT_PRESETS = ("small", "medium", "large")


class KnobError(ValueError):
    """Knob combination not applicable to the requested architecture."""


@dataclass
class VariantKnobs:
    encoder_extra_convs: int = 0          # -2 | 0 | +4
    decoder_blstm_count: int = None       # 1 | 2 | 5 (None = arch default)
    collapse_mode: str = None             # maxpool | concat (None = default)
    depth_multiplier: float = 1.0         # 0.25 | 0.5 | 1 | 2
    dropout_preset: str = "medium"        # small | medium | large
    class_count: int = 110

    def validate(self):
        if self.encoder_extra_convs not in (-2, 0, 4):
            raise KnobError("encoder_extra_convs must be -2, 0 or 4")
        if self.decoder_blstm_count not in (None, 1, 2, 5):
            raise KnobError("decoder_blstm_count must be 1, 2 or 5")
        if self.collapse_mode not in (None, MAXPOOL, CONCAT):
            raise KnobError("collapse_mode must be maxpool or concat")
        if self.depth_multiplier not in (0.25, 0.5, 1, 2):
            raise KnobError("depth_multiplier must be 0.25, 0.5, 1 or 2")
        if self.dropout_preset not in DROPOUT_PRESETS:
            raise KnobError("unknown dropout preset %r" % (self.dropout_preset,))
        if self.class_count < 2:
            raise KnobError("class_count must be >= 2")


@dataclass
class LayerSpec:
    kind: str
    args: dict = field(default_factory=dict)

    def arg(self, name, default=None):
        return self.args.get(name, default)


@dataclass
class NetworkSpec:
    arch: str
    knobs: VariantKnobs
    layers: list

    def to_dict(self):
        return {"arch": self.arch, "knobs": asdict(self.knobs),
                "layers": [{"kind": s.kind, "args": s.args}
                           for s in self.layers]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["arch"], VariantKnobs(**d["knobs"]),
                   [LayerSpec(s["kind"], dict(s["args"]))
                    for s in d["layers"]])


def _depth(n, mult):
    return max(1, round(n * mult))


def _conv(name, cin, cout, kernel, stride=(1, 1), groups=1, bias=True,
          activation="tanh"):
    padding = L.SAME if stride == (1, 1) else L.VALID_CEIL
    return LayerSpec("conv", dict(name=name, in_channels=cin,
                                  out_channels=cout, kernel=list(kernel),
                                  stride=list(stride), padding=padding,
                                  groups=groups, bias=bias,
                                  activation=activation))


def _encoder_bluche(knobs, gated):
    """Shared encoder of the gated/plain strided-conv architectures."""
    m = knobs.depth_multiplier
    c8, c16, c32, c64, c128 = (_depth(c, m) for c in (8, 16, 32, 64, 128))
    specs = [LayerSpec("tiling", dict(name="tile", block=[2, 2]))]
    ch = 4
    specs.append(_conv("conv_a", ch, c8, (3, 3)))
    specs.append(_conv("conv_b", c8, c16, (4, 2), (4, 2)))
    if gated:
        specs.append(LayerSpec("gated_conv",
                               dict(name="gate_b", channels=c16,
                                    kernel=[3, 3])))
    specs.append(_conv("conv_c", c16, c32, (3, 3)))
    if gated:
        specs.append(LayerSpec("gated_conv",
                               dict(name="gate_c", channels=c32,
                                    kernel=[3, 3])))
    specs.append(_conv("conv_d", c32, c64, (4, 2), (4, 2)))
    if gated:
        specs.append(LayerSpec("gated_conv",
                               dict(name="gate_d", channels=c64,
                                    kernel=[3, 3])))
    specs.append(_conv("conv_e", c64, c128, (3, 3)))
    if knobs.encoder_extra_convs == -2:
        if not gated:
            raise KnobError(
                "encoder_extra_convs applies to gnn1dlstm and mdlstm2d")
        specs = [s for s in specs
                 if s.arg("name") not in ("gate_c", "gate_d")]
    elif knobs.encoder_extra_convs == 4:
        if not gated:
            raise KnobError(
                "encoder_extra_convs applies to gnn1dlstm and mdlstm2d")
        out = []
        for s in specs:
            out.append(s)
            if s.arg("name") in ("conv_b", "conv_c", "conv_d", "conv_e"):
                ch_here = s.arg("out_channels")
                out.append(_conv("extra_" + s.arg("name")[-1], ch_here,
                                 ch_here, (3, 3)))
        specs = out
    return specs, c128


def _encoder_mdlstm(knobs):
    m = knobs.depth_multiplier
    c8 = _depth(8, m)
    h1, h2, h3 = _depth(8, m), _depth(20, m), _depth(32, m)
    g16, g32, g40 = _depth(16, m), _depth(32, m), _depth(40, m)
    c128 = _depth(128, m)
    drop_first_conv = knobs.encoder_extra_convs == -2
    specs = [LayerSpec("tiling", dict(name="tile", block=[2, 2]))]
    ch = 4
    if not drop_first_conv:
        specs.append(_conv("conv_a", ch, c8, (3, 3)))
        ch = c8
    specs.append(LayerSpec("mdlstm", dict(name="lstm2d_a", input_dim=ch,
                                          hidden=h1, grouped_input=False)))
    specs.append(_conv("conv_b", 4 * h1, 4 * g16, (4, 2), (4, 2), groups=4))
    specs.append(LayerSpec("mdlstm", dict(name="lstm2d_b", input_dim=g16,
                                          hidden=h2, grouped_input=True)))
    specs.append(_conv("conv_c", 4 * h2, 4 * g32, (4, 2), (4, 2), groups=4))
    specs.append(LayerSpec("mdlstm", dict(name="lstm2d_c", input_dim=g32,
                                          hidden=h3, grouped_input=True)))
    specs.append(_conv("conv_d", 4 * h3, 4 * g40, (4, 2), (4, 2), groups=4))
    if not drop_first_conv:
        specs.append(_conv("conv_e", 4 * g40, c128, (1, 3)))
        out_ch = c128
    else:
        out_ch = 4 * g40
    if knobs.encoder_extra_convs == 4:
        out = []
        for s in specs:
            out.append(s)
            if s.kind == "mdlstm" or s.arg("name") == "conv_e":
                ch_here = (4 * s.arg("hidden") if s.kind == "mdlstm"
                           else s.arg("out_channels"))
                out.append(_conv("extra_" + s.arg("name")[-1], ch_here,
                                 ch_here, (3, 3)))
        specs = out
    return specs, out_ch


def _decoder_bluche(knobs, in_dim):
    m = knobs.depth_multiplier
    h = _depth(128, m)
    n = knobs.decoder_blstm_count or 2
    specs = []
    dim = in_dim
    for i in range(n - 1):
        specs.append(LayerSpec("blstm", dict(name="blstm_%d" % (i + 1),
                                             input_dim=dim, hidden=h)))
        specs.append(LayerSpec("linear", dict(name="mix_%d" % (i + 1),
                                              in_dim=h, out_dim=h,
                                              bias=False, directions=2,
                                              shared=False)))
        dim = h
    specs.append(LayerSpec("blstm", dict(name="blstm_%d" % n,
                                         input_dim=dim, hidden=h)))
    specs.append(LayerSpec("linear", dict(name="classes", in_dim=h,
                                          out_dim=knobs.class_count,
                                          bias=True, directions=2,
                                          shared=False)))
    return specs


def _build_specs(arch, knobs):
    specs = []
    if arch in ("gnn1dlstm", "cnn1dlstm", "gnn", "cnn"):
        gated = arch.startswith("gnn")
        enc, ch = _encoder_bluche(knobs, gated)
        specs += enc
        mode = knobs.collapse_mode or MAXPOOL
        specs.append(LayerSpec("collapse", dict(name="collapse", mode=mode)))
        seq_dim = ch * (4 if mode == CONCAT else 1)
        if arch in ("gnn1dlstm", "cnn1dlstm"):
            specs += _decoder_bluche(knobs, seq_dim)
        else:
            if knobs.decoder_blstm_count is not None:
                raise KnobError("decoder_blstm_count needs a recurrent "
                                "decoder; %s has none" % arch)
            specs.append(LayerSpec("linear",
                                   dict(name="classes", in_dim=seq_dim,
                                        out_dim=knobs.class_count, bias=True,
                                        directions=1, shared=False)))
    elif arch in ("mdlstm2d", "mdlstm2d_x2"):
        if arch == "mdlstm2d_x2":
            knobs = replace(knobs,
                            depth_multiplier=knobs.depth_multiplier * 2)
            if knobs.depth_multiplier not in (0.5, 1, 2, 4):
                raise KnobError("depth multiplier out of range for x2")
        enc, ch = _encoder_mdlstm(knobs)
        specs += enc
        # encoder height is already 1 here; both collapse modes coincide
        specs.append(LayerSpec("collapse",
                               dict(name="collapse", mode=MAXPOOL)))
        specs += _decoder_bluche(knobs, ch)
    elif arch == "puigcerver":
        if knobs.encoder_extra_convs:
            knobs = replace(knobs, encoder_extra_convs=0)  # not applicable
        m = knobs.depth_multiplier
        chans = [_depth(c, m) for c in (16, 32, 48, 64, 80)]
        prev = 1
        for i, c in enumerate(chans):
            specs.append(_conv("conv_%s" % "abcde"[i], prev, c, (3, 3)))
            if i < 3:
                specs.append(LayerSpec("maxpool",
                                       dict(name="pool_%s" % "abc"[i],
                                            window=[2, 2])))
            prev = c
        mode = knobs.collapse_mode or CONCAT
        specs.append(LayerSpec("collapse", dict(name="collapse", mode=mode)))
        seq_dim = prev * (16 if mode == CONCAT else 1)
        h = _depth(256, m)
        n = knobs.decoder_blstm_count or 5
        dim = seq_dim
        for i in range(n):
            specs.append(LayerSpec("blstm", dict(name="blstm_%d" % (i + 1),
                                                 input_dim=dim, hidden=h)))
            dim = 2 * h
        specs.append(LayerSpec("linear", dict(name="classes", in_dim=h,
                                              out_dim=knobs.class_count,
                                              bias=True, directions=2,
                                              shared=True)))
    else:
        raise KnobError("unknown architecture %r (choose from %s)"
                        % (arch, ", ".join(ARCHITECTURES)))
    _insert_dropout(specs, knobs)
    return specs


def _insert_dropout(specs, knobs):
    """Dropout after selected trainable encoder layers.

    Droppable = trainable encoder layers except the first.  Presets:
    small = last two droppable, medium = 4 evenly spaced, large = all.
    """
    trainable = [i for i, s in enumerate(specs)
                 if s.kind in ("conv", "gated_conv", "mdlstm")]
    droppable = trainable[1:]
    if not droppable:
        return
    preset = knobs.dropout_preset
    if preset == "small":
        chosen = droppable[-2:]
    elif preset == "large":
        chosen = droppable
    else:
        k = min(4, len(droppable))
        picks = np.unique(np.round(
            np.linspace(0, len(droppable) - 1, k)).astype(int))
        chosen = [droppable[i] for i in picks]
    for i in sorted(chosen, reverse=True):
        specs.insert(i + 1, LayerSpec(
            "dropout", dict(name="drop_%s" % specs[i].arg("name"), p=0.5)))


# ---------------------------------------------------------------------------
# instantiation

class Network:
    """An instantiated architecture: ordered layers over the tape."""

    def __init__(self, spec, built, dtype):
        self.spec = spec
        self.layers = built  # list of (name, layer object)
        self.dtype = dtype

    def params(self):
        out = []
        for name, layer in self.layers:
            for pname, tensor in layer.params():
                out.append(("%s.%s" % (name, pname), tensor))
        return out

    def param_count(self):
        return sum(layer.param_count() for _, layer in self.layers)

    def glorot_init(self, seed):
        rng = np.random.default_rng(seed)
        for i, (name, layer) in enumerate(self.layers):
            layer.glorot(rng)
            if isinstance(layer, L.Dropout):
                layer.reseed(seed * 7919 + i)

    def set_workers(self, n):
        for _, layer in self.layers:
            if isinstance(layer, R.Mdlstm2dLayer):
                layer.workers = n

    def set_dropout(self, p):
        for _, layer in self.layers:
            if isinstance(layer, L.Dropout):
                layer.p = p

    def forward(self, x, training=False):
        """(1,H,W) image tensor -> (T, classes) logit sequence."""
        cur = x
        as_sequence = False
        for name, layer in self.layers:
            cur = layer.forward(cur, training=training)
            if isinstance(layer, L.CollapseLayer):
                cur = _map_to_seq(cur)
                as_sequence = True
        assert as_sequence
        return cur

    def posteriors(self, x):
        return PosteriorMatrix.from_logits(self.forward(x, training=False))


def _map_to_seq(x):
    """(C,1,W) collapsed map -> (W,C) sequence, recorded re-indexing."""
    c, one, w = x.shape
    y = np.ascontiguousarray(x.data[:, 0, :].T)
    out = Tensor(y)

    def backward(g):
        return (np.ascontiguousarray(g.T)[:, None, :],)

    return record(out, (x,), backward)


def _instantiate(spec, dtype):
    built = []
    for s in spec.layers:
        a = s.args
        if s.kind == "tiling":
            layer = L.TilingLayer(tuple(a["block"]))
        elif s.kind == "conv":
            layer = L.ConvLayer(a["in_channels"], a["out_channels"],
                                tuple(a["kernel"]), tuple(a["stride"]),
                                a["padding"], bias=a["bias"],
                                groups=a["groups"],
                                activation=a["activation"], dtype=dtype)
        elif s.kind == "gated_conv":
            layer = L.GatedConvLayer(a["channels"], tuple(a["kernel"]),
                                     dtype=dtype)
        elif s.kind == "maxpool":
            layer = L.MaxPool2d(tuple(a["window"]))
        elif s.kind == "mdlstm":
            layer = R.Mdlstm2dLayer(a["input_dim"], a["hidden"],
                                    grouped_input=a["grouped_input"],
                                    dtype=dtype)
        elif s.kind == "collapse":
            layer = L.CollapseLayer(a["mode"] + "_height")
        elif s.kind == "blstm":
            layer = R.Lstm1dLayer(a["input_dim"], a["hidden"], dtype=dtype)
        elif s.kind == "linear":
            layer = L.Linear(a["in_dim"], a["out_dim"], bias=a["bias"],
                             directions=a["directions"], shared=a["shared"],
                             dtype=dtype)
        elif s.kind == "dropout":
            layer = L.Dropout(a["p"])
        else:
            raise ValueError("unknown layer kind %r" % (s.kind,))
        built.append((a["name"], layer))
    return built


def build(arch, knobs=None, dtype=np.float32):
    """Build an architecture into a runnable network."""
    knobs = knobs or VariantKnobs()
    knobs.validate()
    spec = NetworkSpec(arch, knobs, _build_specs(arch, knobs))
    return Network(spec, _instantiate(spec, dtype), dtype)


# ---------------------------------------------------------------------------
# audits

@dataclass
class AuditRow:
    name: str
    kind: str
    out_extents: str
    params: int
    macs: int


@dataclass
class AuditReport:
    arch: str
    rows: list
    input_extents: tuple = None

    @property
    def total_params(self):
        return sum(r.params for r in self.rows)

    @property
    def total_macs(self):
        return sum(r.macs for r in self.rows)

    def trainable_param_counts(self):
        return [r.params for r in self.rows if r.params > 0]

    def format_table(self):
        width = max(len(r.name) for r in self.rows) + 2
        lines = ["%-*s %-12s %14s %16s" % (width, "layer", "output",
                                           "params", "macs")]
        for r in self.rows:
            lines.append("%-*s %-12s %14d %16d"
                         % (width, r.name, r.out_extents, r.params, r.macs))
        lines.append("%-*s %-12s %14d %16d"
                     % (width, "TOTAL", "", self.total_params,
                        self.total_macs))
        ref = REFERENCE_TOTALS.get(self.arch)
        if ref is not None:
            lines.append("published rounded totals: %.0f params, %.0f MACs"
                         % ref)
            lines.append("delta vs published: %+d params, %+d MACs"
                         % (self.total_params - ref[0],
                            self.total_macs - ref[1]))
        return "\n".join(lines)

    def format_tsv(self):
        lines = ["%s\t%d\t%d" % (r.name, r.params, r.macs)
                 for r in self.rows]
        lines.append("TOTAL\t%d\t%d" % (self.total_params, self.total_macs))
        return "\n".join(lines)


def _layer_params(s):
    a = s.args
    if s.kind == "conv":
        kh, kw = a["kernel"]
        n = a["out_channels"] * kh * kw * a["in_channels"] // a["groups"]
        return n + (a["out_channels"] if a["bias"] else 0)
    if s.kind == "gated_conv":
        kh, kw = a["kernel"]
        return a["channels"] * (kh * kw * a["channels"] + 1)
    if s.kind == "mdlstm":
        h = a["hidden"]
        return 4 * 5 * h * (a["input_dim"] + 2 * h + 1)
    if s.kind == "blstm":
        h = a["hidden"]
        return 2 * 4 * h * (a["input_dim"] + h + 1)
    if s.kind == "linear":
        mats = 1 if (a["shared"] or a["directions"] == 1) else a["directions"]
        biases = 0 if not a["bias"] else (
            1 if (a["shared"] or a["directions"] == 1) else a["directions"])
        return mats * a["in_dim"] * a["out_dim"] + biases * a["out_dim"]
    return 0


def _ceil_div(a, b):
    return -(-a // b)


def count_params(spec):
    """Closed-form parameter audit; no tensors are allocated."""
    rows = []
    for s in spec.layers:
        rows.append(AuditRow(s.arg("name"), s.kind, "",
                             _layer_params(s), 0))
    return AuditReport(spec.arch, rows)


def count_macs(spec, height, width):
    """Closed-form MAC audit for one (height, width) input.

    One MAC is a weight-input product: convolutions cost
    out_positions * out_ch * (kh*kw*in/groups), LSTMs 4h(in+h) per step
    and direction, MDLSTMs 5h(in+2h) per cell and direction.  Bias adds
    and nonlinearities are excluded.
    """
    rows = []
    h, w = height, width
    seq_len = None
    for s in spec.layers:
        a = s.args
        macs = 0
        if s.kind == "tiling":
            bh, bw = a["block"]
            h, w = _ceil_div(h, bh), _ceil_div(w, bw)
        elif s.kind == "conv":
            kh, kw = a["kernel"]
            sh, sw = a["stride"]
            if kh > h or kw > w:
                raise ShapeError(
                    "input %dx%d too small for %s (kernel %dx%d after "
                    "downsampling)" % (height, width, a["name"], kh, kw))
            h, w = _ceil_div(h, sh), _ceil_div(w, sw)
            macs = h * w * a["out_channels"] * (
                kh * kw * a["in_channels"] // a["groups"])
        elif s.kind == "gated_conv":
            kh, kw = a["kernel"]
            macs = h * w * a["channels"] * kh * kw * a["channels"]
        elif s.kind == "maxpool":
            wh, ww = a["window"]
            h, w = _ceil_div(h, wh), _ceil_div(w, ww)
        elif s.kind == "mdlstm":
            hid = a["hidden"]
            macs = h * w * 4 * 5 * hid * (a["input_dim"] + 2 * hid)
        elif s.kind == "collapse":
            seq_len = w
            h = 1
        elif s.kind == "blstm":
            hid = a["hidden"]
            macs = seq_len * 2 * 4 * hid * (a["input_dim"] + hid)
        elif s.kind == "linear":
            macs = seq_len * a["directions"] * a["in_dim"] * a["out_dim"]
        extent = ("%d" % seq_len) if seq_len is not None else "%dx%d" % (h, w)
        rows.append(AuditRow(s.arg("name"), s.kind, extent,
                             _layer_params(s), macs))
    return AuditReport(spec.arch, rows, (height, width))


# ---------------------------------------------------------------------------
# checkpoints

MAGIC = b"MDLZOO01"


class CheckpointError(ValueError):
    pass


def save_checkpoint(net, path):
    tensors = net.params()
    directory = []
    offset = 0
    for name, t in tensors:
        nbytes = t.data.size * t.data.dtype.itemsize
        directory.append({"name": name, "shape": list(t.shape),
                          "dtype": t.data.dtype.name, "offset": offset})
        offset += nbytes
    header = json.dumps({"spec": net.spec.to_dict(),
                         "tensors": directory}).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for _, t in tensors:
            f.write(np.ascontiguousarray(t.data).astype(
                t.data.dtype.newbyteorder("<"), copy=False).tobytes())


def _read_checkpoint(path):
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:8] != MAGIC:
        raise CheckpointError("bad magic %r at offset 0" % (blob[:8],))
    (hlen,) = struct.unpack("<Q", blob[8:16])
    if len(blob) < 16 + hlen:
        raise CheckpointError(
            "truncated header: need %d bytes at offset 16, file ends at %d"
            % (hlen, len(blob)))
    header = json.loads(blob[16 : 16 + hlen].decode("utf-8"))
    payload = blob[16 + hlen :]
    return header, payload, 16 + hlen


def load_checkpoint(path, dtype=None):
    """Rebuild the stored network; self-describing via the embedded spec."""
    header, payload, base = _read_checkpoint(path)
    spec = NetworkSpec.from_dict(header["spec"])
    first = header["tensors"][0]["dtype"] if header["tensors"] else "float32"
    net = build(spec.arch, spec.knobs, dtype=np.dtype(dtype or first))
    net.spec = spec
    _fill_params(net, header, payload, base)
    return net


def restore_checkpoint(net, path):
    """Load weights into an existing network; specs must match exactly."""
    header, payload, base = _read_checkpoint(path)
    if header["spec"] != net.spec.to_dict():
        raise CheckpointError(
            "checkpoint built for arch %r does not match target arch %r"
            % (header["spec"]["arch"], net.spec.arch))
    _fill_params(net, header, payload, base)
    return net


def _fill_params(net, header, payload, base):
    by_name = dict(net.params())
    mismatches = []
    directory = {e["name"]: e for e in header["tensors"]}
    if set(directory) != set(by_name):
        missing = sorted(set(by_name) ^ set(directory))
        raise CheckpointError("tensor directory mismatch: %s" % missing)
    for name, entry in directory.items():
        t = by_name[name]
        if list(t.shape) != entry["shape"]:
            mismatches.append("%s: %r vs %r"
                              % (name, entry["shape"], list(t.shape)))
            continue
        dt = np.dtype(entry["dtype"]).newbyteorder("<")
        nbytes = int(np.prod(entry["shape"])) * dt.itemsize
        start = entry["offset"]
        if start + nbytes > len(payload):
            raise CheckpointError(
                "truncated payload for %s at offset %d (need %d bytes, "
                "have %d)" % (name, base + start, nbytes,
                              len(payload) - start))
        arr = np.frombuffer(payload[start : start + nbytes], dtype=dt)
        t.data[...] = arr.reshape(entry["shape"]).astype(t.data.dtype)
    if mismatches:
        raise CheckpointError("shape mismatch: " + "; ".join(mismatches))
