"""Feed-forward building blocks for the line-recognition networks.

Feature maps are Tensors laid out (channels, height, width); sequences are
(timesteps, features).  Each layer's forward pass records exactly one node
on the active tape with a hand-written backward, which keeps tapes short
and lets the finite-difference harness exercise every backward directly.

Kernel/stride pairs are (kh, kw) / (sh, sw), height first.
"""

import numpy as np

from .autodiff import ShapeError, Tensor, record

SAME = "same"
VALID_CEIL = "valid_ceil"


def _ceil_div(a, b):
    return -(-a // b)


def _pad_amounts(size, kernel, stride, mode):
    """(before, after) zero padding along one axis.

    Both modes produce ceil(size/stride) outputs; `same` splits the padding
    symmetrically (left-biased), `valid_ceil` pads bottom/right only.
    """
    out = _ceil_div(size, stride)
    total = max(0, (out - 1) * stride + kernel - size)
    if mode == SAME:
        return total // 2, total - total // 2
    return 0, total


def _im2col(xp, kh, kw, sh, sw, oh, ow):
    """(C, Hp, Wp) -> (C*kh*kw, oh*ow) patch matrix."""
    c = xp.shape[0]
    cols = np.empty((c, kh, kw, oh, ow), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, i, j] = xp[:, i : i + oh * sh : sh, j : j + ow * sw : sw]
    return cols.reshape(c * kh * kw, oh * ow)


def _col2im(dcols, c, hp, wp, kh, kw, sh, sw, oh, ow):
    """Scatter-add transpose of _im2col."""
    dxp = np.zeros((c, hp, wp), dtype=dcols.dtype)
    dcols = dcols.reshape(c, kh, kw, oh, ow)
    for i in range(kh):
        for j in range(kw):
            dxp[:, i : i + oh * sh : sh, j : j + ow * sw : sw] += dcols[:, i, j]
    return dxp


class ConvLayer:
    """2-D convolution, optionally direction-grouped.

    With `groups=4` the input/output channels are split into four equal
    blocks wired block-to-block, which is how the four scan directions of a
    preceding 2D-LSTM stay separated through the encoder.
    """

    def __init__(self, in_channels, out_channels, kernel, stride=(1, 1),
                 padding=SAME, bias=True, groups=1, activation=None,
                 dtype=np.float32):
        if in_channels % groups or out_channels % groups:
            raise ShapeError("channels must divide evenly into groups")
        if padding not in (SAME, VALID_CEIL):
            raise ValueError("unknown padding mode %r" % (padding,))
        if activation not in (None, "tanh"):
            raise ValueError("unsupported conv activation %r" % (activation,))
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = tuple(kernel)
        self.stride = tuple(stride)
        self.padding = padding
        self.groups = groups
        self.activation = activation
        self.has_bias = bias
        kh, kw = self.kernel
        self.weight = Tensor(
            np.zeros((out_channels, in_channels // groups, kh, kw), dtype=dtype))
        self.bias = Tensor(np.zeros(out_channels, dtype=dtype)) if bias else None

    def param_count(self):
        kh, kw = self.kernel
        n = self.out_channels * kh * kw * self.in_channels // self.groups
        return n + (self.out_channels if self.has_bias else 0)

    def params(self):
        out = [("weight", self.weight)]
        if self.bias is not None:
            out.append(("bias", self.bias))
        return out

    def glorot(self, rng):
        kh, kw = self.kernel
        fan_in = kh * kw * self.in_channels // self.groups
        fan_out = kh * kw * self.out_channels // self.groups
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = self.weight.data
        w[...] = rng.uniform(-bound, bound, w.shape).astype(w.dtype)

    def out_extents(self, h, w):
        sh, sw = self.stride
        return _ceil_div(h, sh), _ceil_div(w, sw)

    def forward(self, x, training=False):
        c, h, w = x.shape
        if c != self.in_channels:
            raise ShapeError(
                "conv expects %d input channels, got %d" % (self.in_channels, c))
        kh, kw = self.kernel
        sh, sw = self.stride
        if kh > h or kw > w:
            raise ShapeError("kernel %r larger than padded input %r"
                             % (self.kernel, (h, w)))
        pt, pb = _pad_amounts(h, kh, sh, self.padding)
        pl, pr = _pad_amounts(w, kw, sw, self.padding)
        oh, ow = self.out_extents(h, w)
        xp = np.pad(x.data, ((0, 0), (pt, pb), (pl, pr)))
        g = self.groups
        cg, og = c // g, self.out_channels // g
        wmat = self.weight.data.reshape(self.out_channels, cg * kh * kw)
        cols = []
        y = np.empty((self.out_channels, oh * ow), dtype=x.dtype)
        for gi in range(g):
            col = _im2col(xp[gi * cg : (gi + 1) * cg], kh, kw, sh, sw, oh, ow)
            cols.append(col)
            y[gi * og : (gi + 1) * og] = wmat[gi * og : (gi + 1) * og] @ col
        if self.bias is not None:
            y += self.bias.data[:, None]
        act = None
        if self.activation == "tanh":
            y = act = np.tanh(y)
        out = Tensor(y.reshape(self.out_channels, oh, ow))

        weight, bias = self.weight, self.bias
        hp, wp = h + pt + pb, w + pl + pr

        def backward(gout):
            gy = gout.reshape(self.out_channels, oh * ow)
            if act is not None:
                gy = gy * (1.0 - act * act)
            dw = np.empty_like(wmat)
            dxp = np.empty((c, hp, wp), dtype=gy.dtype)
            for gi in range(g):
                gg = gy[gi * og : (gi + 1) * og]
                dw[gi * og : (gi + 1) * og] = gg @ cols[gi].T
                dcol = wmat[gi * og : (gi + 1) * og].T @ gg
                dxp[gi * cg : (gi + 1) * cg] = _col2im(
                    dcol, cg, hp, wp, kh, kw, sh, sw, oh, ow)
            dx = dxp[:, pt : pt + h, pl : pl + w]
            grads = [dx, dw.reshape(weight.shape)]
            if bias is not None:
                grads.append(gy.sum(axis=1))
            return tuple(grads)

        inputs = (x, weight) + ((bias,) if bias is not None else ())
        return record(out, inputs, backward)


class GatedConvLayer:
    """Content gate: sigmoid(conv(x)) * x, channel count preserved."""

    def __init__(self, channels, kernel, dtype=np.float32):
        self.channels = channels
        self.conv = ConvLayer(channels, channels, kernel, (1, 1), SAME,
                              bias=True, dtype=dtype)

    def param_count(self):
        return self.conv.param_count()

    def params(self):
        return [("gate_" + n, t) for n, t in self.conv.params()]

    def glorot(self, rng):
        self.conv.glorot(rng)

    def out_extents(self, h, w):
        return h, w

    def forward(self, x, training=False):
        if x.shape[0] != self.channels:
            raise ShapeError("gated conv expects %d channels, got %d"
                             % (self.channels, x.shape[0]))
        pre = self.conv.forward(x, training)
        from .autodiff import _sigmoid

        gate = _sigmoid(pre.data)
        out = Tensor(gate * x.data)

        def backward(gout):
            # d/dpre flows through the recorded conv node; d/dx is the
            # direct gating path (the conv path adds its own dx there).
            return gout * gate, gout * x.data * gate * (1.0 - gate)

        return record(out, (x, pre), backward)


class MaxPool2d:
    """Max pooling, ceil mode: out-of-range window cells read -inf.

    Gradient routes to the first (top-left, window raster order) maximal
    element so tie handling is deterministic.
    """

    def __init__(self, window, stride=None):
        self.window = tuple(window)
        self.stride = tuple(stride) if stride is not None else self.window
        if self.window[0] < 1 or self.window[1] < 1:
            raise ShapeError("zero-area pooling window")

    def param_count(self):
        return 0

    def params(self):
        return []

    def glorot(self, rng):
        pass

    def out_extents(self, h, w):
        return _ceil_div(h, self.stride[0]), _ceil_div(w, self.stride[1])

    def forward(self, x, training=False):
        c, h, w = x.shape
        kh, kw = self.window
        sh, sw = self.stride
        oh, ow = self.out_extents(h, w)
        pb = max(0, (oh - 1) * sh + kh - h)
        pr = max(0, (ow - 1) * sw + kw - w)
        xp = np.pad(x.data, ((0, 0), (0, pb), (0, pr)),
                    constant_values=-np.inf)
        cols = np.empty((c, kh * kw, oh, ow), dtype=x.dtype)
        for i in range(kh):
            for j in range(kw):
                cols[:, i * kw + j] = xp[:, i : i + oh * sh : sh,
                                         j : j + ow * sw : sw]
        arg = cols.argmax(axis=1)  # first max in window raster order
        y = np.take_along_axis(cols, arg[:, None], axis=1)[:, 0]
        out = Tensor(y)
        hp, wp = h + pb, w + pr

        def backward(gout):
            dxp = np.zeros((c, hp, wp), dtype=gout.dtype)
            oy, ox = np.meshgrid(np.arange(oh), np.arange(ow), indexing="ij")
            rows = oy * sh + arg // kw
            colsx = ox * sw + arg % kw
            ci = np.arange(c)[:, None, None]
            np.add.at(dxp, (np.broadcast_to(ci, arg.shape), rows, colsx), gout)
            return (dxp[:, :h, :w],)

        return record(out, (x,), backward)


class TilingLayer:
    """Space-to-depth: (C,H,W) block (bh,bw) -> (C*bh*bw, H/bh, W/bw).

    Pure re-indexing (pads bottom/right with zeros when extents do not
    divide); output channel order is (c, i, j) row-major so the inverse
    permutation is the exact gradient.
    """

    def __init__(self, block):
        self.block = tuple(block)

    def param_count(self):
        return 0

    def params(self):
        return []

    def glorot(self, rng):
        pass

    def out_extents(self, h, w):
        bh, bw = self.block
        return _ceil_div(h, bh), _ceil_div(w, bw)

    def forward(self, x, training=False):
        c, h, w = x.shape
        bh, bw = self.block
        oh, ow = self.out_extents(h, w)
        xp = x.data
        if oh * bh != h or ow * bw != w:
            xp = np.pad(xp, ((0, 0), (0, oh * bh - h), (0, ow * bw - w)))
        y = (xp.reshape(c, oh, bh, ow, bw)
               .transpose(0, 2, 4, 1, 3)
               .reshape(c * bh * bw, oh, ow))
        out = Tensor(np.ascontiguousarray(y))

        def backward(gout):
            dxp = (gout.reshape(c, bh, bw, oh, ow)
                       .transpose(0, 3, 1, 4, 2)
                       .reshape(c, oh * bh, ow * bw))
            return (np.ascontiguousarray(dxp[:, :h, :w]),)

        return record(out, (x,), backward)

    def untile(self, y, h, w):
        """Inverse re-indexing, for testing the permutation."""
        c = y.shape[0] // (self.block[0] * self.block[1])
        bh, bw = self.block
        oh, ow = y.shape[1], y.shape[2]
        xp = (y.data.reshape(c, bh, bw, oh, ow)
                  .transpose(0, 3, 1, 4, 2)
                  .reshape(c, oh * bh, ow * bw))
        return Tensor(np.ascontiguousarray(xp[:, :h, :w]))


MAXPOOL_HEIGHT = "maxpool_height"
CONCAT_HEIGHT = "concat_height"


class CollapseLayer:
    """Interface from a 2-D map to a 1-D sequence footprint.

    maxpool_height: (C,H,W) -> (C,1,W) taking the max over rows.
    concat_height:  (C,H,W) -> (C*H,1,W) stacking rows top to bottom.
    """

    def __init__(self, mode):
        if mode not in (MAXPOOL_HEIGHT, CONCAT_HEIGHT):
            raise ValueError("unknown collapse mode %r" % (mode,))
        self.mode = mode

    def param_count(self):
        return 0

    def params(self):
        return []

    def glorot(self, rng):
        pass

    def out_channels(self, c, h):
        return c if self.mode == MAXPOOL_HEIGHT else c * h

    def forward(self, x, training=False):
        c, h, w = x.shape
        if self.mode == MAXPOOL_HEIGHT:
            arg = x.data.argmax(axis=1)
            y = np.take_along_axis(x.data, arg[:, None], axis=1)
            out = Tensor(y)

            def backward(gout):
                dx = np.zeros((c, h, w), dtype=gout.dtype)
                ci, wi = np.meshgrid(np.arange(c), np.arange(w), indexing="ij")
                dx[ci, arg, wi] = gout[:, 0]
                return (dx,)

        else:
            # row-major over height: out channel k = row * C + channel
            y = x.data.transpose(1, 0, 2).reshape(c * h, 1, w)
            out = Tensor(np.ascontiguousarray(y))

            def backward(gout):
                return (np.ascontiguousarray(
                    gout.reshape(h, c, w).transpose(1, 0, 2)),)

        return record(out, (x,), backward)


class Linear:
    """Affine map over the trailing feature axis of a (T, D) sequence.

    directions > 1 splits the input into equal per-direction blocks; each
    block gets its own weights unless `shared`, and the mapped blocks are
    summed.  This is the decoder interface used between bidirectional LSTM
    stacks and at the class output.
    """

    def __init__(self, in_dim, out_dim, bias=True, directions=1, shared=False,
                 dtype=np.float32):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.directions = directions
        self.shared = shared
        self.has_bias = bias
        n_mats = 1 if (shared or directions == 1) else directions
        self.weights = [Tensor(np.zeros((in_dim, out_dim), dtype=dtype))
                        for _ in range(n_mats)]
        if not bias:
            self.biases = []
        elif shared or directions == 1:
            self.biases = [Tensor(np.zeros(out_dim, dtype=dtype))]
        else:
            self.biases = [Tensor(np.zeros(out_dim, dtype=dtype))
                           for _ in range(directions)]

    def param_count(self):
        return (len(self.weights) * self.in_dim * self.out_dim
                + len(self.biases) * self.out_dim)

    def params(self):
        out = [("w%d" % i, w) for i, w in enumerate(self.weights)]
        out += [("b%d" % i, b) for i, b in enumerate(self.biases)]
        return out

    def glorot(self, rng):
        bound = np.sqrt(6.0 / (self.in_dim + self.out_dim))
        for w in self.weights:
            w.data[...] = rng.uniform(-bound, bound, w.data.shape).astype(
                w.data.dtype)

    def forward(self, x, training=False):
        t, d = x.shape
        if d != self.in_dim * self.directions:
            raise ShapeError("linear expects %d features, got %d"
                             % (self.in_dim * self.directions, d))
        nd = self.directions
        y = np.zeros((t, self.out_dim), dtype=x.dtype)
        for di in range(nd):
            w = self.weights[0 if self.shared or nd == 1 else di]
            y += x.data[:, di * self.in_dim : (di + 1) * self.in_dim] @ w.data
        for b in self.biases:
            y += b.data
        out = Tensor(y)
        xs, ws, bs = x, self.weights, self.biases

        def backward(gout):
            dx = np.empty_like(xs.data)
            dws = [np.zeros_like(w.data) for w in ws]
            for di in range(nd):
                wi = 0 if self.shared or nd == 1 else di
                blk = xs.data[:, di * self.in_dim : (di + 1) * self.in_dim]
                dws[wi] += blk.T @ gout
                dx[:, di * self.in_dim : (di + 1) * self.in_dim] = (
                    gout @ ws[wi].data.T)
            dbs = [gout.sum(axis=0) for _ in bs]
            return (dx, *dws, *dbs)

        return record(out, (xs, *ws, *bs), backward)


def dropout(x, p, training, rng):
    """Inverted dropout: training zeroes with probability p and rescales
    survivors by 1/(1-p); inference is the identity."""
    if not 0.0 <= p < 1.0:
        raise ValueError("dropout probability must be in [0, 1), got %r" % (p,))
    if not training or p == 0.0:
        return x
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    mask = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)
    out = Tensor(x.data * mask)

    def backward(gout):
        return (gout * mask,)

    return record(out, (x,), backward)


class Dropout:
    """Dropout as a network layer with its own seeded generator."""

    def __init__(self, p, seed=0):
        if not 0.0 <= p < 1.0:
            raise ValueError("dropout probability must be in [0, 1), got %r" % (p,))
        self.p = p
        self.reseed(seed)

    def reseed(self, seed):
        self.rng = np.random.default_rng(seed)

    def param_count(self):
        return 0

    def params(self):
        return []

    def glorot(self, rng):
        pass

    def out_extents(self, h, w):
        return h, w

    def forward(self, x, training=False):
        return dropout(x, self.p, training, self.rng)
