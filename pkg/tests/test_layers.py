import numpy as np
import pytest

from linerec import autodiff as ad
from linerec import layers as L
from linerec.autodiff import ShapeError, Tensor, grad_check


def rand_tensor(rng, shape):
    return Tensor(rng.standard_normal(shape))


# ---------------------------------------------------------------------------
# parameter-count formulas

@pytest.mark.parametrize("in_ch,out_ch,kernel,groups,bias,expect", [
    (1, 16, (3, 3), 1, True, 160),
    (16, 32, (3, 3), 1, True, 4640),
    (32, 48, (3, 3), 1, True, 13872),
    (48, 64, (3, 3), 1, True, 27712),
    (64, 80, (3, 3), 1, True, 46160),
    (4, 8, (3, 3), 1, True, 296),
    (8, 16, (4, 2), 1, True, 1040),
    (32, 64, (4, 2), 1, True, 16448),
    (64, 128, (3, 3), 1, True, 73856),
    (32, 64, (4, 2), 4, True, 4160),
])
def test_conv_param_counts(in_ch, out_ch, kernel, groups, bias, expect):
    layer = L.ConvLayer(in_ch, out_ch, kernel, groups=groups, bias=bias)
    assert layer.param_count() == expect
    actual = sum(t.size for _, t in layer.params())
    assert actual == expect


@pytest.mark.parametrize("ch,expect", [(16, 2320), (32, 9248), (64, 36928)])
def test_gated_conv_param_counts(ch, expect):
    assert L.GatedConvLayer(ch, (3, 3)).param_count() == expect


@pytest.mark.parametrize("kw,expect", [
    (dict(in_dim=256, out_dim=110, bias=True, directions=2, shared=True), 28270),
    (dict(in_dim=128, out_dim=128, bias=False, directions=2), 32768),
    (dict(in_dim=128, out_dim=110, bias=True, directions=2), 28380),
])
def test_linear_param_counts(kw, expect):
    layer = L.Linear(**kw)
    assert layer.param_count() == expect
    assert sum(t.size for _, t in layer.params()) == expect


# ---------------------------------------------------------------------------
# conv shapes and semantics

def test_conv_identity_1x1():
    layer = L.ConvLayer(3, 3, (1, 1), bias=True, dtype=np.float64)
    layer.weight.data[...] = np.eye(3).reshape(3, 3, 1, 1)
    x = rand_tensor(np.random.default_rng(0), (3, 5, 7))
    y = layer.forward(x)
    np.testing.assert_allclose(y.data, x.data, atol=1e-12)


def test_conv_strided_extents():
    # (4,2) kernel/(4,2) stride maps H=64,W=500 -> 16,250
    layer = L.ConvLayer(8, 16, (4, 2), (4, 2), L.VALID_CEIL)
    assert layer.out_extents(64, 500) == (16, 250)
    x = Tensor(np.zeros((8, 64, 500), dtype=np.float32))
    assert layer.forward(x).shape == (16, 16, 250)


def test_conv_same_preserves_extents():
    layer = L.ConvLayer(16, 32, (3, 3))
    assert layer.out_extents(128, 1000) == (128, 1000)


def test_conv_ceil_mode_pads_bottom_right():
    layer = L.ConvLayer(1, 1, (4, 2), (4, 2), L.VALID_CEIL, dtype=np.float64)
    layer.weight.data[...] = 1.0
    x = Tensor(np.ones((1, 5, 3), dtype=np.float64))
    y = layer.forward(x)
    assert y.shape == (1, 2, 2)
    # bottom-right output window covers mostly zero padding
    assert y.data[0, 1, 1] == 1.0  # single real pixel at (4, 2)


def test_conv_rejects_channel_mismatch():
    with pytest.raises(ShapeError, match="channels"):
        L.ConvLayer(4, 8, (3, 3)).forward(Tensor(np.zeros((3, 8, 8))))


def test_conv_rejects_oversized_kernel():
    layer = L.ConvLayer(1, 1, (9, 9), (1, 1), L.VALID_CEIL)
    with pytest.raises(ShapeError):
        layer.forward(Tensor(np.zeros((1, 4, 4))))


def test_grouped_conv_blocks_are_independent():
    rng = np.random.default_rng(1)
    layer = L.ConvLayer(8, 8, (3, 3), groups=4, dtype=np.float64)
    layer.glorot(rng)
    x = rng.standard_normal((8, 6, 6))
    y0 = layer.forward(Tensor(x)).data
    x2 = x.copy()
    x2[2:4] += 10.0  # perturb group 1 only
    y1 = layer.forward(Tensor(x2)).data
    changed = np.abs(y1 - y0).reshape(4, 2, -1).max(axis=(1, 2)) > 0
    assert list(changed) == [False, True, False, False]


# ---------------------------------------------------------------------------
# pooling

def test_maxpool_extents():
    assert L.MaxPool2d((2, 2)).out_extents(128, 1000) == (64, 500)
    assert L.MaxPool2d((4, 1)).out_extents(4, 125) == (1, 125)


def test_maxpool_constant_input():
    x = Tensor(np.full((2, 4, 4), 3.5))
    y = L.MaxPool2d((2, 2)).forward(x)
    np.testing.assert_array_equal(y.data, np.full((2, 2, 2), 3.5))


def test_maxpool_tie_routes_to_first():
    x = Tensor(np.zeros((1, 2, 2), dtype=np.float64))
    layer = L.MaxPool2d((2, 2))
    with ad.Tape() as tape:
        y = layer.forward(x)
    g = tape.backward({y: np.ones((1, 1, 1))})[x].data
    np.testing.assert_array_equal(g, [[[1.0, 0.0], [0.0, 0.0]]])


def test_maxpool_rejects_zero_window():
    with pytest.raises(ShapeError):
        L.MaxPool2d((0, 2))


# ---------------------------------------------------------------------------
# tiling

def test_tiling_2x2():
    x = Tensor(np.zeros((1, 128, 1000), dtype=np.float32))
    y = L.TilingLayer((2, 2)).forward(x)
    assert y.shape == (4, 64, 500)


def test_tiling_height_collapse():
    x = Tensor(np.zeros((80, 16, 125), dtype=np.float32))
    y = L.TilingLayer((16, 1)).forward(x)
    assert y.shape == (1280, 1, 125)


def test_tiling_roundtrip_identity():
    rng = np.random.default_rng(2)
    for shape, block in [((3, 8, 10), (2, 2)), ((2, 6, 5), (3, 1)),
                         ((1, 5, 7), (2, 2))]:  # last one needs padding
        x = rand_tensor(rng, shape)
        layer = L.TilingLayer(block)
        y = layer.forward(x)
        back = layer.untile(y, shape[1], shape[2])
        np.testing.assert_array_equal(back.data, x.data)


# ---------------------------------------------------------------------------
# gated conv

def test_gated_conv_zero_weights_halves_input():
    layer = L.GatedConvLayer(4, (3, 3), dtype=np.float64)
    x = rand_tensor(np.random.default_rng(3), (4, 5, 6))
    y = layer.forward(x)
    np.testing.assert_allclose(y.data, 0.5 * x.data, atol=1e-12)


def test_gated_conv_large_negative_bias_closes_gate():
    layer = L.GatedConvLayer(2, (3, 3), dtype=np.float64)
    layer.conv.bias.data[...] = -50.0
    x = rand_tensor(np.random.default_rng(4), (2, 4, 4))
    assert np.abs(layer.forward(x).data).max() < 1e-12


def test_gated_conv_rejects_channel_mismatch():
    with pytest.raises(ShapeError):
        L.GatedConvLayer(4, (3, 3)).forward(Tensor(np.zeros((2, 4, 4))))


# ---------------------------------------------------------------------------
# collapse

def test_collapse_maxpool_bounds():
    rng = np.random.default_rng(5)
    x = rand_tensor(rng, (3, 6, 9))
    y = L.CollapseLayer(L.MAXPOOL_HEIGHT).forward(x)
    assert y.shape == (3, 1, 9)
    np.testing.assert_array_equal(y.data[:, 0], x.data.max(axis=1))


def test_collapse_concat_preserves_values():
    rng = np.random.default_rng(6)
    x = rand_tensor(rng, (3, 4, 5))
    y = L.CollapseLayer(L.CONCAT_HEIGHT).forward(x)
    assert y.shape == (12, 1, 5)
    assert abs(np.abs(y.data).sum() - np.abs(x.data).sum()) < 1e-6
    # top-to-bottom order: first C channels are row 0
    np.testing.assert_array_equal(y.data[:3, 0], x.data[:, 0])
    np.testing.assert_array_equal(y.data[3:6, 0], x.data[:, 1])


# ---------------------------------------------------------------------------
# linear semantics

def test_linear_shared_direction_sums():
    layer = L.Linear(3, 2, bias=True, directions=2, shared=True, dtype=np.float64)
    rng = np.random.default_rng(7)
    layer.glorot(rng)
    layer.biases[0].data[...] = rng.standard_normal(2)
    x = rng.standard_normal((4, 6))
    y = layer.forward(Tensor(x)).data
    w = layer.weights[0].data
    expect = x[:, :3] @ w + x[:, 3:] @ w + layer.biases[0].data
    np.testing.assert_allclose(y, expect, atol=1e-12)


def test_linear_rejects_dim_mismatch():
    with pytest.raises(ShapeError):
        L.Linear(4, 2).forward(Tensor(np.zeros((3, 5))))


# ---------------------------------------------------------------------------
# dropout

def test_dropout_p0_is_identity():
    x = Tensor(np.ones((3, 3)))
    y = L.dropout(x, 0.0, True, np.random.default_rng(0))
    assert y is x


def test_dropout_inference_is_identity():
    x = Tensor(np.ones((3, 3)))
    assert L.dropout(x, 0.9, False, np.random.default_rng(0)) is x


def test_dropout_rejects_p_ge_1():
    with pytest.raises(ValueError):
        L.dropout(Tensor(np.ones(3)), 1.0, True, np.random.default_rng(0))


def test_dropout_half_keeps_mean():
    x = Tensor(np.ones(100000))
    y = L.dropout(x, 0.5, True, np.random.default_rng(42))
    assert 0.98 < y.data.mean() < 1.02


# ---------------------------------------------------------------------------
# gradient checks (finite differences at float64)

def _scalar_through(layer, shape, seed, training=False):
    rng = np.random.default_rng(seed)
    x = Tensor(rng.standard_normal(shape))
    probes = [x] + [t for _, t in layer.params()]
    for _, t in layer.params():
        t.data[...] = rng.standard_normal(t.shape) * 0.5

    def f(*tensors):
        return ad.sum_all(ad.tanh(layer.forward(tensors[0], training=training)))

    return f, probes


def test_conv_grad_check():
    rng = np.random.default_rng(8)
    for trial in range(6):
        groups = int(rng.choice([1, 2]))
        cin = int(rng.integers(1, 4)) * groups
        cout = int(rng.integers(1, 4)) * groups
        kh, kw = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        stride = (int(rng.integers(1, 3)), int(rng.integers(1, 3)))
        mode = L.SAME if stride == (1, 1) else L.VALID_CEIL
        act = "tanh" if trial % 2 else None
        layer = L.ConvLayer(cin, cout, (kh, kw), stride, mode,
                            groups=groups, activation=act, dtype=np.float64)
        f, probes = _scalar_through(layer, (cin, 5, 6), seed=trial)
        assert grad_check(f, probes, step=1e-5) < 1e-6


def test_maxpool_grad_check():
    layer = L.MaxPool2d((2, 2))
    f, probes = _scalar_through(layer, (2, 5, 6), seed=9)
    assert grad_check(f, probes, step=1e-6) < 1e-6


def test_tiling_grad_check():
    layer = L.TilingLayer((2, 2))
    f, probes = _scalar_through(layer, (2, 5, 6), seed=10)
    assert grad_check(f, probes, step=1e-5) < 1e-6


def test_gated_conv_grad_check():
    layer = L.GatedConvLayer(3, (3, 3), dtype=np.float64)
    f, probes = _scalar_through(layer, (3, 4, 5), seed=11)
    assert grad_check(f, probes, step=1e-5) < 1e-6


def test_collapse_grad_checks():
    for mode in (L.MAXPOOL_HEIGHT, L.CONCAT_HEIGHT):
        layer = L.CollapseLayer(mode)
        f, probes = _scalar_through(layer, (3, 4, 5), seed=12)
        assert grad_check(f, probes, step=1e-6) < 1e-6


def test_linear_grad_check():
    for kw in (dict(directions=1), dict(directions=2),
               dict(directions=2, shared=True), dict(bias=False, directions=2)):
        layer = L.Linear(3, 2, dtype=np.float64, **kw)
        f, probes = _scalar_through(layer, (4, 3 * layer.directions), seed=13)
        assert grad_check(f, probes, step=1e-5) < 1e-6


def test_dropout_grad_check():
    # fixed mask: reuse one generator state via a fixed seed per call
    x = Tensor(np.random.default_rng(14).standard_normal((4, 5)))

    def f(xv):
        return ad.sum_all(L.dropout(xv, 0.5, True, np.random.default_rng(7)))

    assert grad_check(f, x, step=1e-5) < 1e-6
