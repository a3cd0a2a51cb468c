import time

import numpy as np
import pytest

from linerec import netzoo as Z
from linerec.autodiff import Tensor
from linerec.netzoo import (
    CheckpointError,
    KnobError,
    VariantKnobs,
    build,
    count_macs,
    count_params,
    load_checkpoint,
    restore_checkpoint,
    save_checkpoint,
)

TABLE_PUIGCERVER = [160, 4640, 13872, 27712, 46160,
                    3147776, 1574912, 1574912, 1574912, 1574912, 28270]
TABLE_GNN = [296, 1040, 2320, 4640, 9248, 16448, 36928, 73856,
             263168, 32768, 263168, 28380]


def test_puigcerver_per_layer_params_exact():
    report = count_params(build("puigcerver").spec)
    assert report.trainable_param_counts() == TABLE_PUIGCERVER
    assert report.total_params == 9568238


def test_gnn1dlstm_per_layer_params_exact():
    report = count_params(build("gnn1dlstm").spec)
    assert report.trainable_param_counts() == TABLE_GNN
    assert report.total_params == sum(TABLE_GNN)


def test_formula_matches_instantiated_tensors():
    for arch in Z.ARCHITECTURES:
        net = build(arch)
        actual = sum(t.size for _, t in net.params())
        assert actual == count_params(net.spec).total_params, arch


def test_mac_totals_near_published():
    rep = count_macs(build("puigcerver").spec, 128, 1000)
    assert abs(rep.total_macs - 1609e6) / 1609e6 < 0.10
    rep = count_macs(build("gnn1dlstm").spec, 128, 1000)
    assert abs(rep.total_macs - 216e6) / 216e6 < 0.10


def test_mdlstm_audit_prints_published_delta():
    rep = count_macs(build("mdlstm2d").spec, 128, 1000)
    table = rep.format_table()
    assert "836000" in table or "836" in table
    assert "delta" in table


def test_audit_is_fast():
    t0 = time.perf_counter()
    for arch in Z.ARCHITECTURES:
        spec = build(arch).spec
        count_params(spec)
        count_macs(spec, 128, 1000)
    assert time.perf_counter() - t0 < 1.0


def test_mac_width_linearity():
    spec = build("gnn1dlstm").spec
    rows1 = {r.name: r.macs for r in count_macs(spec, 128, 1000).rows}
    rows2 = {r.name: r.macs for r in count_macs(spec, 128, 2000).rows}
    for name, m in rows1.items():
        if m > 0:
            assert rows2[name] == 2 * m, name


def test_mac_rejects_too_small_input():
    with pytest.raises(Exception, match="small"):
        count_macs(build("gnn1dlstm").spec, 4, 8)


def test_output_width_rules():
    # audited extents: /8 for the strided-conv families, /16 for mdlstm
    rep = count_macs(build("puigcerver").spec, 128, 1000)
    assert rep.rows[-1].out_extents == "125"
    rep = count_macs(build("gnn1dlstm").spec, 128, 1000)
    assert rep.rows[-1].out_extents == "125"
    rep = count_macs(build("mdlstm2d").spec, 128, 1000)
    assert rep.rows[-1].out_extents == "63"


def test_forward_output_shapes():
    rng = np.random.default_rng(0)
    for arch, width, t_expect in [("cnn", 256, 32), ("gnn1dlstm", 264, 33),
                                  ("mdlstm2d", 160, 10)]:
        net = build(arch)
        net.glorot_init(0)
        net.set_workers(4)
        x = Tensor(rng.standard_normal((1, 128, width)).astype(np.float32))
        y = net.forward(x)
        assert y.shape == (t_expect, 110), arch
        post = net.posteriors(x)
        assert post.T == t_expect and post.C == 110


def test_x2_equals_depth_multiplier_two():
    a = build("mdlstm2d_x2").spec
    b = build("mdlstm2d", VariantKnobs(depth_multiplier=2)).spec
    assert [s.args for s in a.layers] == [s.args for s in b.layers]


def test_depth_multiplier_quadruples_params():
    base = count_params(build("gnn1dlstm").spec).total_params
    big = count_params(
        build("gnn1dlstm", VariantKnobs(depth_multiplier=2)).spec
    ).total_params
    assert 3.5 < big / base < 4.3


def test_param_totals_monotone_in_depth():
    totals = [count_params(build("gnn1dlstm",
                                 VariantKnobs(depth_multiplier=m)).spec
                           ).total_params
              for m in (0.25, 0.5, 1, 2)]
    assert totals == sorted(totals)


def encoder_count(spec):
    return sum(1 for s in spec.layers
               if s.kind in ("conv", "gated_conv", "mdlstm"))


def test_encoder_layer_knob():
    for arch in ("gnn1dlstm", "mdlstm2d"):
        assert encoder_count(build(arch).spec) == 8
        assert encoder_count(
            build(arch, VariantKnobs(encoder_extra_convs=-2)).spec) == 6
        assert encoder_count(
            build(arch, VariantKnobs(encoder_extra_convs=4)).spec) == 12


def test_encoder_knob_rejected_for_cnn():
    with pytest.raises(KnobError):
        build("cnn1dlstm", VariantKnobs(encoder_extra_convs=4))


def test_encoder_knob_ignored_for_puigcerver():
    a = build("puigcerver", VariantKnobs(encoder_extra_convs=4)).spec
    b = build("puigcerver").spec
    assert [s.args for s in a.layers] == [s.args for s in b.layers]


def test_decoder_blstm_knob():
    for n in (1, 2, 5):
        spec = build("gnn1dlstm", VariantKnobs(decoder_blstm_count=n)).spec
        assert sum(1 for s in spec.layers if s.kind == "blstm") == n


def test_decoder_knob_rejected_without_decoder():
    with pytest.raises(KnobError):
        build("gnn", VariantKnobs(decoder_blstm_count=2))


def test_collapse_mode_knob_changes_interface():
    spec = build("gnn1dlstm", VariantKnobs(collapse_mode="concat")).spec
    blstm = next(s for s in spec.layers if s.kind == "blstm")
    assert blstm.arg("input_dim") == 512  # 128 channels x 4 rows


def test_dropout_presets():
    for arch in ("gnn1dlstm", "mdlstm2d"):
        for preset, n in (("small", 2), ("medium", 4), ("large", 7)):
            spec = build(arch, VariantKnobs(dropout_preset=preset)).spec
            assert sum(1 for s in spec.layers if s.kind == "dropout") == n, \
                (arch, preset)


def test_class_count_knob():
    spec = build("gnn1dlstm", VariantKnobs(class_count=80)).spec
    assert spec.layers[-1].arg("out_dim") == 80


def test_invalid_arch_rejected():
    with pytest.raises(KnobError):
        build("resnet")


def test_bad_knob_values_rejected():
    with pytest.raises(KnobError):
        build("cnn", VariantKnobs(depth_multiplier=3))
    with pytest.raises(KnobError):
        build("cnn", VariantKnobs(dropout_preset="huge"))


# ---------------------------------------------------------------------------
# checkpoints

def small_net():
    net = build("cnn", VariantKnobs(depth_multiplier=0.25, class_count=12))
    net.glorot_init(7)
    return net


def test_checkpoint_roundtrip_bits_and_forward(tmp_path):
    net = small_net()
    path = tmp_path / "net.ckpt"
    save_checkpoint(net, path)
    again = load_checkpoint(path)
    for (n1, t1), (n2, t2) in zip(net.params(), again.params()):
        assert n1 == n2
        np.testing.assert_array_equal(t1.data, t2.data)
    rng = np.random.default_rng(1)
    x = Tensor(rng.standard_normal((1, 128, 96)).astype(np.float32))
    np.testing.assert_array_equal(net.forward(x).data,
                                  again.forward(x).data)


def test_checkpoint_truncated_reports_offset(tmp_path):
    net = small_net()
    path = tmp_path / "net.ckpt"
    save_checkpoint(net, path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) - 50])
    with pytest.raises(CheckpointError, match="offset"):
        load_checkpoint(path)


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "net.ckpt"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_checkpoint_arch_mismatch_rejected(tmp_path):
    net = small_net()
    path = tmp_path / "net.ckpt"
    save_checkpoint(net, path)
    other = build("gnn", VariantKnobs(depth_multiplier=0.25, class_count=12))
    with pytest.raises(CheckpointError, match="arch"):
        restore_checkpoint(other, path)


def test_checkpoint_restore_into_matching_net(tmp_path):
    net = small_net()
    path = tmp_path / "net.ckpt"
    save_checkpoint(net, path)
    fresh = build("cnn", VariantKnobs(depth_multiplier=0.25, class_count=12))
    restore_checkpoint(fresh, path)
    for (_, a), (_, b) in zip(net.params(), fresh.params()):
        np.testing.assert_array_equal(a.data, b.data)
