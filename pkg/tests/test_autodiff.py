import numpy as np
import pytest

from linerec import autodiff as ad
from linerec.autodiff import (
    GradCheckError,
    ShapeError,
    Tape,
    TapeError,
    Tensor,
    grad_check,
)


def test_tensor_rejects_zero_extent():
    with pytest.raises(ShapeError):
        Tensor(np.zeros((2, 0, 3)))


def test_tensor_defaults_to_float32():
    t = Tensor([[1, 2], [3, 4]])
    assert t.dtype == np.float32


def test_matmul_identity():
    i2 = Tensor(np.eye(2))
    m = Tensor([[1.0, 2.0], [3.0, 4.0]])
    out = ad.matmul(i2, m)
    np.testing.assert_array_equal(out.data, m.data)


def test_matmul_orthogonal_rows():
    a = Tensor([[1.0, 0.0]])
    b = Tensor([[0.0], [5.0]])
    assert ad.matmul(a, b).data[0, 0] == 0.0


def test_matmul_against_triple_loop():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal((4, 2))
    # independent oracle: explicit triple loop
    expect = np.zeros((3, 2))
    for i in range(3):
        for j in range(2):
            for p in range(4):
                expect[i, j] += a[i, p] * b[p, j]
    got = ad.matmul(Tensor(a), Tensor(b)).data
    assert np.abs(got - expect).max() < 1e-12


def test_matmul_shape_mismatch_reports_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        ad.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_sigmoid_at_zero():
    assert ad.sigmoid(Tensor(np.zeros(3))).data[0] == pytest.approx(0.5)


def test_tanh_saturates():
    y = ad.tanh(Tensor(np.array([10.0, -10.0, 25.0])))
    assert abs(y.data[0] - 1.0) < 1e-6
    assert abs(y.data[1] + 1.0) < 1e-6


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(1)
    x = Tensor(rng.standard_normal((5, 7)))
    y = ad.softmax(x, axis=0)
    sums = y.data.sum(axis=0)
    assert np.abs(sums - 1.0).max() < 1e-6
    assert (y.data >= 0).all()


def test_activation_rejects_nonfinite():
    with pytest.raises(ValueError):
        ad.sigmoid(Tensor(np.array([1.0, np.nan])))


def test_backward_identity_chain():
    x = Tensor(np.array([3.0]))
    with Tape() as tape:
        y = ad.add(x, Tensor(np.zeros(1)))
    grads = tape.backward({y: np.ones(1)})
    assert grads[x].data[0] == 1.0


def test_backward_sigmoid_at_zero():
    x = Tensor(np.zeros(1, dtype=np.float64))
    with Tape() as tape:
        y = ad.sigmoid(x)
    grads = tape.backward({y: np.ones(1)})
    assert grads[x].data[0] == pytest.approx(0.25)


def test_backward_rejects_unrecorded_seed():
    x = Tensor(np.zeros(2))
    tape = Tape()
    with pytest.raises(TapeError):
        tape.backward({x: np.ones(2)})


def test_backward_rejects_bad_seed_shape():
    x = Tensor(np.zeros(2, dtype=np.float64))
    with Tape() as tape:
        y = ad.tanh(x)
    with pytest.raises(ShapeError):
        tape.backward({y: np.ones(3)})


def test_backward_leaves_params_and_tape_unchanged():
    rng = np.random.default_rng(2)
    w = Tensor(rng.standard_normal((3, 3)))
    x = Tensor(rng.standard_normal((3, 3)))
    w_copy = w.data.copy()
    with Tape() as tape:
        y = ad.matmul(x, w)
    n_nodes = len(tape.nodes)
    g1 = tape.backward({y: np.ones((3, 3))})
    g2 = tape.backward({y: np.ones((3, 3))})
    np.testing.assert_array_equal(w.data, w_copy)
    assert len(tape.nodes) == n_nodes
    # replay determinism: bit-identical gradients
    np.testing.assert_array_equal(g1[x].data, g2[x].data)


def test_fanout_gradients_accumulate():
    x = Tensor(np.full(4, 2.0, dtype=np.float64))
    with Tape() as tape:
        y = ad.mul(x, x)  # y = x^2, x fans out
    grads = tape.backward({y: np.ones(4)})
    np.testing.assert_allclose(grads[x].data, 4.0)


def test_three_layer_composition_matches_finite_differences():
    rng = np.random.default_rng(3)
    w1 = Tensor(rng.standard_normal((4, 5)))
    w2 = Tensor(rng.standard_normal((5, 3)))
    x = Tensor(rng.standard_normal((2, 4)))

    def f(xv):
        h = ad.tanh(ad.matmul(xv, w1))
        o = ad.sigmoid(ad.matmul(h, w2))
        return ad.sum_all(o)

    assert grad_check(f, x, step=1e-5) < 1e-6


def test_grad_check_linear_map_is_exact():
    rng = np.random.default_rng(4)
    w = Tensor(rng.standard_normal((6, 1)))

    def f(xv):
        return ad.sum_all(ad.matmul(xv, w))

    x = Tensor(rng.standard_normal((2, 6)))
    assert grad_check(f, x, step=1e-5) < 1e-10


def test_grad_check_flags_wrong_gradient():
    # a deliberately wrong backward (off by 2x) must surface as error ~ 0.5
    def broken_double(x):
        out = Tensor(x.data * 2.0)

        def backward(g):
            return (g * 4.0,)  # should be g * 2

        return ad.record(out, (x,), backward)

    def f(xv):
        return ad.sum_all(broken_double(xv))

    err = grad_check(f, Tensor(np.ones(3)), step=1e-5)
    assert 0.4 < err < 0.6


def test_grad_check_reports_nonfinite_component():
    def f(xv):
        out = Tensor(np.asarray(xv.data.sum()))

        def backward(g):
            return (np.full_like(xv.data, np.nan),)

        return ad.record(out, (xv,), backward)

    with pytest.raises(GradCheckError, match="component"):
        grad_check(f, Tensor(np.ones(2)))


def test_primitive_backwards_on_random_shapes():
    # every primitive vs central differences, shapes up to 4 axes, extents <= 7
    rng = np.random.default_rng(5)
    for trial in range(25):
        ndim = rng.integers(1, 5)
        shape = tuple(int(rng.integers(1, 8)) for _ in range(ndim))
        x = Tensor(rng.standard_normal(shape))
        axis = int(rng.integers(0, ndim))
        for kind in ("sigmoid", "tanh", "softmax"):

            def f(xv, kind=kind, axis=axis):
                return ad.sum_all(ad.mul(ad.activation(xv, kind, axis=axis),
                                         ad.activation(xv, "tanh")))

            assert grad_check(f, x, step=1e-5) < 1e-6, (kind, shape)
    for trial in range(10):
        m, k, n = (int(rng.integers(1, 8)) for _ in range(3))
        a = Tensor(rng.standard_normal((m, k)))
        b = Tensor(rng.standard_normal((k, n)))

        def f(av, bv):
            return ad.sum_all(ad.tanh(ad.matmul(av, bv)))

        assert grad_check(f, [a, b], step=1e-5) < 1e-6


def test_zero_seed_gives_zero_gradients():
    x = Tensor(np.ones(3, dtype=np.float64))
    with Tape() as tape:
        y = ad.tanh(x)
    grads = tape.backward({y: np.zeros(3)})
    np.testing.assert_array_equal(grads[x].data, np.zeros(3))


def test_concurrent_tapes_are_independent():
    import concurrent.futures as cf

    def run(seed):
        rng = np.random.default_rng(seed)
        x = Tensor(rng.standard_normal((3, 3)))
        w = Tensor(rng.standard_normal((3, 3)))
        with Tape() as tape:
            y = ad.sum_all(ad.sigmoid(ad.matmul(x, w)))
        return tape.backward({y: np.asarray(1.0)})[x].data

    direct = [run(s) for s in range(4)]
    with cf.ThreadPoolExecutor(4) as pool:
        threaded = list(pool.map(run, range(4)))
    for d, t in zip(direct, threaded):
        np.testing.assert_array_equal(d, t)
