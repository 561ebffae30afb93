"""Gradient checks and frozen examples for the tensor engine.

Every differentiable op is checked against central finite differences:
|analytic - numeric| <= 1e-4 * max(1, |analytic|, |numeric|), elementwise,
over seeded random trials.
"""

import numpy as np
import pytest

from trendcast import autodiff as ad
from trendcast.errors import CompatibilityError, ContractError, DimensionError

TRIALS = 20


def check_grads(build, arrays, seed_tag=""):
    """Compare tape gradients for each input against finite differences.

    ``build`` maps a list of Tensors to a scalar-loss Tensor.
    """
    tensors = [ad.parameter(a.copy(), name=f"x{i}") for i, a in enumerate(arrays)]
    with ad.Graph():
        loss = build(tensors)
        ad.backward(loss)

    for i, base in enumerate(arrays):
        def f(x, i=i):
            vals = [x if j == i else arrays[j] for j in range(len(arrays))]
            return build([ad.constant(v) for v in vals]).item()

        numeric = ad.numeric_gradient(f, base.copy())
        analytic = tensors[i].grad
        tol = 1e-4 * np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
        assert np.all(np.abs(analytic - numeric) <= tol), (
            f"{seed_tag} input {i}: max err "
            f"{np.max(np.abs(analytic - numeric)):.3e}")


def rng_for(trial):
    return np.random.default_rng(1000 + trial)


# ---------------------------------------------------------------------------
# finite-difference sweeps


@pytest.mark.parametrize("trial", range(TRIALS))
def test_matmul_grad(trial):
    r = rng_for(trial)
    a = r.normal(size=(3, 4))
    b = r.normal(size=(4, 2))
    check_grads(lambda ts: ad.reduce_sum(ad.mul(ad.matmul(ts[0], ts[1]),
                                                ad.matmul(ts[0], ts[1]))),
                [a, b], f"matmul#{trial}")


@pytest.mark.parametrize("trial", range(TRIALS))
def test_matmul_batched_grad(trial):
    r = rng_for(trial)
    a = r.normal(size=(2, 3, 4))
    b = r.normal(size=(4, 5))
    check_grads(lambda ts: ad.reduce_sum(ad.relu(ad.matmul(ts[0], ts[1]))),
                [a, b], f"batched-matmul#{trial}")


@pytest.mark.parametrize("trial", range(TRIALS))
def test_add_sub_mul_broadcast_grad(trial):
    r = rng_for(trial)
    a = r.normal(size=(3, 4))
    b = r.normal(size=(4,))
    c = r.normal(size=(3, 1))
    check_grads(lambda ts: ad.reduce_sum(ad.mul(ad.add(ts[0], ts[1]),
                                                ad.sub(ts[0], ts[2]))),
                [a, b, c], f"arith#{trial}")


@pytest.mark.parametrize("trial", range(TRIALS))
def test_relu_grad(trial):
    # keep entries away from the kink, finite differences straddle it
    r = rng_for(trial)
    a = r.normal(size=(5, 3))
    a[np.abs(a) < 1e-2] = 0.5
    check_grads(lambda ts: ad.reduce_sum(ad.mul(ad.relu(ts[0]), ts[0])),
                [a], f"relu#{trial}")


@pytest.mark.parametrize("trial", range(TRIALS))
@pytest.mark.parametrize("axis", [-1, 0])
def test_softmax_grad(trial, axis):
    r = rng_for(trial)
    a = 3.0 * r.normal(size=(4, 5))
    w = r.normal(size=(4, 5))
    check_grads(lambda ts: ad.reduce_sum(ad.mul(ad.softmax(ts[0], axis=axis),
                                                ad.constant(w))),
                [a], f"softmax(axis={axis})#{trial}")


@pytest.mark.parametrize("trial", range(TRIALS))
def test_layer_norm_grad(trial):
    r = rng_for(trial)
    a = r.normal(size=(3, 6)) * 2.0 + 1.0
    w = r.normal(size=(3, 6))
    check_grads(lambda ts: ad.reduce_sum(ad.mul(ad.layer_norm(ts[0]),
                                                ad.constant(w))),
                [a], f"layer_norm#{trial}")


@pytest.mark.parametrize("trial", range(TRIALS))
def test_mean_and_sum_grad(trial):
    r = rng_for(trial)
    a = r.normal(size=(4, 3, 2))
    check_grads(lambda ts: ad.add(ad.mean(ad.mul(ts[0], ts[0])),
                                  ad.reduce_sum(ad.mean(ts[0], axis=1))),
                [a], f"mean-sum#{trial}")


@pytest.mark.parametrize("trial", range(TRIALS))
def test_concat_reshape_transpose_grad(trial):
    r = rng_for(trial)
    a = r.normal(size=(2, 3))
    b = r.normal(size=(2, 5))

    def build(ts):
        cat = ad.concat([ts[0], ts[1]], axis=1)          # (2, 8)
        t = ad.transpose(cat, (1, 0))                    # (8, 2)
        flat = ad.reshape(t, (16,))
        return ad.reduce_sum(ad.mul(flat, flat))

    check_grads(build, [a, b], f"concat#{trial}")


@pytest.mark.parametrize("trial", range(TRIALS))
def test_take_rows_grad(trial):
    r = rng_for(trial)
    table = r.normal(size=(6, 4))
    idx = r.integers(0, 6, size=5)   # repeats exercise scatter-add
    w = r.normal(size=(5, 4))
    check_grads(lambda ts: ad.reduce_sum(ad.mul(ad.take_rows(ts[0], idx),
                                                ad.constant(w))),
                [table], f"take_rows#{trial}")


@pytest.mark.parametrize("trial", range(5))
def test_composite_network_grad(trial):
    # two-layer MLP with layer norm and softmax head, checked end to end
    r = rng_for(trial)
    x = r.normal(size=(3, 4))
    w1 = r.normal(size=(4, 6))
    b1 = r.normal(size=(6,))
    w2 = r.normal(size=(6, 2))

    def build(ts):
        h = ad.relu(ad.add(ad.matmul(ad.constant(x), ts[0]), ts[1]))
        h = ad.layer_norm(h)
        logits = ad.matmul(h, ts[2])
        return ad.mean(ad.softmax(logits, axis=-1))

    check_grads(build, [w1, b1, w2], f"mlp#{trial}")


# ---------------------------------------------------------------------------
# frozen examples and semantics


def test_matmul_identity():
    a = np.arange(9, dtype=np.float64).reshape(3, 3)
    out = ad.matmul(ad.constant(a), ad.constant(np.eye(3)))
    np.testing.assert_array_equal(out.data, a)


def test_matmul_small_exact():
    out = ad.matmul(ad.constant([[1.0, 2.0]]), ad.constant([[3.0], [4.0]]))
    assert out.data.tolist() == [[11.0]]


def test_matmul_shape_errors():
    with pytest.raises(DimensionError, match=r"\(2, 3\)"):
        ad.matmul(ad.constant(np.zeros((2, 3))), ad.constant(np.zeros((2, 3))))
    with pytest.raises(DimensionError):
        ad.matmul(ad.constant(np.zeros(3)), ad.constant(np.zeros((3, 2))))


def test_relu_values():
    out = ad.relu(ad.constant([-1.0, 0.0, 2.0]))
    assert out.data.tolist() == [0.0, 0.0, 2.0]


def test_mean_value():
    assert ad.mean(ad.constant([2.0, 4.0, 6.0])).item() == 4.0


def test_softmax_rows_sum_to_one_at_large_magnitude():
    r = np.random.default_rng(7)
    for mag in (1.0, 1e2, 1e4):
        x = ad.constant(r.normal(size=(8, 16)) * mag)
        y = ad.softmax(x, axis=-1)
        np.testing.assert_allclose(y.data.sum(axis=-1), 1.0, atol=1e-9)


def test_softmax_extreme_no_overflow():
    y = ad.softmax(ad.constant([1000.0, 0.0]), axis=-1)
    assert np.isfinite(y.data).all()
    np.testing.assert_allclose(y.data[0], 1.0, atol=1e-12)


def test_softmax_symmetry():
    y = ad.softmax(ad.constant([3.0, 3.0, 3.0]), axis=-1)
    np.testing.assert_allclose(y.data, 1.0 / 3.0, atol=1e-15)


def test_layer_norm_slice_statistics():
    r = np.random.default_rng(11)
    x = ad.constant(r.normal(size=(4, 9)) * 5 + 3)
    y = ad.layer_norm(x)
    np.testing.assert_allclose(y.data.mean(axis=-1), 0.0, atol=1e-6)
    np.testing.assert_allclose(y.data.var(axis=-1), 1.0, atol=1e-4)


def test_quadratic_gradient_exact():
    x = ad.parameter([1.0, 2.0, 3.0], name="x")
    with ad.Graph():
        loss = ad.reduce_sum(ad.mul(x, x))
        ad.backward(loss)
    np.testing.assert_allclose(x.grad, [2.0, 4.0, 6.0], atol=1e-12)


def test_constant_loss_leaves_zero_grads():
    x = ad.parameter([1.0, 2.0], name="x")
    with ad.Graph():
        loss = ad.reduce_sum(ad.mul(ad.constant([5.0]), ad.constant([3.0])))
        ad.backward(loss)
    np.testing.assert_array_equal(x.grad, [0.0, 0.0])


def test_grads_accumulate_across_backward_calls():
    x = ad.parameter([2.0], name="x")
    for _ in range(2):
        with ad.Graph():
            ad.backward(ad.reduce_sum(ad.mul(x, x)))
    np.testing.assert_allclose(x.grad, [8.0], atol=1e-12)
    x.zero_grad()
    np.testing.assert_array_equal(x.grad, [0.0])


def test_reused_tensor_gets_both_contributions():
    x = ad.parameter([3.0], name="x")
    with ad.Graph():
        y = ad.mul(x, x)              # x^2
        loss = ad.reduce_sum(ad.add(y, ad.mul(x, ad.constant([4.0]))))
        ad.backward(loss)             # d/dx (x^2 + 4x) = 2x + 4
    np.testing.assert_allclose(x.grad, [10.0], atol=1e-12)


def test_backward_rejects_non_scalar():
    x = ad.parameter([[1.0, 2.0]], name="x")
    with ad.Graph():
        y = ad.mul(x, x)
        with pytest.raises(ContractError, match="scalar"):
            ad.backward(y)


def test_backward_outside_graph_rejected():
    x = ad.parameter([1.0], name="x")
    with ad.Graph():
        loss = ad.reduce_sum(x)
    with pytest.raises(ContractError, match="Graph"):
        ad.backward(loss)


def test_no_graph_means_no_tracking():
    x = ad.parameter([1.0, 2.0], name="x")
    y = ad.mul(x, x)
    assert y._parents == ()


# ---------------------------------------------------------------------------
# checkpoint i/o


def test_checkpoint_round_trip_bit_exact(tmp_path):
    r = np.random.default_rng(3)
    params = {
        "w": ad.parameter(r.normal(size=(4, 3)), name="w"),
        "b": ad.parameter(r.normal(size=(3,)) * 1e-8, name="b"),
    }
    path = tmp_path / "ckpt.json"
    ad.save_params(params, path)
    loaded = ad.load_params(path)
    assert set(loaded) == {"w", "b"}
    for name, t in params.items():
        assert loaded[name].shape == t.data.shape
        assert np.array_equal(loaded[name], t.data)   # bit-exact

    # a second save of the loaded values is byte-identical
    path2 = tmp_path / "ckpt2.json"
    ad.save_params({k: ad.constant(v) for k, v in loaded.items()}, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_rejects_foreign_and_mismatched(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "other", "version": 1, "params": {}}')
    with pytest.raises(CompatibilityError, match="not a"):
        ad.load_params(bad)

    wrong_version = tmp_path / "v99.json"
    wrong_version.write_text('{"format": "trendcast-params", "version": 99, "params": {}}')
    with pytest.raises(CompatibilityError, match="version"):
        ad.load_params(wrong_version)

    torn = tmp_path / "torn.json"
    torn.write_text('{"format": "trendcast-params", "version": 1, '
                    '"params": {"w": {"shape": [2, 2], "data": [1.0, 2.0]}}}')
    with pytest.raises(CompatibilityError, match="w"):
        ad.load_params(torn)
