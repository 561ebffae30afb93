"""Loss, optimizer (against an independent reference), and the train loop."""

import numpy as np
import pytest

from trendcast import autodiff as ad
from trendcast.data import HashFeatureProvider, assemble_inputs
from trendcast.errors import ContractError, DimensionError, NumericalError
from trendcast.model import ModelConfig, TrendModel
from trendcast.synthetic import generate_synthetic
from trendcast.training import Adafactor, TrainConfig, mse_loss, train


def tiny_model(seed=0, **kw):
    cfg = dict(d_model=16, d_embed=8, num_heads=2, horizon=12, trend_len=28,
               attention_window=4, image_dim=8, text_dim=8)
    cfg.update(kw)
    return TrendModel(ModelConfig(**cfg), seed=seed)


# ---------------------------------------------------------------------------
# loss


def test_mse_zero_when_equal():
    x = ad.constant([[1.0, 2.0], [3.0, 4.0]])
    assert mse_loss(x, ad.constant(x.data.copy())).item() == 0.0


def test_mse_forced_arithmetic():
    loss = mse_loss(ad.constant([0.0, 0.0]), ad.constant([2.0, 4.0]))
    assert loss.item() == 10.0


def test_mse_shape_mismatch():
    with pytest.raises(DimensionError):
        mse_loss(ad.constant([1.0, 2.0]), ad.constant([[1.0, 2.0]]))


def test_mse_gradient_matches_formula_and_finite_differences():
    r = np.random.default_rng(0)
    p, t = r.normal(size=(3, 4)), r.normal(size=(3, 4))
    pred = ad.parameter(p.copy(), name="pred")
    with ad.Graph():
        ad.backward(mse_loss(pred, ad.constant(t)))
    np.testing.assert_allclose(pred.grad, 2.0 * (p - t) / p.size, atol=1e-12)
    numeric = ad.numeric_gradient(
        lambda x: mse_loss(ad.constant(x), ad.constant(t)).item(), p.copy())
    np.testing.assert_allclose(pred.grad, numeric, atol=1e-6)


# ---------------------------------------------------------------------------
# AdaFactor: independent reference implementation of the published algorithm


def reference_adafactor(x0, grads, eps1=1e-30, eps2=1e-3, clip=1.0, decay=0.8):
    """Row/column-sum formulation, written independently of the package."""
    x = np.array(x0, dtype=np.float64)
    R = C = V = None
    out = []
    for t, g in enumerate(grads, start=1):
        g = np.asarray(g, dtype=np.float64)
        beta2 = 1.0 - t ** (-decay)
        rho = min(0.01, 1.0 / np.sqrt(t))
        alpha = max(eps2, np.sqrt(np.mean(x * x))) * rho
        sq = g * g + eps1
        if x.ndim >= 2:
            rsum = sq.sum(axis=-1)
            csum = sq.sum(axis=-2)
            R = rsum if R is None else beta2 * R + (1 - beta2) * rsum
            C = csum if C is None else beta2 * C + (1 - beta2) * csum
            vhat = R[..., :, None] * C[..., None, :] / R.sum(axis=-1, keepdims=True)[..., None]
            u = g / np.sqrt(vhat)
        else:
            V = sq if V is None else beta2 * V + (1 - beta2) * sq
            u = g / np.sqrt(V)
        u = u / max(1.0, np.sqrt(np.mean(u * u)) / clip)
        x = x - alpha * u
        out.append(x.copy())
    return out


def run_package_adafactor(x0, grads, **cfg_kw):
    p = ad.parameter(np.array(x0, dtype=np.float64), name="x")
    opt = Adafactor({"x": p}, TrainConfig(**cfg_kw))
    out = []
    for g in grads:
        p.grad = np.array(g, dtype=np.float64)
        opt.step()
        out.append(p.data.copy())
    return out


def test_adafactor_zero_gradient_zero_decay_leaves_params():
    p = ad.parameter([1.0, -2.0, 3.0], name="x")
    opt = Adafactor({"x": p}, TrainConfig(decay_rate=0.0))
    before = p.data.copy()
    for _ in range(5):
        p.grad = np.zeros(3)
        opt.step()
    np.testing.assert_array_equal(p.data, before)


def test_adafactor_scalar_trajectory_matches_reference():
    r = np.random.default_rng(1)
    grads = [r.normal(size=(1,)) for _ in range(60)]
    ours = run_package_adafactor(np.array([0.7]), grads)
    ref = reference_adafactor(np.array([0.7]), grads)
    for a, b in zip(ours, ref):
        np.testing.assert_allclose(a, b, atol=1e-9)


def test_adafactor_matrix_trajectory_matches_reference():
    r = np.random.default_rng(2)
    x0 = r.normal(size=(3, 5))
    grads = [r.normal(size=(3, 5)) * 0.3 for _ in range(60)]
    ours = run_package_adafactor(x0, grads)
    ref = reference_adafactor(x0, grads)
    for a, b in zip(ours, ref):
        np.testing.assert_allclose(a, b, atol=1e-9)


def test_adafactor_factored_state_is_m_plus_n():
    p = ad.parameter(np.zeros((7, 11)), name="w")
    v = ad.parameter(np.zeros(9), name="b")
    opt = Adafactor({"w": p, "b": v}, TrainConfig())
    st = opt.state["w"]
    assert "row" in st and "col" in st
    assert st["row"].size + st["col"].size == 7 + 11
    assert opt.state["b"]["full"].size == 9


def test_adafactor_nan_gradient_names_parameter():
    p = ad.parameter([1.0], name="x")
    opt = Adafactor({"enc.in_proj": p}, TrainConfig())
    p.grad = np.array([np.nan])
    with pytest.raises(NumericalError, match="enc.in_proj"):
        opt.step()


def test_relative_step_invariant_to_gradient_scale():
    r = np.random.default_rng(3)
    grads = [r.normal(size=(1,)) for _ in range(20)]
    base = run_package_adafactor(np.array([0.5]), grads)
    scaled = run_package_adafactor(np.array([0.5]), [g * 1000.0 for g in grads])
    for a, b in zip(base, scaled):
        assert abs(float(a[0] - b[0])) < 1e-6


# ---------------------------------------------------------------------------
# train loop


def test_one_epoch_one_product_curve_length_one(tmp_path):
    ds = generate_synthetic(1, seed=0)
    model = tiny_model()
    result = train(ds, model, TrainConfig(epochs=1, batch_size=4, seed=0),
                   out_dir=tmp_path)
    assert len(result.loss_curve) == 1
    assert np.isfinite(result.loss_curve).all()
    assert (tmp_path / "loss_curve.csv").read_text().startswith("epoch,mean_loss\n1,")
    assert (tmp_path / "params.json").is_file()
    weekly = np.array([w for p in ds for w in p.sales])
    assert result.target_scale == pytest.approx(weekly[weekly > 0].mean())


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_loss_halves_on_synthetic_set(seed):
    ds = generate_synthetic(50, seed=100 + seed)
    model = tiny_model(seed=seed)
    result = train(ds, model, TrainConfig(epochs=50, batch_size=16, seed=seed))
    assert all(np.isfinite(v) for v in result.loss_curve)
    assert result.loss_curve[49] <= 0.5 * result.loss_curve[0], (
        f"epoch1={result.loss_curve[0]:.5f} epoch50={result.loss_curve[49]:.5f}")


def test_identical_seeds_give_bit_identical_checkpoints(tmp_path):
    ds = generate_synthetic(12, seed=5)
    cfg = TrainConfig(epochs=3, batch_size=8, seed=7)
    for run in ("a", "b"):
        train(ds, tiny_model(seed=9), cfg, out_dir=tmp_path / run)
    assert ((tmp_path / "a" / "params.json").read_bytes()
            == (tmp_path / "b" / "params.json").read_bytes())
    assert ((tmp_path / "a" / "loss_curve.csv").read_bytes()
            == (tmp_path / "b" / "loss_curve.csv").read_bytes())


def test_different_seed_changes_training():
    ds = generate_synthetic(12, seed=5)
    a = train(ds, tiny_model(seed=9), TrainConfig(epochs=2, batch_size=8, seed=1))
    b = train(ds, tiny_model(seed=9), TrainConfig(epochs=2, batch_size=8, seed=2))
    assert a.loss_curve != b.loss_curve


def test_empty_dataset_rejected():
    from trendcast.data import Dataset
    with pytest.raises(ContractError, match="empty"):
        train(Dataset(products=()), tiny_model(), TrainConfig(epochs=1))


def test_train_accepts_preassembled_inputs():
    ds = generate_synthetic(8, seed=6)
    model = tiny_model()
    img = HashFeatureProvider(dim=8, seed=0)
    txt = HashFeatureProvider(dim=8, seed=1)
    inputs = assemble_inputs(ds, img, txt, trend_len=28, horizon=12)
    result = train(inputs, model, TrainConfig(epochs=1, batch_size=4, seed=0))
    assert len(result.loss_curve) == 1


def test_train_config_validation():
    with pytest.raises(ContractError):
        TrainConfig(epochs=0)
    with pytest.raises(ContractError):
        TrainConfig(batch_size=0)
