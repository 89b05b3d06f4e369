import numpy as np
import pytest

from decomploss import model as M
from decomploss.dataset import SplitSpec, WindowBatch, prepare
from decomploss.errors import ConfigurationError, TrainingError
from decomploss.hybrid_loss import LossWeights
from decomploss.model import forward, init
from decomploss.synthgen import SynthSpec, generate
from decomploss.trainer import AdamState, TrainConfig, adam_step, evaluate, train, train_step


@pytest.fixture(scope="module")
def small_data():
    s = generate(SynthSpec(900, 2, {"kind": "linear", "slope": 0.01}, ((1.0, 12.0, 0.3),), 0.1, seed=4))
    return prepare(s, SplitSpec("ratio", 24, 12), kernel=5)


def params_equal(a, b):
    return all(np.array_equal(a.parameters()[k], b.parameters()[k]) for k in M.PARAM_NAMES)


def test_adam_zero_gradient():
    cfg = TrainConfig()
    p = {"w": np.array([1.0, -2.0])}
    st = AdamState({"w": np.array([0.5, 0.5])}, {"w": np.array([1.0, 1.0])}, 3)
    new_p, new_st = adam_step(p, {"w": np.zeros(2)}, st, cfg)
    np.testing.assert_allclose(new_st.m["w"], 0.45)
    np.testing.assert_allclose(new_st.v["w"], 0.999)
    assert new_st.step == 4
    # with decayed (non-zero) moments the parameter still moves; with zero moments it does not
    z = AdamState.zeros_like(p)
    same, _ = adam_step(p, {"w": np.zeros(2)}, z, cfg)
    np.testing.assert_array_equal(same["w"], p["w"])


def test_adam_first_step_is_lr_sign():
    cfg = TrainConfig(learning_rate=0.01)
    g = np.array([3.0, -0.2, 1e-3])
    p = {"w": np.zeros(3)}
    new_p, _ = adam_step(p, {"w": g}, AdamState.zeros_like(p), cfg)
    # after bias correction m_hat = g and sqrt(v_hat) = |g|
    np.testing.assert_allclose(new_p["w"], -0.01 * g / (np.abs(g) + 1e-8), rtol=1e-12)


def test_adam_constant_gradient_long_run():
    cfg = TrainConfig(learning_rate=0.001)
    p = {"w": np.array([0.0, 0.0])}
    st = AdamState.zeros_like(p)
    g = {"w": np.array([0.7, -4.0])}
    for _ in range(1000):
        prev = p["w"].copy()
        p, st = adam_step(p, g, st, cfg)
    step = p["w"] - prev
    np.testing.assert_allclose(step, -0.001 * np.sign(g["w"]), rtol=0.01)


def test_adam_shape_mismatch():
    p = {"w": np.zeros(3)}
    with pytest.raises(ConfigurationError):
        adam_step(p, {"w": np.zeros(2)}, AdamState.zeros_like(p), TrainConfig())


def test_zero_lr_freezes_params_but_not_weights(small_data):
    m = init(24, 12, 2, kernel=5)
    cfg = TrainConfig(learning_rate=0.0)
    batch = small_data.train.take(np.arange(32))
    w0 = cfg.initial_weights()
    m2, w1, st, br = train_step(m, batch, w0, cfg.policy(), AdamState.zeros_like(m.parameters()), cfg)
    assert params_equal(m, m2)
    assert w1 != w0 and st.step == 1


def test_training_reduces_validation_error(small_data):
    m = init(24, 12, 2, kernel=5)
    before = evaluate(m, small_data.val).overall_mse
    res = train(m, small_data.train, small_data.val, TrainConfig(max_epochs=5, learning_rate=1e-3))
    assert evaluate(res.model, small_data.val).overall_mse < before
    assert len(res.trajectory) == res.steps
    assert res.steps == sum(-(-len(small_data.train) // 32) for _ in res.epochs)


def test_training_is_deterministic(small_data):
    cfg = TrainConfig(max_epochs=3, seed=9)
    a = train(init(24, 12, 2, kernel=5), small_data.train, small_data.val, cfg)
    b = train(init(24, 12, 2, kernel=5), small_data.train, small_data.val, cfg)
    assert params_equal(a.model, b.model)
    assert a.trajectory == b.trajectory and a.epochs == b.epochs


def test_fixed_weight_matches_cold_hybrid(small_data):
    fixed = TrainConfig(max_epochs=2, loss_variant="fixed_weight", lambda1=0.0, lambda2=0.0)
    hyb = TrainConfig(max_epochs=2, loss_variant="hybrid", lambda1=0.0, lambda2=0.0)
    a = train(init(24, 12, 2, kernel=5), small_data.train, small_data.val, fixed)
    b = train(init(24, 12, 2, kernel=5), small_data.train, small_data.val, hyb)
    assert params_equal(a.model, b.model)
    assert [r[1:] for r in a.trajectory] == [r[1:] for r in b.trajectory]


def test_early_stopping_returns_best(small_data):
    cfg = TrainConfig(max_epochs=30, patience=1, learning_rate=0.05)
    res = train(init(24, 12, 2, kernel=5), small_data.train, small_data.val, cfg)
    vals = [e.val_overall_mse for e in res.epochs]
    got = evaluate(res.model, small_data.val).overall_mse
    assert got <= min(vals) + 1e-15 or res.best_epoch == 0
    if res.stopped_early:
        assert len(res.epochs) < 30


def test_original_baseline_keeps_w1_pinned(small_data):
    cfg = TrainConfig(max_epochs=1, initial_w1=1.0, freeze_weights=True)
    res = train(init(24, 12, 2, kernel=5), small_data.train, small_data.val, cfg)
    assert all(r[1] == 1.0 and r[2] == 0.0 for r in res.trajectory)
    assert all(r[8] == r[5] for r in res.trajectory)


@pytest.mark.filterwarnings("ignore:overflow encountered:RuntimeWarning")
def test_nan_loss_aborts():
    x = np.zeros((4, 6, 1))
    bad = np.full((4, 3, 1), 1e200)
    batch = WindowBatch(x, bad, bad, np.zeros((4, 3, 1)))
    m = init(6, 3, 1, kernel=3)
    cfg = TrainConfig()
    with pytest.raises(TrainingError, match="step 1"):
        train_step(m, batch, LossWeights(), cfg.policy(), AdamState.zeros_like(m.parameters()), cfg)


def test_empty_streams_rejected(small_data):
    empty = WindowBatch.__new__(WindowBatch)
    object.__setattr__(empty, "inputs", np.zeros((0, 24, 2)))
    with pytest.raises(ConfigurationError):
        evaluate(init(24, 12, 2, kernel=5), type("E", (), {"__len__": lambda s: 0})())
    with pytest.raises(ConfigurationError):
        train(init(24, 12, 2, kernel=5), type("E", (), {"__len__": lambda s: 0})(), small_data.val, TrainConfig())


def test_evaluate_perfect_and_offset():
    m = init(4, 2, 1, kernel=1)
    x = np.random.default_rng(0).normal(size=(5, 4, 1))
    out = forward(m, x)
    perfect = WindowBatch(x, out.combined, out.seasonal_pred, out.trend_pred)
    r = evaluate(m, perfect)
    assert r.overall_mse == 0 and r.seasonal_mae == 0 and r.trend_mse == 0
    off = WindowBatch(x, out.combined - 1.0, out.seasonal_pred, out.trend_pred - 1.0)
    r = evaluate(m, off)
    assert r.overall_mse == pytest.approx(1.0, abs=1e-12) and r.overall_mae == pytest.approx(1.0, abs=1e-12)


def test_evaluate_chunking_invariant(small_data):
    m = init(24, 12, 2, kernel=5)
    a = evaluate(m, small_data.test, batch_size=7)
    b = evaluate(m, small_data.test.all(), batch_size=10_000)
    assert abs(a.overall_mse - b.overall_mse) <= 1e-12 and abs(a.trend_mae - b.trend_mae) <= 1e-12


def test_grad_clip_config(small_data):
    with pytest.raises(ConfigurationError):
        TrainConfig(grad_clip=0.0)
    res = train(init(24, 12, 2, kernel=5), small_data.train, small_data.val, TrainConfig(max_epochs=1, grad_clip=1e-3))
    assert res.steps > 0


def test_config_validation():
    with pytest.raises(ConfigurationError):
        TrainConfig(loss_variant="dro")
    with pytest.raises(ConfigurationError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigurationError):
        TrainConfig(initial_w1=1.5)
