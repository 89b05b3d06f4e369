import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from decomploss import model as M
from decomploss.errors import InvalidArgumentError
from decomploss.model import ForecastOutput, StreamGradients, backward, forward, init


def test_zero_model_predicts_zero(rng):
    m = init(6, 3, 2, share_channels=True, kernel=3)
    for p in m.parameters().values():
        p[...] = 0.0
    out = forward(m, rng.normal(size=(4, 6, 2)))
    assert np.all(out.combined == 0)


@pytest.mark.parametrize("shared", [True, False])
def test_identity_weights_reproduce_input(rng, shared):
    L, C = 7, 2
    m = init(L, L, C, share_channels=shared, kernel=5)
    eye = np.eye(L) if shared else np.stack([np.eye(L)] * C)
    m.seasonal_weight[...] = eye
    m.trend_weight[...] = eye
    x = rng.normal(size=(3, L, C))
    np.testing.assert_allclose(forward(m, x).combined, x, atol=1e-12)


def test_hand_example_l2_h1():
    m = init(2, 1, 1, kernel=1)
    m.trend_weight[...] = [[0.5, 0.5]]
    m.seasonal_weight[...] = 0.0
    out = forward(m, np.array([[[1.0], [3.0]]]))
    assert out.combined[0, 0, 0] == 2.0


def test_uniform_init_and_constant_window():
    m = init(4, 3, 1)
    assert np.all(m.seasonal_weight == 0.25) and np.all(m.trend_weight == 0.25)
    assert np.all(m.seasonal_bias == 0) and np.all(m.trend_bias == 0)
    m = init(96, 24, 2, kernel=25)
    x = np.full((1, 96, 2), 3.7)
    out = forward(m, x)
    np.testing.assert_allclose(out.trend_pred, 3.7, atol=1e-12)
    np.testing.assert_allclose(out.combined, 3.7, atol=1e-12)


def test_random_init_is_seeded():
    a = init(8, 4, 3, share_channels=False, seed=7, scheme="random")
    b = init(8, 4, 3, share_channels=False, seed=7, scheme="random")
    c = init(8, 4, 3, share_channels=False, seed=8, scheme="random")
    for k in M.PARAM_NAMES:
        assert np.array_equal(a.parameters()[k], b.parameters()[k])
    assert not np.array_equal(a.seasonal_weight, c.seasonal_weight)


def test_init_validation():
    with pytest.raises(InvalidArgumentError):
        init(0, 4)
    with pytest.raises(InvalidArgumentError):
        init(4, 4, scheme="xavier")


def test_forward_shape_errors(rng):
    m = init(6, 3, 2, share_channels=False, kernel=3)
    with pytest.raises(InvalidArgumentError):
        forward(m, rng.normal(size=(2, 5, 2)))
    with pytest.raises(InvalidArgumentError):
        forward(m, rng.normal(size=(2, 6, 3)))


def test_combined_is_sum(rng):
    m = init(6, 3, 2, seed=1, scheme="random", kernel=3)
    out = forward(m, rng.normal(size=(4, 6, 2)))
    assert np.array_equal(out.combined, out.seasonal_pred + out.trend_pred)


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 1000))
def test_linearity_without_bias(a, b, seed):
    r = np.random.default_rng(seed)
    m = init(8, 4, 2, seed=seed, scheme="random", kernel=3)
    x, y = r.normal(size=(3, 8, 2)), r.normal(size=(3, 8, 2))
    lhs = forward(m, a * x + b * y).combined
    rhs = a * forward(m, x).combined + b * forward(m, y).combined
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-9)


def random_model(r, shared):
    L, H, C = r.integers(1, 9), r.integers(1, 9), r.integers(1, 4)
    k = int(r.choice([1, 3, 5]))
    m = init(L, H, C, share_channels=shared, seed=int(r.integers(1 << 30)), scheme="random", kernel=k)
    m.seasonal_bias[...] = r.normal(size=m.seasonal_bias.shape)
    m.trend_bias[...] = r.normal(size=m.trend_bias.shape)
    return m, r.normal(size=(int(r.integers(1, 5)), L, C))


def linear_functional(m, x, gs, gt):
    out = forward(m, x)
    return float(np.sum(out.seasonal_pred * gs) + np.sum(out.trend_pred * gt))


@pytest.mark.parametrize("shared", [True, False])
def test_backward_matches_finite_differences(shared):
    # For a loss sum(gs*seasonal_pred) + sum(gt*trend_pred), dLoss/dpred is exactly (gs, gt).
    r = np.random.default_rng(3)
    for _ in range(20):
        m, x = random_model(r, shared)
        out = forward(m, x)
        gs, gt = r.normal(size=out.seasonal_pred.shape), r.normal(size=out.trend_pred.shape)
        grads = backward(m, x, out, StreamGradients(gs, gt)).as_dict()
        h = 1e-6
        for name, p in m.parameters().items():
            for idx in np.ndindex(p.shape):
                old = p[idx]
                p[idx] = old + h
                fp = linear_functional(m, x, gs, gt)
                p[idx] = old - h
                fm = linear_functional(m, x, gs, gt)
                p[idx] = old
                fd = (fp - fm) / (2 * h)
                assert abs(grads[name][idx] - fd) <= 1e-5 * max(abs(fd), 1.0)


def test_bias_gradient_is_batch_sum(rng):
    m = init(5, 3, 2, kernel=3)
    x = rng.normal(size=(4, 5, 2))
    out = forward(m, x)
    gs, gt = rng.normal(size=(4, 3, 2)), rng.normal(size=(4, 3, 2))
    g = backward(m, x, out, StreamGradients(gs, gt))
    np.testing.assert_allclose(g.seasonal_bias, gs.sum(axis=(0, 2)), rtol=1e-14)
    np.testing.assert_allclose(g.trend_bias, gt.sum(axis=(0, 2)), rtol=1e-14)


def test_combined_gradient_flows_to_both_streams(rng):
    m = init(5, 3, 1, kernel=3)
    x = rng.normal(size=(2, 5, 1))
    out = forward(m, x)
    gc = rng.normal(size=(2, 3, 1))
    z = np.zeros_like(gc)
    a = backward(m, x, out, StreamGradients(z, z, gc))
    b = backward(m, x, out, StreamGradients(gc, gc))
    for k in M.PARAM_NAMES:
        assert np.array_equal(a.as_dict()[k], b.as_dict()[k])


def test_zero_loss_grads(rng):
    m = init(5, 3, 2, share_channels=False, kernel=3)
    x = rng.normal(size=(2, 5, 2))
    out = forward(m, x)
    z = np.zeros((2, 3, 2))
    g = backward(m, x, out, StreamGradients(z, z))
    assert all(np.all(v == 0) for v in g.as_dict().values())


def test_backward_recomputes_decomposition_when_missing(rng):
    m = init(5, 3, 1, kernel=3)
    x = rng.normal(size=(2, 5, 1))
    out = forward(m, x)
    bare = ForecastOutput(out.seasonal_pred, out.trend_pred)
    gs = rng.normal(size=(2, 3, 1))
    a = backward(m, x, out, StreamGradients(gs, gs))
    b = backward(m, x, bare, StreamGradients(gs, gs))
    assert np.array_equal(a.seasonal_weight, b.seasonal_weight)


def test_backward_shape_error(rng):
    m = init(5, 3, 1, kernel=3)
    x = rng.normal(size=(2, 5, 1))
    out = forward(m, x)
    with pytest.raises(InvalidArgumentError):
        backward(m, x, out, StreamGradients(np.zeros((2, 4, 1)), np.zeros((2, 4, 1))))


@pytest.mark.parametrize("shared", [True, False])
def test_checkpoint_round_trip_is_bit_exact(tmp_path, shared):
    m = init(9, 4, 3, share_channels=shared, seed=11, scheme="random", kernel=7)
    m.trend_bias[...] = np.random.default_rng(0).normal(size=m.trend_bias.shape) * 1e-300
    path = tmp_path / "ck.json"
    M.save_checkpoint(path, m, extra={"note": "x"})
    back, extra = M.load_checkpoint(path)
    assert extra == {"note": "x"}
    assert back.share_channels == shared and back.kernel == 7
    for k in M.PARAM_NAMES:
        a, b = m.parameters()[k], back.parameters()[k]
        assert a.shape == b.shape and a.tobytes() == b.tobytes()


def test_checkpoint_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"format": "other"}')
    with pytest.raises(InvalidArgumentError):
        M.load_checkpoint(p)
