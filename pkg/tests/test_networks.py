import numpy as np
import pytest

from agent_service.agent_a2c import actor_loss_grad, critic_loss_grad
from agent_service.networks import AdamState, MlpParams, adam_step, backward, forward, init_mlp, zero_mlp
from agent_service.policies import ActorHeadKind
from models.errors import ConfigError

H = 1e-5
N_DRAWS = 20


def _rel_err(g: np.ndarray, g_hat: np.ndarray) -> float:
    return float(np.max(np.abs(g - g_hat) / np.maximum(np.abs(g) + np.abs(g_hat), 1e-6)))


def _finite_difference(loss_fn, params: MlpParams):
    arrays = [a.copy() for a in params.arrays()]
    grads = []
    for k, arr in enumerate(arrays):
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + H
            up = loss_fn(MlpParams.from_arrays(arrays, params))
            arr[idx] = orig - H
            down = loss_fn(MlpParams.from_arrays(arrays, params))
            arr[idx] = orig
            g[idx] = (up - down) / (2 * H)
        grads.append(g)
    return grads


def _belief_input(rng, size=4):
    return rng.dirichlet(np.ones(size))


def test_forward_shapes_and_tanh_bound():
    rng = np.random.default_rng(0)
    critic = init_mlp([4, 8, 8, 1], rng, "tanh", output_scale=2.5, output_gain=50.0)
    for _ in range(10):
        v, _ = forward(critic, rng.normal(size=4) * 10)
        assert v.shape == (1,)
        assert abs(v[0]) <= 2.5


def test_forward_rejects_wrong_input():
    net = init_mlp([4, 2, 3], np.random.default_rng(0))
    with pytest.raises(ConfigError):
        forward(net, np.ones(5))


def test_mlp_params_validation():
    with pytest.raises(ConfigError):
        MlpParams([np.zeros((2, 3))], [np.zeros(2)])
    with pytest.raises(ConfigError):
        MlpParams([np.zeros((2, 3)), np.zeros((4, 1))], [np.zeros(3), np.zeros(1)])
    with pytest.raises(ConfigError):
        zero_mlp([2, 1], output_activation="sigmoid")


@pytest.mark.parametrize("draw", range(N_DRAWS))
def test_critic_gradient_matches_finite_difference(draw):
    rng = np.random.default_rng(100 + draw)
    # output_gain=1：输出不被压缩到 0 附近，tanh 的导数也被检查到
    critic = init_mlp([4, 2, 2, 1], rng, "tanh", output_scale=1.5, output_gain=1.0)
    critic = MlpParams.from_arrays([a + rng.normal(scale=0.1, size=a.shape) for a in critic.arrays()], critic)
    x = _belief_input(rng)
    target = float(rng.normal())

    _, analytic = critic_loss_grad(critic, x, target)
    numeric = _finite_difference(lambda p: critic_loss_grad(p, x, target)[0], critic)
    for g, g_hat in zip(analytic, numeric):
        assert _rel_err(g, g_hat) < 1e-4


@pytest.mark.parametrize("head", list(ActorHeadKind))
@pytest.mark.parametrize("draw", range(N_DRAWS))
def test_actor_gradient_matches_finite_difference(head, draw):
    rng = np.random.default_rng(500 + draw)
    actor = init_mlp([4, 2, 2, 3], rng, "linear", output_gain=1.0)
    actor = MlpParams.from_arrays([a + rng.normal(scale=0.1, size=a.shape) for a in actor.arrays()], actor)
    x = _belief_input(rng)
    a = int(rng.integers(3))
    delta = float(rng.normal())
    c = 0.05 if draw % 2 else 0.0

    _, analytic = actor_loss_grad(actor, head, x, a, delta, c)
    numeric = _finite_difference(lambda p: actor_loss_grad(p, head, x, a, delta, c)[0], actor)
    for g, g_hat in zip(analytic, numeric):
        assert _rel_err(g, g_hat) < 1e-4


def test_backward_matches_manual_single_layer():
    w = np.array([[1.0], [2.0]])
    net = MlpParams([w], [np.array([0.5])])
    out, cache = forward(net, np.array([3.0, -1.0]))
    assert out[0] == pytest.approx(1.5)
    gw, gb = backward(net, cache, np.array([2.0]))
    np.testing.assert_allclose(gw, [[6.0], [-2.0]])
    np.testing.assert_allclose(gb, [2.0])


def test_adam_first_step_is_lr_times_sign():
    rng = np.random.default_rng(1)
    net = init_mlp([4, 3, 2], rng)
    adam = AdamState.zeros_like(net)
    grads = [rng.normal(size=a.shape) for a in net.arrays()]
    lr = 1e-3
    new_net, new_adam = adam_step(adam, net, grads, lr)

    assert new_adam.step == 1
    for before, after, g in zip(net.arrays(), new_net.arrays(), grads):
        delta = after - before
        np.testing.assert_allclose(delta, -lr * np.sign(g), rtol=0, atol=lr * 1e-3)


def test_adam_does_not_mutate_inputs():
    rng = np.random.default_rng(2)
    net = init_mlp([3, 2, 1], rng)
    snapshot = [a.copy() for a in net.arrays()]
    adam = AdamState.zeros_like(net)
    grads = [np.ones_like(a) for a in net.arrays()]
    adam_step(adam, net, grads, 0.1)
    for a, b in zip(net.arrays(), snapshot):
        np.testing.assert_array_equal(a, b)
    assert adam.step == 0
    assert all(np.all(m == 0) for m in adam.m)


def test_adam_bias_correction_constant_gradient():
    # 常数梯度下修正后的 m̂/√v̂ 恒为 1，每步位移都是 lr
    net = zero_mlp([1, 1])
    adam = AdamState.zeros_like(net)
    grads = [np.array([[0.3]]), np.array([0.3])]
    for _ in range(5):
        prev = net.arrays()[0][0, 0]
        net, adam = adam_step(adam, net, grads, 0.01)
        assert prev - net.arrays()[0][0, 0] == pytest.approx(0.01, rel=1e-6)
    assert adam.step == 5


def test_adam_rejects_shape_mismatch():
    net = zero_mlp([2, 1])
    with pytest.raises(ConfigError):
        adam_step(AdamState.zeros_like(net), net, [np.zeros((1, 2)), np.zeros(1)], 0.1)
