"""Dense network forward/backward and RMSprop."""

import numpy as np
import pytest

from agentsynth.errors import DataError, DivergenceError, StaleCacheError
from agentsynth.neural import (
    DenseLayer,
    Head,
    Mlp,
    backward,
    forward,
    init_mlp,
    mlp_from_dict,
    mlp_to_dict,
    parameters,
    rmsprop_init,
    rmsprop_step,
    set_parameters,
    softmax,
)


def _random_net(rng, input_width=4, hidden=(5,), heads=(Head("linear", 2), Head("softmax", 3))):
    return init_mlp(input_width, hidden, heads, rng)


class TestForward:
    def test_zero_network_gives_zero_hiddens(self, rng):
        net = _random_net(rng, heads=(Head("linear", 2),))
        for layer in net.layers:
            layer.weights = np.zeros_like(layer.weights)
            layer.biases = np.zeros_like(layer.biases)
        y, cache = forward(net, np.ones(4))
        assert np.all(y == 0.0)
        assert np.all(np.tanh(cache.preacts[0]) == 0.0)

    def test_softmax_symmetry(self):
        np.testing.assert_allclose(softmax(np.zeros((1, 3))), np.full((1, 3), 1 / 3))

    def test_matches_straight_line_oracle(self, rng):
        # Oracle: re-evaluate the two-layer network with bare matrix algebra.
        net = _random_net(rng, input_width=6, hidden=(4,),
                          heads=(Head("linear", 1), Head("softmax", 3)))
        x = rng.normal(size=6)
        w0, b0 = net.layers[0].weights, net.layers[0].biases
        w1, b1 = net.layers[1].weights, net.layers[1].biases
        h = np.tanh(w0 @ x + b0)
        z = w1 @ h + b1
        expected = np.concatenate([z[:1], np.exp(z[1:]) / np.exp(z[1:]).sum()])
        y, _ = forward(net, x)
        np.testing.assert_allclose(y, expected, atol=1e-12)

    def test_softmax_blocks_sum_to_one(self, rng):
        net = _random_net(rng)
        y, _ = forward(net, rng.normal(size=(20, 4)) * 30)
        s = y[:, 2:].sum(axis=1)
        np.testing.assert_allclose(s, 1.0, atol=1e-9)
        assert np.all(y[:, 2:] > 0)

    def test_non_finite_input_raises(self, rng):
        net = _random_net(rng)
        with pytest.raises(DataError, match="non-finite"):
            forward(net, np.array([1.0, np.nan, 0.0, 0.0]))

    def test_deterministic(self, rng):
        net = _random_net(rng)
        x = rng.normal(size=(5, 4))
        y1, _ = forward(net, x)
        y2, _ = forward(net, x)
        np.testing.assert_array_equal(y1, y2)


class TestBackward:
    def test_zero_output_gradient(self, rng):
        net = _random_net(rng)
        _, cache = forward(net, rng.normal(size=(3, 4)))
        grads, dx = backward(net, cache, np.zeros((3, 5)))
        assert all(np.all(g == 0.0) for g in grads)
        assert np.all(dx == 0.0)

    def test_single_linear_neuron(self):
        # y = w x + b, loss = y: dL/dw = x, dL/db = 1
        net = Mlp([DenseLayer(np.array([[2.0]]), np.array([0.5]), "linear")],
                  (Head("linear", 1),))
        x = np.array([3.0])
        _, cache = forward(net, x)
        grads, dx = backward(net, cache, np.array([1.0]))
        assert grads[0].item() == 3.0
        assert grads[1].item() == 1.0
        assert dx.item() == 2.0

    def test_matches_finite_differences(self, rng):
        # Oracle: central differences of a scalar loss through the full net.
        net = _random_net(rng, input_width=3, hidden=(4, 3),
                          heads=(Head("linear", 2), Head("softmax", 3)))
        x = rng.normal(size=(2, 3))
        target = rng.normal(size=(2, 5))

        def loss_value(n):
            y, _ = forward(n, x)
            return 0.5 * np.sum((y - target) ** 2)

        y, cache = forward(net, x)
        grads, _ = backward(net, cache, y - target)
        params = parameters(net)
        h = 1e-5
        worst = 0.0
        for k, p in enumerate(params):
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = p[idx]
                p[idx] = orig + h
                up = loss_value(net)
                p[idx] = orig - h
                down = loss_value(net)
                p[idx] = orig
                fd = (up - down) / (2 * h)
                err = abs(grads[k][idx] - fd) / max(abs(grads[k][idx]) + abs(fd), 1e-6)
                worst = max(worst, err)
        assert worst < 1e-4

    def test_stale_cache_rejected(self, rng):
        net = _random_net(rng)
        _, cache = forward(net, rng.normal(size=(3, 4)))
        with pytest.raises(StaleCacheError):
            backward(net, cache, np.zeros((2, 5)))


class TestRmsprop:
    def test_zero_gradient_leaves_parameters(self):
        params = [np.array([1.0, -2.0])]
        state = rmsprop_init(params)
        new, _ = rmsprop_step(params, [np.zeros(2)], state)
        np.testing.assert_array_equal(new[0], params[0])

    def test_first_step_hand_value(self):
        # acc = 0.1, step = -0.001/sqrt(0.1 + 1e-8)
        params = [np.array([0.0])]
        state = rmsprop_init(params, learning_rate=0.001, rho=0.9, epsilon=1e-8)
        new, new_state = rmsprop_step(params, [np.array([1.0])], state)
        assert abs(new_state.accumulators[0].item() - 0.1) < 1e-15
        assert abs(new[0].item() - (-0.001 / np.sqrt(0.1 + 1e-8))) < 1e-12
        assert abs(new[0].item() - (-0.0031623)) < 1e-6

    def test_two_steps_decrease_quadratic(self):
        # loss(p) = 0.5 p^2 on a scalar; gradient is p
        p = [np.array([2.0])]
        state = rmsprop_init(p, learning_rate=0.05)
        losses = [0.5 * p[0].item() ** 2]
        for _ in range(2):
            p, state = rmsprop_step(p, [p[0].copy()], state)
            losses.append(0.5 * p[0].item() ** 2)
        assert losses[1] < losses[0]
        assert losses[2] < losses[1]

    def test_non_finite_gradient_names_block(self):
        params = [np.zeros(2), np.zeros(3)]
        state = rmsprop_init(params)
        bad = [np.zeros(2), np.array([0.0, np.inf, 0.0])]
        with pytest.raises(DivergenceError, match="block 1"):
            rmsprop_step(params, bad, state)


class TestCheckpoint:
    def test_roundtrip(self, rng):
        net = _random_net(rng)
        restored = mlp_from_dict(mlp_to_dict(net))
        x = rng.normal(size=(4, 4))
        y1, _ = forward(net, x)
        y2, _ = forward(restored, x)
        np.testing.assert_allclose(y1, y2, atol=1e-15)
        assert restored.heads == net.heads


class TestTrainingReproducibility:
    def test_fixed_seed_bitwise_identical(self):
        def run():
            rng = np.random.default_rng(99)
            net = _random_net(rng, heads=(Head("linear", 2),))
            params = parameters(net)
            state = rmsprop_init(params)
            x = rng.normal(size=(8, 4))
            t = rng.normal(size=(8, 2))
            for _ in range(25):
                set_parameters(net, params)
                y, cache = forward(net, x)
                grads, _ = backward(net, cache, (y - t) / len(x))
                params, state = rmsprop_step(params, grads, state)
            return params

        a, b = run(), run()
        for pa, pb in zip(a, b):
            np.testing.assert_array_equal(pa, pb)
