import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loadcnn.errors import InvalidConfig, ShapeMismatch, TraceMismatch
from loadcnn.nn import (Network, NetworkConfig, backward, dumps_network, forward, init_network,
                        loads_network, mse_loss, predict)

from oracles import finite_difference_errors, forward_loops

SMALL = NetworkConfig(16, 3, 2, 3, 2)


def random_net(config, seed):
    rng = np.random.default_rng(seed)
    return Network(config=config, **{n: rng.normal(0, 0.5, s) for n, s in config.shapes().items()})


class TestConfig:
    def test_defaults(self):
        c = NetworkConfig()
        assert (c.input_len, c.kernel_size, c.n_filters, c.dense_size, c.horizon) == (672, 9, 16, 6, 144)

    @pytest.mark.parametrize("args", [(10, 11, 1, 1, 1), (10, 0, 1, 1, 1), (10, 3, 0, 1, 1),
                                      (10, 3, 1, 0, 1), (10, 3, 1, 1, 0), (10, 3.0, 1, 1, 1)])
    def test_invalid(self, args):
        with pytest.raises(InvalidConfig):
            NetworkConfig(*args)

    @settings(max_examples=20)
    @given(st.integers(1, 80).flatmap(lambda w: st.tuples(
        st.just(w), st.integers(1, w), st.integers(1, 6), st.integers(1, 6), st.integers(1, 9))))
    def test_parameter_count_closed_form(self, args):
        W, k, F, D, h = args
        c = NetworkConfig(W, k, F, D, h)
        L = W - k + 1
        assert init_network(c, 0).parameter_count == F * (k + 1) + D * (F * L + 1) + h * (D + 1)
        assert c.parameter_count == init_network(c, 0).flat().size


class TestInit:
    def test_deterministic_and_zero_bias(self):
        a, b = init_network(SMALL, 3), init_network(SMALL, 3)
        assert np.array_equal(a.flat(), b.flat())
        for bias in (a.conv_bias, a.fc1_bias, a.out_bias):
            assert np.all(bias == 0)

    def test_seed_changes_weights(self):
        assert not np.array_equal(init_network(SMALL, 1).flat(), init_network(SMALL, 2).flat())

    def test_glorot_std(self):
        c = NetworkConfig(W := 100, 1, 10, 1, 1)
        fc1 = init_network(c, 0).fc1_weights
        assert fc1.size == 1000
        fan_in, fan_out = 10 * W, 1
        theory = math.sqrt(6 / (fan_in + fan_out)) / math.sqrt(3)
        assert abs(fc1.std() / theory - 1) < 0.1


class TestForward:
    def test_zero_network(self, rng):
        out = predict(Network.zeros(SMALL), rng.normal(size=(4, 16)))
        assert out.shape == (4, 2) and np.all(out == 0)

    def test_hand_case(self):
        # k = W, F = 1, D = 1: a single conv feature, tanh, relu, affine
        c = NetworkConfig(3, 3, 1, 1, 1)
        net = Network(config=c, conv_weights=[[1.0, -1.0, 0.5]], conv_bias=[0.25],
                      fc1_weights=[[2.0]], fc1_bias=[0.1], out_weights=[[3.0]], out_bias=[-1.0])
        x = [1.0, 2.0, 4.0]
        conv = 1.0 - 2.0 + 2.0 + 0.25
        expected = 3.0 * max(2.0 * math.tanh(conv) + 0.1, 0.0) - 1.0
        assert predict(net, x)[0, 0] == pytest.approx(expected, abs=1e-15)
        net.fc1_bias = np.array([-5.0])
        assert predict(net, x)[0, 0] == -1.0

    def test_vs_loop_oracle(self, rng):
        c = NetworkConfig(20, 4, 3, 5, 3)
        net = random_net(c, 7)
        x = rng.normal(size=(6, 20))
        out = predict(net, x)
        for b in range(6):
            assert np.max(np.abs(out[b] - forward_loops(net, x[b]))) <= 1e-10

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            predict(init_network(SMALL, 0), np.zeros((2, 15)))

    def test_pure(self, rng):
        net, x = random_net(SMALL, 1), rng.normal(size=(3, 16))
        assert np.array_equal(predict(net, x), predict(net, x))


class TestLoss:
    def test_values(self):
        assert mse_loss([[1.0, 2.0]], [[1.0, 2.0]]) == 0
        assert mse_loss([[0.0]], [[2.0]]) == 4
        assert mse_loss([[1.0, 1.0]], [[0.0, 2.0]]) == 1

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            mse_loss([[1.0]], [[1.0, 2.0]])


class TestBackward:
    def test_perfect_prediction_zero_grad(self, rng):
        net = random_net(SMALL, 2)
        x = rng.normal(size=(4, 16))
        out, trace = forward(net, x)
        assert np.all(backward(net, trace, out).flat() == 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(100 + seed)
        net = random_net(SMALL, seed)
        x, y = rng.normal(size=(4, 16)), rng.normal(size=(4, 2))
        errors = finite_difference_errors(net, x, y)
        assert max(errors.values()) <= 1e-4, errors

    def test_conv_weight_hand_expansion(self):
        c = NetworkConfig(4, 2, 1, 1, 1)
        net = Network(config=c, conv_weights=[[0.3, -0.2]], conv_bias=[0.1],
                      fc1_weights=[[0.5, -0.4, 0.7]], fc1_bias=[0.2],
                      out_weights=[[1.5]], out_bias=[0.0])
        x = np.array([1.0, -2.0, 0.5, 3.0])
        y = 0.25
        out, trace = forward(net, x)
        g = backward(net, trace, [[y]])
        # upstream delta at each conv position, then sum of window * delta
        d_out = 2 * (out[0, 0] - y)
        d_hidden = d_out * 1.5 * (trace.fc1_pre[0, 0] > 0)
        expected = np.zeros(2)
        for p in range(3):
            pre = 0.3 * x[p] - 0.2 * x[p + 1] + 0.1
            delta = d_hidden * net.fc1_weights[0, p] * (1 - math.tanh(pre) ** 2)
            expected += delta * x[p:p + 2]
        np.testing.assert_allclose(g.conv_weights[0], expected, rtol=1e-13)

    def test_output_bias_gradient_homogeneous(self, rng):
        net = random_net(SMALL, 4)
        x = rng.normal(size=(3, 16))
        out, trace = forward(net, x)
        r = rng.normal(size=out.shape)
        g1 = backward(net, trace, out - r).out_bias
        g3 = backward(net, trace, out - 3 * r).out_bias
        np.testing.assert_allclose(g3, 3 * g1, rtol=1e-12)

    def test_trace_mismatch(self, rng):
        a, b = random_net(SMALL, 1), random_net(SMALL, 1)
        out, trace = forward(a, rng.normal(size=(1, 16)))
        with pytest.raises(TraceMismatch):
            backward(b, trace, out)


class TestSerialization:
    def test_round_trip(self):
        net = random_net(NetworkConfig(12, 3, 2, 2, 4), 9)
        text = dumps_network(net)
        assert text.splitlines()[0] == "12 3 2 2 4"
        back = loads_network(text)
        assert back.config == net.config
        assert np.array_equal(back.flat(), net.flat())

    def test_wrong_count(self):
        text = dumps_network(init_network(SMALL, 0))
        with pytest.raises(ShapeMismatch):
            loads_network(text + "1.0\n")
