import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import conv1d_oracle, dense_oracle, maxpool1d_oracle
from singmos.errors import DimensionError
from singmos.nn import Conv1d, Dense, Dropout, Gate, LayerParams, MaxPool1d, ReLU, softmax


def conv(w, b):
    return Conv1d(LayerParams.create(np.asarray(w, float), np.asarray(b, float)))


def dense(w, b):
    return Dense(LayerParams.create(np.asarray(w, float), np.asarray(b, float)))


class TestConv1d:
    def test_identity_kernel(self):
        layer = conv([[[1.0]]], [0.0])
        out = layer.forward(np.array([[[5.0, -2.0, 3.0]]]))
        np.testing.assert_array_equal(out, [[[5.0, -2.0, 3.0]]])

    def test_kernel3_sum(self):
        layer = conv([[[1.0, 1.0, 1.0]]], [0.0])
        out = layer.forward(np.array([[[1.0, 2.0, 3.0, 4.0]]]))
        np.testing.assert_allclose(out, [[[6.0, 9.0]]])

    def test_zero_weights_zero_output(self):
        layer = conv(np.zeros((2, 3, 3)), np.zeros(2))
        out = layer.forward(np.random.default_rng(0).normal(size=(2, 3, 8)))
        np.testing.assert_array_equal(out, np.zeros((2, 2, 6)))

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(42)
        w = rng.normal(size=(4, 3, 3))
        b = rng.normal(size=4)
        x = rng.normal(size=(2, 3, 9))
        got = conv(w, b).forward(x)
        np.testing.assert_allclose(got, conv1d_oracle(x, w, b), rtol=1e-12, atol=1e-12)

    def test_channel_mismatch_names_axis(self):
        layer = conv(np.zeros((2, 3, 3)), np.zeros(2))
        with pytest.raises(DimensionError, match="channel axis"):
            layer.forward(np.zeros((1, 2, 8)))

    def test_input_shorter_than_kernel(self):
        layer = conv(np.zeros((1, 1, 3)), np.zeros(1))
        with pytest.raises(DimensionError, match="length axis"):
            layer.forward(np.zeros((1, 1, 2)))

    def test_backward_shapes_and_accumulation(self):
        rng = np.random.default_rng(1)
        layer = conv(rng.normal(size=(2, 2, 3)), rng.normal(size=2))
        x = rng.normal(size=(3, 2, 7))
        out = layer.forward(x)
        dx = layer.backward(np.ones_like(out))
        assert dx.shape == x.shape
        assert layer.params.weights.grad.shape == (2, 2, 3)
        assert np.all(np.isfinite(dx))


class TestMaxPool1d:
    def test_window2_stride2(self):
        out = MaxPool1d(2, 2).forward(np.array([[[1.0, 3.0, 2.0, 5.0]]]))
        np.testing.assert_array_equal(out, [[[3.0, 5.0]]])

    def test_constant_preserved(self):
        out = MaxPool1d(2, 2).forward(np.full((1, 1, 4), 7.5))
        np.testing.assert_array_equal(out, [[[7.5, 7.5]]])

    def test_window1_identity(self):
        out = MaxPool1d(1, 1).forward(np.array([[[7.0]]]))
        np.testing.assert_array_equal(out, [[[7.0]]])

    def test_window_longer_than_input(self):
        with pytest.raises(DimensionError, match="length axis"):
            MaxPool1d(4, 2).forward(np.zeros((1, 1, 3)))

    def test_matches_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(2, 3, 11))
        for window, stride in [(2, 2), (3, 1), (2, 3), (4, 4)]:
            got = MaxPool1d(window, stride).forward(x)
            np.testing.assert_array_equal(got, maxpool1d_oracle(x, window, stride))

    def test_backward_routes_to_first_argmax_on_ties(self):
        layer = MaxPool1d(2, 2)
        layer.forward(np.array([[[2.0, 2.0]]]))
        dx = layer.backward(np.array([[[1.0]]]))
        np.testing.assert_array_equal(dx, [[[1.0, 0.0]]])

    def test_backward_overlapping_windows_accumulates(self):
        layer = MaxPool1d(3, 1)
        out = layer.forward(np.array([[[0.0, 5.0, 0.0, 0.0]]]))
        np.testing.assert_array_equal(out, [[[5.0, 5.0]]])
        dx = layer.backward(np.array([[[1.0, 1.0]]]))
        np.testing.assert_array_equal(dx, [[[0.0, 2.0, 0.0, 0.0]]])


class TestDense:
    def test_identity_map(self):
        layer = dense(np.eye(2), np.zeros(2))
        np.testing.assert_array_equal(layer.forward(np.array([[4.0, -1.0]])), [[4.0, -1.0]])

    def test_matrix_vector(self):
        layer = dense([[1.0, 2.0], [3.0, 4.0]], [1.0, 1.0])
        np.testing.assert_allclose(layer.forward(np.array([[1.0, 1.0]])), [[4.0, 8.0]])

    def test_bias_only(self):
        layer = dense(np.zeros((1, 3)), [5.0])
        np.testing.assert_array_equal(layer.forward(np.array([[9.0, -2.0, 0.5]])), [[5.0]])

    def test_matches_oracle(self):
        rng = np.random.default_rng(3)
        w = rng.normal(size=(5, 4))
        b = rng.normal(size=5)
        x = rng.normal(size=(3, 4))
        np.testing.assert_allclose(dense(w, b).forward(x), dense_oracle(x, w, b), rtol=1e-12)

    def test_feature_mismatch(self):
        layer = dense(np.zeros((2, 4)), np.zeros(2))
        with pytest.raises(DimensionError, match="input axis"):
            layer.forward(np.zeros((1, 3)))


class TestReLU:
    def test_definition(self):
        out = ReLU().forward(np.array([-1.0, 0.0, 2.0]))
        np.testing.assert_array_equal(out, [0.0, 0.0, 2.0])

    def test_all_negative_is_zero(self):
        out = ReLU().forward(np.array([-3.0, -0.1]))
        np.testing.assert_array_equal(out, [0.0, 0.0])

    def test_all_positive_unchanged(self):
        x = np.array([0.5, 3.0])
        np.testing.assert_array_equal(ReLU().forward(x), x)

    def test_gradient_zero_at_zero(self):
        layer = ReLU()
        layer.forward(np.array([0.0, 1.0]))
        np.testing.assert_array_equal(layer.backward(np.array([1.0, 1.0])), [0.0, 1.0])


class TestGate:
    def test_zero_maps_to_zero(self):
        np.testing.assert_array_equal(Gate().forward(np.array([0.0])), [0.0])

    def test_saturation_limit(self):
        out = Gate().forward(np.array([1000.0]))
        np.testing.assert_allclose(out, [1000.0], rtol=1e-12)

    def test_sigmoid_of_one(self):
        expected = 1.0 / (1.0 + np.exp(-1.0))
        np.testing.assert_allclose(Gate().forward(np.array([1.0])), [expected], rtol=1e-12)

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=30))
    def test_sign_preserved_and_magnitude_bounded(self, values):
        x = np.array(values, dtype=float)
        g = Gate().forward(x)
        assert np.all((np.sign(g) == np.sign(x)) | (g == 0.0))
        assert np.all(np.abs(g) <= np.abs(x) + 1e-15)


class TestSoftmax:
    def test_constant_input_is_uniform(self):
        np.testing.assert_allclose(softmax(np.array([3.3, 3.3, 3.3])), np.full(3, 1 / 3), rtol=1e-15)

    def test_closed_form(self):
        out = softmax(np.array([0.0, np.log(3.0)]))
        np.testing.assert_allclose(out, [0.25, 0.75], rtol=1e-12)

    def test_single_element(self):
        np.testing.assert_array_equal(softmax(np.array([17.0])), [1.0])

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=20), st.floats(-100, 100))
    def test_sums_to_one_and_shift_invariant(self, values, shift):
        x = np.array(values, dtype=float)
        y = softmax(x)
        assert abs(y.sum() - 1.0) < 1e-12
        np.testing.assert_allclose(softmax(x + shift), y, atol=1e-12)


class TestDropout:
    def test_rate_zero_identity(self):
        x = np.random.default_rng(0).normal(size=(4, 5))
        out = Dropout(0.0).forward(x, training=True, rng=np.random.default_rng(1))
        np.testing.assert_array_equal(out, x)

    def test_eval_mode_passthrough(self):
        x = np.random.default_rng(0).normal(size=(4, 5))
        out = Dropout(0.3).forward(x, training=False, rng=np.random.default_rng(1))
        np.testing.assert_array_equal(out, x)

    def test_fixed_seed_reproducible(self):
        x = np.random.default_rng(0).normal(size=(10, 10))
        layer = Dropout(0.5)
        a = layer.forward(x, training=True, rng=np.random.default_rng(99))
        b = layer.forward(x, training=True, rng=np.random.default_rng(99))
        np.testing.assert_array_equal(a, b)

    def test_drop_fraction_and_mean_preservation(self):
        rate = 0.3
        x = np.ones(200_000)
        out = Dropout(rate).forward(x, training=True, rng=np.random.default_rng(5))
        dropped = np.mean(out == 0.0)
        assert abs(dropped - rate) < 0.01
        assert abs(out.mean() - 1.0) < 0.02  # inverted scaling keeps the expectation
