#!/usr/bin/env python

"""Tests for `cone_nn.network`."""


import os
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from cone_nn import activations, data, experiments, network
from cone_nn.activations import ActivationKind, Tag
from cone_nn.errors import DimensionError, FormatError, ValidationError
from cone_nn.network import DenseLayer, Network
from cone_nn.tensor import Matrix

LINEAR = ActivationKind(Tag.LINEAR)


def random_network(rng, input_dim=None, class_count=None):
    depth = int(rng.integers(1, 4))
    widths = [int(input_dim or rng.integers(1, 6))] + [int(w) for w in rng.integers(1, 6, size=depth - 1)]
    widths.append(int(class_count or rng.integers(1, 6)))
    tags = list(Tag)
    layers = []
    for fan_in, fan_out in zip(widths, widths[1:]):
        tag = tags[int(rng.integers(len(tags)))]
        beta = float(rng.uniform(0.5, 3.0)) if tag is Tag.PARAMETERIZED_CONE else 1.0
        layers.append(DenseLayer(Matrix(rng.normal(size=(fan_out, fan_in))), Matrix(rng.normal(size=(fan_out, 1))),
                                 ActivationKind(tag, beta)))
    return Network(layers)


def numeric_grads(net, batch, onehot, h=1e-5):
    params = net.parameters()
    grads = []
    for index, p in enumerate(params):
        grad = np.zeros(p.shape)
        for i, j in np.ndindex(*p.shape):
            shifted = []
            for step in (h, -h):
                values = p.values.copy()
                values[i, j] += step
                probe = list(params)
                probe[index] = Matrix(values)
                shifted.append(net.with_parameters(probe).loss(batch, onehot))
            grad[i, j] = (shifted[0] - shifted[1]) / (2 * h)
        grads.append(grad)
    return grads


def near_kink(net, batch, margin=1e-3):
    trace = net.forward(batch)
    for layer, z in zip(net.layers, trace.pre_activations):
        for kink in activations.kinks(layer.kind):
            if (np.abs(z.values - kink) < margin).any():
                return True
    return False


class TestForward(unittest.TestCase):

    def test_single_cone_neuron(self):
        net = Network([DenseLayer(Matrix([[1.0, 1.0]]), Matrix([[0.0]]), ActivationKind(Tag.CONE))])
        trace = net.forward(Matrix.column([0.5, 0.5]))
        self.assertEqual(trace.activations[0].values[0, 0], 1.0)

    def test_zero_weights_uniform(self):
        net = Network([DenseLayer(Matrix.zeros(4, 3), Matrix.zeros(4, 1), LINEAR)])
        probabilities = net.forward(Matrix(np.random.default_rng(0).normal(size=(3, 7)))).probabilities
        assert_allclose(probabilities.values, 0.25)

    def test_matches_hand_rolled_chain(self):
        rng = np.random.default_rng(1)
        net = Network.initialize(3, [(4, ActivationKind(Tag.TANH))], 2, seed=rng)
        x = rng.normal(size=(3, 5))
        first, second = net.layers
        hidden = np.tanh(first.weights.values @ x + first.bias.values)
        logits = second.weights.values @ hidden + second.bias.values
        expected = np.exp(logits) / np.exp(logits).sum(axis=0)
        assert_allclose(net.forward(Matrix(x)).probabilities.values, expected, rtol=1e-12, atol=1e-15)

    def test_batch_dimension_mismatch(self):
        net = Network.initialize(3, [(2, ActivationKind(Tag.CONE))], 2)
        with self.assertRaises(DimensionError):
            net.forward(Matrix(np.ones((2, 4))))

    def test_layers_must_chain(self):
        with self.assertRaises(DimensionError):
            Network([DenseLayer(Matrix.zeros(3, 2), Matrix.zeros(3, 1), LINEAR),
                      DenseLayer(Matrix.zeros(2, 2), Matrix.zeros(2, 1), LINEAR)])

    def test_softmax_stable(self):
        logits = np.array([[1e3, -1e3, 0.0], [-1e3, 1e3, 0.0], [0.0, 0.0, 1e3]])
        p = network.softmax(logits)
        self.assertTrue(np.isfinite(p).all())
        assert_allclose(p.sum(axis=0), 1.0, atol=1e-12)

    def test_loss_finite_for_large_logits(self):
        net = Network([DenseLayer(Matrix.identity(3), Matrix.zeros(3, 1), LINEAR)])
        batch = Matrix(np.array([[1e3, -1e3], [-1e3, 1e3], [0.0, 5e2]]))
        loss = net.loss(batch, network.one_hot([1, 0], 3))
        self.assertTrue(np.isfinite(loss))
        assert_allclose(loss, 2e3, rtol=1e-12)


class TestLoss(unittest.TestCase):

    def test_uniform_logits(self):
        net = Network([DenseLayer(Matrix.zeros(10, 2), Matrix.zeros(10, 1), LINEAR)])
        loss = net.loss(Matrix.column([0.3, -0.2]), network.one_hot([4], 10))
        assert_allclose(loss, np.log(10.0), rtol=1e-12)

    def test_perfect_prediction(self):
        net = Network([DenseLayer(Matrix.identity(2) * 50.0, Matrix.zeros(2, 1), LINEAR)])
        loss = net.loss(Matrix([[1.0, 0.0], [0.0, 1.0]]), network.one_hot([0, 1], 2))
        self.assertLessEqual(loss, 1e-6)

    def test_labels_must_be_one_hot(self):
        net = Network.initialize(2, [(3, ActivationKind(Tag.CONE))], 2)
        batch = Matrix(np.ones((2, 2)))
        with self.assertRaises(ValidationError):
            net.loss_and_grads(batch, Matrix([[0.5, 1.0], [0.5, 0.0]]))
        with self.assertRaises(ValidationError):
            net.loss_and_grads(batch, Matrix([[1.0, 1.0], [1.0, 0.0]]))

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(2024)
        labels = [0, 1, 1, 0]
        onehot = network.one_hot(labels, 2)
        for kind in activations.all_kinds():
            checked = 0
            while checked < 20:
                net = Network.initialize(2, [(3, kind)], 2, seed=rng)
                # move the biases off their initial values to exercise every region of the activation
                params = net.parameters()
                params[1] = Matrix(rng.normal(size=(3, 1)))
                params[3] = Matrix(rng.normal(size=(2, 1)))
                net = net.with_parameters(params)
                batch = Matrix(rng.normal(size=(2, 4)))
                if near_kink(net, batch):
                    continue
                _, grads = net.loss_and_grads(batch, onehot)
                for exact, numeric in zip(grads, numeric_grads(net, batch, onehot)):
                    assert_allclose(exact.values, numeric, rtol=1e-4, atol=1e-8, err_msg=kind.name)
                checked += 1


class TestPrediction(unittest.TestCase):

    def test_argmax(self):
        net = Network([DenseLayer(Matrix.identity(3), Matrix.zeros(3, 1), LINEAR)])
        logits = Matrix.column(np.log([0.1, 0.7, 0.2]))
        assert_array_equal(net.predict_classes(logits), [1])

    def test_tie_goes_to_lowest_index(self):
        net = Network([DenseLayer(Matrix.identity(2), Matrix.zeros(2, 1), LINEAR)])
        assert_array_equal(net.predict_classes(Matrix.column([0.0, 0.0])), [0])

    def test_matches_forward_argmax(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            net = random_network(rng, input_dim=3)
            batch = Matrix(rng.normal(size=(3, 8)))
            expected = np.argmax(net.forward(batch).probabilities.values, axis=0)
            assert_array_equal(net.predict_classes(batch), expected)

    def test_analytic_xor(self):
        net = experiments.analytic_xor_network()
        xor = data.make_xor()
        trace = net.forward(xor.features)
        assert_array_equal(trace.activations[0].values, [[0.0, 1.0, 1.0, 0.0]])
        assert_array_equal(net.predict_classes(xor.features), xor.labels)
        self.assertEqual(net.accuracy(xor.features, xor.labels), 1.0)


class TestInitialize(unittest.TestCase):

    def test_shapes_and_head(self):
        net = Network.initialize(5, [(4, ActivationKind(Tag.CONE)), (3, ActivationKind(Tag.RELU))], 2, seed=0)
        self.assertEqual([(layer.in_dim, layer.out_dim) for layer in net.layers], [(5, 4), (4, 3), (3, 2)])
        self.assertEqual(net.layers[-1].kind, LINEAR)
        assert_array_equal(net.layers[0].bias.values, 1.0)
        assert_array_equal(net.layers[1].bias.values, 0.0)

    def test_no_cone_bias(self):
        net = Network.initialize(2, [(4, ActivationKind(Tag.CONE))], 2, seed=0, cone_bias=False)
        assert_array_equal(net.layers[0].bias.values, 0.0)

    def test_seeded(self):
        hidden = [(4, ActivationKind(Tag.PARABOLIC_CONE))]
        self.assertEqual(Network.initialize(3, hidden, 2, seed=7), Network.initialize(3, hidden, 2, seed=7))
        self.assertNotEqual(Network.initialize(3, hidden, 2, seed=7), Network.initialize(3, hidden, 2, seed=8))

    def test_center_cone_peaks(self):
        hidden = [(4, ActivationKind(Tag.CONE)), (3, ActivationKind(Tag.RELU)),
                  (2, ActivationKind(Tag.PARABOLIC_CONE))]
        net = Network.initialize(3, hidden, 2, seed=1)
        batch = Matrix(np.random.default_rng(2).normal(2.0, 1.0, size=(3, 50)))
        centered = net.center_cone_peaks(batch)
        self.assertEqual([layer.weights for layer in centered.layers], [layer.weights for layer in net.layers])
        self.assertEqual(centered.layers[1].bias, net.layers[1].bias)
        trace = centered.forward(batch)
        assert_allclose(trace.pre_activations[0].values.mean(axis=1), 1.0)
        assert_allclose(trace.pre_activations[2].values.mean(axis=1), 1.0)

    def test_centered_inputs_keep_unit_bias(self):
        net = Network.initialize(2, [(3, ActivationKind(Tag.CONE))], 2, seed=0)
        centered = net.center_cone_peaks(Matrix([[-1.0, 1.0], [2.0, -2.0]]))
        self.assertEqual(centered, net)

    def test_xor_points_straddle_the_peak(self):
        xor = data.make_xor()
        points = [tuple(p) for p in xor.features.values.T]
        for seed in range(5):
            net = Network.initialize(2, [(1, ActivationKind(Tag.CONE))], 2, seed=seed)
            net = net.center_cone_peaks(xor.features)
            z = dict(zip(points, net.forward(xor.features).pre_activations[0].values[0]))
            self.assertLess((z[0.0, 0.0] - 1.0) * (z[1.0, 1.0] - 1.0), 0.0)
            assert_allclose(z[0.0, 0.0] + z[1.0, 1.0], 2.0)
            assert_allclose(z[0.0, 1.0] + z[1.0, 0.0], 2.0)

    def test_glorot_limit(self):
        net = Network.initialize(30, [(20, ActivationKind(Tag.TANH))], 10, seed=0)
        self.assertLessEqual(np.abs(net.layers[0].weights.values).max(), np.sqrt(6.0 / 50.0))


class TestPersistence(unittest.TestCase):

    def test_round_trip(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            net = random_network(rng)
            restored = Network.from_bytes(net.to_bytes())
            self.assertEqual(restored, net)
            for a, b in zip(restored.parameters(), net.parameters()):
                self.assertEqual(a.values.tobytes(), b.values.tobytes())

    def test_save_load(self):
        net = Network.initialize(2, [(2, ActivationKind(Tag.PARAMETERIZED_CONE, 2.5))], 3, seed=3)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'model.cone')
            network.save(net, path)
            self.assertEqual(network.load(path), net)

    def test_header_layout(self):
        stream = experiments.analytic_xor_network().to_bytes()
        self.assertEqual(stream[:4], b'CONE')
        self.assertEqual(stream[4:8], (1).to_bytes(4, 'little'))
        self.assertEqual(stream[8:12], (2).to_bytes(4, 'little'))
        self.assertEqual(stream[20], int(Tag.CONE))

    def test_truncated(self):
        stream = experiments.analytic_xor_network().to_bytes()
        for size in range(len(stream)):
            with self.assertRaises(FormatError):
                Network.from_bytes(stream[:size])

    def test_bad_tag_lists_valid_tags(self):
        stream = bytearray(experiments.analytic_xor_network().to_bytes())
        stream[20] = 99
        with self.assertRaises(FormatError) as ctx:
            Network.from_bytes(bytes(stream))
        self.assertEqual(ctx.exception.offset, 20)
        self.assertIn('0=cone', str(ctx.exception))
        self.assertIn('13=elu', str(ctx.exception))

    def test_bad_magic_version_and_trailing_bytes(self):
        stream = experiments.analytic_xor_network().to_bytes()
        for corrupted in (b'ENOC' + stream[4:], stream[:4] + (2).to_bytes(4, 'little') + stream[8:],
                          stream + b'\x00'):
            with self.assertRaises(FormatError):
                Network.from_bytes(corrupted)

    def test_non_finite_parameters(self):
        stream = bytearray(experiments.analytic_xor_network().to_bytes())
        stream[29:37] = np.array([np.nan]).astype('<f8').tobytes()
        with self.assertRaises(FormatError):
            Network.from_bytes(bytes(stream))

    def test_random_corruption_never_crashes(self):
        rng = np.random.default_rng(10)
        stream = random_network(rng, input_dim=3, class_count=2).to_bytes()
        for _ in range(300):
            corrupted = bytearray(stream)
            for position in rng.integers(len(stream), size=int(rng.integers(1, 4))):
                corrupted[position] = int(rng.integers(256))
            try:
                Network.from_bytes(bytes(corrupted))
            except FormatError:
                pass


if __name__ == '__main__':
    unittest.main()
