#!/usr/bin/env python

"""Tests for `cone_nn.activations`."""


import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from cone_nn import activations
from cone_nn.activations import ActivationKind, Tag
from cone_nn.errors import DomainError, ValidationError

CONE = ActivationKind(Tag.CONE)
PARABOLIC = ActivationKind(Tag.PARABOLIC_CONE)


def kinds_under_test():
    return activations.all_kinds() + [ActivationKind(Tag.PARAMETERIZED_CONE, 2.0),
                                      ActivationKind(Tag.PARAMETERIZED_CONE, 0.5),
                                      ActivationKind(Tag.LINEAR)]


class TestForward(unittest.TestCase):

    def test_table_values(self):
        self.assertEqual(activations.forward(CONE, 1.0), 1.0)
        self.assertEqual(activations.forward(CONE, 0.0), 0.0)
        self.assertEqual(activations.forward(CONE, 2.0), 0.0)
        self.assertEqual(activations.forward(PARABOLIC, 3.0), -3.0)
        self.assertEqual(activations.forward(ActivationKind(Tag.RELU), -5.0), 0.0)
        self.assertEqual(activations.forward(ActivationKind(Tag.SIGMOID), 0.0), 0.5)
        beta2 = ActivationKind(Tag.PARAMETERIZED_CONE, 2.0)
        self.assertEqual(activations.forward(beta2, 1.0), 1.0)
        self.assertEqual(activations.forward(beta2, 0.0), 0.0)

    def test_scalar_in_scalar_out(self):
        self.assertIsInstance(activations.forward(CONE, 0.5), float)
        self.assertEqual(activations.forward(CONE, np.zeros((2, 3))).shape, (2, 3))

    def test_non_finite_input(self):
        for kind in kinds_under_test():
            with self.assertRaises(DomainError):
                activations.forward(kind, np.nan)
            with self.assertRaises(DomainError):
                activations.derivative(kind, np.array([0.0, np.inf]))

    def test_large_inputs_stay_finite(self):
        z = np.array([-800.0, -50.0, 50.0, 800.0])
        for kind in kinds_under_test():
            self.assertTrue(np.isfinite(activations.forward(kind, z)).all(), kind.name)
            self.assertTrue(np.isfinite(activations.derivative(kind, z)).all(), kind.name)

    def test_cone_zero_set(self):
        z = np.arange(-50000, 50001) / 10000.0
        for kind in (CONE, PARABOLIC, ActivationKind(Tag.PARAMETERIZED_CONE, 3.0)):
            positive = activations.forward(kind, z) > 0.0
            assert_array_equal(positive, (z > 0.0) & (z < 2.0), err_msg=kind.name)

    def test_range_containment(self):
        z = np.linspace(-10.0, 10.0, 20001)
        for kind in kinds_under_test():
            lo, hi = activations.range_of(kind)
            g = activations.forward(kind, z)
            # Mish and Swish minima are rounded in the table
            self.assertGreaterEqual(g.min(), lo - 1e-2, kind.name)
            self.assertLessEqual(g.max(), hi + 1e-12, kind.name)

    def test_selu_constants(self):
        selu = ActivationKind(Tag.SELU)
        assert_allclose(activations.forward(selu, -50.0), -activations.SELU_LAMBDA * activations.SELU_ALPHA)
        self.assertEqual(activations.forward(selu, 2.0), 2.0 * activations.SELU_LAMBDA)


class TestDerivative(unittest.TestCase):

    def test_table_values(self):
        self.assertEqual(activations.derivative(PARABOLIC, 0.0), 2.0)
        self.assertEqual(activations.derivative(CONE, 0.5), 1.0)
        self.assertEqual(activations.derivative(CONE, 1.5), -1.0)
        assert_allclose(activations.derivative(ActivationKind(Tag.SWISH), 0.0), 0.5)

    def test_kink_subgradients(self):
        self.assertEqual(activations.derivative(CONE, 1.0), 0.0)
        self.assertEqual(activations.derivative(ActivationKind(Tag.RELU), 0.0), 0.0)
        self.assertEqual(activations.derivative(ActivationKind(Tag.LEAKY_RELU), 0.0), 0.01)
        for beta in (0.5, 1.0, 2.0):
            self.assertEqual(activations.derivative(ActivationKind(Tag.PARAMETERIZED_CONE, beta), 1.0), 0.0)

    def test_against_central_difference(self):
        rng = np.random.default_rng(0)
        h = 1e-5
        for kind in kinds_under_test():
            z = rng.uniform(-4.0, 4.0, size=100)
            for kink in activations.kinks(kind):
                z = z[np.abs(z - kink) > 1e-3]
            if kind.tag is Tag.PARAMETERIZED_CONE and kind.cone_beta < 1.0:
                # the derivative blows up next to the cusp
                z = z[np.abs(z - 1.0) > 0.1]
            numeric = (activations.forward(kind, z + h) - activations.forward(kind, z - h)) / (2 * h)
            exact = activations.derivative(kind, z)
            tol = 1e-6 * np.maximum(1.0, np.abs(exact))
            self.assertTrue((np.abs(exact - numeric) <= tol).all(), kind.name)


class TestZeros(unittest.TestCase):

    def test_positive_interval(self):
        self.assertEqual(activations.positive_interval(CONE), (0.0, 2.0))
        self.assertEqual(activations.positive_interval(ActivationKind(Tag.PARAMETERIZED_CONE, 3.0)), (0.0, 2.0))
        self.assertIsNone(activations.positive_interval(ActivationKind(Tag.RELU)))

    def test_zeros(self):
        self.assertEqual(activations.zeros(PARABOLIC), (0.0, 2.0))
        self.assertEqual(activations.zeros(ActivationKind(Tag.LEAKY_RELU)), (0.0,))
        self.assertEqual(activations.zeros(ActivationKind(Tag.SOFTPLUS)), ())

    def test_zeros_are_zeros(self):
        for kind in kinds_under_test():
            for z in activations.zeros(kind):
                self.assertEqual(activations.forward(kind, z), 0.0, kind.name)


class TestActivationKind(unittest.TestCase):

    def test_parse(self):
        self.assertEqual(ActivationKind.parse('cone'), CONE)
        self.assertEqual(ActivationKind.parse('Parabolic_Cone'), PARABOLIC)
        self.assertEqual(ActivationKind.parse('parameterized-cone:2'), ActivationKind(Tag.PARAMETERIZED_CONE, 2.0))

    def test_name_round_trip(self):
        for kind in kinds_under_test():
            self.assertEqual(ActivationKind.parse(kind.name), kind)

    def test_unknown_name_lists_valid_names(self):
        with self.assertRaises(ValidationError) as ctx:
            ActivationKind.parse('banana')
        for name in ('cone', 'parabolic-cone', 'leaky-relu', 'elu'):
            self.assertIn(name, str(ctx.exception))

    def test_invalid_parameter(self):
        with self.assertRaises(ValidationError):
            ActivationKind.parse('relu:2')
        with self.assertRaises(ValidationError):
            ActivationKind.parse('parameterized-cone:x')
        with self.assertRaises(ValidationError):
            ActivationKind(Tag.PARAMETERIZED_CONE, 0.0)

    def test_fourteen_compared_kinds(self):
        self.assertEqual(len(activations.all_kinds()), 14)
        self.assertNotIn(ActivationKind(Tag.LINEAR), activations.all_kinds())


if __name__ == '__main__':
    unittest.main()
