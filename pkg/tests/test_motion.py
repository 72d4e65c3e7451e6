# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.

import unittest

import numpy as np

from anxietysense import base, motion


class AccFeaturesTestCase(unittest.TestCase):

    def test_values(self):
        samples = np.array([[0.0, 0.0, 1.0], [0.6, 0.0, 0.8], [0.0, 0.6, 0.8]])
        features = motion.acc_features(samples)
        self.assertEqual(set(motion.ACC_FEATURES), set(features))
        self.assertAlmostEqual(0.2, features['ACC_X_Mean'])
        self.assertAlmostEqual(np.std([0.0, 0.6, 0.0], ddof=1), features['ACC_X_Std'])
        self.assertAlmostEqual(1.0, features['ACC_Magnitude_Mean'])
        self.assertAlmostEqual(0.0, features['ACC_Magnitude_Std'])

    def test_single_sample(self):
        features = motion.acc_features([[0.0, 0.0, 1.0]])
        self.assertEqual(0.0, features['ACC_Z_Std'])
        self.assertEqual(1.0, features['ACC_Magnitude_Mean'])

    def test_empty(self):
        self.assertRaises(base.EmptySignal, motion.acc_features, np.zeros((0, 3)))


class TempFeaturesTestCase(unittest.TestCase):

    def test_values(self):
        features = motion.temp_features([33.0, 33.5, 34.0])
        self.assertEqual({'TEMP_Mean': 33.5, 'TEMP_Std': 0.5}, features)

    def test_single_and_empty(self):
        self.assertEqual({'TEMP_Mean': 33.0, 'TEMP_Std': 0.0}, motion.temp_features([33.0]))
        self.assertRaises(base.EmptySignal, motion.temp_features, [])


if __name__ == '__main__':  # pragma: no cover
    unittest.main()
