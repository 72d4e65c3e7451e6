# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Accelerometer and skin-temperature features.

Both channels are used unfiltered. Standard deviations use the sample (n - 1)
convention; a single-sample window has a standard deviation of 0.
"""

import numpy as np

from .base import EmptySignal

AXES = ('X', 'Y', 'Z', 'Magnitude')
ACC_FEATURES = tuple('ACC_%s_%s' % (axis, stat) for axis in AXES for stat in ('Mean', 'Std'))
TEMP_FEATURES = ('TEMP_Mean', 'TEMP_Std')


def _std(values):
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def acc_features(samples):
    """Per-axis and magnitude mean / std of an (n, 3) acceleration array in g.

    Raises:
        EmptySignal: no samples
    """
    samples = np.asarray(samples, dtype=float).reshape(-1, 3)
    if not len(samples):
        raise EmptySignal("No accelerometer samples")
    magnitude = np.linalg.norm(samples, axis=1)
    columns = [samples[:, 0], samples[:, 1], samples[:, 2], magnitude]
    features = {}
    for axis, column in zip(AXES, columns):
        features['ACC_%s_Mean' % axis] = float(np.mean(column))
        features['ACC_%s_Std' % axis] = _std(column)
    return features


def temp_features(samples):
    """Mean and std of skin temperature in degrees Celsius.

    Raises:
        EmptySignal: no samples
    """
    samples = np.asarray(samples, dtype=float).reshape(-1)
    if not len(samples):
        raise EmptySignal("No temperature samples")
    return {'TEMP_Mean': float(np.mean(samples)), 'TEMP_Std': _std(samples)}
