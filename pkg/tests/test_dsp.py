# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.

import unittest

import numpy as np
from scipy import signal

from anxietysense import base, dsp


def analog_lowpass_gain(f, cutoff, rate, order):
    """|H| of a pre-warped bilinear Butterworth lowpass."""
    ratio = np.tan(np.pi * f / rate) / np.tan(np.pi * cutoff / rate)
    return 1.0 / np.sqrt(1.0 + ratio ** (2 * order))


class FilterSpecTestCase(unittest.TestCase):

    def test_realizable(self):
        self.assertTrue(dsp.FilterSpec.bandpass(0.5, 8.0, 64.0).realizable)
        self.assertFalse(dsp.FilterSpec.bandpass(0.5, 40.0, 64.0).realizable)
        self.assertFalse(dsp.FilterSpec.bandpass(8.0, 0.5, 64.0).realizable)
        self.assertFalse(dsp.FilterSpec.lowpass(3.0, 4.0).realizable)
        self.assertRaises(base.InvalidSpec, dsp.FilterSpec.lowpass(3.0, 4.0).sos)

    def test_lowpass_response(self):
        spec = dsp.FilterSpec.lowpass(3.0, 64.0)
        freqs = np.array([0.5, 1.0, 2.0, 3.0, 5.0])
        _, h = signal.sosfreqz(spec.sos(), worN=freqs, fs=64.0)
        for f, gain in zip(freqs, np.abs(h)):
            self.assertAlmostEqual(analog_lowpass_gain(f, 3.0, 64.0, 4), gain, delta=0.05)

    def test_ppg_band(self):
        spec = dsp.FilterSpec.bandpass(0.5, 8.0, 64.0)
        _, h = signal.sosfreqz(spec.sos(), worN=np.array([2.0, 0.05, 20.0]), fs=64.0)
        gain = np.abs(h)
        self.assertAlmostEqual(1.0, gain[0], delta=0.05)
        self.assertLess(20 * np.log10(gain[1]), -20)
        self.assertLess(20 * np.log10(gain[2]), -20)


class ButterworthFilterTestCase(unittest.TestCase):

    def test_passband_and_stopband(self):
        rate = 64.0
        t = np.arange(int(60 * rate)) / rate
        spec = dsp.FilterSpec.bandpass(0.5, 8.0, rate)
        middle = slice(len(t) // 4, 3 * len(t) // 4)

        passed = dsp.butterworth_filter(np.sin(2 * np.pi * 2.0 * t), spec)
        self.assertEqual(len(t), len(passed))
        self.assertAlmostEqual(1.0, np.max(np.abs(passed[middle])), delta=0.05)

        stopped = dsp.butterworth_filter(np.sin(2 * np.pi * 20.0 * t), spec)
        self.assertLess(np.max(np.abs(stopped[middle])), 0.1)

    def test_too_short(self):
        spec = dsp.FilterSpec.bandpass(0.5, 8.0, 64.0)
        self.assertRaises(base.SignalTooShort, dsp.butterworth_filter, np.ones(11), spec)
        self.assertEqual(12, len(dsp.butterworth_filter(np.ones(12), spec)))

    def test_linearity(self):
        rng = np.random.default_rng(8)
        spec = dsp.FilterSpec.bandpass(0.5, 8.0, 64.0)
        x, y = rng.normal(size=(2, 640))
        combined = dsp.butterworth_filter(2.5 * x - 0.75 * y, spec)
        separate = 2.5 * dsp.butterworth_filter(x, spec) - 0.75 * dsp.butterworth_filter(y, spec)
        np.testing.assert_allclose(separate, combined, rtol=1e-9, atol=1e-9 * np.max(np.abs(combined)))


class MedianFilterTestCase(unittest.TestCase):

    def test_values(self):
        out = dsp.median_filter([1.0, 100.0, 3.0, 4.0, 5.0], window_seconds=3, rate=1.0)
        self.assertEqual([50.5, 3.0, 4.0, 4.0, 4.5], out.tolist())

    def test_even_window(self):
        out = dsp.median_filter([1.0, 100.0, 3.0, 4.0, 5.0], window_seconds=4, rate=1.0)
        self.assertEqual(4.0, out[2])

    def test_errors(self):
        self.assertRaises(base.EmptySignal, dsp.median_filter, [], 5.0, 1.0)
        self.assertRaises(base.InvalidSpec, dsp.median_filter, [1.0, 2.0], 1.0, 1.0)


class SplineResampleTestCase(unittest.TestCase):

    def test_exact_on_quadratics(self):
        t_in = np.arange(64 * 3) / 64.0
        for coefs in ([1.5], [0.2, -1.0], [0.7, 2.0, -0.3]):
            out = dsp.spline_resample(np.polyval(coefs, t_in), 64.0, 100.0)
            t_out = np.arange(len(out)) / 100.0
            self.assertLessEqual(t_out[-1], t_in[-1])
            np.testing.assert_allclose(np.polyval(coefs, t_out), out, rtol=0, atol=1e-9)

    def test_grid(self):
        out = dsp.spline_resample(np.zeros(65), 64.0, 100.0)
        self.assertEqual(101, len(out))

    def test_too_few(self):
        self.assertRaises(base.InsufficientPoints, dsp.spline_resample, [1.0, 2.0])

    def test_sinusoid(self):
        t_in = np.arange(int(60 * 64)) / 64.0
        out = dsp.spline_resample(np.sin(2 * np.pi * 0.2 * t_in), 64.0, 100.0)
        t_out = np.arange(len(out)) / 100.0
        interior = slice(100, -100)
        error = np.abs(out[interior] - np.sin(2 * np.pi * 0.2 * t_out[interior]))
        self.assertLess(np.max(error), 1e-3)


class LombScargleTestCase(unittest.TestCase):

    def test_peak(self):
        rng = np.random.default_rng(3)
        times = np.sort(rng.uniform(0.0, 300.0, size=600))
        psd = dsp.lomb_scargle(times, np.sin(2 * np.pi * 0.1 * times))
        peak = psd.freqs[np.argmax(psd.power)]
        self.assertLessEqual(abs(peak - 0.1), psd.resolution)

    def test_variance_scaling(self):
        times = np.arange(1200) / 4.0
        psd = dsp.lomb_scargle(times, np.sin(2 * np.pi * 0.2 * times))
        self.assertAlmostEqual(0.5, np.sum(psd.power) * psd.resolution, delta=0.075)

    def test_constant_offset(self):
        rng = np.random.default_rng(4)
        times = np.sort(rng.uniform(0.0, 200.0, size=300))
        values = np.sin(2 * np.pi * 0.15 * times) + rng.normal(scale=0.2, size=300)
        psd = dsp.lomb_scargle(times, values)
        shifted = dsp.lomb_scargle(times, values + 750.0)
        self.assertTrue(np.all(psd.power >= 0.0))
        np.testing.assert_allclose(psd.power, shifted.power, rtol=1e-10, atol=1e-10 * np.max(psd.power))

    def test_band_power(self):
        psd = dsp.PsdEstimate(freqs=np.array([0.0, 0.1, 0.2, 0.3]), power=np.array([1.0, 2.0, 3.0, 4.0]))
        self.assertAlmostEqual(0.5, psd.band_power(0.1, 0.3))
        self.assertAlmostEqual(0.9, psd.band_power(0.1, 0.3, inclusive=True))

    def test_errors(self):
        self.assertRaises(base.InsufficientPoints, dsp.lomb_scargle, [0.0, 1.0, 2.0], [1.0, 2.0, 3.0])
        self.assertRaises(base.InvalidTimes, dsp.lomb_scargle, [0.0, 2.0, 1.0, 3.0], [1.0, 2.0, 3.0, 4.0])
        self.assertRaises(base.InvalidTimes, dsp.lomb_scargle, [0.0, 1.0, 2.0, 3.0], [1.0, 2.0])


if __name__ == '__main__':  # pragma: no cover
    unittest.main()
