# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Numerical kernels: Butterworth filtering, median filtering, spline
resampling and the Lomb-Scargle power spectral density.

All functions are pure and operate on 1-D numpy arrays.
"""

import dataclasses
import enum

import numpy as np
import pandas as pd
from scipy import interpolate, signal

from .base import EmptySignal, InsufficientPoints, InvalidSpec, InvalidTimes, SignalTooShort


class FilterKind(enum.Enum):
    BANDPASS = 'bandpass'
    LOWPASS = 'lowpass'


@dataclasses.dataclass(frozen=True)
class FilterSpec:
    """A Butterworth filter design.

    Attributes:
        kind (FilterKind): bandpass or lowpass
        order (int): prototype order
        low_hz (float or None): low cut, bandpass only
        high_hz (float): high cut
        sample_rate (float): sampling rate of the filtered signal, Hz
    """
    kind: FilterKind
    high_hz: float
    sample_rate: float
    low_hz: float = None
    order: int = 4

    def validate(self):
        nyquist = self.sample_rate / 2.0
        if self.order < 1:
            raise InvalidSpec("Filter order must be >= 1, got %r" % self.order)
        if self.kind is FilterKind.BANDPASS:
            if self.low_hz is None or not 0 < self.low_hz < self.high_hz < nyquist:
                raise InvalidSpec("Bandpass needs 0 < low < high < %g Hz, got %r-%r" % (
                    nyquist, self.low_hz, self.high_hz))
        elif not 0 < self.high_hz < nyquist:
            raise InvalidSpec("Lowpass needs 0 < high < %g Hz, got %r" % (nyquist, self.high_hz))

    @property
    def realizable(self):
        try:
            self.validate()
        except InvalidSpec:
            return False
        return True

    def sos(self):
        """Second-order sections of the digital design (bilinear transform, pre-warped)."""
        self.validate()
        if self.kind is FilterKind.BANDPASS:
            cutoff = [self.low_hz, self.high_hz]
        else:
            cutoff = self.high_hz
        return signal.butter(self.order, cutoff, btype=self.kind.value, fs=self.sample_rate, output='sos')

    @classmethod
    def bandpass(cls, low_hz, high_hz, sample_rate, order=4):
        return cls(kind=FilterKind.BANDPASS, low_hz=low_hz, high_hz=high_hz, sample_rate=sample_rate, order=order)

    @classmethod
    def lowpass(cls, high_hz, sample_rate, order=4):
        return cls(kind=FilterKind.LOWPASS, high_hz=high_hz, sample_rate=sample_rate, order=order)


def butterworth_filter(x, spec):
    """Zero-phase (forward-backward) Butterworth filtering.

    The signal is extended by odd reflection over 3 x order samples on each
    side before filtering; output length equals input length.

    Raises:
        SignalTooShort: fewer than 3 x order samples
        InvalidSpec: unrealizable filter
    """
    x = np.asarray(x, dtype=float)
    sos = spec.sos()
    if len(x) < 3 * spec.order:
        raise SignalTooShort("Filtering needs >= %d samples, got %d" % (3 * spec.order, len(x)))
    padlen = min(3 * spec.order, len(x) - 1)
    return signal.sosfiltfilt(sos, x, padtype='odd', padlen=padlen)


def median_filter(x, window_seconds=5.0, rate=1.0):
    """Centered sliding median, with the window shrinking at the boundaries.

    An even window length is widened by one sample so the window stays centered.

    Raises:
        EmptySignal: empty input
        InvalidSpec: window shorter than 3 samples
    """
    x = np.asarray(x, dtype=float)
    if not len(x):
        raise EmptySignal("Cannot median-filter an empty series")
    width = int(round(window_seconds * rate))
    if width < 3:
        raise InvalidSpec("Median window spans %d sample(s); at least 3 required" % width)
    if width % 2 == 0:
        width += 1
    return pd.Series(x).rolling(window=width, center=True, min_periods=1).median().to_numpy()


def spline_resample(x, from_rate=64.0, to_rate=100.0):
    """Resample a uniformly sampled series with a C1 quadratic spline.

    The output grid starts at the first input sample and covers the input span.

    Raises:
        InsufficientPoints: fewer than 3 samples
    """
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        raise InsufficientPoints("Quadratic spline needs >= 3 samples, got %d" % len(x))
    t_in = np.arange(len(x)) / from_rate
    n_out = int(np.floor(t_in[-1] * to_rate + 1e-9)) + 1
    t_out = np.arange(n_out) / to_rate
    spline = interpolate.make_interp_spline(t_in, x, k=2)
    return spline(t_out)


@dataclasses.dataclass(frozen=True, eq=False)
class PsdEstimate:
    """A one-sided power spectral density on an evenly spaced grid.

    Attributes:
        freqs (np.ndarray): Hz, ascending
        power (np.ndarray): non-negative, (input units)^2 / Hz
    """
    freqs: np.ndarray
    power: np.ndarray

    @property
    def resolution(self):
        return float(self.freqs[1] - self.freqs[0]) if len(self.freqs) > 1 else 0.0

    def band_power(self, low, high, inclusive=False):
        """Integrate power over [low, high), or [low, high] when inclusive."""
        upper = self.freqs <= high if inclusive else self.freqs < high
        mask = (self.freqs >= low) & upper
        return float(np.sum(self.power[mask]) * self.resolution)


def lomb_scargle(times, values, n_freqs=500, f_lo=0.01, f_hi=0.5):
    """Classical Lomb-Scargle periodogram, scaled as a one-sided PSD.

    Values are mean-subtracted; the periodogram uses the per-frequency phase
    shift tau. Power is scaled by 2 T / N (T the sampled span) so that
    sum(power) * df over a grid covering the signal band approximates the
    variance of the input.

    Raises:
        InsufficientPoints: fewer than 4 samples
        InvalidTimes: non-increasing times
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) != len(values):
        raise InvalidTimes("times and values differ in length (%d vs %d)" % (len(times), len(values)))
    if len(times) < 4:
        raise InsufficientPoints("Lomb-Scargle needs >= 4 samples, got %d" % len(times))
    if np.any(np.diff(times) <= 0):
        raise InvalidTimes("Sample times must be strictly increasing")

    n = len(times)
    freqs = np.linspace(f_lo, f_hi, n_freqs)
    centered = values - values.mean()
    pgram = signal.lombscargle(times - times[0], centered, 2 * np.pi * freqs, normalize=False)
    span = (times[-1] - times[0]) * n / (n - 1)
    power = np.clip(pgram * 2.0 * span / n, 0.0, None)
    return PsdEstimate(freqs=freqs, power=power)
