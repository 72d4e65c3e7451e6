# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Blood-volume-pulse processing: systolic peaks, NN intervals and HRV features.

Time-domain and non-linear features are computed on the event-domain NN
series. Frequency-domain features use the NN value track: the latest NN value
held on a 64 Hz grid, median-filtered over 5 s, spline-resampled to 100 Hz,
then passed through a Lomb-Scargle PSD.
"""

import dataclasses
import logging

import numpy as np
from scipy import ndimage

from . import dsp
from .base import InsufficientBeats, NoBeatsDetected, SignalTooShort

logger = logging.getLogger('anxietysense.ppg')

PPG_BAND = (0.5, 8.0)

# Two-moving-average peak detector parameters.
PEAK_WINDOW = 0.111
BEAT_WINDOW = 0.667
BEAT_OFFSET = 0.02
MIN_PEAK_DELAY = 0.3
MIN_DURATION = 5.0

NN_PLAUSIBLE_RANGE = (250.0, 2000.0)
MIN_INTERVALS = 10

TRACK_RATE = 64.0
RESAMPLED_RATE = 100.0
MEDIAN_WINDOW = 5.0

HISTOGRAM_BIN = 1000.0 / 128

LF_BAND = (0.04, 0.15)
HF_BAND = (0.15, 0.4)
VHF_BAND = (0.4, 0.5)

TIME_FEATURES = (
    'MeanNN', 'SDNN', 'RMSSD', 'SDSD', 'CVNN', 'CVSD', 'MedianNN', 'MadNN',
    'MCVNN', 'IQRNN', 'MinNN', 'MaxNN', 'HTI', 'TINN',
)
FREQUENCY_FEATURES = ('LF', 'HF', 'VHF', 'LFHF', 'LFn', 'HFn', 'LnHF', 'SD1')
NONLINEAR_FEATURES = ('CSI', 'CVI', 'PIP', 'IALS', 'PSS', 'PAS', 'GI', 'SI', 'AI', 'PI')
HRV_FEATURES = TIME_FEATURES + FREQUENCY_FEATURES + NONLINEAR_FEATURES

NAN = float('nan')


def clean_ppg(samples, rate):
    """Band-pass the raw BVP between 0.5 and 8 Hz (4th order, zero-phase)."""
    return dsp.butterworth_filter(samples, dsp.FilterSpec.bandpass(PPG_BAND[0], PPG_BAND[1], rate))


def _runs(mask):
    """Start (inclusive) and end (exclusive) indices of the True runs of a boolean array."""
    edges = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    return np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)


def detect_systolic_peaks(cleaned, rate):
    """Locate systolic peaks with the two-moving-average block method.

    The squared positive part of the signal is smoothed over a short
    (peak-sized) and a long (beat-sized) window; each block where the short
    average exceeds the long one plus an offset, and lasting at least the
    short window, contributes its maximum. Peaks closer than 300 ms to the
    previously kept one are dropped.

    Args:
        cleaned (np.ndarray): band-passed BVP
        rate (float): sampling rate, Hz

    Returns:
        np.ndarray: sample indices of the peaks

    Raises:
        SignalTooShort: under 5 s of signal
        NoBeatsDetected: no block qualified
    """
    cleaned = np.asarray(cleaned, dtype=float)
    if len(cleaned) < MIN_DURATION * rate:
        raise SignalTooShort("Peak detection needs >= %gs of signal, got %.2fs" % (
            MIN_DURATION, len(cleaned) / rate))

    squared = np.clip(cleaned, 0.0, None) ** 2
    peak_width = int(np.rint(PEAK_WINDOW * rate))
    beat_width = int(np.rint(BEAT_WINDOW * rate))
    ma_peak = ndimage.uniform_filter1d(squared, size=max(peak_width, 1), mode='nearest')
    ma_beat = ndimage.uniform_filter1d(squared, size=max(beat_width, 1), mode='nearest')
    threshold = ma_beat + BEAT_OFFSET * squared.mean()

    min_delay = int(np.rint(MIN_PEAK_DELAY * rate))
    peaks = []
    for begin, end in zip(*_runs(ma_peak > threshold)):
        if end - begin < peak_width:
            continue
        peak = begin + int(np.argmax(cleaned[begin:end]))
        if not peaks or peak - peaks[-1] > min_delay:
            peaks.append(peak)

    if not peaks:
        raise NoBeatsDetected("No systolic peak found in %.1fs of signal" % (len(cleaned) / rate))
    return np.asarray(peaks, dtype=int)


@dataclasses.dataclass(frozen=True, eq=False)
class NnSeries:
    """Beat times and the normal-to-normal intervals between them.

    Attributes:
        beat_times (np.ndarray): seconds, strictly increasing
        nn_ms (np.ndarray): nn_ms[i] = (beat_times[i + 1] - beat_times[i]) * 1000
    """
    beat_times: np.ndarray
    nn_ms: np.ndarray

    def __len__(self):
        return len(self.nn_ms)

    @classmethod
    def from_beat_times(cls, beat_times):
        beat_times = np.asarray(beat_times, dtype=float)
        if len(beat_times) < 2:
            raise InsufficientBeats("NN intervals need >= 2 beats, got %d" % len(beat_times))
        nn_ms = np.diff(beat_times) * 1000.0
        if np.any(nn_ms <= 0):
            raise InsufficientBeats("Beat times must be strictly increasing")
        return cls(beat_times=beat_times, nn_ms=nn_ms)

    @property
    def implausible(self):
        """Mask of intervals outside the physiological range."""
        low, high = NN_PLAUSIBLE_RANGE
        return (self.nn_ms < low) | (self.nn_ms > high)

    def between(self, t_start, t_end):
        """The sub-series of beats falling in [t_start, t_end)."""
        mask = (self.beat_times >= t_start) & (self.beat_times < t_end)
        return NnSeries.from_beat_times(self.beat_times[mask])


def build_nn_series(peaks, rate, t0=0.0):
    """Turn peak sample indices into an NnSeries.

    Raises:
        InsufficientBeats: fewer than 2 peaks
    """
    peaks = np.asarray(peaks)
    if len(peaks) < 2:
        raise InsufficientBeats("NN intervals need >= 2 peaks, got %d" % len(peaks))
    return NnSeries.from_beat_times(t0 + peaks / float(rate))


def nn_track(nn):
    """Resampled NN value track used for spectral analysis.

    Returns:
        (np.ndarray, np.ndarray): times (s) and NN values (ms) on a 100 Hz grid
    """
    t_first, t_last = nn.beat_times[1], nn.beat_times[-1]
    grid = t_first + np.arange(int(np.floor((t_last - t_first) * TRACK_RATE)) + 1) / TRACK_RATE
    # Each interval becomes known at the beat closing it.
    held = nn.nn_ms[np.searchsorted(nn.beat_times[1:], grid, side='right') - 1]
    smoothed = dsp.median_filter(held, window_seconds=MEDIAN_WINDOW, rate=TRACK_RATE)
    values = dsp.spline_resample(smoothed, from_rate=TRACK_RATE, to_rate=RESAMPLED_RATE)
    times = t_first + np.arange(len(values)) / RESAMPLED_RATE
    return times, values


def _check_length(nn, min_intervals):
    if len(nn) < min_intervals:
        raise InsufficientBeats("HRV needs >= %d NN intervals, got %d" % (min_intervals, len(nn)))


def _tinn(nn_ms, edges, counts):
    peak = int(np.argmax(counts))
    centers = (edges[:-1] + edges[1:]) / 2.0
    apex, height = centers[peak], counts[peak]
    best_err, best_width = np.inf, NAN
    for n_edge in edges[:peak + 1]:
        for m_edge in edges[peak + 1:]:
            fit = np.interp(centers, [n_edge, apex, m_edge], [0.0, height, 0.0], left=0.0, right=0.0)
            err = np.sum((counts - fit) ** 2)
            if err < best_err:
                best_err, best_width = err, m_edge - n_edge
    return float(best_width)


def hrv_time(nn, min_intervals=MIN_INTERVALS):
    """Time-domain HRV features of an NnSeries.

    Raises:
        InsufficientBeats: fewer than ``min_intervals`` intervals
    """
    _check_length(nn, min_intervals)
    x = nn.nn_ms
    diff = np.diff(x)
    mean = float(np.mean(x))
    sdnn = float(np.std(x, ddof=1))
    rmssd = float(np.sqrt(np.mean(diff ** 2)))
    sdsd = float(np.std(diff, ddof=0))
    median = float(np.median(x))
    mad = float(1.4826 * np.median(np.abs(x - median)))
    q1, q3 = np.percentile(x, [25, 75])

    edges = np.arange(x.min(), x.max() + HISTOGRAM_BIN, HISTOGRAM_BIN)
    if len(edges) < 2:
        edges = np.array([x.min(), x.min() + HISTOGRAM_BIN])
    counts, edges = np.histogram(x, bins=edges)

    return {
        'MeanNN': mean,
        'SDNN': sdnn,
        'RMSSD': rmssd,
        'SDSD': sdsd,
        'CVNN': sdnn / mean,
        'CVSD': rmssd / mean,
        'MedianNN': median,
        'MadNN': mad,
        'MCVNN': mad / median,
        'IQRNN': float(q3 - q1),
        'MinNN': float(x.min()),
        'MaxNN': float(x.max()),
        'HTI': float(len(x) / counts.max()),
        'TINN': _tinn(x, edges, counts),
    }


def sd1(nn):
    """Poincare dispersion across the identity line: population SDSD / sqrt(2)."""
    return float(np.std(np.diff(nn.nn_ms), ddof=0) / np.sqrt(2.0))


def hrv_frequency(nn, psd=None):
    """Frequency-domain HRV features.

    Args:
        nn (NnSeries): the event-domain series (for SD1 and, when ``psd`` is
            omitted, for the resampled track)
        psd (dsp.PsdEstimate): spectrum of the resampled NN track; computed
            with nn_track + lomb_scargle when omitted

    Band ratios and logs with a zero denominator are reported as NaN.
    """
    if psd is None:
        times, values = nn_track(nn)
        psd = dsp.lomb_scargle(times, values)
    lf = psd.band_power(*LF_BAND)
    hf = psd.band_power(*HF_BAND)
    vhf = psd.band_power(*VHF_BAND, inclusive=True)
    total = lf + hf + vhf
    return {
        'LF': lf,
        'HF': hf,
        'VHF': vhf,
        'LFHF': lf / hf if hf > 0 else NAN,
        'LFn': lf / total if total > 0 else NAN,
        'HFn': hf / total if total > 0 else NAN,
        'LnHF': float(np.log(hf)) if hf > 0 else NAN,
        'SD1': sd1(nn),
    }


def _sign_runs(signs):
    """Maximal runs of equal non-zero sign, as (start, length) over difference indices."""
    runs = []
    start = None
    for i, s in enumerate(signs):
        if start is not None and (s == 0 or s != signs[start]):
            runs.append((start, i - start))
            start = None
        if start is None and s != 0:
            start = i
    if start is not None:
        runs.append((start, len(signs) - start))
    return runs


def _alternation_runs(signs):
    """Maximal runs of difference indices whose consecutive signs alternate."""
    runs = []
    start = None
    for i, s in enumerate(signs):
        if s == 0:
            if start is not None:
                runs.append((start, i - start))
            start = None
            continue
        if start is None:
            start = i
        elif s == signs[i - 1]:
            runs.append((start, i - start))
            start = i
    if start is not None:
        runs.append((start, len(signs) - start))
    return runs


def _covered_fraction(runs, n_intervals):
    """Percentage of NN intervals spanned by runs of differences.

    A run of k differences starting at difference i spans intervals i..i+k.
    """
    covered = np.zeros(n_intervals, dtype=bool)
    for start, length in runs:
        covered[start:start + length + 1] = True
    return 100.0 * covered.sum() / n_intervals


def hrv_nonlinear(nn, min_intervals=MIN_INTERVALS):
    """Poincare, fragmentation and asymmetry HRV features.

    Undefined ratios (zero SD1, no Poincare point off the identity line) are NaN.

    Raises:
        InsufficientBeats: fewer than ``min_intervals`` intervals
    """
    _check_length(nn, min_intervals)
    x = nn.nn_ms
    n = len(x)
    diff = np.diff(x)
    signs = np.sign(diff)

    s1 = sd1(nn)
    sdnn = float(np.std(x, ddof=1))
    s2 = float(np.sqrt(max(0.0, 2.0 * sdnn ** 2 - s1 ** 2)))
    if s1 > 0:
        csi = s2 / s1
        cvi = float(np.log10(16.0 * s1 * s2)) if s2 > 0 else NAN
    else:
        csi = cvi = NAN

    turning = int(np.sum(signs[:-1] * signs[1:] < 0))
    segments = _sign_runs(signs)
    lengths = np.array([length for _, length in segments], dtype=float)
    ials = float(1.0 / lengths.mean()) if len(lengths) else NAN
    pss = _covered_fraction([run for run in segments if run[1] < 3], n)
    pas = _covered_fraction([run for run in _alternation_runs(signs) if run[1] >= 4], n)

    before, after = x[:-1], x[1:]
    above = after > before
    below = after < before
    off_line = above | below
    if off_line.any():
        distance2 = (after - before) ** 2 / 2.0
        theta = np.abs(45.0 - np.degrees(np.arctan(after / before)))
        area = 0.5 * np.radians(theta) * (before ** 2 + after ** 2)
        pi = 100.0 * below.sum() / off_line.sum()
        gi = 100.0 * distance2[above].sum() / distance2[off_line].sum()
        si = 100.0 * theta[above].sum() / theta[off_line].sum() if theta[off_line].sum() > 0 else NAN
        ai = 100.0 * area[above].sum() / area[off_line].sum() if area[off_line].sum() > 0 else NAN
    else:
        pi = gi = si = ai = NAN

    return {
        'CSI': csi,
        'CVI': cvi,
        'PIP': 100.0 * turning / n,
        'IALS': ials,
        'PSS': pss,
        'PAS': pas,
        'GI': float(gi),
        'SI': float(si),
        'AI': float(ai),
        'PI': float(pi),
    }


def hrv_features(nn, min_intervals=MIN_INTERVALS):
    """The full HRV catalog for one NN series."""
    features = {}
    features.update(hrv_time(nn, min_intervals=min_intervals))
    features.update(hrv_frequency(nn))
    features.update(hrv_nonlinear(nn, min_intervals=min_intervals))
    return features
