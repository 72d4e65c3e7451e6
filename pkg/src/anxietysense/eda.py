# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Electrodermal activity: cleaning, tonic/phasic split, SCR events and statistics.

Conductance values are in microsiemens; the SCR onset threshold is 0.05 uS.
"""

import dataclasses
import logging
import typing

import numpy as np
from scipy import stats

from . import dsp
from .base import SignalTooShort

logger = logging.getLogger('anxietysense.eda')

CLEANING_CUTOFF = 3.0
TONIC_CUTOFF = 0.05
MIN_DURATION = 30.0
ONSET_THRESHOLD = 0.05

TRACKS = ('Tonic', 'Phasic')
TRACK_STATISTICS = ('Median', 'Mean', 'Var', 'Max', 'Min', 'Skew', 'Kurtosis', 'Std')
EVENT_FEATURES = (
    'SCR_Onsets_N', 'SCR_Peaks_N', 'SCR_Amplitude', 'SCR_Height', 'SCR_RiseTime', 'SCR_Recovery',
)
EDA_FEATURES = EVENT_FEATURES + tuple(
    'EDA_%s_%s' % (track, stat) for track in TRACKS for stat in TRACK_STATISTICS
)

NAN = float('nan')


def clean_eda(samples, rate):
    """Low-pass the raw conductance at 3 Hz (4th order, zero-phase).

    At sampling rates where 3 Hz is not below Nyquist the signal already holds
    no content above the cutoff and is returned unchanged.
    """
    spec = dsp.FilterSpec.lowpass(CLEANING_CUTOFF, rate)
    samples = np.asarray(samples, dtype=float)
    if not spec.realizable:
        logger.debug("EDA cleaning skipped: %g Hz cutoff above Nyquist at %g Hz", CLEANING_CUTOFF, rate)
        return samples.copy()
    return dsp.butterworth_filter(samples, spec)


def decompose_tonic_phasic(cleaned, rate):
    """Split cleaned EDA into a slow tonic level and a fast phasic track.

    Returns:
        (np.ndarray, np.ndarray): tonic, phasic; tonic + phasic == cleaned

    Raises:
        SignalTooShort: under 30 s of signal
    """
    cleaned = np.asarray(cleaned, dtype=float)
    if len(cleaned) < MIN_DURATION * rate:
        raise SignalTooShort("Tonic/phasic split needs >= %gs of EDA, got %.2fs" % (
            MIN_DURATION, len(cleaned) / rate))
    tonic = dsp.butterworth_filter(cleaned, dsp.FilterSpec.lowpass(TONIC_CUTOFF, rate, order=1))
    return tonic, cleaned - tonic


@dataclasses.dataclass(frozen=True)
class ScrEvent:
    """A skin conductance response.

    Attributes:
        onset_time (float): seconds
        peak_time (float): seconds, after onset_time
        amplitude (float): phasic rise from onset to peak, uS
        height (float): signal value at the peak, uS
        half_recovery_time (float or None): first time after the peak where
            the phasic track is back below onset + amplitude / 2
        complete (bool): whether the peak is a local maximum reached before
            the end of the track
    """
    onset_time: float
    peak_time: float
    amplitude: float
    height: float
    half_recovery_time: typing.Optional[float] = None
    complete: bool = True

    @property
    def rise_time(self):
        return self.peak_time - self.onset_time

    @property
    def recovery_time(self):
        if self.half_recovery_time is None:
            return None
        return self.half_recovery_time - self.peak_time


def _half_recovery(phasic, peak, stop, target):
    """Interpolated fractional index where phasic first drops below target after peak."""
    for k in range(peak + 1, stop):
        if phasic[k] < target:
            previous = phasic[k - 1]
            return k - 1 + (previous - target) / (previous - phasic[k])
    return None


def detect_scr(phasic, rate, onset_threshold=ONSET_THRESHOLD, t0=0.0, signal=None):
    """Detect skin conductance responses on a phasic track.

    Onsets are samples where the slope turns from non-positive to positive;
    the peak is the next local maximum. Candidates whose rise is below the
    threshold are discarded. Events never overlap.

    Args:
        phasic (np.ndarray): phasic track
        rate (float): sampling rate, Hz
        onset_threshold (float): minimum amplitude, uS
        t0 (float): time of the first sample
        signal (np.ndarray): track used for event heights, defaults to phasic

    Returns:
        list of ScrEvent, time-ordered
    """
    phasic = np.asarray(phasic, dtype=float)
    signal = phasic if signal is None else np.asarray(signal, dtype=float)
    n = len(phasic)
    if n < 3:
        return []

    slope = np.diff(phasic)
    onsets = np.flatnonzero((slope[:-1] <= 0) & (slope[1:] > 0)) + 1
    events = []
    resume = 0
    for onset in onsets:
        if onset < resume:
            continue
        falling = np.flatnonzero(slope[onset:] <= 0)
        complete = bool(len(falling))
        peak = onset + int(falling[0]) if complete else n - 1
        amplitude = phasic[peak] - phasic[onset]
        resume = peak
        if amplitude < onset_threshold:
            continue

        following = onsets[onsets > peak]
        stop = int(following[0]) + 1 if len(following) else n
        recovery = _half_recovery(phasic, peak, stop, phasic[onset] + amplitude / 2.0)
        events.append(ScrEvent(
            onset_time=float(t0 + onset / rate),
            peak_time=float(t0 + peak / rate),
            amplitude=float(amplitude),
            height=float(signal[peak]),
            half_recovery_time=None if recovery is None else float(t0 + recovery / rate),
            complete=complete,
        ))
    return events


@dataclasses.dataclass(frozen=True)
class EdaFeatures:
    """EDA statistics for one window.

    Attributes:
        values (dict): feature name -> value; NaN when undefined
        degenerate (frozenset): names of features set by the zero-variance convention
    """
    values: typing.Mapping[str, float]
    degenerate: typing.FrozenSet[str] = frozenset()


def track_statistics(track, prefix):
    """Moment and order statistics of one track.

    Skew and excess kurtosis of a zero-variance track are 0 and flagged.

    Returns:
        (dict, set): values, degenerate names
    """
    track = np.asarray(track, dtype=float)
    variance = float(np.var(track, ddof=1)) if len(track) > 1 else 0.0
    values = {
        prefix + 'Median': float(np.median(track)),
        prefix + 'Mean': float(np.mean(track)),
        prefix + 'Var': variance,
        prefix + 'Max': float(np.max(track)),
        prefix + 'Min': float(np.min(track)),
        prefix + 'Std': float(np.sqrt(variance)),
    }
    degenerate = set()
    if np.ptp(track) == 0:
        values[prefix + 'Skew'] = 0.0
        values[prefix + 'Kurtosis'] = 0.0
        degenerate.update([prefix + 'Skew', prefix + 'Kurtosis'])
    else:
        values[prefix + 'Skew'] = float(stats.skew(track, bias=True))
        values[prefix + 'Kurtosis'] = float(stats.kurtosis(track, fisher=True, bias=True))
    return values, degenerate


def _mean_or_nan(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else NAN


def eda_features(tonic, phasic, events):
    """Window-level EDA features from the two tracks and the window's events."""
    values = {
        'SCR_Onsets_N': float(len(events)),
        'SCR_Peaks_N': float(sum(1 for ev in events if ev.complete)),
        'SCR_Amplitude': _mean_or_nan([ev.amplitude for ev in events]),
        'SCR_Height': _mean_or_nan([ev.height for ev in events]),
        'SCR_RiseTime': _mean_or_nan([ev.rise_time for ev in events]),
        'SCR_Recovery': _mean_or_nan([ev.recovery_time for ev in events]),
    }
    degenerate = set()
    for name, track in zip(TRACKS, (tonic, phasic)):
        track_values, track_degenerate = track_statistics(track, 'EDA_%s_' % name)
        values.update(track_values)
        degenerate |= track_degenerate
    return EdaFeatures(values=values, degenerate=frozenset(degenerate))
