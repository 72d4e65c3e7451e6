# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Synthetic cohorts with planted anxiety effects.

Every participant goes through the five experiences, four phases each, while
wearing the four sensors. Self-reports come from an ordinal model: a latent
normal state (participant offset + context weights + trait coupling + noise)
cut at fixed thresholds into 1..5. A segment is anxious when its report is
above 3; anxious segments shift the physiology by the profile's effects.

Ground truth (beat times, SCR onsets, latent states) is returned alongside the
recordings and written to ``truth.json`` by ``write_dataset``.
"""

import dataclasses
import logging
import os
import typing

import joblib
import numpy as np
from scipy import stats as sp_stats

from . import ingest
from .base import InvalidSpec
from .utils import rng_for, write_json

logger = logging.getLogger('anxietysense.synth')

START_TIME = 1697040000.0
PHASE_SECONDS = (120, 240, 360)
CUTPOINTS = (-1.5, -0.5, 0.5, 1.5)
ANXIOUS_ABOVE = 3
TRUTH_FILENAME = 'truth.json'

CONTEXT_WEIGHT_KEYS = ('group', 'eval', 'anticipatory', 'concurrent', 'post_event')

# Physiology of a calm segment.
NN_MEAN = 800.0
NN_SD = 45.0
NN_AR = 0.7
NN_RANGE = (400.0, 1500.0)
PULSE_WIDTH = 0.08
SCR_BASE_RATE = 2.0
SCR_RISE = 1.5
SCR_DECAY = 4.0
GESTURE_RATE = 1.0
ACC_NOISE = 0.02


@dataclasses.dataclass(frozen=True)
class EffectProfile:
    """Planted effects of an anxious segment and of the self-report model.

    Attributes:
        hrv_suppression (float): fraction by which NN variability shrinks, in [0, 1)
        hr_shift (float): ms subtracted from the mean NN
        scr_rate_boost (float): extra SCRs per minute
        motion_sd_boost (float): relative increase of accelerometer noise
        temp_drift (float): skin temperature change, degrees C
        context_weights (dict): context key -> log-odds-like contribution to
            the latent state; keys in CONTEXT_WEIGHT_KEYS
        trait_coupling (float): slope of the latent state on the trait level
        noise_sd (float): sd of the latent state noise
    """
    hrv_suppression: float = 0.0
    hr_shift: float = 0.0
    scr_rate_boost: float = 0.0
    motion_sd_boost: float = 0.0
    temp_drift: float = 0.0
    context_weights: typing.Mapping[str, float] = dataclasses.field(default_factory=dict)
    trait_coupling: float = 0.0
    noise_sd: float = 1.0

    def __post_init__(self):
        if not 0 <= self.hrv_suppression < 1:
            raise InvalidSpec("hrv_suppression must lie in [0, 1), got %r" % self.hrv_suppression)
        for name in ('scr_rate_boost', 'motion_sd_boost', 'noise_sd'):
            if getattr(self, name) < 0:
                raise InvalidSpec("%s must be >= 0, got %r" % (name, getattr(self, name)))
        unknown = set(self.context_weights) - set(CONTEXT_WEIGHT_KEYS)
        if unknown:
            raise InvalidSpec("Unknown context weight(s): %s" % ', '.join(sorted(unknown)))
        object.__setattr__(self, 'context_weights', dict(self.context_weights))

    @classmethod
    def null(cls):
        """No effect anywhere: labels carry no physiological signal."""
        return cls()

    @classmethod
    def strong(cls):
        return cls(
            hrv_suppression=0.5, hr_shift=80.0, scr_rate_boost=3.0, motion_sd_boost=0.5, temp_drift=-0.3,
            context_weights={'eval': 0.8, 'group': 0.4, 'anticipatory': 0.3, 'post_event': -0.3},
            trait_coupling=0.6, noise_sd=1.0,
        )

    def context_shift(self, context):
        """Latent-state shift of a social segment."""
        if context is None:
            return 0.0
        phase_key = {1: 'anticipatory', 2: 'concurrent', 3: 'post_event'}[context.phase_code]
        weights = self.context_weights
        return (weights.get('group', 0.0) * context.group_size_code
                + weights.get('eval', 0.0) * context.eval_code
                + weights.get(phase_key, 0.0))

    def to_dict(self):
        return dataclasses.asdict(self)


def ordinal_report(latent, cutpoints=CUTPOINTS):
    """Map latent states to 1..5 by counting the cutpoints below them."""
    return 1 + np.searchsorted(np.asarray(cutpoints), np.asarray(latent, dtype=float), side='left')


def report_probabilities(mean, sd, cutpoints=CUTPOINTS):
    """Probabilities of the reports 1..5 for a latent N(mean, sd)."""
    edges = np.concatenate([[-np.inf], cutpoints, [np.inf]])
    if sd == 0:
        return np.diff((edges >= mean).astype(float))
    return np.diff(sp_stats.norm.cdf((edges - mean) / sd))


def _trait_items(rng, level):
    def items(n, lowest, highest, center, spread):
        values = np.rint(center + spread * level + rng.normal(0.0, 0.7, size=n))
        return [int(v) for v in np.clip(values, lowest, highest)]

    return {
        'sias': items(20, 0, 4, 2.0, 1.0),
        'bfne': items(8, 1, 5, 3.0, 0.8),
        'ders_sf': items(18, 1, 5, 2.5, 0.6),
        'dass_dep': items(7, 0, 3, 1.0, 0.5),
    }


def _schedule(rng, durations):
    segments = []
    t = START_TIME
    for experience in ingest.Experience:
        for phase in ingest.Phase:
            duration = float(rng.choice(durations))
            segments.append((experience, phase, t, t + duration))
            t += duration
    return segments, t


def _beats(rng, total, bounds, anxious, profile, nn_mean, nn_sd):
    """AR(1) NN process whose mean and variability follow the anxious segments."""
    beats = [rng.uniform(0.2, 0.8)]
    deviation = 0.0
    while True:
        i = min(np.searchsorted(bounds, beats[-1], side='right') - 1, len(anxious) - 1)
        flag = anxious[i]
        sd = nn_sd * (1.0 - profile.hrv_suppression * flag)
        deviation = NN_AR * deviation + rng.normal(0.0, sd * np.sqrt(1 - NN_AR ** 2))
        nn = np.clip(nn_mean - profile.hr_shift * flag + deviation, *NN_RANGE)
        t = beats[-1] + nn / 1000.0
        if t >= total - 1.0:
            return np.asarray(beats)
        beats.append(t)


def _pulse_train(beats, n, rate, rng):
    """Gaussian pulses centered on the beat times, plus wander and noise."""
    width = PULSE_WIDTH * rate
    half = int(np.ceil(4 * width))
    centers = beats * rate
    idx = np.floor(centers).astype(int)[:, None] + np.arange(-half, half + 1)[None, :]
    values = np.exp(-0.5 * ((idx - centers[:, None]) / width) ** 2)
    values *= rng.uniform(0.9, 1.1, size=(len(beats), 1))
    keep = (idx >= 0) & (idx < n)
    signal = np.zeros(n)
    np.add.at(signal, idx[keep], values[keep])
    t = np.arange(n) / rate
    signal += 0.1 * np.sin(2 * np.pi * 0.1 * t + rng.uniform(0, 2 * np.pi))
    signal += rng.normal(0.0, 0.01, size=n)
    return np.round(signal * 100.0, 4)


def _scr_shape(t, amplitude):
    rise = np.clip(t / SCR_RISE, 0.0, 1.0)
    shape = np.where(t < SCR_RISE, rise ** 2 * (3 - 2 * rise), np.exp(-(t - SCR_RISE) / SCR_DECAY))
    return np.where(t >= 0, amplitude * shape, 0.0)


def _eda(rng, n, rate, bounds, anxious, profile):
    t = np.arange(n) / rate
    level = rng.uniform(1.0, 5.0)
    drift = np.cumsum(rng.normal(0.0, 0.002, size=n))
    signal = level + drift - drift.mean()
    onsets = []
    for (lo, hi), flag in zip(zip(bounds[:-1], bounds[1:]), anxious):
        per_second = (SCR_BASE_RATE + profile.scr_rate_boost * flag) / 60.0
        count = rng.poisson(per_second * (hi - lo))
        onsets.extend(np.sort(rng.uniform(lo, hi, size=count)).tolist())
    onsets = np.asarray(onsets)
    for onset in onsets:
        start = int(onset * rate)
        stop = min(n, start + int((SCR_RISE + 8 * SCR_DECAY) * rate))
        signal[start:stop] += _scr_shape(t[start:stop] - onset, rng.uniform(0.1, 0.5))
    signal += rng.normal(0.0, 0.002, size=n)
    return np.round(np.maximum(signal, 0.01), 4), onsets


def _acc(rng, n, rate, bounds, anxious, profile):
    t = np.arange(n) / rate
    sd = np.full(n, ACC_NOISE)
    for (lo, hi), flag in zip(zip(bounds[:-1], bounds[1:]), anxious):
        sd[(t >= lo) & (t < hi)] *= 1.0 + profile.motion_sd_boost * flag
    g = np.zeros((n, 3))
    g[:, 2] = 1.0
    g += rng.normal(size=(n, 3)) * sd[:, None]
    for start in rng.uniform(0, t[-1], size=rng.poisson(GESTURE_RATE * t[-1] / 60.0)):
        mask = (t >= start) & (t < start + 2.0)
        g[mask, rng.integers(3)] += 0.3 * np.sin(2 * np.pi * 2.0 * (t[mask] - start))
    # Whole device counts, so the export round trip is exact.
    return np.rint(g * ingest.ACC_COUNTS_PER_G) / ingest.ACC_COUNTS_PER_G


def _temp(rng, n, rate, bounds, anxious, profile):
    t = np.arange(n) / rate
    signal = rng.uniform(32.0, 34.5) + 0.3 * np.sin(2 * np.pi * t / 1800.0 + rng.uniform(0, 2 * np.pi))
    for (lo, hi), flag in zip(zip(bounds[:-1], bounds[1:]), anxious):
        signal[(t >= lo) & (t < hi)] += profile.temp_drift * flag
    signal += rng.normal(0.0, 0.02, size=n)
    return np.round(signal, 3)


@dataclasses.dataclass(frozen=True, eq=False)
class SyntheticParticipant:
    """A generated participant: manifest entry, recordings and ground truth."""
    participant: ingest.Participant
    recordings: typing.Mapping[ingest.Channel, ingest.SensorRecording]
    truth: typing.Mapping[str, typing.Any]

    @property
    def participant_id(self):
        return self.participant.participant_id

    @property
    def traits(self):
        return self.participant.traits


def gen_participant(profile, seed, participant_id='P01', durations=PHASE_SECONDS):
    """Generate one participant; deterministic in ``seed``.

    Args:
        profile (EffectProfile)
        seed (int)
        participant_id (str)
        durations (sequence of int): candidate phase lengths, seconds
    """
    rng = np.random.default_rng(seed)
    trait_level = rng.normal()
    offset = rng.normal(0.0, 0.5)
    items = _trait_items(rng, trait_level)

    schedule, end = _schedule(rng, durations)
    segments, anxious, latent = [], [], {}
    for experience, phase, t_start, t_end in schedule:
        social = experience.is_social and phase.is_social
        context = ingest.code_context(experience, phase) if social else None
        state = (offset + profile.context_shift(context) + profile.trait_coupling * trait_level
                 + rng.normal(0.0, profile.noise_sd))
        report = int(ordinal_report(state))
        segments.append(ingest.PhaseSegment(
            participant_id=participant_id, experience=experience, phase=phase,
            t_start=t_start, t_end=t_end, self_report=report,
        ))
        anxious.append(int(report > ANXIOUS_ABOVE))
        latent['%s/%s' % (experience, phase)] = float(state)

    total = end - START_TIME
    bounds = np.array([seg.t_start - START_TIME for seg in segments] + [total])
    nn_mean = NN_MEAN + rng.normal(0.0, 60.0)
    nn_sd = NN_SD * rng.uniform(0.8, 1.25)
    beats = _beats(rng, total, bounds, anxious, profile, nn_mean, nn_sd)

    rates = ingest.DEFAULT_RATES
    sizes = {channel: int(round(total * rates[channel])) for channel in ingest.Channel}
    eda, scr_onsets = _eda(rng, sizes[ingest.Channel.EDA], rates[ingest.Channel.EDA], bounds, anxious, profile)
    samples = {
        ingest.Channel.BVP: _pulse_train(beats, sizes[ingest.Channel.BVP], rates[ingest.Channel.BVP], rng),
        ingest.Channel.EDA: eda,
        ingest.Channel.ACC3: _acc(rng, sizes[ingest.Channel.ACC3], rates[ingest.Channel.ACC3],
                                  bounds, anxious, profile),
        ingest.Channel.TEMP: _temp(rng, sizes[ingest.Channel.TEMP], rates[ingest.Channel.TEMP],
                                   bounds, anxious, profile),
    }
    recordings = {
        channel: ingest.SensorRecording(channel=channel, start_time=START_TIME, rate=float(rates[channel]),
                                        samples=values)
        for channel, values in samples.items()
    }
    truth = {
        'trait_level': float(trait_level),
        'offset': float(offset),
        'latent': latent,
        'anxious': {'%s/%s' % (seg.experience, seg.phase): bool(flag) for seg, flag in zip(segments, anxious)},
        'beat_times': (beats + START_TIME).tolist(),
        'scr_onsets': (scr_onsets + START_TIME).tolist(),
    }
    participant = ingest.Participant(participant_id=participant_id, trait_items=items, segments=tuple(segments))
    return SyntheticParticipant(participant=participant, recordings=recordings, truth=truth)


@dataclasses.dataclass(frozen=True, eq=False)
class SyntheticCohort:
    dataset: ingest.Dataset
    truth: typing.Mapping[str, typing.Mapping[str, typing.Any]]
    profile: EffectProfile
    seed: int

    @property
    def manifest(self):
        return self.dataset.manifest


def participant_ids(n):
    width = max(2, len(str(n)))
    return ['P%0*d' % (width, i + 1) for i in range(n)]


def gen_cohort(n=46, profile=None, seed=0, jobs=1, durations=PHASE_SECONDS):
    """Generate ``n`` participants; each draws from a seed derived from (seed, index).

    Raises:
        InvalidSpec: n < 2
    """
    if n < 2:
        raise InvalidSpec("A cohort needs >= 2 participants, got %d" % n)
    profile = profile or EffectProfile.null()
    ids = participant_ids(n)
    generated = joblib.Parallel(n_jobs=jobs)(
        joblib.delayed(gen_participant)(profile, int(rng_for(seed, 'participant', i).integers(2 ** 32)), pid,
                                        durations)
        for i, pid in enumerate(ids)
    )
    dataset = ingest.Dataset(
        manifest=ingest.Manifest(tuple(p.participant for p in generated)),
        recordings={p.participant_id: dict(p.recordings) for p in generated},
    )
    logger.info("Generated %d synthetic participants (seed %d)", n, seed)
    return SyntheticCohort(dataset=dataset, truth={p.participant_id: p.truth for p in generated},
                           profile=profile, seed=seed)


def write_dataset(cohort, directory):
    """Write a cohort in the layout read by ``ingest.load_dataset``, plus ``truth.json``."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, ingest.MANIFEST_FILENAME), 'w', encoding='utf-8', newline='\n') as f:
        ingest.dump_manifest(cohort.manifest, f)
    for pid, recordings in cohort.dataset.recordings.items():
        os.makedirs(os.path.join(directory, pid), exist_ok=True)
        for channel, recording in recordings.items():
            ingest.write_sensor_csv(recording, os.path.join(directory, pid, channel.filename))
    write_json({'seed': cohort.seed, 'profile': cohort.profile.to_dict(), 'participants': cohort.truth},
               os.path.join(directory, TRUTH_FILENAME))
    logger.info("Wrote synthetic dataset to %s", directory)
