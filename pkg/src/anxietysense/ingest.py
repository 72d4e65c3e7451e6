# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Device exports, session manifests, context codes and trait totals.

Sensor exports follow the wristband vendor's CSV convention: the first line
holds the UTC start timestamp, the second the sampling rate in Hz, then one
sample per line (``x,y,z`` integer counts for the accelerometer, 1/64 g per
count). The session manifest is one JSON document listing participants, their
questionnaire item responses, and their phase segments.
"""

import dataclasses
import enum
import json
import logging
import math
import os
import typing

import numpy as np

from .base import (
    EmptyRecording, EmptySegment, NotApplicable, ParseError, ValidationError,
)

logger = logging.getLogger('anxietysense.ingest')

ACC_COUNTS_PER_G = 64.0

# Sample ownership tolerance, as a fraction of the sampling period.
_TIME_TOLERANCE = 1e-6


class Channel(enum.Enum):
    BVP = 'BVP'
    EDA = 'EDA'
    TEMP = 'TEMP'
    ACC3 = 'ACC'

    @property
    def default_rate(self):
        return DEFAULT_RATES[self]

    @property
    def filename(self):
        return '%s.csv' % self.value

    def __str__(self):
        return self.value


DEFAULT_RATES = {
    Channel.BVP: 64.0,
    Channel.EDA: 4.0,
    Channel.TEMP: 4.0,
    Channel.ACC3: 32.0,
}


class Experience(enum.Enum):
    ALONE_VIDEO = 'alone_video'
    DYAD_EVAL = 'dyad_eval'
    DYAD_NON_EVAL = 'dyad_non_eval'
    GROUP_EVAL = 'group_eval'
    GROUP_NON_EVAL = 'group_non_eval'

    @property
    def is_social(self):
        return self is not Experience.ALONE_VIDEO

    @property
    def is_group(self):
        return self in (Experience.GROUP_EVAL, Experience.GROUP_NON_EVAL)

    @property
    def is_evaluative(self):
        return self in (Experience.DYAD_EVAL, Experience.GROUP_EVAL)

    def __str__(self):
        return self.value


SOCIAL_EXPERIENCES = tuple(exp for exp in Experience if exp.is_social)


class Phase(enum.Enum):
    BASELINE = 'baseline'
    ANTICIPATORY = 'anticipatory'
    CONCURRENT = 'concurrent'
    POST_EVENT = 'post_event'

    @property
    def is_social(self):
        return self is not Phase.BASELINE

    def __str__(self):
        return self.value


SOCIAL_PHASES = (Phase.ANTICIPATORY, Phase.CONCURRENT, Phase.POST_EVENT)

_PHASE_CODES = {
    Phase.ANTICIPATORY: 1,
    Phase.CONCURRENT: 2,
    Phase.POST_EVENT: 3,
}


@dataclasses.dataclass(frozen=True, eq=False)
class SensorRecording:
    """One channel's uniformly sampled samples.

    Attributes:
        channel (Channel): the sensor
        start_time (float): UTC seconds of the first sample
        rate (float): sampling rate, Hz
        samples (np.ndarray): shape (n,) or (n, 3) for ACC3, read-only
    """
    channel: Channel
    start_time: float
    rate: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.rate > 0:
            raise ValidationError("Sampling rate must be positive, got %r" % (self.rate,))
        samples = np.array(self.samples, dtype=float)
        if self.channel is Channel.ACC3:
            samples = samples.reshape(-1, 3)
        else:
            samples = samples.reshape(-1)
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)

    def __len__(self):
        return len(self.samples)

    @property
    def times(self):
        """Timestamps of every sample: start_time + i / rate."""
        return self.start_time + np.arange(len(self.samples)) / self.rate

    @property
    def end_time(self):
        """Time just past the last sample."""
        return self.start_time + len(self.samples) / self.rate

    @property
    def duration(self):
        return len(self.samples) / self.rate

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _parse_float(text, lineno, what):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(lineno, "non-numeric %s %r" % (what, text))
    if not math.isfinite(value):
        raise ParseError(lineno, "non-finite %s %r" % (what, text))
    return value


def parse_sensor_csv(stream, channel):
    """Parse a device export into a SensorRecording.

    Args:
        stream (iterable of str): the lines of the export
        channel (Channel): the channel held by the export

    Returns:
        SensorRecording

    Raises:
        ParseError: malformed header or sample line
        EmptyRecording: header without samples
    """
    lines = [line.strip() for line in stream]
    while lines and not lines[-1]:
        lines.pop()
    if len(lines) < 2:
        raise ParseError(len(lines) + 1, "missing header line")

    # Multi-column exports repeat the header value once per column.
    start_time = _parse_float(lines[0].split(',')[0], 1, 'start timestamp')
    rate = _parse_float(lines[1].split(',')[0], 2, 'sample rate')
    if rate <= 0:
        raise ParseError(2, "sample rate must be positive, got %r" % rate)

    body = lines[2:]
    if not body:
        raise EmptyRecording("%s export holds no samples" % channel)

    if channel is Channel.ACC3:
        samples = np.empty((len(body), 3))
        for i, line in enumerate(body):
            fields = line.split(',')
            if len(fields) != 3:
                raise ParseError(i + 3, "expected 3 comma-separated counts, got %d fields" % len(fields))
            samples[i] = [_parse_float(f, i + 3, 'count') for f in fields]
        samples /= ACC_COUNTS_PER_G
    else:
        samples = np.array([_parse_float(line, i + 3, 'sample') for i, line in enumerate(body)])

    return SensorRecording(channel=channel, start_time=start_time, rate=rate, samples=samples)


def serialize_sensor_csv(recording, stream):
    """Write a SensorRecording in the device export format.

    Floats are written with repr(), so parse(serialize(x)) is bit-exact.
    """
    channel = recording.channel
    if channel is Channel.ACC3:
        stream.write('%r, %r, %r\n' % ((recording.start_time,) * 3))
        stream.write('%r, %r, %r\n' % ((recording.rate,) * 3))
        counts = np.rint(recording.samples * ACC_COUNTS_PER_G).astype(int)
        for x, y, z in counts:
            stream.write('%d,%d,%d\n' % (x, y, z))
    else:
        stream.write('%r\n' % recording.start_time)
        stream.write('%r\n' % recording.rate)
        for value in recording.samples:
            stream.write('%r\n' % float(value))


def read_sensor_csv(path, channel):
    with open(path, 'r', encoding='utf-8') as f:
        return parse_sensor_csv(f, channel)


def write_sensor_csv(recording, path):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        serialize_sensor_csv(recording, f)


@dataclasses.dataclass(frozen=True)
class PhaseSegment:
    """One participant x experience x phase time span, half-open [t_start, t_end)."""
    participant_id: str
    experience: Experience
    phase: Phase
    t_start: float
    t_end: float
    self_report: typing.Optional[int] = None

    MIN_DURATION = 30.0
    MAX_DURATION = 900.0

    def __post_init__(self):
        object.__setattr__(self, 'experience', Experience(self.experience))
        object.__setattr__(self, 'phase', Phase(self.phase))
        if not self.t_end > self.t_start:
            raise ValidationError("Segment %s must end after it starts" % (self.key,))
        if not self.MIN_DURATION <= self.duration <= self.MAX_DURATION:
            raise ValidationError("Segment %s lasts %.1fs, outside [%g, %g]" % (
                self.key, self.duration, self.MIN_DURATION, self.MAX_DURATION))
        if self.self_report is not None:
            if int(self.self_report) != self.self_report or not 1 <= self.self_report <= 5:
                raise ValidationError("Segment %s self-report %r outside 1..5" % (self.key, self.self_report))
            object.__setattr__(self, 'self_report', int(self.self_report))

    @property
    def duration(self):
        return self.t_end - self.t_start

    @property
    def key(self):
        return (self.participant_id, str(self.experience), str(self.phase))

    @property
    def is_social(self):
        return self.experience.is_social and self.phase.is_social

    def to_dict(self):
        return {
            'experience': self.experience.value,
            'phase': self.phase.value,
            't_start': self.t_start,
            't_end': self.t_end,
            'self_report': self.self_report,
        }


def slice_span(recording, t_start, t_end):
    """Keep the samples whose timestamp falls in [t_start, t_end).

    Raises:
        EmptySegment: no sample falls in the span
    """
    tolerance = _TIME_TOLERANCE / recording.rate
    times = recording.times
    mask = (times >= t_start - tolerance) & (times < t_end - tolerance)
    indices = np.flatnonzero(mask)
    if not len(indices):
        raise EmptySegment("[%.3f, %.3f) does not overlap %s recording [%.3f, %.3f)" % (
            t_start, t_end, recording.channel, recording.start_time, recording.end_time))
    first, last = indices[0], indices[-1] + 1
    return recording.replace(start_time=float(times[first]), samples=recording.samples[first:last])


def slice_segment(recording, segment):
    """Restrict a recording to a phase segment."""
    return slice_span(recording, segment.t_start, segment.t_end)


@dataclasses.dataclass(frozen=True)
class ContextFeatures:
    group_size_code: int
    eval_code: int
    phase_code: int

    def as_dict(self):
        return dataclasses.asdict(self)


def code_context(experience, phase):
    """Code a social segment's setting, evaluative threat and interaction phase.

    Raises:
        NotApplicable: for the alone-video experience or a baseline phase
    """
    experience, phase = Experience(experience), Phase(phase)
    if not experience.is_social or not phase.is_social:
        raise NotApplicable("No context codes for %s / %s" % (experience, phase))
    return ContextFeatures(
        group_size_code=int(experience.is_group),
        eval_code=int(experience.is_evaluative),
        phase_code=_PHASE_CODES[phase],
    )


@dataclasses.dataclass(frozen=True)
class Instrument:
    name: str
    n_items: int
    lowest: int
    highest: int
    aggregate: str


INSTRUMENTS = {
    'sias': Instrument('sias', 20, 0, 4, 'sum'),
    'bfne': Instrument('bfne', 8, 1, 5, 'sum'),
    'ders_sf': Instrument('ders_sf', 18, 1, 5, 'mean'),
    'dass_dep': Instrument('dass_dep', 7, 0, 3, 'sum'),
}


@dataclasses.dataclass(frozen=True)
class TraitScores:
    sias_total: int
    bfne_total: int
    ders_mean: float
    dass_dep_total: int

    def as_dict(self):
        return dataclasses.asdict(self)


def _score(instrument, items):
    items = list(items)
    if len(items) != instrument.n_items:
        raise ValidationError("%s expects %d items, got %d" % (instrument.name, instrument.n_items, len(items)))
    for item in items:
        if int(item) != item or not instrument.lowest <= item <= instrument.highest:
            raise ValidationError("%s item %r outside %d..%d" % (
                instrument.name, item, instrument.lowest, instrument.highest))
    if instrument.aggregate == 'sum':
        return int(sum(int(item) for item in items))
    return float(np.mean(items))


def trait_totals(items):
    """Score the trait questionnaires.

    Args:
        items (dict): instrument name ('sias', 'bfne', 'ders_sf', 'dass_dep')
            -> list of item responses

    Returns:
        TraitScores

    Raises:
        ValidationError: missing instrument, wrong item count or out-of-range item
    """
    missing = set(INSTRUMENTS) - set(items)
    if missing:
        raise ValidationError("Missing questionnaire(s): %s" % ', '.join(sorted(missing)))
    return TraitScores(
        sias_total=_score(INSTRUMENTS['sias'], items['sias']),
        bfne_total=_score(INSTRUMENTS['bfne'], items['bfne']),
        ders_mean=_score(INSTRUMENTS['ders_sf'], items['ders_sf']),
        dass_dep_total=_score(INSTRUMENTS['dass_dep'], items['dass_dep']),
    )


@dataclasses.dataclass(frozen=True)
class Participant:
    participant_id: str
    trait_items: typing.Mapping[str, typing.Sequence[int]]
    segments: typing.Tuple[PhaseSegment, ...]

    def __post_init__(self):
        object.__setattr__(self, 'segments', tuple(self.segments))
        # Validate eagerly so a bad manifest fails at load time.
        self.traits

    @property
    def traits(self):
        return trait_totals(self.trait_items)

    def segment(self, experience, phase):
        experience, phase = Experience(experience), Phase(phase)
        for seg in self.segments:
            if seg.experience is experience and seg.phase is phase:
                return seg
        return None

    @property
    def social_segments(self):
        return tuple(seg for seg in self.segments if seg.is_social)

    def to_dict(self):
        return {
            'participant_id': self.participant_id,
            'traits': {name: [int(v) for v in values] for name, values in sorted(self.trait_items.items())},
            'segments': [seg.to_dict() for seg in self.segments],
        }


@dataclasses.dataclass(frozen=True)
class Manifest:
    participants: typing.Tuple[Participant, ...]

    def __post_init__(self):
        object.__setattr__(self, 'participants', tuple(self.participants))
        ids = [p.participant_id for p in self.participants]
        if len(set(ids)) != len(ids):
            raise ValidationError("Duplicate participant ids in manifest")

    def __iter__(self):
        return iter(self.participants)

    def __len__(self):
        return len(self.participants)

    def __getitem__(self, participant_id):
        for p in self.participants:
            if p.participant_id == participant_id:
                return p
        raise KeyError(participant_id)

    @property
    def participant_ids(self):
        return [p.participant_id for p in self.participants]

    def segments(self, social_only=False):
        for p in self.participants:
            for seg in p.segments:
                if seg.is_social or not social_only:
                    yield seg

    def restrict(self, participant_ids):
        keep = set(participant_ids)
        return Manifest(tuple(p for p in self.participants if p.participant_id in keep))


def _segment_from_dict(participant_id, data, index):
    try:
        return PhaseSegment(
            participant_id=participant_id,
            experience=data['experience'],
            phase=data['phase'],
            t_start=float(data['t_start']),
            t_end=float(data['t_end']),
            self_report=data.get('self_report'),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError("Participant %s, segment #%d: %s" % (participant_id, index, e))


def load_manifest(stream):
    """Parse the session manifest (one JSON array of participants)."""
    try:
        data = json.load(stream)
    except ValueError as e:
        raise ValidationError("Manifest is not valid JSON: %s" % e)
    if isinstance(data, dict):
        data = data.get('participants')
    if not isinstance(data, list):
        raise ValidationError("Manifest must be a JSON array of participants")

    participants = []
    for entry in data:
        try:
            pid = str(entry['participant_id'])
            segments = [_segment_from_dict(pid, seg, i) for i, seg in enumerate(entry['segments'])]
            participants.append(Participant(participant_id=pid, trait_items=entry['traits'], segments=segments))
        except (KeyError, TypeError) as e:
            raise ValidationError("Malformed participant entry: %r" % (e,))
    logger.debug("Loaded manifest with %d participants", len(participants))
    return Manifest(tuple(participants))


def dump_manifest(manifest, stream):
    json.dump([p.to_dict() for p in manifest], stream, indent=2, sort_keys=True)
    stream.write('\n')


MANIFEST_FILENAME = 'manifest.json'


@dataclasses.dataclass(frozen=True)
class Dataset:
    """A manifest plus every participant's recordings."""
    manifest: Manifest
    recordings: typing.Mapping[str, typing.Mapping[Channel, SensorRecording]]

    def participant_recordings(self, participant_id):
        return self.recordings[participant_id]

    def segment_recordings(self, segment):
        """Slice every channel of a participant to one segment."""
        return {
            channel: slice_segment(rec, segment)
            for channel, rec in self.recordings[segment.participant_id].items()
        }

    def restrict(self, participant_ids):
        manifest = self.manifest.restrict(participant_ids)
        return Dataset(manifest, {pid: self.recordings[pid] for pid in manifest.participant_ids})


def dataset_files(directory, manifest):
    """List every file of a dataset directory, manifest first."""
    files = [os.path.join(directory, MANIFEST_FILENAME)]
    for pid in manifest.participant_ids:
        for channel in Channel:
            files.append(os.path.join(directory, pid, channel.filename))
    return files


def load_dataset(directory):
    """Load ``manifest.json`` and ``<participant>/<CHANNEL>.csv`` files."""
    with open(os.path.join(directory, MANIFEST_FILENAME), 'r', encoding='utf-8') as f:
        manifest = load_manifest(f)
    recordings = {}
    for pid in manifest.participant_ids:
        recordings[pid] = {}
        for channel in Channel:
            path = os.path.join(directory, pid, channel.filename)
            if not os.path.exists(path):
                raise ValidationError("Missing %s export for participant %s: %s" % (channel, pid, path))
            recordings[pid][channel] = read_sensor_csv(path, channel)
    logger.info("Loaded dataset %s: %d participants", directory, len(manifest))
    return Dataset(manifest, recordings)
