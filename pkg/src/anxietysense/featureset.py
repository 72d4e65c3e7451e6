# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Feature tables: windowed extraction per phase segment, per-person
standardization, outlier clipping and outcome labels.

A FeatureTable holds one row per (participant, social experience, social
phase). Undefined features are NaN and listed in the row's ``flags`` column as
``<feature>:<reason>``; nothing is silently replaced by zero.
"""

import dataclasses
import json
import logging
import math
import typing

import joblib
import numpy as np
import pandas as pd

from . import eda, ingest, motion, ppg
from .base import (
    BIOBEHAVIORAL_SENSORS, ComputationError, EmptySegment, EmptyWindowSet, InsufficientData,
    MissingReference, Outcome, Sensor, WindowMode,
)
from .utils import write_csv, write_json

logger = logging.getLogger('anxietysense.featureset')

WINDOW_SECONDS = 60.0
MIN_REMAINDER_SECONDS = 30.0

ID_COLUMNS = ('participant_id', 'experience', 'phase')
REPORT_COLUMNS = ('self_report', 'baseline_self_report')
FLAGS_COLUMN = 'flags'

CONTEXT_FEATURES = ('group_size_code', 'eval_code', 'phase_code')
TRAIT_FEATURES = ('sias_total', 'bfne_total', 'ders_mean', 'dass_dep_total')


@dataclasses.dataclass(frozen=True)
class FeatureInfo:
    name: str
    sensor: Sensor
    domain: str
    units: str
    nullable: bool

    def to_dict(self):
        return {'sensor': self.sensor.value, 'domain': self.domain, 'units': self.units, 'nullable': self.nullable}


_HRV_UNITS = {
    'CVNN': 'ratio', 'CVSD': 'ratio', 'MCVNN': 'ratio', 'HTI': 'ratio',
    'LF': 'ms^2', 'HF': 'ms^2', 'VHF': 'ms^2', 'LFHF': 'ratio', 'LFn': 'ratio', 'HFn': 'ratio',
    'LnHF': 'ln(ms^2)', 'CSI': 'ratio', 'CVI': 'log10(ms^2)', 'IALS': '1/interval',
    'PIP': '%', 'PSS': '%', 'PAS': '%', 'GI': '%', 'SI': '%', 'AI': '%', 'PI': '%',
}


def _build_catalog():
    catalog = []
    for names, domain in ((ppg.TIME_FEATURES, 'time'), (ppg.FREQUENCY_FEATURES, 'frequency'),
                          (ppg.NONLINEAR_FEATURES, 'nonlinear')):
        for name in names:
            catalog.append(FeatureInfo('HRV_' + name, Sensor.PPG, domain, _HRV_UNITS.get(name, 'ms'), True))
    for name in eda.EVENT_FEATURES:
        units = 'count' if name.endswith('_N') else ('s' if name.endswith(('Time', 'Recovery')) else 'uS')
        catalog.append(FeatureInfo(name, Sensor.EDA, 'events', units, not name.endswith('_N')))
    for name in eda.EDA_FEATURES[len(eda.EVENT_FEATURES):]:
        units = 'uS^2' if name.endswith('_Var') else ('1' if name.endswith(('Skew', 'Kurtosis')) else 'uS')
        catalog.append(FeatureInfo(name, Sensor.EDA, 'tonic' if '_Tonic_' in name else 'phasic', units, False))
    for name in motion.ACC_FEATURES:
        catalog.append(FeatureInfo(name, Sensor.ACC, 'motion', 'g', False))
    for name in motion.TEMP_FEATURES:
        catalog.append(FeatureInfo(name, Sensor.TEMP, 'temperature', 'degC', False))
    for name in CONTEXT_FEATURES:
        catalog.append(FeatureInfo(name, Sensor.CONTEXT, 'context', 'code', False))
    for name in TRAIT_FEATURES:
        catalog.append(FeatureInfo(name, Sensor.TRAIT, 'trait', 'score', False))
    return tuple(catalog)


CATALOG = _build_catalog()
FEATURES = {info.name: info for info in CATALOG}


def feature_names(sensors=None):
    """Feature columns in catalog order, optionally restricted to some sensors."""
    if sensors is None:
        return [info.name for info in CATALOG]
    sensors = {Sensor(s) for s in sensors}
    return [info.name for info in CATALOG if info.sensor in sensors]


BIOBEHAVIORAL_FEATURES = tuple(feature_names(BIOBEHAVIORAL_SENSORS))
COLUMNS = ID_COLUMNS + tuple(feature_names()) + REPORT_COLUMNS + (FLAGS_COLUMN,)


def _format_flags(flags):
    return ';'.join(sorted(flags))


def parse_flags(text):
    if not isinstance(text, str) or not text:
        return set()
    return set(text.split(';'))


@dataclasses.dataclass(frozen=True)
class FeatureTable:
    """The assembled feature table.

    Attributes:
        frame (pd.DataFrame): columns in COLUMNS order
        skipped (tuple): (participant, experience, phase, reason) for segments
            that produced no row
    """
    frame: pd.DataFrame
    skipped: typing.Tuple[typing.Tuple[str, str, str, str], ...] = ()

    def __post_init__(self):
        missing = [col for col in COLUMNS if col not in self.frame.columns]
        if missing:
            raise InsufficientData("Feature table lacks column(s): %s" % ', '.join(missing))
        frame = self.frame.loc[:, list(COLUMNS)].reset_index(drop=True)
        frame['participant_id'] = frame['participant_id'].astype(str)
        frame[FLAGS_COLUMN] = frame[FLAGS_COLUMN].fillna('').astype(str)
        object.__setattr__(self, 'frame', frame)
        object.__setattr__(self, 'skipped', tuple(tuple(s) for s in self.skipped))

    def __len__(self):
        return len(self.frame)

    @property
    def participant_ids(self):
        return list(pd.unique(self.frame['participant_id']))

    @property
    def groups(self):
        return self.frame['participant_id'].to_numpy()

    def features(self, names):
        return self.frame.loc[:, list(names)].to_numpy(dtype=float)

    def flags(self, index):
        return parse_flags(self.frame.at[index, FLAGS_COLUMN])

    def replace(self, frame):
        return FeatureTable(frame=frame, skipped=self.skipped)

    def restrict(self, participant_ids):
        keep = self.frame['participant_id'].isin(set(participant_ids))
        return self.replace(self.frame.loc[keep])

    def to_csv(self, path):
        write_csv(self.frame, path)

    @classmethod
    def read_csv(cls, path):
        frame = pd.read_csv(path, dtype={'participant_id': str, FLAGS_COLUMN: str}, keep_default_na=True)
        return cls(frame=frame)

    @staticmethod
    def schema():
        return {
            'columns': list(COLUMNS),
            'features': {info.name: info.to_dict() for info in CATALOG},
        }

    def write_schema(self, path):
        write_json(self.schema(), path)


def window_bounds(t_start, t_end, mode=WindowMode.AVERAGED):
    """Window spans covering [t_start, t_end).

    Averaged mode cuts consecutive 60 s windows and keeps a trailing remainder
    of at least 30 s as a final, shorter window. Whole mode uses one window.

    Raises:
        EmptyWindowSet: no window fits
    """
    duration = t_end - t_start
    if WindowMode(mode) is WindowMode.WHOLE:
        if duration <= 0:
            raise EmptyWindowSet("Empty span [%.3f, %.3f)" % (t_start, t_end))
        return [(t_start, t_end)]
    n_full = int(math.floor(duration / WINDOW_SECONDS + 1e-9))
    bounds = [(t_start + i * WINDOW_SECONDS, t_start + (i + 1) * WINDOW_SECONDS) for i in range(n_full)]
    remainder = duration - n_full * WINDOW_SECONDS
    if remainder >= MIN_REMAINDER_SECONDS - 1e-9:
        bounds.append((t_start + n_full * WINDOW_SECONDS, t_end))
    if not bounds:
        raise EmptyWindowSet("A %.1fs span holds no window (>= %gs needed)" % (duration, MIN_REMAINDER_SECONDS))
    return bounds


def _window_mask(times, lo, hi):
    return (times >= lo) & (times < hi)


@dataclasses.dataclass(frozen=True)
class WindowedFeatures:
    """Biobehavioral features of one segment, averaged over its windows.

    Attributes:
        values (dict): feature name -> value (NaN when no window contributed)
        flags (frozenset): ``<feature>:<reason>`` entries
        n_windows (int): number of windows
        hrv_windows (int): windows with enough NN intervals for HRV
    """
    values: typing.Mapping[str, float]
    flags: typing.FrozenSet[str]
    n_windows: int
    hrv_windows: int


class _SegmentSignals(object):
    """Whole-segment preprocessing shared by every window of the segment."""

    def __init__(self, recordings):
        self.recordings = recordings
        self.nn = None
        self.eda_tracks = None
        self.events = []

        bvp = recordings[ingest.Channel.BVP]
        try:
            cleaned = ppg.clean_ppg(bvp.samples, bvp.rate)
            peaks = ppg.detect_systolic_peaks(cleaned, bvp.rate)
            self.nn = ppg.build_nn_series(peaks, bvp.rate, t0=bvp.start_time)
        except ComputationError as e:
            logger.debug("No NN series for segment: %s", e)

        rec = recordings[ingest.Channel.EDA]
        try:
            cleaned = eda.clean_eda(rec.samples, rec.rate)
            tonic, phasic = eda.decompose_tonic_phasic(cleaned, rec.rate)
        except ComputationError as e:
            logger.debug("No EDA decomposition for segment: %s", e)
        else:
            self.eda_tracks = (rec.times, tonic, phasic)
            self.events = eda.detect_scr(phasic, rec.rate, t0=rec.start_time, signal=cleaned)

    def hrv(self, lo, hi):
        if self.nn is None:
            return None
        beats = self.nn.beat_times
        inside = beats[_window_mask(beats, lo, hi)]
        if len(inside) - 1 < ppg.MIN_INTERVALS:
            return None
        try:
            return {'HRV_' + k: v for k, v in ppg.hrv_features(ppg.NnSeries.from_beat_times(inside)).items()}
        except ComputationError as e:
            logger.debug("HRV window [%.1f, %.1f) skipped: %s", lo, hi, e)
            return None

    def eda(self, lo, hi):
        if self.eda_tracks is None:
            return None, frozenset()
        times, tonic, phasic = self.eda_tracks
        mask = _window_mask(times, lo, hi)
        if not mask.any():
            return None, frozenset()
        events = [ev for ev in self.events if lo <= ev.onset_time < hi]
        result = eda.eda_features(tonic[mask], phasic[mask], events)
        return result.values, result.degenerate

    def motion(self, lo, hi):
        values = {}
        acc = self.recordings[ingest.Channel.ACC3]
        mask = _window_mask(acc.times, lo, hi)
        if mask.any():
            values.update(motion.acc_features(acc.samples[mask]))
        temp = self.recordings[ingest.Channel.TEMP]
        mask = _window_mask(temp.times, lo, hi)
        if mask.any():
            values.update(motion.temp_features(temp.samples[mask]))
        return values


def window_features(recordings, t_start, t_end, mode=WindowMode.AVERAGED):
    """Biobehavioral features of one segment.

    Peaks, NN intervals, the tonic/phasic split and SCR events are computed once
    over the whole segment; per-window statistics are then averaged over the
    windows that produced them.

    Args:
        recordings (dict): Channel -> SensorRecording, sliced to the segment
        t_start (float): segment start
        t_end (float): segment end
        mode (WindowMode): averaged 60 s windows or a single whole-segment window

    Raises:
        EmptyWindowSet: the segment holds no window
    """
    bounds = window_bounds(t_start, t_end, mode)
    signals = _SegmentSignals(recordings)

    collected = {name: [] for name in BIOBEHAVIORAL_FEATURES}
    flags = set()
    hrv_windows = 0
    for lo, hi in bounds:
        hrv = signals.hrv(lo, hi)
        if hrv is not None:
            hrv_windows += 1
            for name, value in hrv.items():
                collected[name].append(value)
        eda_values, degenerate = signals.eda(lo, hi)
        flags |= {'%s:degenerate' % name for name in degenerate}
        for name, value in (eda_values or {}).items():
            collected[name].append(value)
        for name, value in signals.motion(lo, hi).items():
            collected[name].append(value)

    values = {}
    for name, window_values in collected.items():
        finite = [v for v in window_values if not math.isnan(v)]
        if finite:
            values[name] = float(np.mean(finite))
        else:
            values[name] = float('nan')
            flags.add('%s:null' % name)
    return WindowedFeatures(values=values, flags=frozenset(flags), n_windows=len(bounds), hrv_windows=hrv_windows)


def _sorted_social_segments(participant):
    order = {(exp, phase): i for i, (exp, phase) in enumerate(
        (exp, phase) for exp in ingest.SOCIAL_EXPERIENCES for phase in ingest.SOCIAL_PHASES)}
    return sorted(participant.social_segments, key=lambda seg: order[(seg.experience, seg.phase)])


def _participant_rows(participant, recordings, mode):
    dataset = ingest.Dataset(ingest.Manifest((participant,)), {participant.participant_id: recordings})
    traits = participant.traits.as_dict()
    rows, skipped = [], []
    for seg in _sorted_social_segments(participant):
        try:
            features = window_features(dataset.segment_recordings(seg), seg.t_start, seg.t_end, mode)
        except (EmptySegment, EmptyWindowSet) as e:
            logger.warning("Segment %s skipped: %s", '/'.join(seg.key), e)
            skipped.append(seg.key + (str(e),))
            continue
        baseline = participant.segment(seg.experience, ingest.Phase.BASELINE)
        row = {
            'participant_id': participant.participant_id,
            'experience': seg.experience.value,
            'phase': seg.phase.value,
        }
        row.update(features.values)
        row.update(ingest.code_context(seg.experience, seg.phase).as_dict())
        row.update(traits)
        row['self_report'] = float('nan') if seg.self_report is None else seg.self_report
        row['baseline_self_report'] = (
            float('nan') if baseline is None or baseline.self_report is None else baseline.self_report)
        row[FLAGS_COLUMN] = _format_flags(features.flags)
        rows.append(row)
    return rows, skipped


def build_feature_table(dataset, mode=WindowMode.AVERAGED, jobs=1):
    """Featurize every social segment of a dataset.

    Participants are processed in parallel; rows keep manifest order.
    """
    mode = WindowMode(mode)
    results = joblib.Parallel(n_jobs=jobs)(
        joblib.delayed(_participant_rows)(p, dataset.recordings[p.participant_id], mode)
        for p in dataset.manifest
    )
    rows, skipped = [], []
    for participant_rows, participant_skipped in results:
        rows.extend(participant_rows)
        skipped.extend(participant_skipped)
    if not rows:
        raise InsufficientData("No social segment produced a feature row")
    frame = pd.DataFrame(rows, columns=list(COLUMNS))
    logger.info("Built %s feature table: %d rows, %d skipped segments", mode, len(frame), len(skipped))
    return FeatureTable(frame=frame, skipped=tuple(skipped))


def standardize_per_person(table, columns=BIOBEHAVIORAL_FEATURES):
    """Z-score features within each participant (sample std).

    Zero-variance features become 0 and are flagged ``degenerate``; rows of a
    participant with a single row cannot be standardized, they become NaN and
    carry a ``standardize:single_row`` flag.
    """
    frame = table.frame.copy()
    columns = list(columns)
    flags = frame[FLAGS_COLUMN].map(parse_flags)
    grouped = frame.groupby('participant_id', sort=False)[columns]
    mean = grouped.transform('mean')
    std = grouped.transform('std')
    sizes = frame.groupby('participant_id', sort=False)['participant_id'].transform('size')

    standardized = (frame[columns] - mean) / std
    constant = (std == 0) & frame[columns].notna()
    standardized = standardized.mask(constant, 0.0)
    single = (sizes < 2).to_numpy()
    standardized.loc[single, :] = np.nan
    frame[columns] = standardized

    for i in range(len(frame)):
        if single[i]:
            flags.iat[i] = flags.iat[i] | {'standardize:single_row'}
            continue
        row_constant = constant.iloc[i]
        if row_constant.any():
            flags.iat[i] = flags.iat[i] | {'%s:degenerate' % name for name in row_constant.index[row_constant]}
    frame[FLAGS_COLUMN] = flags.map(_format_flags)
    return table.replace(frame)


def clip_outliers(table, columns=BIOBEHAVIORAL_FEATURES):
    """Winsorize each feature to its sample-wide Tukey fences (Q1 - 1.5 IQR, Q3 + 1.5 IQR)."""
    frame = table.frame.copy()
    for name in columns:
        values = frame[name].to_numpy(dtype=float)
        finite = values[~np.isnan(values)]
        if not len(finite):
            continue
        q1, q3 = np.percentile(finite, [25, 75])
        iqr = q3 - q1
        frame[name] = np.clip(values, q1 - 1.5 * iqr, q3 + 1.5 * iqr)
    return table.replace(frame)


@dataclasses.dataclass(frozen=True)
class OutcomeLabel:
    outcome: Outcome
    value: int


def _missing(value):
    return value is None or (isinstance(value, float) and math.isnan(value))


def label_outcome(row, participant_reports, outcome):
    """Binary anxious status of one row.

    Args:
        row (mapping): holds ``self_report`` and, for the baseline outcome,
            ``baseline_self_report``
        participant_reports (sequence): every self-report of that participant
        outcome (Outcome): the operationalization

    Raises:
        MissingReference: the needed report or reference is absent
    """
    outcome = Outcome(outcome)
    report = row['self_report']
    if _missing(report):
        raise MissingReference("Row has no self-report")
    if outcome is Outcome.RAW_GT3:
        value = report > 3
    elif outcome is Outcome.EXTREME_EQ5:
        value = report == 5
    elif outcome is Outcome.WITHIN_PERSON_GT0:
        reports = [r for r in participant_reports if not _missing(r)]
        if not reports:
            raise MissingReference("No self-reports to compute the participant mean")
        value = report > np.mean(reports)
    else:
        baseline = row.get('baseline_self_report')
        if _missing(baseline):
            raise MissingReference("Row has no baseline self-report")
        value = report > baseline
    return OutcomeLabel(outcome=outcome, value=int(value))


def label_table(table, outcome, strict=True):
    """Labels for every row of a table, as a float Series (NaN when unlabelled).

    Raises:
        MissingReference: a row lacks a reference and ``strict`` is set
    """
    frame = table.frame
    reports = frame.groupby('participant_id', sort=False)['self_report'].apply(list).to_dict()
    labels = np.full(len(frame), np.nan)
    for i, row in enumerate(frame.loc[:, ['participant_id'] + list(REPORT_COLUMNS)].to_dict('records')):
        try:
            labels[i] = label_outcome(row, reports[row['participant_id']], outcome).value
        except MissingReference:
            if strict:
                raise
    n_missing = int(np.isnan(labels).sum())
    if n_missing:
        logger.warning("%d row(s) without %s label", n_missing, Outcome(outcome))
    return pd.Series(labels, index=frame.index, name=str(Outcome(outcome)))


def write_table(table, csv_path, schema_path):
    table.to_csv(csv_path)
    table.write_schema(schema_path)


def read_schema(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)
