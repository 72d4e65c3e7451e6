# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Analyses and reports.

Each analysis returns plain pandas tables; ``emit_report`` writes them under
an output directory (``descriptives/``, ``screen/``, ``cv/``, ``ablations/``,
``individual/``) together with SVG plots and ``run_manifest.json``.
``AnalysisRun`` chains the stages of a run and records their history.
"""

import dataclasses
import itertools
import logging
import os
import typing

import joblib
import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from . import featureset, ingest, ml, runflow, stats
from .base import (
    BIOBEHAVIORAL_SENSORS, AnxietySenseError, ComputationError, DegenerateInput, DegeneratePairs,
    FeatureVariant, InsufficientData, InvalidSpec, NotConverged, Outcome, ReportIOError, Sensor,
    Standardization, WindowMode,
)
from .utils import derive_seed, file_digest, write_csv, write_json

logger = logging.getLogger('anxietysense.experiments')

ANALYSES = ('descriptives', 'contexts', 'screen', 'cv', 'ablations', 'individual')
LOW_VARIABILITY_SD = 0.5
MIN_PAIRS = 5
SIGNIFICANCE = 0.05
SVG_SALT = 'anxietysense'

COMPARISON_COLUMNS = ('Model', 'Configuration', 'Accuracy', 'Accuracy SD', 'Macro-F1', 'Macro-F1 SD')
BASELINE_MODEL = 'Baseline (Random Guess)'

MODEL_TITLES = {
    'gradient_boosting': 'Gradient Boost',
    'xgboost': 'XGBoost',
    'random_forest': 'Random Forest',
    'decision_tree': 'Decision Tree',
    'mlp': 'Multilayer Perceptron',
    'logistic_regression': 'Logistic Regression',
    'linear_svm': 'SVM Classifier',
    'knn': 'K-Nearest Neighbors',
}


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """What to run, and on which features.

    Attributes:
        analyses (tuple of str): subset of ANALYSES
        variant (FeatureVariant): biobehavioral features plus trait and/or context
        sensors (tuple of Sensor): biobehavioral sensors in use
        window (WindowMode): averaged 60 s windows or one whole-segment window
        outcome (Outcome): label operationalization
        standardization (Standardization): per-person z-scoring before CV
        k_sweep (tuple of int): ascending K values of the top-K sweep
        k_grid (tuple of int): K candidates tuned inside CV
        repetitions (int): CV repetitions
        seed (int): root seed
        models (tuple of str): ModelSpec names, all packaged models when empty
        jobs (int): joblib workers
        exclude_low_variability (bool): drop participants whose self-report
            sd is below 0.5 before the screen and CV
        out_dir (str): report directory
    """
    analyses: typing.Tuple[str, ...] = ANALYSES
    variant: FeatureVariant = FeatureVariant.BIO_ONLY
    sensors: typing.Tuple[Sensor, ...] = BIOBEHAVIORAL_SENSORS
    window: WindowMode = WindowMode.AVERAGED
    outcome: Outcome = Outcome.RAW_GT3
    standardization: Standardization = Standardization.PERSON
    k_sweep: typing.Tuple[int, ...] = (1, 3, 5, 10, 20)
    k_grid: typing.Tuple[int, ...] = ml.DEFAULT_K_GRID
    repetitions: int = 1
    seed: int = 0
    models: typing.Tuple[str, ...] = ()
    jobs: int = 1
    exclude_low_variability: bool = False
    out_dir: str = 'report'

    def __post_init__(self):
        object.__setattr__(self, 'variant', FeatureVariant(self.variant))
        object.__setattr__(self, 'window', WindowMode(self.window))
        object.__setattr__(self, 'outcome', Outcome(self.outcome))
        object.__setattr__(self, 'standardization', Standardization(self.standardization))
        object.__setattr__(self, 'sensors', tuple(Sensor(s) for s in self.sensors))
        object.__setattr__(self, 'analyses', tuple(self.analyses))
        object.__setattr__(self, 'models', tuple(self.models))
        if not self.sensors:
            raise InvalidSpec("At least one sensor is required")
        if not all(s.is_biobehavioral for s in self.sensors):
            raise InvalidSpec("Sensors must be biobehavioral, got %s" % ', '.join(map(str, self.sensors)))
        unknown = set(self.analyses) - set(ANALYSES)
        if unknown:
            raise InvalidSpec("Unknown analyses: %s" % ', '.join(sorted(unknown)))
        if list(self.k_sweep) != sorted(set(self.k_sweep)) or not self.k_sweep or min(self.k_sweep) < 1:
            raise InvalidSpec("k sweep must be strictly ascending positive integers, got %r" % (self.k_sweep,))

    def cv_config(self, **changes):
        base = ml.CvConfig(
            k_grid=self.k_grid, outcome=self.outcome, standardization=self.standardization,
            repetitions=self.repetitions, seed=self.seed, jobs=self.jobs,
        )
        return dataclasses.replace(base, **changes)

    def to_dict(self):
        return {
            'analyses': list(self.analyses),
            'variant': self.variant.value,
            'sensors': [s.value for s in self.sensors],
            'window': self.window.value,
            'outcome': self.outcome.value,
            'standardization': self.standardization.value,
            'k_sweep': list(self.k_sweep),
            'k_grid': list(self.k_grid),
            'repetitions': self.repetitions,
            'seed': self.seed,
            'models': list(self.models),
            'exclude_low_variability': self.exclude_low_variability,
        }


def select_features(variant, sensors=BIOBEHAVIORAL_SENSORS):
    """Feature columns of a feature-set variant restricted to some sensors."""
    variant = FeatureVariant(variant)
    families = [Sensor(s) for s in sensors]
    if variant.with_trait:
        families.append(Sensor.TRAIT)
    if variant.with_context:
        families.append(Sensor.CONTEXT)
    return featureset.feature_names(families)


def select_specs(names=(), grids=None):
    specs = ml.load_model_specs(grids)
    if not names:
        return list(specs.values())
    missing = [name for name in names if name not in specs]
    if missing:
        raise InvalidSpec("Unknown model(s): %s" % ', '.join(missing))
    return [specs[name] for name in names]


# Cohort descriptives
# ===================


def reports_frame(manifest):
    """Self-reports of every social segment, one row each."""
    records = [
        {'participant_id': seg.participant_id, 'experience': seg.experience.value,
         'phase': seg.phase.value, 'self_report': seg.self_report}
        for seg in manifest.segments(social_only=True) if seg.self_report is not None
    ]
    return pd.DataFrame(records, columns=['participant_id', 'experience', 'phase', 'self_report'])


def reports_from_table(table):
    frame = table.frame.loc[table.frame['self_report'].notna(), ['participant_id', 'experience', 'phase', 'self_report']]
    return frame.assign(self_report=frame['self_report'].astype(int)).reset_index(drop=True)


@dataclasses.dataclass(frozen=True, eq=False)
class Descriptives:
    histogram: pd.DataFrame
    adjusted: pd.DataFrame
    participants: pd.DataFrame
    at_least_once: pd.DataFrame

    @property
    def low_variability(self):
        return list(self.participants.loc[self.participants['low_variability'], 'participant_id'])


def describe_reports(reports):
    """Descriptive summaries of a frame of self-reports."""
    scores = pd.Index(range(1, 6), name='score')
    counts = reports['self_report'].value_counts().reindex(scores, fill_value=0)
    histogram = pd.DataFrame({
        'score': scores, 'count': counts.to_numpy(),
        'proportion': counts.to_numpy() / max(1, len(reports)),
    })

    grouped = reports.groupby('participant_id', sort=False)['self_report']
    adjusted = reports.assign(adjusted=reports['self_report'] - grouped.transform('mean'))

    participants = grouped.agg(
        n='size', mean='mean', sd=lambda s: s.std(ddof=1), median='median',
        q1=lambda s: s.quantile(0.25), q3=lambda s: s.quantile(0.75),
    ).reset_index()
    participants['iqr'] = participants['q3'] - participants['q1']
    participants['low_variability'] = participants['sd'].fillna(0.0) < LOW_VARIABILITY_SD

    n_participants = max(1, reports['participant_id'].nunique())
    reported = [reports.loc[reports['self_report'] == s, 'participant_id'].nunique() / n_participants
                for s in scores]
    at_least_once = pd.DataFrame({
        'score': scores,
        'proportion_reporting': reported,
        'cumulative_proportion': np.cumsum(histogram['proportion'].to_numpy()),
    })
    return Descriptives(histogram=histogram, adjusted=adjusted, participants=participants,
                        at_least_once=at_least_once)


def cohort_descriptives(manifest):
    """Score distribution, within-person adjusted scores and per-participant spread."""
    return describe_reports(reports_frame(manifest))


# Context comparisons
# ===================

_GROUPINGS = (
    ('experience', lambda r: r['experience'], [e.value for e in ingest.SOCIAL_EXPERIENCES]),
    ('phase', lambda r: r['phase'], [p.value for p in ingest.SOCIAL_PHASES]),
    ('group', lambda r: r['experience'].map(lambda e: 'group' if ingest.Experience(e).is_group else 'dyad'),
     ['dyad', 'group']),
    ('evaluation', lambda r: r['experience'].map(
        lambda e: 'evaluative' if ingest.Experience(e).is_evaluative else 'non_evaluative'),
     ['evaluative', 'non_evaluative']),
)

CONTEXT_COLUMNS = ('grouping', 'context_a', 'context_b', 'n', 'statistic', 'p', 'adjusted_p', 'method', 'skipped')


def compare_contexts(reports, min_pairs=MIN_PAIRS):
    """Paired Wilcoxon tests between contexts on per-participant mean reports.

    Comparisons with too few pairs or only zero differences are kept as
    skipped rows with their reason. Adjustment is per grouping.
    """
    rows = []
    for grouping, key, contexts in _GROUPINGS:
        means = reports.assign(context=key(reports)).pivot_table(
            index='participant_id', columns='context', values='self_report', aggfunc='mean')
        first = len(rows)
        for context_a, context_b in itertools.combinations(contexts, 2):
            row = {'grouping': grouping, 'context_a': context_a, 'context_b': context_b}
            if context_a not in means or context_b not in means:
                pairs = pd.DataFrame(columns=[context_a, context_b])
            else:
                pairs = means[[context_a, context_b]].dropna()
            row['n'] = len(pairs)
            if len(pairs) < min_pairs:
                row['skipped'] = "%d pair(s), %d needed" % (len(pairs), min_pairs)
                rows.append(row)
                continue
            try:
                result = stats.wilcoxon_signed_rank(pairs[context_a], pairs[context_b])
            except DegeneratePairs as e:
                row['skipped'] = str(e)
            else:
                row.update(statistic=result.statistic, p=result.p, method=result.method)
            rows.append(row)
        tested = [i for i in range(first, len(rows)) if 'p' in rows[i]]
        adjusted = stats.bh_adjust([rows[i]['p'] for i in tested])
        for i, value in zip(tested, adjusted):
            rows[i]['adjusted_p'] = value
    return pd.DataFrame(rows, columns=list(CONTEXT_COLUMNS))


def context_comparisons(manifest, min_pairs=MIN_PAIRS):
    """Pairwise context comparisons within experience, phase, group and evaluation groupings."""
    return compare_contexts(reports_frame(manifest), min_pairs=min_pairs)


def context_quartiles(reports):
    """Quartiles of per-participant mean reports in each context of each grouping."""
    records = []
    for grouping, key, contexts in _GROUPINGS:
        means = reports.assign(context=key(reports)).groupby(['context', 'participant_id'])['self_report'].mean()
        for context in contexts:
            if context not in means.index.get_level_values(0):
                continue
            values = means.loc[context].to_numpy(dtype=float)
            q1, q2, q3 = np.percentile(values, [25, 50, 75])
            records.append({'grouping': grouping, 'context': context, 'n': len(values),
                            'min': values.min(), 'q1': q1, 'median': q2, 'q3': q3, 'max': values.max()})
    return pd.DataFrame(records, columns=['grouping', 'context', 'n', 'min', 'q1', 'median', 'q3', 'max'])


# Per-feature screen
# ==================


def _screen_feature(table, feature, labels, min_participants):
    row = {'Feature': feature, 'Sensor': featureset.FEATURES[feature].sensor.value, 'error': ''}
    try:
        fit = stats.fit_mixed_logit(table, feature, None, min_participants=min_participants, labels=labels)
    except NotConverged as e:
        fit = e.partial
        row['error'] = str(e)
    except (ComputationError, InsufficientData, DegenerateInput) as e:
        row['error'] = '%s: %s' % (e.__class__.__name__, e)
        return row
    row.update({'Estimate': fit.beta1, 'Std. Error': fit.se1, 'z value': fit.z, 'p value': fit.p})
    return row


@dataclasses.dataclass(frozen=True, eq=False)
class ScreenReport:
    full: pd.DataFrame

    @property
    def significant(self):
        return self.full.loc[self.full['p value'] < SIGNIFICANCE].reset_index(drop=True)


def per_feature_screen(table, outcome, features=None, jobs=1, min_participants=10):
    """Mixed logistic fit of the outcome on each feature, one at a time.

    Biobehavioral features are winsorized first; B-H adjustment runs within
    each sensor channel. Failed fits stay in the report with their error.
    """
    if features is None:
        features = featureset.feature_names(BIOBEHAVIORAL_SENSORS + (Sensor.CONTEXT,))
    table = featureset.clip_outliers(table)
    labels = featureset.label_table(table, outcome, strict=False)
    rows = joblib.Parallel(n_jobs=jobs)(
        joblib.delayed(_screen_feature)(table, feature, labels, min_participants) for feature in features
    )
    columns = list(stats.SCREEN_COLUMNS[:-1]) + ['Sensor', 'error']
    frame = pd.DataFrame(rows).reindex(columns=columns)
    frame.insert(5, 'Adjusted p value', stats.bh_adjust(frame['p value'].to_numpy(dtype=float), frame['Sensor']))
    return ScreenReport(full=frame)


# Cross-validation and ablations
# ==============================


def drop_low_variability(table):
    """Remove participants whose self-reports vary less than the threshold."""
    described = describe_reports(reports_from_table(table))
    low = set(described.low_variability)
    if low:
        logger.info("Excluding %d low-variability participant(s)", len(low))
    return table.restrict([pid for pid in table.participant_ids if pid not in low])


def configuration_name(variant, outcome, standardization, sensors=None, k=None):
    parts = [str(FeatureVariant(variant)), str(Outcome(outcome)), str(Standardization(standardization))]
    if sensors is not None:
        parts.insert(0, '+'.join(str(Sensor(s)) for s in sensors))
    if k is not None:
        parts.append('k=%d' % k)
    return '/'.join(parts)


def model_comparison(results):
    """One row per model per configuration, plus a random-guess baseline row.

    Args:
        results (list of (configuration, CvResult))
    """
    rows = []
    for configuration in dict.fromkeys(conf for conf, _ in results):
        for conf, result in results:
            if conf != configuration:
                continue
            rows.append({
                'Model': MODEL_TITLES.get(result.model, result.model), 'Configuration': conf,
                'Accuracy': result.accuracy_mean, 'Accuracy SD': result.accuracy_sd,
                'Macro-F1': result.f1_mean, 'Macro-F1 SD': result.f1_sd,
            })
        rows.append({'Model': BASELINE_MODEL, 'Configuration': configuration,
                     'Accuracy': 0.5, 'Accuracy SD': 0.0, 'Macro-F1': 0.5, 'Macro-F1 SD': 0.0})
    return pd.DataFrame(rows, columns=list(COMPARISON_COLUMNS))


class CellCache(object):
    """CV results of ablation cells, computed once per run."""

    def __init__(self, table):
        self.table = table
        self._cells = {}
        self.hits = 0

    def get(self, features, spec, cv_config):
        key = (tuple(features), spec.name, cv_config)
        if key in self._cells:
            self.hits += 1
            return self._cells[key]
        design = ml.Design.from_table(self.table, features, cv_config.outcome, cv_config.standardization)
        try:
            result = ml.nested_loso_cv(design, spec, cv_config)
        except AnxietySenseError as e:
            logger.warning("Cell %s/%s failed: %s", spec.name, len(features), e)
            result = e
        self._cells[key] = result
        return result


ABLATION_COLUMNS = (
    'section', 'variant', 'sensors', 'outcome', 'processing', 'k', 'model',
    'accuracy_mean', 'accuracy_sd', 'f1_mean', 'f1_sd', 'folds', 'skipped_folds', 'top_features', 'error',
)
TOP_FEATURES = 5


def _cell_row(section, variant, sensors, cv_config, k, spec, result):
    row = {
        'section': section, 'variant': str(variant), 'sensors': '+'.join(str(s) for s in sensors),
        'outcome': str(cv_config.outcome), 'processing': str(cv_config.standardization),
        'k': '' if k is None else k, 'model': spec.name,
    }
    if isinstance(result, Exception):
        row['error'] = '%s: %s' % (result.__class__.__name__, result)
        return row
    row.update({
        'accuracy_mean': result.accuracy_mean, 'accuracy_sd': result.accuracy_sd,
        'f1_mean': result.f1_mean, 'f1_sd': result.f1_sd,
        'folds': len(result.completed_folds), 'skipped_folds': len(result.skipped_folds),
        'top_features': ';'.join(name for name, _ in result.feature_frequencies()[:TOP_FEATURES]),
        'error': '',
    })
    return row


def run_ablations(table, config, specs, cache=None):
    """Feature-set, sensor, top-K, outcome and processing ablations.

    Sections:
        variants: four feature-set variants x raw / within-person outcome
        sensors: each sensor alone, without and with context + trait
        topk: K sweep per sensor and for all sensors
        outcomes: every outcome operationalization on the configured variant
        processing: per-person standardization vs none
    """
    cache = cache or CellCache(table)
    base = config.cv_config()
    rows = []

    def cell(section, variant, sensors, cv_config, k=None):
        features = select_features(variant, sensors)
        for spec in specs:
            rows.append(_cell_row(section, variant, sensors, cv_config, k, spec,
                                  cache.get(features, spec, cv_config)))

    for variant in FeatureVariant:
        for outcome in (Outcome.RAW_GT3, Outcome.WITHIN_PERSON_GT0):
            cell('variants', variant, config.sensors, dataclasses.replace(base, outcome=outcome))
    for sensor in config.sensors:
        cell('sensors', FeatureVariant.BIO_ONLY, (sensor,), base)
        cell('sensors', FeatureVariant.FULL, (sensor,), base)
    families = [(sensor,) for sensor in config.sensors] + [tuple(config.sensors)]
    for sensors in families:
        for k in config.k_sweep:
            cell('topk', config.variant, sensors, dataclasses.replace(base, k_grid=(k,)), k=k)
    for outcome in Outcome:
        cell('outcomes', config.variant, config.sensors, dataclasses.replace(base, outcome=outcome))
    for standardization in Standardization:
        cell('processing', config.variant, config.sensors, dataclasses.replace(base, standardization=standardization))

    logger.info("Ablations: %d cells, %d reused", len(rows), cache.hits)
    return pd.DataFrame(rows, columns=list(ABLATION_COLUMNS))


# Individual-level analysis
# =========================

INDIVIDUAL_MEASURES = ('accuracy', 'sias_total', 'state_mean', 'state_sd')
CORRELATION_COLUMNS = ('x', 'y', 'r', 'p', 'n', 'skipped')
MIN_INDIVIDUAL_REPETITIONS = 10


def individual_measures(cv_result, traits, reports):
    """Per-participant accuracy, SIAS total and state-anxiety mean / sd.

    Args:
        cv_result (CvResult)
        traits (dict): participant id -> TraitScores
        reports (pd.DataFrame): self-reports, as from reports_frame
    """
    if cv_result.config.repetitions < MIN_INDIVIDUAL_REPETITIONS:
        logger.warning("Individual accuracies from %d repetition(s); %d recommended",
                       cv_result.config.repetitions, MIN_INDIVIDUAL_REPETITIONS)
    accuracy = cv_result.participant_scores().groupby('participant_id', sort=False)['score'].mean()
    state = reports.groupby('participant_id')['self_report'].agg(state_mean='mean', state_sd=lambda s: s.std(ddof=1))
    records = []
    for pid, value in accuracy.items():
        if pid not in traits or pid not in state.index:
            continue
        records.append({
            'participant_id': pid, 'accuracy': value, 'sias_total': traits[pid].sias_total,
            'state_mean': state.at[pid, 'state_mean'], 'state_sd': state.at[pid, 'state_sd'],
        })
    return pd.DataFrame(records, columns=['participant_id'] + list(INDIVIDUAL_MEASURES))


def correlate_measures(measures):
    rows = []
    for x, y in itertools.combinations(INDIVIDUAL_MEASURES, 2):
        pairs = measures[[x, y]].dropna()
        row = {'x': x, 'y': y, 'n': len(pairs)}
        try:
            result = stats.pearson(pairs[x], pairs[y])
        except (DegenerateInput, InsufficientData) as e:
            row['skipped'] = str(e)
        else:
            row.update(r=result.statistic, p=result.p, skipped='')
        rows.append(row)
    return pd.DataFrame(rows, columns=list(CORRELATION_COLUMNS))


@dataclasses.dataclass(frozen=True, eq=False)
class IndividualReport:
    measures: pd.DataFrame
    correlations: pd.DataFrame


def individual_analysis(cv_result, manifest):
    """Correlations among individual accuracy, trait anxiety and state-anxiety mean / sd."""
    traits = {p.participant_id: p.traits for p in manifest}
    measures = individual_measures(cv_result, traits, reports_frame(manifest))
    return IndividualReport(measures=measures, correlations=correlate_measures(measures))


def traits_from_table(table):
    frame = table.frame.drop_duplicates('participant_id')
    return {row.participant_id: _TableTraits(int(row.sias_total)) for row in frame.itertuples()}


@dataclasses.dataclass(frozen=True)
class _TableTraits:
    sias_total: int


# Reports
# =======


@dataclasses.dataclass
class AnalysisResults:
    """Everything a run produced; None for analyses not run."""
    descriptives: typing.Optional[Descriptives] = None
    contexts: typing.Optional[pd.DataFrame] = None
    quartiles: typing.Optional[pd.DataFrame] = None
    screen: typing.Optional[ScreenReport] = None
    cv: typing.Dict[str, ml.CvResult] = dataclasses.field(default_factory=dict)
    cv_table: typing.Optional[pd.DataFrame] = None
    ablations: typing.Optional[pd.DataFrame] = None
    individual: typing.Optional[IndividualReport] = None
    manifest: typing.Dict[str, typing.Any] = dataclasses.field(default_factory=dict)

    @property
    def empty(self):
        return all(value is None or (isinstance(value, dict) and not value) for value in (
            self.descriptives, self.contexts, self.screen, self.cv, self.ablations, self.individual))


def _makedirs(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise ReportIOError("Cannot create %s: %s" % (path, e))


def emit_report(results, out_dir):
    """Write report tables, plots and the run manifest.

    Returns:
        list of str: written files, relative to out_dir

    Raises:
        InsufficientData: nothing to report
        ReportIOError: the directory or a file cannot be written
    """
    if results.empty:
        raise InsufficientData("No completed analysis to report")
    written = []

    def out(subdir, name):
        _makedirs(os.path.join(out_dir, subdir))
        written.append(os.path.join(subdir, name))
        return os.path.join(out_dir, subdir, name)

    try:
        if results.descriptives is not None:
            d = results.descriptives
            write_csv(d.histogram, out('descriptives', 'histogram.csv'))
            write_csv(d.adjusted, out('descriptives', 'adjusted_scores.csv'))
            write_csv(d.participants, out('descriptives', 'participants.csv'))
            write_csv(d.at_least_once, out('descriptives', 'reported_at_least_once.csv'))
        if results.contexts is not None:
            write_csv(results.contexts, out('descriptives', 'context_comparisons.csv'))
        if results.quartiles is not None:
            write_csv(results.quartiles, out('descriptives', 'context_quartiles.csv'))
        if results.screen is not None:
            write_csv(results.screen.full, out('screen', 'screen_full.csv'))
            write_csv(results.screen.significant, out('screen', 'screen_significant.csv'))
        if results.cv:
            for name, result in results.cv.items():
                write_json(result.to_dict(), out('cv', '%s.json' % name))
                write_csv(result.predictions_frame(), out('cv', '%s_predictions.csv' % name))
        if results.cv_table is not None:
            write_csv(results.cv_table, out('cv', 'model_comparison.csv'))
        if results.ablations is not None:
            write_csv(results.ablations, out('ablations', 'ablations.csv'))
        if results.individual is not None:
            write_csv(results.individual.measures, out('individual', 'scatter.csv'))
            write_csv(results.individual.correlations, out('individual', 'correlations.csv'))
        written.extend(render_plots(out_dir))
        manifest = dict(results.manifest, files=sorted(written))
        _makedirs(out_dir)
        write_json(manifest, os.path.join(out_dir, 'run_manifest.json'))
    except OSError as e:
        raise ReportIOError("Cannot write report to %s: %s" % (out_dir, e))
    logger.info("Report written to %s (%d files)", out_dir, len(written) + 1)
    return written


def _save(figure, path):
    with matplotlib.rc_context({'svg.hashsalt': SVG_SALT}):
        figure.savefig(path, format='svg', metadata={'Date': None})


def _new_figure():
    figure = Figure(figsize=(6, 4))
    return figure, figure.add_subplot(1, 1, 1)


def _plot_histogram(histogram, path):
    figure, ax = _new_figure()
    ax.bar(histogram['score'], histogram['count'], color='#4c72b0')
    ax.set_xlabel('Self-reported state anxiety')
    ax.set_ylabel('Reports')
    _save(figure, path)


def _plot_quartiles(quartiles, path):
    figure, ax = _new_figure()
    labels = ['%s\n%s' % (row.grouping, row.context) for row in quartiles.itertuples()]
    stats_rows = [{'label': label, 'whislo': row.min, 'q1': row.q1, 'med': row.median, 'q3': row.q3,
                   'whishi': row.max, 'fliers': []} for label, row in zip(labels, quartiles.itertuples())]
    ax.bxp(stats_rows, showfliers=False)
    ax.set_ylabel('Mean state anxiety')
    ax.tick_params(axis='x', labelsize=6)
    _save(figure, path)


def _plot_ablations(ablations, path):
    figure, ax = _new_figure()
    cells = ablations.loc[ablations['accuracy_mean'].notna()]
    labels = ['%s %s %s %s' % (r.section, r.variant, r.sensors, r.model) for r in cells.itertuples()]
    positions = np.arange(len(cells))
    ax.barh(positions, cells['accuracy_mean'], xerr=cells['accuracy_sd'], color='#55a868')
    ax.axvline(0.5, color='grey', linestyle='--')
    ax.set_yticks(positions)
    ax.set_yticklabels(labels, fontsize=4)
    ax.set_xlabel('Balanced accuracy')
    _save(figure, path)


def _plot_scatter(measures, x, y, path):
    figure, ax = _new_figure()
    pairs = measures[[x, y]].dropna()
    ax.scatter(pairs[x], pairs[y], s=12)
    if len(pairs) >= 2 and pairs[x].nunique() > 1:
        slope, intercept = np.polyfit(pairs[x], pairs[y], 1)
        grid = np.linspace(pairs[x].min(), pairs[x].max(), 2)
        ax.plot(grid, slope * grid + intercept, color='#c44e52')
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    _save(figure, path)


def render_plots(out_dir):
    """Draw SVG plots from the CSV tables present in a report directory.

    Returns:
        list of str: written plot files, relative to out_dir
    """
    written = []

    def source(subdir, name):
        path = os.path.join(out_dir, subdir, name)
        return pd.read_csv(path) if os.path.exists(path) else None

    histogram = source('descriptives', 'histogram.csv')
    if histogram is not None:
        _plot_histogram(histogram, os.path.join(out_dir, 'descriptives', 'histogram.svg'))
        written.append(os.path.join('descriptives', 'histogram.svg'))
    quartiles = source('descriptives', 'context_quartiles.csv')
    if quartiles is not None and len(quartiles):
        _plot_quartiles(quartiles, os.path.join(out_dir, 'descriptives', 'context_quartiles.svg'))
        written.append(os.path.join('descriptives', 'context_quartiles.svg'))
    ablations = source('ablations', 'ablations.csv')
    if ablations is not None and ablations['accuracy_mean'].notna().any():
        _plot_ablations(ablations, os.path.join(out_dir, 'ablations', 'ablations.svg'))
        written.append(os.path.join('ablations', 'ablations.svg'))
    measures = source('individual', 'scatter.csv')
    if measures is not None and len(measures):
        for x, y in itertools.combinations(INDIVIDUAL_MEASURES, 2):
            name = 'scatter_%s_%s.svg' % (x, y)
            _plot_scatter(measures, x, y, os.path.join(out_dir, 'individual', name))
            written.append(os.path.join('individual', name))
    return written


# Run orchestration
# =================


class AnalysisWorkflow(runflow.Workflow):
    states = (
        ('created', "Created"),
        ('loaded', "Dataset loaded"),
        ('featurized', "Feature table ready"),
        ('analysed', "Analyses done"),
        ('reported', "Report written"),
    )
    transitions = (
        ('load', 'created', 'loaded'),
        ('featurize', 'loaded', 'featurized'),
        ('use_table', 'created', 'featurized'),
        ('analyse', ('featurized', 'analysed'), 'analysed'),
        ('report', 'analysed', 'reported'),
    )
    initial_state = 'created'


class AnalysisRun(runflow.WorkflowEnabled):
    """One reproducible analysis run.

    Usage:
        >>> run = AnalysisRun(ExperimentConfig(seed=7))
        >>> run.load('data/')
        >>> run.featurize()
        >>> run.analyse('cv')
        >>> run.report('out/')
    """
    workflow = AnalysisWorkflow()

    def __init__(self, config, grids=None):
        super().__init__()
        self.config = config
        self.grids = grids
        self.dataset = None
        self.table = None
        self.inputs = {}
        self.results = AnalysisResults()

    def __repr__(self):
        return '<%s: %s>' % (self.__class__.__name__, self.state.name)

    @runflow.transition()
    def load(self, directory):
        self.dataset = ingest.load_dataset(directory)
        for path in ingest.dataset_files(directory, self.dataset.manifest):
            self.inputs[os.path.relpath(path, directory)] = file_digest(path)

    @runflow.transition()
    def featurize(self):
        self.table = featureset.build_feature_table(self.dataset, mode=self.config.window, jobs=self.config.jobs)

    @runflow.transition()
    def use_table(self, path):
        self.table = featureset.FeatureTable.read_csv(path)
        self.inputs[os.path.basename(path)] = file_digest(path)

    @property
    def reports(self):
        if self.dataset is not None:
            return reports_frame(self.dataset.manifest)
        return reports_from_table(self.table)

    @property
    def analysis_table(self):
        if self.config.exclude_low_variability:
            return drop_low_variability(self.table)
        return self.table

    @property
    def specs(self):
        return select_specs(self.config.models, self.grids)

    @runflow.transition()
    def analyse(self, name):
        """Run one analysis and store its result."""
        config = self.config
        results = self.results
        if name == 'descriptives':
            results.descriptives = describe_reports(self.reports)
        elif name == 'contexts':
            results.contexts = compare_contexts(self.reports)
            results.quartiles = context_quartiles(self.reports)
        elif name == 'screen':
            results.screen = per_feature_screen(self.analysis_table, config.outcome, jobs=config.jobs)
        elif name == 'cv':
            self._cross_validate()
        elif name == 'ablations':
            results.ablations = run_ablations(self.analysis_table, config, self.specs)
        elif name == 'individual':
            if not results.cv:
                self._cross_validate()
            best = max(results.cv.values(), key=lambda r: (np.nan_to_num(r.accuracy_mean), r.model))
            if self.dataset is not None:
                results.individual = individual_analysis(best, self.dataset.manifest)
            else:
                measures = individual_measures(best, traits_from_table(self.table), self.reports)
                results.individual = IndividualReport(measures=measures, correlations=correlate_measures(measures))
        else:
            raise InvalidSpec("Unknown analysis %r" % name)

    def _cross_validate(self):
        config = self.config
        cv_config = config.cv_config()
        features = select_features(config.variant, config.sensors)
        design = ml.Design.from_table(self.analysis_table, features, config.outcome, config.standardization)
        self.results.cv = ml.run_models(design, self.specs, cv_config)
        name = configuration_name(config.variant, config.outcome, config.standardization)
        self.results.cv_table = model_comparison([(name, result) for result in self.results.cv.values()])

    def run_all(self):
        for name in self.config.analyses:
            self.analyse(name)

    def run_manifest(self):
        return {
            'config': self.config.to_dict(),
            'seeds': {
                'root': self.config.seed,
                'fold_seed_keys': '(seed, repetition, participant_id)',
                'fold_seeds': {
                    '%d/%s' % (rep, pid): derive_seed(self.config.seed, rep, pid)
                    for rep in range(self.config.repetitions) for pid in self.table.participant_ids
                } if self.table is not None else {},
            },
            'inputs': dict(sorted(self.inputs.items())),
            'history': list(self.history),
        }

    @runflow.transition()
    def report(self, out_dir):
        self.results.manifest = dict(self.run_manifest(), history=list(self.history) + [
            {'transition': 'report', 'from': self.state.name, 'to': 'reported'}])
        return emit_report(self.results, out_dir)
