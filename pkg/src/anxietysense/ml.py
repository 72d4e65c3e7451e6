# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Model zoo, ANOVA-F feature selection and nested leave-one-participant-out CV.

Every fitted pipeline runs: median imputation -> scaling -> top-K ANOVA-F
selection -> classifier. All steps are fitted on training rows only, so a
held-out participant never influences its own fold's model.
"""

import dataclasses
import enum
import itertools
import json
import logging
import pkgutil
import typing
import warnings

import joblib
import numpy as np
import pandas as pd
from sklearn import base as sk_base
from sklearn.ensemble import GradientBoostingClassifier, RandomForestClassifier
from sklearn.exceptions import ConvergenceWarning
from sklearn.feature_selection import SelectorMixin, f_classif
from sklearn.impute import SimpleImputer
from sklearn.linear_model import LogisticRegression, SGDClassifier
from sklearn.metrics import balanced_accuracy_score, f1_score
from sklearn.model_selection import GridSearchCV, GroupKFold
from sklearn.neighbors import KNeighborsClassifier
from sklearn.neural_network import MLPClassifier
from sklearn.pipeline import Pipeline
from sklearn.preprocessing import StandardScaler
from sklearn.tree import DecisionTreeClassifier

from . import featureset
from .base import (
    InsufficientData, InvalidSpec, MetricUndefined, Outcome, SingleClassError, Standardization, TrainingError,
)
from .utils import derive_seed

logger = logging.getLogger('anxietysense.ml')

INNER_FOLDS = 5
DEFAULT_K_GRID = (5, 10, 20)


class ModelKind(enum.Enum):
    LOGISTIC_REGRESSION = 'logistic_regression'
    DECISION_TREE = 'decision_tree'
    RANDOM_FOREST = 'random_forest'
    GRADIENT_BOOSTING = 'gradient_boosting'
    KNN = 'knn'
    MLP = 'mlp'
    LINEAR_SVM = 'linear_svm'

    def __str__(self):
        return self.value


def make_estimator(kind, seed=0, **params):
    """Instantiate the classifier of a model kind with the given hyperparameters."""
    kind = ModelKind(kind)
    if kind is ModelKind.LOGISTIC_REGRESSION:
        estimator = LogisticRegression(penalty='l2', solver='lbfgs', max_iter=1000, random_state=seed)
    elif kind is ModelKind.DECISION_TREE:
        estimator = DecisionTreeClassifier(criterion='gini', random_state=seed)
    elif kind is ModelKind.RANDOM_FOREST:
        estimator = RandomForestClassifier(max_features='sqrt', n_jobs=1, random_state=seed)
    elif kind is ModelKind.GRADIENT_BOOSTING:
        estimator = GradientBoostingClassifier(random_state=seed)
    elif kind is ModelKind.KNN:
        estimator = KNeighborsClassifier(metric='euclidean')
    elif kind is ModelKind.MLP:
        estimator = MLPClassifier(activation='relu', solver='adam', max_iter=500, random_state=seed)
    else:
        estimator = SGDClassifier(loss='hinge', penalty='l2', max_iter=1000, tol=1e-3, random_state=seed)
    return estimator.set_params(**params)


@dataclasses.dataclass(frozen=True)
class ModelSpec:
    """A named classifier with its hyperparameter grid.

    Attributes:
        name (str): report name, e.g. 'xgboost'
        kind (ModelKind): the trainer
        grid (dict): hyperparameter name -> candidate values
    """
    name: str
    kind: ModelKind
    grid: typing.Mapping[str, typing.Tuple]

    def __post_init__(self):
        object.__setattr__(self, 'kind', ModelKind(self.kind))
        object.__setattr__(self, 'grid', {k: tuple(v) for k, v in sorted(self.grid.items())})
        if not self.grid or not all(self.grid.values()):
            raise InvalidSpec("Model %s has an empty hyperparameter grid" % self.name)
        known = make_estimator(self.kind).get_params()
        unknown = sorted(set(self.grid) - set(known))
        if unknown:
            raise InvalidSpec("Model %s: %s not accepted by %s" % (self.name, ', '.join(unknown), self.kind))

    @property
    def default_params(self):
        return {name: values[0] for name, values in self.grid.items()}

    def candidates(self):
        names = list(self.grid)
        for values in itertools.product(*(self.grid[n] for n in names)):
            yield dict(zip(names, values))


def load_model_specs(path=None):
    """Read model specs from a JSON grid file, the packaged defaults if omitted."""
    if path is None:
        data = json.loads(pkgutil.get_data('anxietysense', 'model_grids.json').decode('utf-8'))
    else:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    try:
        return {name: ModelSpec(name=name, kind=entry['kind'], grid=entry['grid']) for name, entry in data.items()}
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidSpec("Malformed model grid file: %r" % (e,))


def anova_f_scores(rows, labels):
    """One-way ANOVA F of each feature against the binary label.

    Features with zero within-class variance and differing class means score
    +inf; constant features score 0.

    Raises:
        SingleClassError: labels hold a single class
    """
    rows = np.asarray(rows, dtype=float)
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise SingleClassError("ANOVA F needs both classes")
    with warnings.catch_warnings(), np.errstate(divide='ignore', invalid='ignore'):
        warnings.simplefilter('ignore', RuntimeWarning)
        warnings.simplefilter('ignore', UserWarning)
        scores, _ = f_classif(rows, labels)
    return np.where(np.isnan(scores), 0.0, scores)


class AnovaTopK(SelectorMixin, sk_base.BaseEstimator):
    """Keep the K features with the highest ANOVA F; ties go to the earlier column."""

    def __init__(self, k=10):
        self.k = k

    def fit(self, X, y):
        self.scores_ = anova_f_scores(X, y)
        k = min(int(self.k), X.shape[1])
        order = np.argsort(-self.scores_, kind='stable')
        self.mask_ = np.zeros(X.shape[1], dtype=bool)
        self.mask_[order[:k]] = True
        return self

    def _get_support_mask(self):
        return self.mask_


def build_pipeline(spec, seed, k, params=None):
    params = spec.default_params if params is None else params
    return Pipeline([
        ('impute', SimpleImputer(strategy='median', keep_empty_features=True)),
        ('scale', StandardScaler()),
        ('select', AnovaTopK(k=k)),
        ('model', make_estimator(spec.kind, seed=seed, **params)),
    ])


def _check_classes(labels, minimum=2):
    values, counts = np.unique(np.asarray(labels), return_counts=True)
    if len(values) < 2 or counts.min() < minimum:
        raise TrainingError("Training needs >= %d rows of each class, got %s" % (
            minimum, dict(zip(values.tolist(), counts.tolist()))))


class Model(object):
    """A trained classifier."""

    def __init__(self, pipeline, feature_names=None):
        self.pipeline = pipeline
        self.feature_names = feature_names

    def predict(self, rows):
        return self.pipeline.predict(np.atleast_2d(rows)).astype(int)

    def predict_score(self, rows):
        rows = np.atleast_2d(rows)
        if hasattr(self.pipeline, 'decision_function'):
            return self.pipeline.decision_function(rows)
        return self.pipeline.predict_proba(rows)[:, 1]

    @property
    def selected_features(self):
        mask = self.pipeline.named_steps['select'].get_support()
        names = self.feature_names or ['x%d' % i for i in range(len(mask))]
        return [name for name, keep in zip(names, mask) if keep]


def _fit_quietly(estimator, rows, labels):
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', ConvergenceWarning)
        warnings.simplefilter('ignore', UserWarning)
        return estimator.fit(rows, labels)


def train(spec, rows, labels, params=None, k=None, seed=0, feature_names=None):
    """Fit one pipeline on all given rows.

    Args:
        spec (ModelSpec): the classifier
        params (dict): hyperparameters, the first grid point when omitted
        k (int): number of selected features, all when omitted

    Raises:
        TrainingError: fewer than 2 rows of either class
    """
    rows = np.asarray(rows, dtype=float)
    labels = np.asarray(labels).astype(int)
    _check_classes(labels)
    pipeline = build_pipeline(spec, seed, rows.shape[1] if k is None else k, params)
    return Model(_fit_quietly(pipeline, rows, labels), feature_names)


def metrics(truths, predictions):
    """Balanced accuracy and macro-F1.

    Raises:
        MetricUndefined: empty input or truths holding a single class
    """
    truths = np.asarray(truths).astype(int)
    predictions = np.asarray(predictions).astype(int)
    if not len(truths) or len(truths) != len(predictions):
        raise MetricUndefined("Metrics need equally long, non-empty truths and predictions")
    if len(np.unique(truths)) < 2:
        raise MetricUndefined("Balanced accuracy is undefined for single-class truths")
    return (
        float(balanced_accuracy_score(truths, predictions)),
        float(f1_score(truths, predictions, average='macro', labels=[0, 1], zero_division=0)),
    )


def participant_score(truths, predictions):
    """Mean recall over the classes present in one participant's truths."""
    truths = np.asarray(truths).astype(int)
    predictions = np.asarray(predictions).astype(int)
    return float(np.mean([np.mean(predictions[truths == c] == c) for c in np.unique(truths)]))


@dataclasses.dataclass(frozen=True)
class CvConfig:
    """Nested CV settings.

    Attributes:
        k_grid (tuple of int): candidate numbers of selected features
        outcome (Outcome): label operationalization
        standardization (Standardization): per-person z-scoring of
            biobehavioral features before CV, or none (the pipeline scaler,
            fitted on training rows, always runs)
        repetitions (int): outer CV repetitions with distinct seeds
        seed (int): root seed
        inner_folds (int): grouped inner folds for tuning
        jobs (int): joblib workers for outer folds
    """
    k_grid: typing.Tuple[int, ...] = DEFAULT_K_GRID
    outcome: Outcome = Outcome.RAW_GT3
    standardization: Standardization = Standardization.PERSON
    repetitions: int = 1
    seed: int = 0
    inner_folds: int = INNER_FOLDS
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'outcome', Outcome(self.outcome))
        object.__setattr__(self, 'standardization', Standardization(self.standardization))
        object.__setattr__(self, 'k_grid', tuple(sorted(set(int(k) for k in self.k_grid))))
        if not self.k_grid or min(self.k_grid) < 1:
            raise InvalidSpec("k grid must hold positive integers, got %r" % (self.k_grid,))
        if self.repetitions < 1:
            raise InvalidSpec("repetitions must be >= 1")

    def to_dict(self):
        return {
            'k_grid': list(self.k_grid),
            'outcome': self.outcome.value,
            'standardization': self.standardization.value,
            'repetitions': self.repetitions,
            'seed': self.seed,
            'inner_folds': self.inner_folds,
        }


@dataclasses.dataclass(frozen=True, eq=False)
class Design:
    """Labelled rows ready for CV.

    Attributes:
        X (np.ndarray): (n, d) features, NaN allowed
        y (np.ndarray): 0/1 labels
        groups (np.ndarray): participant id per row
        feature_names (tuple of str)
    """
    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray
    feature_names: typing.Tuple[str, ...]

    @property
    def participant_ids(self):
        return list(pd.unique(self.groups))

    @classmethod
    def from_table(cls, table, feature_names, outcome, standardization=Standardization.PERSON):
        """Select columns, apply per-person standardization and drop unlabelled rows."""
        feature_names = tuple(feature_names)
        if not feature_names:
            raise InsufficientData("No feature selected")
        if Standardization(standardization) is Standardization.PERSON:
            bio = [name for name in feature_names if name in featureset.BIOBEHAVIORAL_FEATURES]
            table = featureset.standardize_per_person(table, columns=bio)
        labels = featureset.label_table(table, outcome, strict=False).to_numpy()
        keep = ~np.isnan(labels)
        return cls(
            X=table.features(feature_names)[keep],
            y=labels[keep].astype(int),
            groups=table.groups[keep],
            feature_names=feature_names,
        )

    def permuted_within_participant(self, seed):
        """Labels shuffled inside each participant, for null checks."""
        y = self.y.copy()
        for i, pid in enumerate(self.participant_ids):
            idx = np.flatnonzero(self.groups == pid)
            y[idx] = np.random.default_rng(derive_seed(seed, 'permute', i)).permutation(y[idx])
        return dataclasses.replace(self, y=y)


@dataclasses.dataclass(frozen=True)
class FoldOutcome:
    repetition: int
    participant_id: str
    rows: typing.Tuple[int, ...] = ()
    truths: typing.Tuple[int, ...] = ()
    predictions: typing.Tuple[int, ...] = ()
    params: typing.Mapping[str, typing.Any] = dataclasses.field(default_factory=dict)
    selected: typing.Tuple[str, ...] = ()
    skipped: typing.Optional[str] = None


def _split_scores(cv_results):
    """Inner test scores as a (candidates, splits) array; failed fits are NaN."""
    keys = sorted(key for key in cv_results if key.startswith('split') and key.endswith('_test_score'))
    return np.column_stack([np.asarray(cv_results[key], dtype=float) for key in keys])


def _best_candidate(cv_results):
    """Index of the candidate with the best mean score over its completed inner fits.

    Failed fits are ignored rather than scored; a candidate with no completed
    fit ranks last. Ties go to the earliest candidate.
    """
    scores = _split_scores(cv_results)
    completed = ~np.isnan(scores)
    totals = np.where(completed, scores, 0.0).sum(axis=1)
    counts = completed.sum(axis=1)
    means = np.where(counts > 0, totals / np.maximum(counts, 1), -np.inf)
    return int(np.argmax(means))


def _tune(spec, design, train_idx, seed, k_grid, inner_folds):
    groups = design.groups[train_idx]
    n_groups = len(np.unique(groups))
    n_features = design.X.shape[1]
    ks = sorted(set(min(k, n_features) for k in k_grid))
    pipeline = build_pipeline(spec, seed, ks[0])
    if n_groups < 2:
        params = dict(spec.default_params, k=ks[0])
        return _fit_quietly(pipeline, design.X[train_idx], design.y[train_idx]), params

    grid = {'select__k': ks}
    grid.update({'model__%s' % name: list(values) for name, values in spec.grid.items()})
    search = GridSearchCV(
        pipeline, grid, scoring='balanced_accuracy', cv=GroupKFold(n_splits=min(inner_folds, n_groups)),
        refit=_best_candidate, n_jobs=1, error_score=np.nan,
    )
    with warnings.catch_warnings():
        warnings.simplefilter('ignore')
        search.fit(design.X[train_idx], design.y[train_idx], groups=groups)
    scores = _split_scores(search.cv_results_)
    failed = int(np.isnan(scores).sum())
    if failed:
        logger.warning("%s: %d of %d inner fits failed and were left out of tuning",
                       spec.name, failed, scores.size)
    params = {name.split('__', 1)[1]: value for name, value in search.best_params_.items()}
    return search.best_estimator_, params


def run_fold(spec, design, participant_id, repetition, config):
    """Tune, refit and predict one held-out participant."""
    test_idx = np.flatnonzero(design.groups == participant_id)
    train_idx = np.flatnonzero(design.groups != participant_id)
    outcome = FoldOutcome(repetition=repetition, participant_id=participant_id)
    if len(np.unique(design.y[train_idx])) < 2:
        reason = "single-class training set"
        logger.warning("%s rep %d fold %s skipped: %s", spec.name, repetition, participant_id, reason)
        return dataclasses.replace(outcome, skipped=reason)

    seed = derive_seed(config.seed, repetition, participant_id)
    try:
        model, params = _tune(spec, design, train_idx, seed, config.k_grid, config.inner_folds)
    except ValueError as e:
        # GridSearchCV raises when every inner fit failed.
        reason = "tuning failed: %s" % str(e).splitlines()[0]
        logger.warning("%s rep %d fold %s skipped: %s", spec.name, repetition, participant_id, reason)
        return dataclasses.replace(outcome, skipped=reason)
    mask = model.named_steps['select'].get_support()
    return dataclasses.replace(
        outcome,
        rows=tuple(int(i) for i in test_idx),
        truths=tuple(int(v) for v in design.y[test_idx]),
        predictions=tuple(int(v) for v in model.predict(design.X[test_idx])),
        params={name: _plain(value) for name, value in sorted(params.items())},
        selected=tuple(name for name, keep in zip(design.feature_names, mask) if keep),
    )


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclasses.dataclass(frozen=True, eq=False)
class CvResult:
    """Outcome of a nested LOSO CV run for one model.

    Attributes:
        model (str): the ModelSpec name
        config (CvConfig)
        folds (tuple of FoldOutcome): ordered by repetition then participant
        balanced_accuracy (np.ndarray): pooled balanced accuracy per repetition
        macro_f1 (np.ndarray): pooled macro-F1 per repetition
    """
    model: str
    config: CvConfig
    folds: typing.Tuple[FoldOutcome, ...]
    balanced_accuracy: np.ndarray
    macro_f1: np.ndarray
    feature_names: typing.Tuple[str, ...] = ()

    @property
    def completed_folds(self):
        return [fold for fold in self.folds if fold.skipped is None]

    @property
    def skipped_folds(self):
        return [fold for fold in self.folds if fold.skipped is not None]

    @property
    def accuracy_mean(self):
        return float(np.mean(self.balanced_accuracy))

    @property
    def accuracy_sd(self):
        return float(np.std(self.balanced_accuracy))

    @property
    def f1_mean(self):
        return float(np.mean(self.macro_f1))

    @property
    def f1_sd(self):
        return float(np.std(self.macro_f1))

    def feature_frequencies(self):
        """Fraction of completed folds selecting each feature, most frequent first."""
        folds = self.completed_folds
        counts = {}
        for fold in folds:
            for name in fold.selected:
                counts[name] = counts.get(name, 0) + 1
        ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
        return [(name, count / float(len(folds))) for name, count in ranked]

    def participant_scores(self):
        """Per-participant, per-repetition score (mean recall over present classes)."""
        records = [
            {'repetition': fold.repetition, 'participant_id': fold.participant_id,
             'score': participant_score(fold.truths, fold.predictions)}
            for fold in self.completed_folds
        ]
        return pd.DataFrame(records, columns=['repetition', 'participant_id', 'score'])

    def predictions_frame(self):
        records = []
        for fold in self.completed_folds:
            for row, truth, prediction in zip(fold.rows, fold.truths, fold.predictions):
                records.append({
                    'repetition': fold.repetition, 'participant_id': fold.participant_id,
                    'row': row, 'truth': truth, 'prediction': prediction,
                })
        return pd.DataFrame(records, columns=['repetition', 'participant_id', 'row', 'truth', 'prediction'])

    def to_dict(self):
        return {
            'model': self.model,
            'config': self.config.to_dict(),
            'balanced_accuracy': {'per_repetition': self.balanced_accuracy.tolist(),
                                  'mean': self.accuracy_mean, 'sd': self.accuracy_sd},
            'macro_f1': {'per_repetition': self.macro_f1.tolist(), 'mean': self.f1_mean, 'sd': self.f1_sd},
            'folds': [
                {'repetition': fold.repetition, 'participant_id': fold.participant_id,
                 'params': dict(fold.params), 'selected_features': list(fold.selected),
                 'skipped': fold.skipped}
                for fold in self.folds
            ],
            'feature_frequencies': [[name, freq] for name, freq in self.feature_frequencies()],
        }


def nested_loso_cv(design, spec, config):
    """Nested leave-one-participant-out CV of one model.

    For each repetition and held-out participant, grouped inner folds pick the
    hyperparameters and K maximizing balanced accuracy; the pipeline is refit
    on every other participant and predicts the held-out rows. Metrics are
    pooled over all held-out predictions of a repetition.

    Raises:
        InsufficientData: fewer than 2 participants
        SingleClassError: a single class overall
    """
    participants = design.participant_ids
    if len(participants) < 2:
        raise InsufficientData("LOSO CV needs >= 2 participants, got %d" % len(participants))
    if len(np.unique(design.y)) < 2:
        raise SingleClassError("Labels hold a single class")

    tasks = [(rep, pid) for rep in range(config.repetitions) for pid in participants]
    folds = joblib.Parallel(n_jobs=config.jobs)(
        joblib.delayed(run_fold)(spec, design, pid, rep, config) for rep, pid in tasks
    )

    accuracies, f1s = [], []
    for rep in range(config.repetitions):
        done = [fold for fold in folds if fold.repetition == rep and fold.skipped is None]
        truths = [t for fold in done for t in fold.truths]
        predictions = [p for fold in done for p in fold.predictions]
        try:
            accuracy, f1 = metrics(truths, predictions)
        except MetricUndefined as e:
            logger.warning("%s rep %d: %s", spec.name, rep, e)
            accuracy = f1 = float('nan')
        accuracies.append(accuracy)
        f1s.append(f1)

    result = CvResult(
        model=spec.name, config=config, folds=tuple(folds),
        balanced_accuracy=np.asarray(accuracies), macro_f1=np.asarray(f1s),
        feature_names=design.feature_names,
    )
    logger.info("%s: balanced accuracy %.3f +/- %.3f over %d repetition(s)",
                spec.name, result.accuracy_mean, result.accuracy_sd, config.repetitions)
    return result


def run_models(design, specs, config):
    """nested_loso_cv for several ModelSpecs, keyed by name in the given order."""
    return {spec.name: nested_loso_cv(design, spec, config) for spec in specs}
