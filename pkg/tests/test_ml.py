# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.

import json
import math
import os
import tempfile
import unittest

import numpy as np

from anxietysense import base, ml

from . import fixtures

FEATURES = ('HRV_RMSSD', 'HRV_SDNN', 'EDA_Tonic_Mean', 'TEMP_Mean', 'ACC_X_Mean')
INFORMATIVE = ('HRV_RMSSD', 'EDA_Tonic_Mean')


def logistic_spec():
    return ml.ModelSpec(name='logistic_regression', kind='logistic_regression', grid={'C': [1.0]})


class ModelSpecTestCase(unittest.TestCase):

    def test_packaged_grids(self):
        specs = ml.load_model_specs()
        self.assertEqual(
            {'logistic_regression', 'decision_tree', 'random_forest', 'gradient_boosting', 'xgboost', 'knn',
             'mlp', 'linear_svm'},
            set(specs))
        self.assertIs(ml.ModelKind.GRADIENT_BOOSTING, specs['xgboost'].kind)
        self.assertEqual({'C': 0.1}, specs['logistic_regression'].default_params)
        self.assertEqual(3, len(list(specs['knn'].candidates())))

    def test_invalid(self):
        self.assertRaises(base.InvalidSpec, ml.ModelSpec, 'knn', 'knn', {})
        self.assertRaises(base.InvalidSpec, ml.ModelSpec, 'knn', 'knn', {'n_neighbors': []})
        self.assertRaises(base.InvalidSpec, ml.ModelSpec, 'knn', 'knn', {'depth': [2]})
        self.assertRaises(ValueError, ml.ModelSpec, 'svm', 'rbf_svm', {'C': [1]})

    def test_malformed_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'grids.json')
            with open(path, 'w') as f:
                json.dump({'lr': {'grid': {'C': [1.0]}}}, f)
            self.assertRaises(base.InvalidSpec, ml.load_model_specs, path)


class AnovaTopKTestCase(unittest.TestCase):

    def test_selects_informative(self):
        rng = np.random.default_rng(0)
        y = np.repeat([0, 1], 20)
        X = rng.normal(size=(40, 4))
        X[:, 2] += 3.0 * y
        selector = ml.AnovaTopK(k=1).fit(X, y)
        self.assertEqual([False, False, True, False], selector.get_support().tolist())

    def test_ties_keep_earlier_columns(self):
        y = np.repeat([0, 1], 5)
        X = np.column_stack([np.ones(10), y + 0.1 * np.arange(10), np.ones(10)])
        selector = ml.AnovaTopK(k=2).fit(X, y)
        self.assertEqual([True, True, False], selector.get_support().tolist())
        self.assertEqual(0.0, selector.scores_[0])

    def test_k_above_width(self):
        selector = ml.AnovaTopK(k=10).fit(np.arange(8.0).reshape(4, 2), [0, 0, 1, 1])
        self.assertEqual(2, int(selector.get_support().sum()))

    def test_single_class(self):
        self.assertRaises(base.SingleClassError, ml.anova_f_scores, np.zeros((3, 2)), [1, 1, 1])

    def test_f_statistic_by_hand(self):
        y = np.repeat([0, 1], 3)
        # Group means 2 and 5, within sum of squares 4 on 4 degrees of freedom.
        scores = ml.anova_f_scores(np.array([[1.0], [2.0], [3.0], [4.0], [5.0], [6.0]]), y)
        self.assertAlmostEqual(13.5, scores[0])

    def test_degenerate_columns(self):
        y = np.repeat([0, 1], 3)
        X = np.column_stack([
            np.repeat([1.0, 2.0], 3),
            np.full(6, 4.0),
            np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
        ])
        scores = ml.anova_f_scores(X, y)
        self.assertTrue(np.isposinf(scores[0]))
        self.assertEqual(0.0, scores[1])
        selector = ml.AnovaTopK(k=2).fit(X, y)
        self.assertEqual([True, False, True], selector.get_support().tolist())

    def test_affine_invariance(self):
        rng = np.random.default_rng(5)
        y = np.repeat([0, 1], 15)
        X = rng.normal(size=(30, 3)) + 0.5 * y[:, None]
        np.testing.assert_allclose(
            ml.anova_f_scores(X, y), ml.anova_f_scores(3.5 * X - 12.0, y), rtol=1e-9)


class MetricsTestCase(unittest.TestCase):

    def test_values(self):
        accuracy, f1 = ml.metrics([0, 0, 1, 1], [0, 1, 1, 1])
        self.assertAlmostEqual(0.75, accuracy)
        self.assertAlmostEqual((2.0 / 3 + 0.8) / 2, f1)

    def test_undefined(self):
        self.assertRaises(base.MetricUndefined, ml.metrics, [1, 1], [1, 0])
        self.assertRaises(base.MetricUndefined, ml.metrics, [], [])

    def test_participant_score(self):
        self.assertEqual(0.75, ml.participant_score([0, 0, 1], [0, 1, 1]))
        self.assertEqual(0.5, ml.participant_score([1, 1], [1, 0]))


class TrainTestCase(unittest.TestCase):

    def test_train_and_predict(self):
        rng = np.random.default_rng(1)
        y = np.repeat([0, 1], 30)
        X = rng.normal(size=(60, 3))
        X[:, 1] += 4.0 * y
        X[0, 0] = np.nan
        model = ml.train(logistic_spec(), X, y, k=1, feature_names=['a', 'b', 'c'])
        self.assertEqual(['b'], model.selected_features)
        self.assertEqual([0, 1], model.predict([[0.0, -2.0, 0.0], [0.0, 6.0, 0.0]]).tolist())
        self.assertEqual(2, len(model.predict_score(X[:2])))

    def test_single_class(self):
        self.assertRaises(base.TrainingError, ml.train, logistic_spec(), np.zeros((4, 2)), [1, 1, 1, 1])
        self.assertRaises(base.TrainingError, ml.train, logistic_spec(), np.zeros((4, 2)), [1, 1, 1, 0])


class CvConfigTestCase(unittest.TestCase):

    def test_normalized(self):
        config = ml.CvConfig(k_grid=[20, 5, 5], outcome='extreme_eq5', standardization='none')
        self.assertEqual((5, 20), config.k_grid)
        self.assertIs(base.Outcome.EXTREME_EQ5, config.outcome)
        self.assertEqual('none', config.to_dict()['standardization'])

    def test_invalid(self):
        self.assertRaises(base.InvalidSpec, ml.CvConfig, k_grid=())
        self.assertRaises(base.InvalidSpec, ml.CvConfig, k_grid=(0, 5))
        self.assertRaises(base.InvalidSpec, ml.CvConfig, repetitions=0)


class DesignTestCase(unittest.TestCase):

    def test_from_table(self):
        table = fixtures.make_table(n_participants=3)
        frame = table.frame.copy()
        frame.loc[0, 'self_report'] = np.nan
        design = ml.Design.from_table(table.replace(frame), FEATURES + ('eval_code',), 'raw_gt3')
        self.assertEqual((35, 6), design.X.shape)
        self.assertEqual(['P01', 'P02', 'P03'], design.participant_ids)
        # Context codes are not standardized.
        self.assertTrue(set(np.unique(design.X[:, -1])) <= {0.0, 1.0})
        np.testing.assert_allclose(0.0, design.X[design.groups == 'P02', 0].mean(), atol=1e-12)

    def test_no_features(self):
        self.assertRaises(base.InsufficientData, ml.Design.from_table, fixtures.make_table(2), (), 'raw_gt3')

    def test_permutation_keeps_counts(self):
        design = ml.Design.from_table(fixtures.make_table(n_participants=4), FEATURES, 'raw_gt3')
        permuted = design.permuted_within_participant(seed=3)
        for pid in design.participant_ids:
            mask = design.groups == pid
            self.assertEqual(design.y[mask].sum(), permuted.y[mask].sum())
        self.assertNotEqual(design.y.tolist(), permuted.y.tolist())


class NestedLosoTestCase(unittest.TestCase):

    def design(self, **kwargs):
        table = fixtures.make_table(n_participants=10, informative=INFORMATIVE, effect=3.0, **kwargs)
        return ml.Design.from_table(table, FEATURES, 'raw_gt3', standardization='none')

    def test_informative_features(self):
        config = ml.CvConfig(k_grid=(2,), standardization='none', repetitions=1)
        result = ml.nested_loso_cv(self.design(), logistic_spec(), config)
        self.assertEqual(10, len(result.folds))
        self.assertEqual([], result.skipped_folds)
        self.assertGreater(result.accuracy_mean, 0.8)
        self.assertEqual(set(INFORMATIVE), {name for name, _ in result.feature_frequencies()[:2]})
        self.assertEqual(120, len(result.predictions_frame()))
        self.assertEqual(10, len(result.participant_scores()))
        self.assertEqual({'C': 1.0, 'k': 2}, result.folds[0].params)
        self.assertEqual('logistic_regression', result.to_dict()['model'])

    def test_permuted_labels(self):
        config = ml.CvConfig(k_grid=(2,), standardization='none')
        design = self.design().permuted_within_participant(seed=0)
        result = ml.nested_loso_cv(design, logistic_spec(), config)
        self.assertLess(result.accuracy_mean, 0.7)

    def test_deterministic(self):
        design = self.design()
        spec = ml.ModelSpec(name='rf', kind='random_forest', grid={'n_estimators': [10], 'max_depth': [2, None]})
        a = ml.nested_loso_cv(design, spec, ml.CvConfig(k_grid=(2, 3), repetitions=2, seed=5))
        b = ml.nested_loso_cv(design, spec, ml.CvConfig(k_grid=(2, 3), repetitions=2, seed=5, jobs=2))
        self.assertEqual(a.balanced_accuracy.tolist(), b.balanced_accuracy.tolist())
        self.assertEqual([f.predictions for f in a.folds], [f.predictions for f in b.folds])

    def test_single_class_training_fold(self):
        groups = np.repeat(['P01', 'P02', 'P03', 'P04'], 4)
        y = (groups == 'P01').astype(int)
        X = np.random.default_rng(0).normal(size=(16, 2))
        design = ml.Design(X=X, y=y, groups=groups, feature_names=('a', 'b'))
        result = ml.nested_loso_cv(design, logistic_spec(), ml.CvConfig(k_grid=(1,)))
        self.assertEqual(['P01'], [fold.participant_id for fold in result.skipped_folds])
        self.assertTrue(math.isnan(result.accuracy_mean))

    def test_failed_inner_fits_are_left_out(self):
        groups = np.repeat(['P01', 'P02', 'P03', 'P04', 'P05'], 4)
        y = (groups == 'P01').astype(int)
        X = np.random.default_rng(1).normal(size=(20, 2))
        design = ml.Design(X=X, y=y, groups=groups, feature_names=('a', 'b'))
        with self.assertLogs('anxietysense.ml', 'WARNING') as logs:
            result = ml.nested_loso_cv(design, logistic_spec(), ml.CvConfig(k_grid=(1, 2)))
        self.assertTrue(any("inner fits failed" in line for line in logs.output))
        self.assertEqual(['P01'], [fold.participant_id for fold in result.skipped_folds])

    def test_best_candidate_ignores_failures(self):
        cv_results = {
            'split0_test_score': np.array([0.9, np.nan, np.nan, 0.6]),
            'split1_test_score': np.array([0.5, 0.8, np.nan, 0.8]),
            'mean_test_score': np.array([0.7, np.nan, np.nan, 0.7]),
        }
        # Candidate 1 is only scored on its completed fit.
        self.assertEqual(1, ml._best_candidate(cv_results))
        cv_results['split1_test_score'][1] = 0.7
        self.assertEqual(0, ml._best_candidate(cv_results))
        nothing = {'split0_test_score': np.array([np.nan, np.nan])}
        self.assertEqual(0, ml._best_candidate(nothing))

    def test_errors(self):
        X = np.zeros((4, 1))
        single = ml.Design(X=X, y=np.array([0, 1, 0, 1]), groups=np.array(['P01'] * 4), feature_names=('a',))
        self.assertRaises(base.InsufficientData, ml.nested_loso_cv, single, logistic_spec(), ml.CvConfig())
        one_class = ml.Design(X=X, y=np.ones(4, dtype=int), groups=np.array(['P01', 'P01', 'P02', 'P02']),
                              feature_names=('a',))
        self.assertRaises(base.SingleClassError, ml.nested_loso_cv, one_class, logistic_spec(), ml.CvConfig())


if __name__ == '__main__':  # pragma: no cover
    unittest.main()
