# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.

import json
import os
import tempfile
import unittest

import numpy as np

from anxietysense import base, featureset, ingest, ml, ppg, synth

SHORT = (60,)


class EffectProfileTestCase(unittest.TestCase):

    def test_invalid(self):
        self.assertRaises(base.InvalidSpec, synth.EffectProfile, hrv_suppression=1.0)
        self.assertRaises(base.InvalidSpec, synth.EffectProfile, noise_sd=-1.0)
        self.assertRaises(base.InvalidSpec, synth.EffectProfile, context_weights={'alone': 1.0})

    def test_context_shift(self):
        profile = synth.EffectProfile.strong()
        context = ingest.code_context(ingest.Experience.GROUP_EVAL, ingest.Phase.ANTICIPATORY)
        self.assertAlmostEqual(1.5, profile.context_shift(context))
        context = ingest.code_context(ingest.Experience.DYAD_NON_EVAL, ingest.Phase.CONCURRENT)
        self.assertEqual(0.0, profile.context_shift(context))
        self.assertEqual(0.0, profile.context_shift(None))
        self.assertEqual(0.0, synth.EffectProfile.null().context_shift(context))

    def test_to_dict(self):
        data = synth.EffectProfile.strong().to_dict()
        self.assertEqual(0.5, data['hrv_suppression'])
        self.assertEqual(0.8, data['context_weights']['eval'])


class OrdinalReportTestCase(unittest.TestCase):

    def test_cutpoints(self):
        self.assertEqual([1, 1, 2, 3, 4, 5], synth.ordinal_report([-2.0, -1.5, -1.0, 0.0, 1.0, 2.0]).tolist())

    def test_marginal(self):
        rng = np.random.default_rng(0)
        for mean, sd in ((0.0, 1.0), (1.2, 0.5), (-0.7, 2.0)):
            reports = synth.ordinal_report(rng.normal(mean, sd, size=100000))
            observed = np.bincount(reports, minlength=6)[1:] / 100000.0
            expected = synth.report_probabilities(mean, sd)
            self.assertAlmostEqual(1.0, expected.sum())
            np.testing.assert_allclose(expected, observed, atol=0.01)

    def test_degenerate_sd(self):
        self.assertEqual([0.0, 0.0, 1.0, 0.0, 0.0], synth.report_probabilities(0.0, 0.0).tolist())


class GenParticipantTestCase(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.participant = synth.gen_participant(synth.EffectProfile.strong(), seed=5, durations=SHORT)

    def test_deterministic(self):
        again = synth.gen_participant(synth.EffectProfile.strong(), seed=5, durations=SHORT)
        self.assertEqual(self.participant.truth, again.truth)
        for channel, recording in self.participant.recordings.items():
            self.assertEqual(recording.samples.tolist(), again.recordings[channel].samples.tolist())
        other = synth.gen_participant(synth.EffectProfile.strong(), seed=6, durations=SHORT)
        self.assertNotEqual(self.participant.truth['beat_times'], other.truth['beat_times'])

    def test_schedule(self):
        segments = self.participant.participant.segments
        self.assertEqual(20, len(segments))
        self.assertEqual(synth.START_TIME, segments[0].t_start)
        for previous, current in zip(segments, segments[1:]):
            self.assertEqual(previous.t_end, current.t_start)
        for channel, recording in self.participant.recordings.items():
            self.assertEqual(ingest.DEFAULT_RATES[channel], recording.rate)
            self.assertAlmostEqual(20 * 60.0, recording.duration, delta=1.0 / recording.rate)

    def test_truth_matches_reports(self):
        truth = self.participant.truth
        for seg in self.participant.participant.segments:
            key = '%s/%s' % (seg.experience, seg.phase)
            self.assertEqual(seg.self_report > synth.ANXIOUS_ABOVE, truth['anxious'][key])
            self.assertEqual(seg.self_report, int(synth.ordinal_report(truth['latent'][key])))
        self.assertTrue(all(np.diff(truth['beat_times']) > 0))

    def test_traits(self):
        scores = self.participant.traits
        self.assertTrue(0 <= scores.sias_total <= 80)

    def test_acc_counts(self):
        samples = self.participant.recordings[ingest.Channel.ACC3].samples
        counts = samples * ingest.ACC_COUNTS_PER_G
        np.testing.assert_array_equal(np.rint(counts), counts)

    def test_beats_recovered(self):
        participant = synth.gen_participant(synth.EffectProfile.null(), seed=1, durations=SHORT)
        bvp = participant.recordings[ingest.Channel.BVP]
        peaks = ppg.detect_systolic_peaks(ppg.clean_ppg(bvp.samples, bvp.rate), bvp.rate)
        detected = ppg.build_nn_series(peaks, bvp.rate, t0=bvp.start_time).beat_times
        truth = np.asarray(participant.truth['beat_times'])
        nearest = np.abs(detected[:, None] - truth[None, :]).min(axis=1)
        self.assertGreater(np.mean(nearest <= 1.5 / bvp.rate), 0.95)
        self.assertAlmostEqual(len(truth), len(detected), delta=0.05 * len(truth))


class GenCohortTestCase(unittest.TestCase):

    def test_participant_ids(self):
        self.assertEqual(['P01', 'P02', 'P03'], synth.participant_ids(3))
        self.assertEqual('P001', synth.participant_ids(120)[0])

    def test_too_small(self):
        self.assertRaises(base.InvalidSpec, synth.gen_cohort, n=1)

    def test_round_trip_and_features(self):
        cohort = synth.gen_cohort(n=2, profile=synth.EffectProfile.strong(), seed=3, durations=SHORT)
        self.assertEqual(['P01', 'P02'], cohort.manifest.participant_ids)
        with tempfile.TemporaryDirectory() as directory:
            synth.write_dataset(cohort, directory)
            loaded = ingest.load_dataset(directory)
            with open(os.path.join(directory, synth.TRUTH_FILENAME)) as f:
                truth = json.load(f)

        self.assertEqual(3, truth['seed'])
        self.assertEqual(sorted(cohort.truth), sorted(truth['participants']))
        for pid in cohort.manifest.participant_ids:
            self.assertEqual(cohort.manifest[pid].traits, loaded.manifest[pid].traits)
            for channel, recording in cohort.dataset.recordings[pid].items():
                again = loaded.recordings[pid][channel]
                self.assertEqual(recording.start_time, again.start_time)
                self.assertEqual(recording.samples.tolist(), again.samples.tolist())

        table = featureset.build_feature_table(loaded)
        self.assertEqual(24, len(table))
        self.assertEqual([], list(table.skipped))
        self.assertTrue(table.frame['HRV_MeanNN'].notna().all())

    def test_seed_independent_of_jobs(self):
        a = synth.gen_cohort(n=2, seed=9, durations=SHORT)
        b = synth.gen_cohort(n=2, seed=9, durations=SHORT, jobs=2)
        self.assertEqual(a.truth, b.truth)


class PlantedEffectTestCase(unittest.TestCase):

    def cross_validate(self, profile, seed):
        cohort = synth.gen_cohort(n=16, profile=profile, seed=seed, durations=SHORT)
        table = featureset.build_feature_table(cohort.dataset)
        labels = featureset.label_table(table, base.Outcome.RAW_GT3, strict=False)
        self.assertEqual({0.0, 1.0}, set(labels.dropna().unique()))
        design = ml.Design.from_table(table, featureset.BIOBEHAVIORAL_FEATURES, base.Outcome.RAW_GT3)
        spec = ml.ModelSpec(name='logistic_regression', kind='logistic_regression', grid={'C': [1.0]})
        return ml.nested_loso_cv(design, spec, ml.CvConfig(k_grid=(5,), seed=seed))

    def test_strong_effect_is_recovered(self):
        result = self.cross_validate(synth.EffectProfile.strong(), seed=21)
        self.assertGreaterEqual(result.accuracy_mean, 0.85)

    def test_null_profile_is_chance(self):
        result = self.cross_validate(synth.EffectProfile.null(), seed=21)
        self.assertGreaterEqual(result.accuracy_mean, 0.45)
        self.assertLessEqual(result.accuracy_mean, 0.55)


if __name__ == '__main__':  # pragma: no cover
    unittest.main()
