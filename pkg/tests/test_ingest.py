# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.

import io
import os
import tempfile
import unittest

import numpy as np

from anxietysense import base, ingest

from . import fixtures


class ParseSensorCsvTestCase(unittest.TestCase):

    def test_bvp(self):
        rec = ingest.parse_sensor_csv(["1697040000.0", "64.0", "0.1", "0.2"], ingest.Channel.BVP)
        self.assertEqual(1697040000.0, rec.start_time)
        self.assertEqual(64.0, rec.rate)
        self.assertEqual([0.1, 0.2], rec.samples.tolist())

    def test_acc_scaling(self):
        rec = ingest.parse_sensor_csv(
            ["1697040000.0, 1697040000.0, 1697040000.0", "32.0, 32.0, 32.0", "0,0,64", "-32,16,64"],
            ingest.Channel.ACC3)
        self.assertEqual((2, 3), rec.samples.shape)
        self.assertEqual([0.0, 0.0, 1.0], rec.samples[0].tolist())
        self.assertEqual([-0.5, 0.25, 1.0], rec.samples[1].tolist())

    def test_empty_body(self):
        self.assertRaises(base.EmptyRecording, ingest.parse_sensor_csv, ["1697040000.0", "64.0"],
                          ingest.Channel.BVP)

    def test_malformed_header(self):
        with self.assertRaises(base.ParseError) as ctx:
            ingest.parse_sensor_csv(["1697040000.0", "fast", "0.1"], ingest.Channel.EDA)
        self.assertEqual(2, ctx.exception.line)

    def test_bad_sample(self):
        with self.assertRaises(base.ParseError) as ctx:
            ingest.parse_sensor_csv(["0.0", "4.0", "0.1", "oops"], ingest.Channel.EDA)
        self.assertEqual(4, ctx.exception.line)

    def test_acc_field_count(self):
        self.assertRaises(base.ParseError, ingest.parse_sensor_csv, ["0.0", "32.0", "1,2"], ingest.Channel.ACC3)

    def test_round_trip(self):
        text = "1697040000.25\n64.0\n0.1\n-3.0000000000000004\n17.5\n"
        rec = ingest.parse_sensor_csv(io.StringIO(text), ingest.Channel.BVP)
        out = io.StringIO()
        ingest.serialize_sensor_csv(rec, out)
        self.assertEqual(text, out.getvalue())
        again = ingest.parse_sensor_csv(io.StringIO(out.getvalue()), ingest.Channel.BVP)
        self.assertEqual(rec.samples.tolist(), again.samples.tolist())

    def test_samples_read_only(self):
        rec = ingest.parse_sensor_csv(["0.0", "4.0", "1.0"], ingest.Channel.TEMP)
        with self.assertRaises(ValueError):
            rec.samples[0] = 2.0


class SliceSegmentTestCase(unittest.TestCase):

    def setUp(self):
        self.rec = ingest.SensorRecording(ingest.Channel.EDA, 0.0, 4.0, np.arange(400.0))

    def segment(self, t_start, t_end):
        return ingest.PhaseSegment('P01', ingest.Experience.DYAD_EVAL, ingest.Phase.CONCURRENT,
                                   t_start, t_end, 3)

    def test_slice(self):
        sliced = ingest.slice_span(self.rec, 10.0, 20.0)
        self.assertEqual(40, len(sliced))
        self.assertEqual(10.0, sliced.start_time)
        self.assertEqual(40.0, sliced.samples[0])

    def test_whole(self):
        sliced = ingest.slice_segment(self.rec, self.segment(0.0, 100.0))
        self.assertEqual(self.rec.samples.tolist(), sliced.samples.tolist())

    def test_idempotent(self):
        seg = self.segment(12.3, 57.9)
        once = ingest.slice_segment(self.rec, seg)
        twice = ingest.slice_segment(once, seg)
        self.assertEqual(once.start_time, twice.start_time)
        self.assertEqual(once.samples.tolist(), twice.samples.tolist())

    def test_no_overlap(self):
        self.assertRaises(base.EmptySegment, ingest.slice_segment, self.rec, self.segment(200.0, 260.0))


class PhaseSegmentTestCase(unittest.TestCase):

    def test_duration_bounds(self):
        self.assertRaises(base.ValidationError, ingest.PhaseSegment, 'P01', 'dyad_eval', 'concurrent', 0.0, 10.0)
        self.assertRaises(base.ValidationError, ingest.PhaseSegment, 'P01', 'dyad_eval', 'concurrent', 0.0, 1000.0)

    def test_report_range(self):
        self.assertRaises(base.ValidationError, ingest.PhaseSegment, 'P01', 'dyad_eval', 'concurrent',
                          0.0, 60.0, 6)

    def test_social(self):
        self.assertTrue(ingest.PhaseSegment('P01', 'group_eval', 'post_event', 0.0, 60.0).is_social)
        self.assertFalse(ingest.PhaseSegment('P01', 'group_eval', 'baseline', 0.0, 60.0).is_social)
        self.assertFalse(ingest.PhaseSegment('P01', 'alone_video', 'concurrent', 0.0, 60.0).is_social)


class CodeContextTestCase(unittest.TestCase):

    def test_codes(self):
        self.assertEqual((0, 0, 1), tuple(ingest.code_context('dyad_non_eval', 'anticipatory').as_dict().values()))
        self.assertEqual((1, 1, 3), tuple(ingest.code_context('group_eval', 'post_event').as_dict().values()))

    def test_not_applicable(self):
        self.assertRaises(base.NotApplicable, ingest.code_context, 'alone_video', 'concurrent')
        self.assertRaises(base.NotApplicable, ingest.code_context, 'dyad_eval', 'baseline')

    def test_one_code_per_pair(self):
        codes = {}
        for experience in ingest.SOCIAL_EXPERIENCES:
            for phase in ingest.SOCIAL_PHASES:
                ctx = ingest.code_context(experience, phase)
                codes[(experience, phase)] = (ctx.group_size_code, ctx.eval_code, ctx.phase_code)
        self.assertEqual(12, len(set(codes.values())))


class TraitTotalsTestCase(unittest.TestCase):

    def test_maximum_sias(self):
        scores = ingest.trait_totals(dict(fixtures.TRAIT_ITEMS, sias=[4] * 20))
        self.assertEqual(80, scores.sias_total)

    def test_minimum(self):
        scores = ingest.trait_totals({'sias': [0] * 20, 'bfne': [1] * 8, 'ders_sf': [3] * 18, 'dass_dep': [0] * 7})
        self.assertEqual((0, 8, 3.0, 0), (scores.sias_total, scores.bfne_total, scores.ders_mean,
                                          scores.dass_dep_total))

    def test_invalid(self):
        self.assertRaises(base.ValidationError, ingest.trait_totals, dict(fixtures.TRAIT_ITEMS, sias=[4] * 19))
        self.assertRaises(base.ValidationError, ingest.trait_totals, dict(fixtures.TRAIT_ITEMS, dass_dep=[4] * 7))
        items = dict(fixtures.TRAIT_ITEMS)
        del items['bfne']
        self.assertRaises(base.ValidationError, ingest.trait_totals, items)


class ManifestTestCase(unittest.TestCase):

    def test_round_trip(self):
        manifest = fixtures.manifest([fixtures.participant('P01'), fixtures.participant('P02', sias_item=3)])
        out = io.StringIO()
        ingest.dump_manifest(manifest, out)
        loaded = ingest.load_manifest(io.StringIO(out.getvalue()))
        self.assertEqual(['P01', 'P02'], loaded.participant_ids)
        self.assertEqual(60, loaded['P02'].traits.sias_total)
        self.assertEqual(12, len(list(loaded.segments(social_only=True))) // 2)

    def test_duplicates(self):
        self.assertRaises(base.ValidationError, fixtures.manifest,
                          [fixtures.participant('P01'), fixtures.participant('P01')])

    def test_malformed(self):
        self.assertRaises(base.ValidationError, ingest.load_manifest, io.StringIO('{"participants": 3}'))
        self.assertRaises(base.ValidationError, ingest.load_manifest, io.StringIO('not json'))
        self.assertRaises(base.ValidationError, ingest.load_manifest,
                          io.StringIO('[{"participant_id": "P01", "traits": {}, "segments": []}]'))


class DatasetTestCase(unittest.TestCase):

    def test_missing_export(self):
        with tempfile.TemporaryDirectory() as directory:
            with open(os.path.join(directory, ingest.MANIFEST_FILENAME), 'w') as f:
                ingest.dump_manifest(fixtures.manifest([fixtures.participant('P01')]), f)
            self.assertRaises(base.ValidationError, ingest.load_dataset, directory)


if __name__ == '__main__':  # pragma: no cover
    unittest.main()
