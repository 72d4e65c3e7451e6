# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.

"""Builders shared by the test modules."""

import numpy as np
import pandas as pd

from anxietysense import featureset, ingest

TRAIT_ITEMS = {
    'sias': [2] * 20,
    'bfne': [3] * 8,
    'ders_sf': [2] * 18,
    'dass_dep': [1] * 7,
}


def participant(pid, reports=None, duration=60.0, start=0.0, sias_item=2):
    """A participant going through every experience and phase.

    ``reports`` maps (experience, phase) to a self-report; other segments get 2.
    """
    reports = reports or {}
    segments = []
    t = start
    for experience in ingest.Experience:
        for phase in ingest.Phase:
            segments.append(ingest.PhaseSegment(
                participant_id=pid, experience=experience, phase=phase, t_start=t, t_end=t + duration,
                self_report=reports.get((experience, phase), 2),
            ))
            t += duration
    items = dict(TRAIT_ITEMS, sias=[sias_item] * 20)
    return ingest.Participant(participant_id=pid, trait_items=items, segments=tuple(segments))


def manifest(participants):
    return ingest.Manifest(tuple(participants))


def make_table(n_participants=12, seed=0, informative=(), effect=2.0, reports=None):
    """A feature table with random features and 12 social rows per participant.

    Args:
        informative (sequence of str): features shifted by ``effect`` on
            anxious rows (self-report > 3)
        reports (callable): (rng, participant index, row index) -> self-report
    """
    rng = np.random.default_rng(seed)
    names = featureset.feature_names()
    rows = []
    for p in range(n_participants):
        pid = 'P%02d' % (p + 1)
        baseline = int(rng.integers(1, 4))
        sias = int(rng.integers(10, 70))
        for r, (experience, phase) in enumerate(
                (e, ph) for e in ingest.SOCIAL_EXPERIENCES for ph in ingest.SOCIAL_PHASES):
            report = reports(rng, p, r) if reports else int(rng.integers(1, 6))
            row = {'participant_id': pid, 'experience': experience.value, 'phase': phase.value}
            row.update({name: rng.normal() for name in names})
            row.update(ingest.code_context(experience, phase).as_dict())
            row.update({'sias_total': sias, 'bfne_total': 24, 'ders_mean': 2.5, 'dass_dep_total': 5})
            for name in informative:
                row[name] += effect * (report > 3)
            row.update({'self_report': report, 'baseline_self_report': baseline, 'flags': ''})
            rows.append(row)
    return featureset.FeatureTable(frame=pd.DataFrame(rows))
