# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.

from . import base, experiments, featureset, ingest, ml, runflow, stats, synth

__author__ = 'The anxietysense developers'
try:
    from importlib.metadata import PackageNotFoundError, version

    __version__ = version("anxietysense")
except PackageNotFoundError:
    # Running from a source checkout.
    __version__ = '0.0.0'

# Errors
AnxietySenseError = base.AnxietySenseError
ValidationError = base.ValidationError
ComputationError = base.ComputationError
InvalidTransitionError = runflow.InvalidTransitionError

# Shared vocabulary
Sensor = base.Sensor
Outcome = base.Outcome
WindowMode = base.WindowMode
Standardization = base.Standardization
FeatureVariant = base.FeatureVariant

# Data
load_dataset = ingest.load_dataset
FeatureTable = featureset.FeatureTable
build_feature_table = featureset.build_feature_table

# Statistics and models
fit_mixed_logit = stats.fit_mixed_logit
load_model_specs = ml.load_model_specs
nested_loso_cv = ml.nested_loso_cv

# Runs
ExperimentConfig = experiments.ExperimentConfig
AnalysisRun = experiments.AnalysisRun
EffectProfile = synth.EffectProfile
gen_cohort = synth.gen_cohort
