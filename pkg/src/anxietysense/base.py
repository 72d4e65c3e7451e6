# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Base components of anxietysense: the error hierarchy and shared enums."""

import enum


class AnxietySenseError(Exception):
    """Base class for errors from the anxietysense package."""


class ValidationError(AnxietySenseError):
    """Raised when inputs do not satisfy a documented precondition."""


class ParseError(ValidationError):
    """Raised when a device export cannot be parsed.

    Attributes:
        line (int): 1-based line number of the offending line
        reason (str): what was wrong with it
    """

    def __init__(self, line, reason):
        super().__init__("line %d: %s" % (line, reason))
        self.line = line
        self.reason = reason


class EmptyRecording(ValidationError):
    """Raised when a device export holds a header but no samples."""


class EmptySegment(ValidationError):
    """Raised when a phase segment does not overlap a recording."""


class NotApplicable(ValidationError):
    """Raised when context codes are requested for a non-social segment."""


class MissingReference(ValidationError):
    """Raised when an outcome label needs a reference self-report that is absent."""


class InsufficientData(ValidationError):
    """Raised when a table has too few participants or rows for an analysis."""


class InvalidSpec(ValidationError):
    """Raised when a filter, model or run specification is invalid."""


class ComputationError(AnxietySenseError):
    """Base class for failures while computing on valid inputs."""


class SignalTooShort(ComputationError):
    """Raised when a signal is shorter than an operation requires."""


class EmptySignal(ComputationError):
    """Raised when an operation receives an empty signal."""


class InsufficientPoints(ComputationError):
    """Raised when too few samples are available for interpolation or spectra."""


class InvalidTimes(ComputationError):
    """Raised when sample times are not strictly increasing."""


class NoBeatsDetected(ComputationError):
    """Raised when peak detection finds no systolic peak."""


class InsufficientBeats(ComputationError):
    """Raised when too few beats are available for interval statistics."""


class EmptyWindowSet(ComputationError):
    """Raised when a segment yields no feature window."""


class SeparationError(ComputationError):
    """Raised when a logistic fit diverges because of (quasi-)perfect separation."""


class NotConverged(ComputationError):
    """Raised when an iterative fit stops before convergence.

    Attributes:
        partial: the best estimate reached before stopping
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class DegeneratePairs(ComputationError):
    """Raised when every paired difference is zero."""


class DegenerateInput(ComputationError):
    """Raised when an input has zero variance."""


class SingleClassError(ComputationError):
    """Raised when labels hold a single class where two are required."""


class TrainingError(ComputationError):
    """Raised when a classifier cannot be trained on the given rows."""


class MetricUndefined(ComputationError):
    """Raised when a metric is undefined for the given truths."""


class ReportIOError(ComputationError):
    """Raised when report files cannot be written."""


class Sensor(enum.Enum):
    """Feature channels, used to group features for corrections and ablations."""
    PPG = 'ppg'
    EDA = 'eda'
    ACC = 'acc'
    TEMP = 'temp'
    CONTEXT = 'context'
    TRAIT = 'trait'

    @property
    def is_biobehavioral(self):
        return self in BIOBEHAVIORAL_SENSORS

    def __str__(self):
        return self.value


BIOBEHAVIORAL_SENSORS = (Sensor.PPG, Sensor.EDA, Sensor.ACC, Sensor.TEMP)


class Outcome(enum.Enum):
    """Operationalizations of the binary anxious status."""
    RAW_GT3 = 'raw_gt3'
    EXTREME_EQ5 = 'extreme_eq5'
    WITHIN_PERSON_GT0 = 'within_person'
    ABOVE_BASELINE = 'above_baseline'

    def __str__(self):
        return self.value


class WindowMode(enum.Enum):
    AVERAGED = 'averaged'
    WHOLE = 'whole'

    def __str__(self):
        return self.value


class Standardization(enum.Enum):
    PERSON = 'person'
    NONE = 'none'

    def __str__(self):
        return self.value


class FeatureVariant(enum.Enum):
    """Feature-set variants compared in the ablation study."""
    BIO_ONLY = 'bio_only'
    BIO_TRAIT = 'bio_trait'
    BIO_CONTEXT = 'bio_context'
    FULL = 'full'

    @property
    def with_trait(self):
        return self in (FeatureVariant.BIO_TRAIT, FeatureVariant.FULL)

    @property
    def with_context(self):
        return self in (FeatureVariant.BIO_CONTEXT, FeatureVariant.FULL)

    def __str__(self):
        return self.value
