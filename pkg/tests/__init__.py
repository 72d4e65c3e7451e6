# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


from .test_cli import *
from .test_dsp import *
from .test_eda import *
from .test_experiments import *
from .test_featureset import *
from .test_ingest import *
from .test_ml import *
from .test_motion import *
from .test_ppg import *
from .test_runflow import *
from .test_stats import *
from .test_synth import *
from .test_utils import *
