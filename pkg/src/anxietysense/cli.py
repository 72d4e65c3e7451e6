# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""The ``anxietysense`` command.

Settings are resolved as: command-line flags, then the ``[anxietysense]``
section of the INI file given with ``--config``, then built-in defaults.
Exit status: 0 on success, 1 on invalid input or usage, 2 on runtime failure.
"""

import argparse
import configparser
import dataclasses
import logging
import os
import sys
import typing

import pandas as pd

from . import experiments, featureset, ingest, synth
from .base import (
    BIOBEHAVIORAL_SENSORS, AnxietySenseError, FeatureVariant, InvalidSpec, Outcome, Standardization,
    ValidationError, WindowMode,
)
from .utils import write_csv

logger = logging.getLogger('anxietysense.cli')

CONFIG_SECTION = 'anxietysense'
FEATURES_FILENAME = 'features.csv'
SCHEMA_FILENAME = 'feature_schema.json'

SUBCOMMANDS = ('ingest', 'features', 'screen', 'cv', 'ablate', 'individual', 'synth', 'report', 'all')
SUBCOMMAND_ANALYSES = {
    'screen': ('screen',),
    'cv': ('cv',),
    'ablate': ('ablations',),
    'individual': ('individual',),
    'all': experiments.ANALYSES,
}
PROFILES = {
    'null': synth.EffectProfile.null,
    'strong': synth.EffectProfile.strong,
}

DEFAULTS = {
    'in': None,
    'table': None,
    'out': 'report',
    'seed': 0,
    'jobs': 1,
    'outcome': Outcome.RAW_GT3.value,
    'features': FeatureVariant.BIO_ONLY.value,
    'sensors': ','.join(s.value for s in BIOBEHAVIORAL_SENSORS),
    'window': WindowMode.AVERAGED.value,
    'standardize': Standardization.PERSON.value,
    'models': '',
    'k_grid': '5,10,20',
    'k_sweep': '1,3,5,10,20',
    'reps': 1,
    'exclude_low_variability': False,
    'grids': None,
    'n': 46,
    'profile': 'strong',
}
_INTEGERS = ('seed', 'jobs', 'reps', 'n')


def _split(text):
    return tuple(item.strip() for item in str(text).split(',') if item.strip())


def _integers(text, name):
    try:
        return tuple(int(item) for item in _split(text))
    except ValueError:
        raise InvalidSpec("--%s expects comma-separated integers, got %r" % (name.replace('_', '-'), text))


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """A resolved command line.

    Attributes:
        subcommand (str): one of SUBCOMMANDS
        input (str): dataset directory
        table (str): feature table CSV, used instead of a dataset
        out (str): output directory
        grids (str): model grid JSON overriding the packaged one
        n (int): synthetic cohort size
        profile (str): synthetic effect profile name
        verbosity (int)
        experiment (ExperimentConfig)
    """
    subcommand: str
    experiment: experiments.ExperimentConfig
    input: typing.Optional[str] = None
    table: typing.Optional[str] = None
    out: str = 'report'
    grids: typing.Optional[str] = None
    n: int = 46
    profile: str = 'strong'
    verbosity: int = 0

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise InvalidSpec("Unknown subcommand %r" % self.subcommand)

    @property
    def seed(self):
        return self.experiment.seed


class _Parser(argparse.ArgumentParser):
    """ArgumentParser exiting with status 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, '%s: error: %s\n' % (self.prog, message))


def _add_common(parser):
    parser.add_argument('--config', help="INI file with an [anxietysense] section; flags take precedence")
    parser.add_argument('-v', '--verbose', action='count', default=0, help="-v for INFO, -vv for DEBUG")
    parser.add_argument('--seed', type=int, help="root seed of every random choice (default: 0)")
    parser.add_argument('--jobs', type=int, help="joblib workers (default: 1)")
    parser.add_argument('--out', help="output directory (default: report)")


def _add_data(parser):
    source = parser.add_mutually_exclusive_group()
    source.add_argument('--in', dest='in', metavar='DIR', help="dataset directory (manifest.json + exports)")
    source.add_argument('--table', metavar='CSV', help="feature table written by the features subcommand")
    parser.add_argument('--window', choices=[m.value for m in WindowMode], help="default: averaged")


def _add_analysis(parser):
    parser.add_argument('--outcome', choices=[o.value for o in Outcome], help="default: raw_gt3")
    parser.add_argument('--features', choices=[v.value for v in FeatureVariant], help="default: bio_only")
    parser.add_argument('--sensors', help="comma-separated biobehavioral sensors (default: ppg,eda,acc,temp)")
    parser.add_argument('--standardize', choices=[s.value for s in Standardization], help="default: person")
    parser.add_argument('--models', help="comma-separated model names (default: every packaged model)")
    parser.add_argument('--k-grid', dest='k_grid', help="K values tuned in CV (default: 5,10,20)")
    parser.add_argument('--k-sweep', dest='k_sweep', help="K values of the top-K ablation (default: 1,3,5,10,20)")
    parser.add_argument('--reps', type=int, help="CV repetitions (default: 1)")
    parser.add_argument('--grids', metavar='JSON', help="model hyperparameter grids")
    parser.add_argument('--exclude-low-variability', dest='exclude_low_variability', action='store_const',
                        const=True, help="drop participants whose self-report sd is below 0.5")


def build_parser():
    parser = _Parser(
        prog='anxietysense',
        description="State social anxiety detection from wrist-worn sensor exports.",
        epilog="Settings precedence: flags > --config file > defaults.",
    )
    subparsers = parser.add_subparsers(dest='subcommand', metavar='subcommand', parser_class=_Parser)
    subparsers.required = True

    sub = subparsers.add_parser('ingest', help="validate a dataset and list its segments")
    _add_common(sub)
    sub.add_argument('--in', dest='in', metavar='DIR', help="dataset directory")

    sub = subparsers.add_parser('features', help="build the feature table")
    _add_common(sub)
    sub.add_argument('--in', dest='in', metavar='DIR', help="dataset directory")
    sub.add_argument('--window', choices=[m.value for m in WindowMode], help="default: averaged")

    for name, description in (
            ('screen', "per-feature mixed-effects screen"),
            ('cv', "nested leave-one-participant-out CV"),
            ('ablate', "feature-set, sensor, top-K, outcome and processing ablations"),
            ('individual', "individual-level accuracy correlations"),
            ('all', "every analysis and the full report")):
        sub = subparsers.add_parser(name, help=description)
        _add_common(sub)
        _add_data(sub)
        _add_analysis(sub)

    sub = subparsers.add_parser('synth', help="write a synthetic cohort")
    _add_common(sub)
    sub.add_argument('--n', type=int, help="participants (default: 46)")
    sub.add_argument('--profile', choices=sorted(PROFILES), help="planted effects (default: strong)")

    sub = subparsers.add_parser('report', help="redraw the plots of an existing report directory")
    _add_common(sub)
    return parser


def read_config_file(path):
    """Settings of the [anxietysense] section of an INI file, keys normalized to flag names."""
    parser = configparser.ConfigParser()
    try:
        with open(path, 'r', encoding='utf-8') as f:
            parser.read_file(f)
    except (OSError, configparser.Error) as e:
        raise ValidationError("Cannot read config file %s: %s" % (path, e))
    if not parser.has_section(CONFIG_SECTION):
        return {}
    values = {}
    for key, value in parser.items(CONFIG_SECTION):
        key = key.replace('-', '_')
        if key not in DEFAULTS:
            raise ValidationError("Unknown setting %r in %s" % (key, path))
        if key in _INTEGERS:
            try:
                value = int(value)
            except ValueError:
                raise ValidationError("Setting %r in %s must be an integer" % (key, path))
        elif key == 'exclude_low_variability':
            value = parser.getboolean(CONFIG_SECTION, key)
        values[key] = value
    return values


def resolve_settings(args):
    """Merge flags, config file and defaults."""
    settings = dict(DEFAULTS)
    if args.config:
        settings.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def make_run_config(args):
    settings = resolve_settings(args)
    try:
        experiment = experiments.ExperimentConfig(
            analyses=SUBCOMMAND_ANALYSES.get(args.subcommand, experiments.ANALYSES),
            variant=settings['features'],
            sensors=_split(settings['sensors']),
            window=settings['window'],
            outcome=settings['outcome'],
            standardization=settings['standardize'],
            k_sweep=_integers(settings['k_sweep'], 'k_sweep'),
            k_grid=_integers(settings['k_grid'], 'k_grid'),
            repetitions=settings['reps'],
            seed=settings['seed'],
            models=_split(settings['models']),
            jobs=settings['jobs'],
            exclude_low_variability=bool(settings['exclude_low_variability']),
            out_dir=settings['out'],
        )
    except ValueError as e:
        # Enum lookups of unknown values.
        raise InvalidSpec(str(e))
    if settings['reps'] < 1:
        raise InvalidSpec("--reps must be >= 1")
    return RunConfig(
        subcommand=args.subcommand, experiment=experiment, input=settings['in'], table=settings['table'],
        out=settings['out'], grids=settings['grids'], n=settings['n'], profile=settings['profile'],
        verbosity=args.verbose,
    )


def _require_input(config):
    if not config.input:
        raise InvalidSpec("%s needs --in DIR" % config.subcommand)
    return config.input


def _makedirs(path):
    os.makedirs(path, exist_ok=True)
    return path


def run_ingest(config):
    directory = _require_input(config)
    dataset = ingest.load_dataset(directory)
    rows = [dict(seg.to_dict(), participant_id=seg.participant_id, social=seg.is_social)
            for seg in dataset.manifest.segments()]
    frame = pd.DataFrame(rows, columns=['participant_id', 'experience', 'phase', 't_start', 't_end',
                                        'self_report', 'social'])
    write_csv(frame, os.path.join(_makedirs(config.out), 'segments.csv'))
    print("%d participant(s), %d segment(s), %d social" % (
        len(dataset.manifest), len(frame), int(frame['social'].sum())))
    return 0


def run_features(config):
    dataset = ingest.load_dataset(_require_input(config))
    table = featureset.build_feature_table(dataset, mode=config.experiment.window, jobs=config.experiment.jobs)
    out = _makedirs(config.out)
    featureset.write_table(table, os.path.join(out, FEATURES_FILENAME), os.path.join(out, SCHEMA_FILENAME))
    print("%d feature row(s) written to %s" % (len(table), os.path.join(out, FEATURES_FILENAME)))
    return 0


def run_analyses(config):
    run = experiments.AnalysisRun(config.experiment, grids=config.grids)
    if config.table:
        run.use_table(config.table)
    else:
        run.load(_require_input(config))
        run.featurize()
        if config.subcommand == 'all':
            out = _makedirs(config.out)
            featureset.write_table(run.table, os.path.join(out, FEATURES_FILENAME),
                                   os.path.join(out, SCHEMA_FILENAME))
    run.run_all()
    written = run.report(config.out)
    print("%d file(s) written to %s" % (len(written) + 1, config.out))
    return 0


def run_synth(config):
    if config.profile not in PROFILES:
        raise InvalidSpec("Unknown profile %r" % config.profile)
    cohort = synth.gen_cohort(n=config.n, profile=PROFILES[config.profile](), seed=config.seed,
                              jobs=config.experiment.jobs)
    synth.write_dataset(cohort, config.out)
    print("%d synthetic participant(s) written to %s" % (config.n, config.out))
    return 0


def run_report(config):
    if not os.path.isdir(config.out):
        raise ValidationError("No report directory at %s" % config.out)
    written = experiments.render_plots(config.out)
    print("%d plot(s) written to %s" % (len(written), config.out))
    return 0


HANDLERS = {
    'ingest': run_ingest,
    'features': run_features,
    'synth': run_synth,
    'report': run_report,
}


def _configure_logging(verbosity):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')


def main(argv=None):
    """Run the command line; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    _configure_logging(args.verbose)
    try:
        config = make_run_config(args)
        handler = HANDLERS.get(config.subcommand, run_analyses)
        return handler(config)
    except ValidationError as e:
        logger.debug("Validation failure", exc_info=True)
        sys.stderr.write('anxietysense: error: %s\n' % e)
        return 1
    except (AnxietySenseError, OSError) as e:
        logger.debug("Runtime failure", exc_info=True)
        sys.stderr.write('anxietysense: failed: %s\n' % e)
        return 2
