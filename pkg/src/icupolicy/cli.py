"""Command line pipeline.

    icupolicy --config run.json simulate
    icupolicy --config run.json label
    icupolicy --config run.json train
    icupolicy --config run.json evaluate
    icupolicy --config run.json analyze
    icupolicy --config run.json compare <id_a> <id_b>
    icupolicy --config run.json report

Each command reads the artifacts of the earlier ones from the run directory
(io.out_dir or --out).
"""

from __future__ import print_function

import json
import logging
import sys
from collections import OrderedDict

import pandas

from .artifacts import RunDir, Stage
from .config import RunConfig, jload
from .errors import ICUPolicyError, ConfigError, DataError
from .tasks import TASKS, INTERVENTIONS

_log = logging.getLogger(__name__)

__all__ = [
    'getargs',
    'main',
]


def _model_name(run):
    return run.model.cell_type.lower()


def _write_predictions(rundir, name, patient_ids, probs):
    df = pandas.DataFrame(probs, columns=list(TASKS))
    df.insert(0, 'patient_id', list(patient_ids))
    df.to_csv(rundir.path(name), index=False, float_format='%.8f')


def _read_cohort(rundir):
    from .cohort import read_cohort
    return read_cohort(rundir.require(RunDir.COHORT, 'simulate'))


def _partition(rundir, records):
    """:returns: OrderedDict split name -> records in cohort order
    """
    from .cohort import SPLITS, read_splits
    membership = read_splits(rundir.require(RunDir.SPLITS, 'label'))
    ret = OrderedDict([(S, []) for S in SPLITS])
    for R in records:
        try:
            ret[membership[R.patient_id]].append(R)
        except KeyError:
            raise DataError('%s has no split assignment'%R.patient_id)
    return ret


def _labels(rundir):
    from .labeling import LabelTable
    return LabelTable.from_csv(rundir.require(RunDir.LABELS, 'label'))


def _load_checkpoint(run, rundir, seed):
    from .model import checkpoint
    return checkpoint.load(rundir.require(RunDir.checkpoint(seed), 'train'), dtype=run.train.dtype)


def _load_vocabulary(rundir):
    from .features import Vocabulary
    return Vocabulary.load(rundir.require(RunDir.VOCAB, 'train'))


def op_simulate(run, rundir, args):
    from .cohort import generate_cohort, read_cohort, write_cohort, write_ground_truth, split_cohort, write_splits
    rundir.makedirs()
    with Stage(rundir, 'simulate', run.digest()) as S:
        if run.io.cohort is not None:
            records = read_cohort(run.io.cohort)
            if not records:
                raise DataError('%s holds no patients'%run.io.cohort)
        else:
            records, truth = generate_cohort(run.sim, workers=run.train.threads)
            write_ground_truth(truth, rundir.path(RunDir.TRUTH))
            S.wrote(RunDir.TRUTH)
        write_cohort(records, rundir.path(RunDir.COHORT))
        write_splits(*split_cohort(records, run.sim.split_ratios, run.sim.seed), fname=rundir.path(RunDir.SPLITS))
        with open(rundir.path(RunDir.CONFIG), 'w') as F:
            json.dump(run.todict(), F, indent=1)
        S.wrote(RunDir.COHORT, RunDir.SPLITS, RunDir.CONFIG)


def op_label(run, rundir, args):
    from .cohort import split_cohort, write_splits
    from .labeling import default_definitions, load_definitions, label_cohort
    from .evaluation import onset_delay_summary
    records = _read_cohort(rundir)
    if run.io.interventions is not None:
        defs = load_definitions(run.io.interventions)
    else:
        defs = default_definitions()

    with Stage(rundir, 'label', run.digest()) as S:
        table, delays = label_cohort(records, defs)
        table.to_csv(rundir.path(RunDir.LABELS))

        df = pandas.DataFrame(delays, columns=list(INTERVENTIONS))
        df.insert(0, 'patient_id', table.patient_ids)
        df.to_csv(rundir.path(RunDir.DELAYS), index=False, float_format='%.4f')
        onset_delay_summary(delays).to_csv(rundir.path('onset_delay_summary.csv'), index=False, float_format='%.4f')
        S.wrote(RunDir.LABELS, RunDir.DELAYS, 'onset_delay_summary.csv')

        if not rundir.exists(RunDir.SPLITS):
            _log.info("No split assignment, creating one")
            write_splits(*split_cohort(records, run.sim.split_ratios, run.sim.seed), fname=rundir.path(RunDir.SPLITS))
            S.wrote(RunDir.SPLITS)


def op_train(run, rundir, args):
    from .baselines import VARIANTS, BaselineSuite
    from .features import build_vocabulary
    from .model import Dataset, train, checkpoint
    table = _labels(rundir)
    parts = _partition(rundir, _read_cohort(rundir))
    workers = run.train.threads

    if len(run.seeds)<2:
        _log.warning("Single training seed, Table 1 will carry no standard deviation")

    with Stage(rundir, 'train', run.digest()) as S:
        vocab = build_vocabulary(parts['train'])
        vocab.save(rundir.path(RunDir.VOCAB))
        S.wrote(RunDir.VOCAB)

        train_set = Dataset.from_records(parts['train'], table, vocab, workers=workers)
        val_set = Dataset.from_records(parts['validation'], table, vocab, workers=workers)

        for seed in run.seeds:
            _log.info("Train seed %d", seed)
            result = train(train_set, val_set, run.model, run.train.replace(seed=seed),
                           vocab_fingerprint=vocab.fingerprint())
            checkpoint.save(result.checkpoint, rundir.path(RunDir.checkpoint(seed)))
            result.curve.to_csv(rundir.path(RunDir.loss_curve(seed)))
            S.wrote(RunDir.checkpoint(seed), RunDir.loss_curve(seed))

        Y = train_set.labels
        for variant in VARIANTS:
            suite = BaselineSuite(variant).fit(parts['train'], Y, seed=run.seeds[0], workers=workers)
            suite.save(rundir.path(RunDir.baseline(variant)))
            S.wrote(RunDir.baseline(variant))


def op_evaluate(run, rundir, args):
    from .baselines import VARIANTS, BaselineSuite
    from .evaluation import MetricsReport, evaluate_predictions
    from .features import encode_all
    from .model import predict
    from .util import ordered_map
    table = _labels(rundir)
    test = _partition(rundir, _read_cohort(rundir))['test']
    if not test:
        raise DataError('Empty test split')
    vocab = _load_vocabulary(rundir)
    # fail before any work if an artifact is absent
    for seed in run.seeds:
        rundir.require(RunDir.checkpoint(seed), 'train')
    for variant in VARIANTS:
        rundir.require(RunDir.baseline(variant), 'train')

    ids = [R.patient_id for R in test]
    Y = table.select(ids).labels
    workers = run.train.threads
    seqs = encode_all(test, vocab, workers=workers)
    model = _model_name(run)

    def one_seed(seed):
        probs = predict(_load_checkpoint(run, rundir, seed), seqs, vocab)
        return probs, evaluate_predictions(probs, Y, run.eval)

    with Stage(rundir, 'evaluate', run.digest()) as S:
        report = MetricsReport()
        for seed, (probs, result) in zip(run.seeds, ordered_map(one_seed, run.seeds, workers=workers, name='evaluate')):
            _write_predictions(rundir, RunDir.predictions(model, seed), ids, probs)
            S.wrote(RunDir.predictions(model, seed))
            report.add(model, seed, result)

        for variant in VARIANTS:
            suite = BaselineSuite.load(rundir.path(RunDir.baseline(variant)))
            probs = suite.predict(test)
            _write_predictions(rundir, RunDir.predictions(variant), ids, probs)
            S.wrote(RunDir.predictions(variant))
            report.add(variant, run.seeds[0], evaluate_predictions(probs, Y, run.eval))

        S.wrote(*report.write(rundir.root))
        for T in TASKS:
            row = ['%s=%.3f'%(M, report.results[M][run.seeds[0]]['auroc'][T]) for M in report.models]
            _log.info("AUROC %-18s %s", T, ' '.join(row))


def op_analyze(run, rundir, args):
    from .analytics import analyze
    from .model import predict
    seed = run.seeds[0]
    ckpt = _load_checkpoint(run, rundir, seed)
    vocab = _load_vocabulary(rundir)
    table = _labels(rundir)
    test = _partition(rundir, _read_cohort(rundir))['test']
    ids = [R.patient_id for R in test]

    with Stage(rundir, 'analyze', run.digest()) as S:
        probs = predict(ckpt, test, vocab, workers=run.train.threads)
        result = analyze(ids, probs, [R.stay_hours for R in test], table.select(ids).labels[:,0],
                         run.analytics, workers=run.train.threads)
        S.wrote(*result.write(rundir.root))


def op_compare(run, rundir, args):
    from .analytics import patient_compare
    from .model import predict
    ckpt = _load_checkpoint(run, rundir, run.seeds[0])
    vocab = _load_vocabulary(rundir)
    byid = dict([(R.patient_id, R) for R in _read_cohort(rundir)])
    for pid in (args.id_a, args.id_b):
        if pid not in byid:
            raise DataError('Unknown patient %r'%(pid,))

    ids = [args.id_a] if args.id_a==args.id_b else [args.id_a, args.id_b]
    with Stage(rundir, 'compare', run.digest()) as S:
        probs = predict(ckpt, [byid[P] for P in ids], vocab)
        df = patient_compare(probs[:,1:], ids, args.id_a, args.id_b)
        name = RunDir.comparison(args.id_a, args.id_b)
        df.to_csv(rundir.path(name), index=False, float_format='%.6f')
        S.wrote(name)
    print(df.to_string(index=False))


def op_report(run, rundir, args):
    from .evaluation import format_tables
    T1 = pandas.read_csv(rundir.require(RunDir.TABLE1, 'evaluate'))
    T2 = pandas.read_csv(rundir.require(RunDir.TABLE2_SUMMARY, 'evaluate'), dtype={'group': str})
    with Stage(rundir, 'report', run.digest()) as S:
        text = format_tables(T1, T2)
        with open(rundir.path(RunDir.REPORT), 'w') as F:
            F.write(text)
        S.wrote(RunDir.REPORT)
    print(text, end='')


def getargs():
    from argparse import ArgumentParser
    P = ArgumentParser(prog='icupolicy')
    P.add_argument('--config', help='Run configuration (JSON, C style comments allowed)')
    P.add_argument('--seed', type=int, help='Override the simulation and training seeds')
    P.add_argument('--out', help='Override io.out_dir')
    P.add_argument('--threads', type=int, help='Override train.threads (default 1)')
    P.add_argument('--precision', choices=['single', 'double'], help='Override train.precision')
    P.add_argument('-v', '--verbose', action='store_const', const=logging.DEBUG, default=logging.INFO,
                   help='Enable basic logging with DEBUG level')
    P.add_argument('--logging', help='Use logging config from file (JSON in dictConfig format)')

    SP = P.add_subparsers(dest='command', metavar='command')
    SP.required = True

    PP = SP.add_parser('simulate', help='Generate (or ingest) the cohort and its split')
    PP.set_defaults(func=op_simulate)

    PP = SP.add_parser('label', help='Derive mortality and intervention onset labels')
    PP.set_defaults(func=op_label)

    PP = SP.add_parser('train', help='Train one model per seed and the severity baselines')
    PP.set_defaults(func=op_train)

    PP = SP.add_parser('evaluate', help='Score every model on the test split')
    PP.set_defaults(func=op_evaluate)

    PP = SP.add_parser('analyze', help='Cluster and embed the test predictions')
    PP.set_defaults(func=op_analyze)

    PP = SP.add_parser('compare', help='Intervention probabilities of two patients side by side')
    PP.add_argument('id_a')
    PP.add_argument('id_b')
    PP.set_defaults(func=op_compare)

    PP = SP.add_parser('report', help='Print the discrimination and Precision@I tables')
    PP.set_defaults(func=op_report)

    return P


def _setup_logging(args):
    if args.logging is not None:
        with open(args.logging, 'r') as F:
            jconf = F.read()
        try:
            from logging.config import dictConfig
            dictConfig(jload(jconf))
        except ValueError as e:
            raise ConfigError('--logging', '%s: %s'%(args.logging, e.args))
    else:
        logging.basicConfig(level=args.verbose, format='%(asctime)s %(levelname)s %(name)s %(message)s')


def load_run(args):
    """Validated RunConfig with command line overrides applied
    """
    run = RunConfig.load(args.config) if args.config else RunConfig()
    return run.override(seed=args.seed, out_dir=args.out, threads=args.threads, precision=args.precision)


def main(args=None):
    args = getargs().parse_args(args)
    try:
        _setup_logging(args)
        run = load_run(args)
        args.func(run, RunDir(run.io.out_dir), args)
    except ICUPolicyError as e:
        _log.error("%s", e)
        return e.exit_code
    except (IOError, OSError) as e:
        _log.error("%s", e)
        return 1
    return 0


if __name__=='__main__':
    sys.exit(main())
