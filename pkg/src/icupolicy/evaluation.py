"""Discrimination, ranking, calibration and risk/intervention relationship metrics.

All metric functions are pure.  MetricsReport gathers per-seed results of
each model and writes the report tables.
"""

import json
import logging
import math
import os
from collections import OrderedDict

import numpy
import pandas
from scipy.stats import rankdata

from .analytics.groups import quantile_groups
from .baselines import VARIANTS
from .config import Section, as_int
from .errors import ICUPolicyError
from .tasks import TASKS, INTERVENTIONS, NUM_TASKS, LABELS
from .util import atomic_write

_log = logging.getLogger(__name__)

__all__ = [
    'EvalConfig',
    'MetricsReport',
    'UndefinedMetric',
    'auroc',
    'auprc',
    'precision_at_i',
    'precision_at_i_table',
    'calibration_curve',
    'expected_calibration_error',
    'quantile_relationships',
    'aggregate_over_seeds',
    'loss_by_intervention_count',
    'error_relationship',
    'onset_delay_summary',
    'evaluate_predictions',
    'baseline_margins',
    'format_tables',
]

EPS = 1e-7


class UndefinedMetric(ICUPolicyError, ValueError):
    """Metric undefined for the given labels (eg. AUROC of a single class)
    """


class EvalConfig(Section):
    """
    * calibration_bins - Equal width bins on [0, 1]
    * mortality_groups - Equal count mortality risk groups of the intervention table
    * intervention_groups - Equal count groups per intervention of the mortality table
    * max_count_group - Patients with at least this many true interventions are pooled
    """
    name = 'eval'
    _fields = (
        ('calibration_bins', as_int, 10),
        ('mortality_groups', as_int, 5),
        ('intervention_groups', as_int, 10),
        ('max_count_group', as_int, 6),
    )

    def validate(self):
        for F in ('calibration_bins', 'mortality_groups', 'intervention_groups'):
            if getattr(self, F)<1:
                self.fail(F, 'must be >= 1')
        if not 1<=self.max_count_group<=len(INTERVENTIONS):
            self.fail('max_count_group', 'must be in [1, %d]'%len(INTERVENTIONS))


def _pair(scores, labels):
    scores = numpy.asarray(scores, dtype=numpy.float64).ravel()
    labels = numpy.asarray(labels).ravel()
    if scores.shape!=labels.shape:
        raise ValueError('scores %s != labels %s'%(scores.shape, labels.shape))
    return scores, labels.astype(bool)


def auroc(scores, labels):
    """Probability that a random positive outscores a random negative, ties count 1/2.

    Computed from midranks (Mann-Whitney U).

    :raises UndefinedMetric: unless both classes are present
    """
    scores, pos = _pair(scores, labels)
    npos = int(pos.sum())
    nneg = len(pos)-npos
    if npos==0 or nneg==0:
        raise UndefinedMetric('AUROC needs both classes (%d positive, %d negative)'%(npos, nneg))
    R = rankdata(scores)
    U = R[pos].sum() - npos*(npos+1)/2.0
    return U/(float(npos)*nneg)


def auprc(scores, labels):
    """Average precision, sum over thresholds of (R_k - R_k-1) * P_k.

    Thresholds are the distinct scores in descending order, so tied scores
    enter as one block.

    :raises UndefinedMetric: without positives
    """
    scores, pos = _pair(scores, labels)
    npos = int(pos.sum())
    if npos==0:
        raise UndefinedMetric('AUPRC needs at least one positive')
    order = numpy.argsort(-scores, kind='stable')
    s, y = scores[order], pos[order]
    tp = numpy.cumsum(y)
    # last index of each tie block
    ends = numpy.nonzero(numpy.append(s[1:]!=s[:-1], True))[0]
    tp = tp[ends].astype(numpy.float64)
    precision = tp/(ends+1)
    recall = tp/npos
    return float(numpy.sum(numpy.diff(numpy.concatenate(([0.0], recall)))*precision))


def _true_indices(true_set):
    if isinstance(true_set, (set, frozenset)):
        return sorted(true_set)
    arr = numpy.asarray(true_set)
    if arr.shape==(len(INTERVENTIONS),) and arr.dtype!=object and set(numpy.unique(arr)).issubset({0, 1}):
        return list(numpy.nonzero(arr)[0])
    return sorted(set(int(i) for i in arr.ravel()))


def precision_at_i(prediction, true_set):
    """Fraction of the top-I predicted interventions which are true, I = |true_set|.

    Ties in prediction are broken by task order.

    :param prediction: 13 intervention probabilities
    :param true_set: set of intervention indices, or a 13 element 0/1 vector
    :returns: float, or None when true_set is empty (patient excluded)
    """
    prediction = numpy.asarray(prediction, dtype=numpy.float64).ravel()
    if prediction.shape!=(len(INTERVENTIONS),):
        raise ValueError('prediction shape %s != (%d,)'%(prediction.shape, len(INTERVENTIONS)))
    true = _true_indices(true_set)
    I = len(true)
    if I==0:
        return None
    top = numpy.argsort(-prediction, kind='stable')[:I]
    return len(set(top.tolist()) & set(true))/float(I)


def count_group_names(max_group=6):
    return [str(i) for i in range(1, max_group)] + ['>=%d'%max_group]


def precision_at_i_table(probs, labels, max_group=6):
    """Precision@I grouped by the number of true interventions.

    :param probs: (N, 13) intervention probabilities
    :param labels: (N, 13) true interventions
    :returns: DataFrame with columns group, mean, std, count.  std over patients (ddof 0)
    """
    probs = numpy.asarray(probs, dtype=numpy.float64)
    labels = numpy.asarray(labels)
    if probs.shape!=labels.shape or probs.ndim!=2 or probs.shape[1]!=len(INTERVENTIONS):
        raise ValueError('probs %s labels %s'%(probs.shape, labels.shape))
    counts = labels.sum(axis=1)
    vals = [precision_at_i(P, Y) for P, Y in zip(probs, labels)]
    rows = []
    for g, name in enumerate(count_group_names(max_group), 1):
        sel = (counts>=g) if g==max_group else (counts==g)
        V = numpy.asarray([vals[i] for i in numpy.nonzero(sel)[0]], dtype=numpy.float64)
        rows.append((name, V.mean() if len(V) else numpy.nan, V.std() if len(V) else numpy.nan, len(V)))
    return pandas.DataFrame(rows, columns=['group', 'mean', 'std', 'count'])


def calibration_curve(probs, labels, n_bins=10):
    """Equal width reliability bins on [0, 1], the last bin right-closed.

    :returns: list of (mean_pred, frac_pos, count) for non-empty bins
    """
    probs, pos = _pair(probs, labels)
    if len(probs) and (probs.min()<0.0 or probs.max()>1.0):
        raise ValueError('probabilities outside [0, 1]')
    idx = numpy.minimum((probs*n_bins).astype(numpy.int64), n_bins-1)
    ret = []
    for b in range(n_bins):
        sel = idx==b
        n = int(sel.sum())
        if n:
            ret.append((float(probs[sel].mean()), float(pos[sel].mean()), n))
    return ret


def expected_calibration_error(probs, labels, n_bins=10):
    curve = calibration_curve(probs, labels, n_bins)
    total = sum([C for _M, _F, C in curve])
    if total==0:
        return numpy.nan
    return sum([C*abs(M-F) for M, F, C in curve])/float(total)


def quantile_relationships(mortality_probs, intervention_probs, mortality_groups=5, intervention_groups=10):
    """Two tables relating mortality risk and intervention probabilities.

    (a) intervention means by mortality risk group: (mortality_groups, 13)
    (b) mortality means by intervention probability group: (13, intervention_groups)

    :raises DataError: with fewer patients than groups
    """
    M = numpy.asarray(mortality_probs, dtype=numpy.float64).ravel()
    P = numpy.asarray(intervention_probs, dtype=numpy.float64)
    if P.shape!=(len(M), len(INTERVENTIONS)):
        raise ValueError('intervention_probs %s != (%d, %d)'%(P.shape, len(M), len(INTERVENTIONS)))

    G = quantile_groups(M, mortality_groups)
    by_mortality = numpy.asarray([P[G==g].mean(axis=0) for g in range(mortality_groups)])

    by_intervention = numpy.empty((len(INTERVENTIONS), intervention_groups))
    for j in range(len(INTERVENTIONS)):
        D = quantile_groups(P[:,j], intervention_groups)
        by_intervention[j] = [M[D==d].mean() for d in range(intervention_groups)]
    return by_mortality, by_intervention


def aggregate_over_seeds(values):
    """(mean, sample std with n-1 denominator)

    :raises UndefinedMetric: with fewer than two values
    """
    values = numpy.asarray(values, dtype=numpy.float64).ravel()
    if len(values)<2:
        raise UndefinedMetric('Seed aggregation needs >= 2 values, not %d'%len(values))
    return float(values.mean()), float(values.std(ddof=1))


def _cross_entropy(probs, labels):
    p = numpy.clip(numpy.asarray(probs, dtype=numpy.float64), EPS, 1.0-EPS)
    y = numpy.asarray(labels, dtype=numpy.float64)
    return -(y*numpy.log(p) + (1.0-y)*numpy.log(1.0-p))


def loss_by_intervention_count(mortality_probs, mortality_labels, intervention_labels, max_group=6):
    """Mortality cross-entropy grouped by number of true interventions (0..max_group-1, >=max_group)

    :returns: DataFrame with columns group, mean, std, count
    """
    ce = _cross_entropy(mortality_probs, mortality_labels).ravel()
    counts = numpy.asarray(intervention_labels).sum(axis=1)
    if counts.shape!=ce.shape:
        raise ValueError('%d mortality entries, %d intervention rows'%(len(ce), len(counts)))
    rows = []
    for g in range(max_group+1):
        sel = (counts>=g) if g==max_group else (counts==g)
        V = ce[sel]
        rows.append((str(g) if g<max_group else '>=%d'%g,
                     V.mean() if len(V) else numpy.nan, V.std() if len(V) else numpy.nan, len(V)))
    return pandas.DataFrame(rows, columns=['group', 'mean', 'std', 'count'])


def error_relationship(probs, labels, n_groups=10):
    """Mortality cross-entropy by equal count groups of total intervention cross-entropy.

    :param probs: (N, 14)
    :param labels: (N, 14)
    :returns: DataFrame with columns group, intervention_ce, mortality_ce, count
    """
    probs = numpy.asarray(probs, dtype=numpy.float64)
    labels = numpy.asarray(labels)
    if probs.shape!=labels.shape or probs.shape[1:]!=(NUM_TASKS,):
        raise ValueError('probs %s labels %s'%(probs.shape, labels.shape))
    ce = _cross_entropy(probs, labels)
    total = ce[:,1:].sum(axis=1)
    G = quantile_groups(total, n_groups)
    rows = [(g, total[G==g].mean(), ce[G==g, 0].mean(), int((G==g).sum())) for g in range(n_groups)]
    return pandas.DataFrame(rows, columns=['group', 'intervention_ce', 'mortality_ce', 'count'])


def onset_delay_summary(delays):
    """Per intervention count, mean and median of hours from prediction time to onset.

    :param delays: (N, 13) with NaN where no onset
    """
    D = numpy.asarray(delays, dtype=numpy.float64).reshape((-1, len(INTERVENTIONS)))
    rows = []
    for j, name in enumerate(INTERVENTIONS):
        V = D[:,j][~numpy.isnan(D[:,j])]
        rows.append((name, len(V), V.mean() if len(V) else numpy.nan, numpy.median(V) if len(V) else numpy.nan))
    return pandas.DataFrame(rows, columns=['intervention', 'count', 'mean_hours', 'median_hours'])


def _safe(fn, *args):
    try:
        return fn(*args)
    except UndefinedMetric as e:
        _log.warning("%s", e)
        return numpy.nan


def evaluate_predictions(probs, labels, config=None):
    """Every metric of one prediction set.

    :param probs: (N, 14)
    :param labels: (N, 14)
    :param EvalConfig config:
    :returns: OrderedDict
    """
    config = config or EvalConfig()
    probs = numpy.asarray(probs, dtype=numpy.float64)
    labels = numpy.asarray(labels)
    if probs.shape!=labels.shape or probs.ndim!=2 or probs.shape[1]!=NUM_TASKS:
        raise ValueError('probs %s labels %s'%(probs.shape, labels.shape))

    ret = OrderedDict()
    ret['n'] = len(probs)
    ret['auroc'] = OrderedDict([(T, _safe(auroc, probs[:,j], labels[:,j])) for j, T in enumerate(TASKS)])
    ret['auprc'] = OrderedDict([(T, _safe(auprc, probs[:,j], labels[:,j])) for j, T in enumerate(TASKS)])
    ret['ece'] = OrderedDict([(T, expected_calibration_error(probs[:,j], labels[:,j], config.calibration_bins))
                              for j, T in enumerate(TASKS)])
    ret['calibration'] = OrderedDict([(T, calibration_curve(probs[:,j], labels[:,j], config.calibration_bins))
                                      for j, T in enumerate(TASKS)])
    ret['precision_at_i'] = precision_at_i_table(probs[:,1:], labels[:,1:], config.max_count_group)
    ret['loss_by_count'] = loss_by_intervention_count(probs[:,0], labels[:,0], labels[:,1:], config.max_count_group)
    if len(probs)>=max(config.mortality_groups, config.intervention_groups):
        ret['by_mortality'], ret['by_intervention'] = quantile_relationships(
            probs[:,0], probs[:,1:], config.mortality_groups, config.intervention_groups)
        ret['error_relationship'] = error_relationship(probs, labels, config.intervention_groups)
    else:
        _log.warning("Only %d patients, skipping quantile tables", len(probs))
    return ret


def _jsonable(val):
    if isinstance(val, pandas.DataFrame):
        return [OrderedDict([(K, _jsonable(V)) for K, V in row.items()]) for row in val.to_dict('records')]
    if isinstance(val, dict):
        return OrderedDict([(K, _jsonable(V)) for K, V in val.items()])
    if isinstance(val, (list, tuple)):
        return [_jsonable(V) for V in val]
    if isinstance(val, numpy.ndarray):
        return _jsonable(val.tolist())
    if isinstance(val, (numpy.integer,)):
        return int(val)
    if isinstance(val, (float, numpy.floating)):
        return None if math.isnan(val) else float(val)
    return val


class MetricsReport(object):
    """Evaluations of several models, each over one or more seeds.

    >>> R = MetricsReport()
    >>> R.add('lstm', 1, evaluate_predictions(P, Y))
    """
    def __init__(self):
        self.results = OrderedDict()

    def add(self, model, seed, evaluation):
        self.results.setdefault(model, OrderedDict())[seed] = evaluation

    @property
    def models(self):
        return list(self.results)

    def _agg(self, vals):
        vals = [V for V in vals if not math.isnan(V)]
        if len(vals)>=2:
            return aggregate_over_seeds(vals)
        return (vals[0] if vals else numpy.nan), numpy.nan

    def table1(self):
        """AUROC and AUPRC per model and task, mean and std over seeds
        """
        rows = []
        for M, seeds in self.results.items():
            for T in TASKS:
                roc = self._agg([E['auroc'][T] for E in seeds.values()])
                prc = self._agg([E['auprc'][T] for E in seeds.values()])
                rows.append((M, T, roc[0], roc[1], prc[0], prc[1], len(seeds)))
        return pandas.DataFrame(rows, columns=['model', 'task', 'auroc_mean', 'auroc_std',
                                               'auprc_mean', 'auprc_std', 'n_seeds'])

    def _per_seed(self, key):
        frames = []
        for M, seeds in self.results.items():
            for S, E in seeds.items():
                if key not in E:
                    continue
                df = E[key].copy()
                df.insert(0, 'seed', S)
                df.insert(0, 'model', M)
                frames.append(df)
        if not frames:
            return pandas.DataFrame()
        return pandas.concat(frames, ignore_index=True)

    def table2(self):
        """Precision@I per model, seed and intervention count group
        """
        return self._per_seed('precision_at_i')

    def table2_summary(self):
        """Precision@I per model and count group, aggregated over seeds.

        mean is the mean over seeds of each seed's mean, seed_std their
        sample std (NaN with a single seed).  std is the mean per-patient
        std and count the number of test patients in the group.
        """
        rows = []
        for M, seeds in self.results.items():
            frames = [E['precision_at_i'].set_index('group') for E in seeds.values()]
            for g in frames[0].index:
                mean, seed_std = self._agg([float(F.loc[g, 'mean']) for F in frames])
                std, _S = self._agg([float(F.loc[g, 'std']) for F in frames])
                rows.append((M, g, mean, std, seed_std, int(frames[0].loc[g, 'count']), len(frames)))
        return pandas.DataFrame(rows, columns=['model', 'group', 'mean', 'std', 'seed_std', 'count', 'n_seeds'])

    def calibration(self):
        rows = []
        for M, seeds in self.results.items():
            for S, E in seeds.items():
                for T in TASKS:
                    for b, (mp, fp, n) in enumerate(E['calibration'][T]):
                        rows.append((M, S, T, b, mp, fp, n))
        return pandas.DataFrame(rows, columns=['model', 'seed', 'task', 'bin', 'mean_pred', 'frac_pos', 'count'])

    def mortality_quantiles(self):
        """Mean intervention probabilities by mortality risk group
        """
        rows = []
        for M, seeds in self.results.items():
            for S, E in seeds.items():
                if 'by_mortality' not in E:
                    continue
                for g, means in enumerate(E['by_mortality']):
                    rows.append((M, S, g)+tuple(means))
        return pandas.DataFrame(rows, columns=['model', 'seed', 'mortality_group']+list(INTERVENTIONS))

    def intervention_deciles(self):
        """Mean mortality probability by intervention probability group
        """
        rows = []
        for M, seeds in self.results.items():
            for S, E in seeds.items():
                if 'by_intervention' not in E:
                    continue
                for j, name in enumerate(INTERVENTIONS):
                    for g, mean in enumerate(E['by_intervention'][j]):
                        rows.append((M, S, name, g, mean))
        return pandas.DataFrame(rows, columns=['model', 'seed', 'intervention', 'group', 'mean_mortality'])

    def todict(self):
        ret = OrderedDict()
        for M, seeds in self.results.items():
            ret[M] = OrderedDict([(str(S), _jsonable(E)) for S, E in seeds.items()])
        return ret

    def write(self, out_dir):
        """Write metrics.json and the CSV tables into out_dir.

        :returns: list of written file names
        """
        files = OrderedDict([
            ('table1.csv', self.table1()),
            ('table2.csv', self.table2()),
            ('table2_summary.csv', self.table2_summary()),
            ('calibration.csv', self.calibration()),
            ('mortality_quantiles.csv', self.mortality_quantiles()),
            ('intervention_deciles.csv', self.intervention_deciles()),
            ('loss_by_intervention_count.csv', self._per_seed('loss_by_count')),
            ('error_relationship.csv', self._per_seed('error_relationship')),
        ])
        written = []
        atomic_write(os.path.join(out_dir, 'metrics.json'), json.dumps(self.todict(), indent=1))
        written.append('metrics.json')
        for name, df in files.items():
            atomic_write(os.path.join(out_dir, name), df.to_csv(index=False, float_format='%.6f'))
            written.append(name)
        return written

    def format_text(self):
        return format_tables(self.table1(), self.table2_summary())


def baseline_margins(T1, model, baselines):
    """AUROC of a model minus that of the better baseline, per task.

    Baselines with an undefined AUROC for a task are ignored for that task.

    :param T1: DataFrame as MetricsReport.table1()
    :param str model:
    :param baselines: model names to compare against
    :returns: DataFrame with columns task, auroc, best_baseline, baseline_auroc, margin
    """
    def get(M, T):
        sel = T1[(T1.model==M) & (T1.task==T)]
        if not len(sel):
            raise ValueError('No %s row for task %s'%(M, T))
        return float(sel.auroc_mean.iloc[0])

    rows = []
    for T in TASKS:
        A = get(model, T)
        base = [(get(B, T), B) for B in baselines]
        base = [(V, B) for V, B in base if not math.isnan(V)]
        V, B = max(base) if base else (numpy.nan, None)
        rows.append((T, A, B, V, A-V))
    return pandas.DataFrame(rows, columns=['task', 'auroc', 'best_baseline', 'baseline_auroc', 'margin'])


def format_tables(T1, T2):
    """Plain text rendering of the discrimination and Precision@I tables

    :param T1: DataFrame as MetricsReport.table1()
    :param T2: DataFrame as MetricsReport.table2_summary()
    """
    models = list(T1.model.drop_duplicates())
    lines = []
    lines.append('Discrimination (AUROC / AUPRC, mean +- std over seeds)')
    lines.append('%-20s'%'task' + ''.join(['%28s'%M for M in models]))
    for T in TASKS:
        cells = []
        for M in models:
            r = T1[(T1.model==M) & (T1.task==T)].iloc[0]
            cells.append('%28s'%('%s / %s'%(_pm(r.auroc_mean, r.auroc_std), _pm(r.auprc_mean, r.auprc_std))))
        lines.append('%-20s'%LABELS[T] + ''.join(cells))
    lines.append('')
    lines.append('Precision@I by number of true interventions (mean +- per-patient std, averaged over seeds)')
    groups = list(T2.group.drop_duplicates()) if len(T2) else count_group_names()
    lines.append('%-20s'%'I' + ''.join(['%16s'%M for M in models]) + '%8s'%'count')
    for g in groups:
        cells, count = [], 0
        for M in models:
            sub = T2[(T2.model==M) & (T2.group==g)] if len(T2) else T2
            cells.append('%16s'%(_pm(sub['mean'].mean(), sub['std'].mean()) if len(sub) else 'n/a'))
            count = int(sub['count'].iloc[0]) if len(sub) else count
        lines.append('%-20s'%g + ''.join(cells) + '%8d'%count)

    baselines = [M for M in models if M in VARIANTS]
    if baselines:
        lines.append('')
        for M in models:
            if M in baselines:
                continue
            D = baseline_margins(T1, M, baselines)
            lines.append('%s beats the better baseline on %d of %d tasks, mortality AUROC margin %+.3f'
                         %(M, int((D.margin>0).sum()), len(D), D.margin.iloc[0]))
    return '\n'.join(lines)+'\n'


def _pm(mean, std):
    if mean is None or math.isnan(mean):
        return 'n/a'
    if std is None or math.isnan(std):
        return '%.3f'%mean
    return '%.3f+-%.3f'%(mean, std)
