"""Static severity-score baselines.

Two feature sets summarise the observation window by the worst value of
designated physiology codes: a six organ system set and a seventeen
variable set which adds routine vitals, labs and admission type.  One
L2 penalised logistic regression is fit per task.

>>> suite = BaselineSuite('saps').fit(train_records, train_labels)
>>> probs = suite.predict(test_records)
"""

import json
import logging
import math
from collections import OrderedDict

import numpy
from scipy.special import expit

from .cohort import ADMISSION_CODES, PREDICTION_HOURS
from .errors import DataError
from .tasks import TASKS, NUM_TASKS
from .util import ordered_map, atomic_write

_log = logging.getLogger(__name__)

__all__ = [
    'VARIANTS',
    'SeverityExtractor',
    'LogisticModel',
    'BaselineSuite',
    'DegenerateTask',
    'extract_severity',
    'fit_logistic',
    'predict_logistic',
]

MIN, MAX, FLAG = 'min', 'max', 'flag'

# (code, worst direction)
VARIANTS = OrderedDict([
    ('sofa', (
        ('lab:pao2_fio2', MIN),
        ('lab:platelets', MIN),
        ('lab:bilirubin', MAX),
        ('vital:map', MIN),
        ('vital:gcs', MIN),
        ('lab:creatinine', MAX),
    )),
    ('saps', (
        ('vital:heart_rate', MAX),
        ('vital:sbp', MIN),
        ('vital:temperature', MAX),
        ('lab:pao2_fio2', MIN),
        ('output:urine', MIN),
        ('lab:bun', MAX),
        ('lab:wbc', MAX),
        ('lab:potassium', MAX),
        ('lab:sodium', MIN),
        ('lab:bicarbonate', MIN),
        ('lab:bilirubin', MAX),
        ('vital:gcs', MIN),
        ('lab:lactate', MAX),
        ('lab:creatinine', MAX),
    ) + tuple([(C, FLAG) for C in ADMISSION_CODES])),
])

BASELINE_FORMAT = 1


class DegenerateTask(DataError):
    """Training labels of a task hold a single class
    """


class SeverityExtractor(object):
    """Worst-value summaries with training split imputation and scaling.

    Physiology features missing from a stay take the training median, then
    all physiology features are z-scored with training statistics.  Admission
    indicators are 0/1 and left unscaled.

    :param str variant: 'sofa' (6 features) or 'saps' (17 features)
    """
    def __init__(self, variant, window=PREDICTION_HOURS):
        if variant not in VARIANTS:
            raise ValueError('Unknown baseline variant %r'%(variant,))
        self.variant = variant
        self.window = window
        self.spec = VARIANTS[variant]
        self.median = self.mean = self.std = None

    @property
    def names(self):
        return [C for C, _D in self.spec]

    @property
    def nfeatures(self):
        return len(self.spec)

    def raw(self, record):
        """Unimputed worst values, NaN where a code is absent
        """
        W = record.times<self.window
        seen = {}
        for C, V in zip([C for C, w in zip(record.codes, W) if w], record.values[W]):
            seen.setdefault(C, []).append(V)
        ret = numpy.full(self.nfeatures, numpy.nan)
        for i, (code, direction) in enumerate(self.spec):
            vals = seen.get(code)
            if direction==FLAG:
                ret[i] = 1.0 if vals else 0.0
                continue
            if not vals:
                continue
            vals = numpy.asarray(vals)
            vals = vals[~numpy.isnan(vals)]
            if len(vals):
                ret[i] = vals.max() if direction==MAX else vals.min()
        return ret

    def fit(self, train_records):
        train_records = list(train_records)
        if not train_records:
            raise DataError('Cannot fit severity statistics on an empty training set')
        X = numpy.asarray([self.raw(R) for R in train_records])
        flags = numpy.asarray([D==FLAG for _C, D in self.spec])
        median = numpy.zeros(self.nfeatures)
        for i in numpy.nonzero(~flags)[0]:
            col = X[:,i]
            col = col[~numpy.isnan(col)]
            median[i] = numpy.median(col) if len(col) else 0.0
        X = numpy.where(numpy.isnan(X), median[None,:], X)
        mean = numpy.where(flags, 0.0, X.mean(axis=0))
        std = numpy.where(flags, 1.0, X.std(axis=0))
        std[std==0] = 1.0
        self.median, self.mean, self.std = median, mean, std
        return self

    def _check_fit(self):
        if self.median is None:
            raise RuntimeError('SeverityExtractor used before fit()')

    def extract(self, record):
        """:returns: numpy array of nfeatures, finite
        """
        self._check_fit()
        x = self.raw(record)
        x = numpy.where(numpy.isnan(x), self.median, x)
        return (x-self.mean)/self.std

    def transform(self, records):
        self._check_fit()
        ret = numpy.asarray([self.extract(R) for R in records])
        return ret.reshape((-1, self.nfeatures))

    def todict(self):
        self._check_fit()
        return OrderedDict([
            ('variant', self.variant),
            ('window', self.window),
            ('features', self.names),
            ('median', self.median.tolist()),
            ('mean', self.mean.tolist()),
            ('std', self.std.tolist()),
        ])

    @classmethod
    def fromdict(klass, obj):
        ret = klass(obj['variant'], obj['window'])
        if obj['features']!=ret.names:
            raise DataError('Feature list of %s does not match this version'%obj['variant'])
        ret.median = numpy.asarray(obj['median'], dtype=numpy.float64)
        ret.mean = numpy.asarray(obj['mean'], dtype=numpy.float64)
        ret.std = numpy.asarray(obj['std'], dtype=numpy.float64)
        return ret


def extract_severity(record, variant, extractor=None):
    """Feature vector of one stay.

    :param SeverityExtractor extractor: A fitted extractor for variant
    """
    if extractor is None or extractor.variant!=variant:
        raise ValueError('A SeverityExtractor fitted for %r is required'%(variant,))
    return extractor.extract(record)


class LogisticModel(object):
    """One task's weights and intercept.

    :param list history: Penalised objective after each accepted update
    """
    def __init__(self, task, weights, intercept, l2_strength=0.0, iterations=0, converged=True, history=None):
        self.task = task
        self.weights = numpy.asarray(weights, dtype=numpy.float64)
        self.intercept = float(intercept)
        self.l2_strength = l2_strength
        self.iterations = iterations
        self.converged = converged
        self.history = history or []
        if not (numpy.all(numpy.isfinite(self.weights)) and math.isfinite(self.intercept)):
            raise DataError('%s: non-finite logistic parameters'%task)

    def todict(self):
        return OrderedDict([
            ('task', self.task),
            ('weights', self.weights.tolist()),
            ('intercept', self.intercept),
            ('l2_strength', self.l2_strength),
            ('iterations', self.iterations),
            ('converged', self.converged),
        ])

    @classmethod
    def fromdict(klass, obj):
        return klass(obj['task'], obj['weights'], obj['intercept'], obj.get('l2_strength', 0.0),
                     obj.get('iterations', 0), obj.get('converged', True))

    def __repr__(self):
        return 'LogisticModel(%r, %d weights)'%(self.task, len(self.weights))


def _objective(X, y, w, b, l2):
    a = X.dot(w)+b
    return numpy.mean(y*a - numpy.logaddexp(0.0, a)) - 0.5*l2*w.dot(w)


def fit_logistic(features, labels, task, l2_strength=1e-3, seed=0, tol=1e-6, max_iter=10000):
    """Full batch gradient ascent on the mean log-likelihood minus l2/2*|w|^2.

    The intercept is not penalised.  Each step is accepted by backtracking
    line search, so the objective never decreases.  Starts from zero.

    :param features: (n, d)
    :param labels: (n,) of 0/1
    :param str task: Name recorded in the model
    :param int seed: Recorded only, the fit is deterministic
    :raises DegenerateTask: if labels hold a single class
    """
    X = numpy.asarray(features, dtype=numpy.float64)
    y = numpy.asarray(labels, dtype=numpy.float64)
    if X.ndim!=2 or y.shape!=(X.shape[0],):
        raise ValueError('features %s labels %s'%(X.shape, y.shape))
    npos = int(y.sum())
    if npos==0 or npos==len(y):
        raise DegenerateTask('%s: %d of %d training labels positive'%(task, npos, len(y)))

    n, d = X.shape
    w, b = numpy.zeros(d), 0.0
    J = _objective(X, y, w, b, l2_strength)
    history = [J]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter+1):
        r = y - expit(X.dot(w)+b)
        gw = X.T.dot(r)/n - l2_strength*w
        gb = r.mean()
        gg = gw.dot(gw) + gb*gb
        if math.sqrt(gg)<tol:
            converged = True
            break
        while True:
            w2, b2 = w+step*gw, b+step*gb
            J2 = _objective(X, y, w2, b2, l2_strength)
            if J2>=J+1e-4*step*gg:
                break
            step *= 0.5
            if step<1e-16:
                break
        if step<1e-16:
            # no ascent possible at machine precision
            converged = True
            break
        w, b, J = w2, b2, J2
        history.append(J)
        step = min(step*2.0, 1e4)

    _log.debug("%s: logistic fit %d iterations, converged=%s, objective %.6f", task, it, converged, J)
    return LogisticModel(task, w, b, l2_strength, it, converged, history)


def predict_logistic(model, features):
    """sigmoid(features.w + intercept) for one row or a (n, d) matrix
    """
    X = numpy.asarray(features, dtype=numpy.float64)
    if X.shape[-1]!=len(model.weights):
        raise ValueError('%d features given, model has %d'%(X.shape[-1], len(model.weights)))
    return expit(X.dot(model.weights)+model.intercept)


class BaselineSuite(object):
    """One variant's extractor plus fourteen per-task models.

    A task whose training labels are single class is skipped with a
    warning and predicts its training prevalence.
    """
    def __init__(self, variant):
        self.variant = variant
        self.extractor = SeverityExtractor(variant)
        self.models = OrderedDict()
        self.prevalence = numpy.full(NUM_TASKS, 0.5)

    @property
    def skipped(self):
        return [T for T in TASKS if self.models.get(T) is None]

    def fit(self, train_records, labels, l2_strength=1e-3, seed=0, workers=1):
        """
        :param labels: (N, 14) array aligned with train_records
        """
        train_records = list(train_records)
        labels = numpy.asarray(labels)
        if labels.shape!=(len(train_records), NUM_TASKS):
            raise ValueError('labels %s for %d records'%(labels.shape, len(train_records)))
        self.extractor.fit(train_records)
        X = self.extractor.transform(train_records)
        self.prevalence = numpy.clip(labels.mean(axis=0), 1e-7, 1.0-1e-7)

        def fit1(j):
            try:
                return fit_logistic(X, labels[:,j], TASKS[j], l2_strength, seed)
            except DegenerateTask as e:
                _log.warning("Skip %s baseline task: %s", self.variant, e)
                return None
        self.models = OrderedDict(zip(TASKS, ordered_map(fit1, range(NUM_TASKS), workers=workers, name='logistic')))
        _log.info("Fit %s baseline, %d features, %d tasks skipped", self.variant, self.extractor.nfeatures, len(self.skipped))
        return self

    def predict_features(self, X):
        out = numpy.empty((X.shape[0], NUM_TASKS))
        for j, T in enumerate(TASKS):
            M = self.models.get(T)
            out[:,j] = self.prevalence[j] if M is None else predict_logistic(M, X)
        return out

    def predict(self, records):
        """:returns: (N, 14) probabilities
        """
        return self.predict_features(self.extractor.transform(records))

    def todict(self):
        return OrderedDict([
            ('version', BASELINE_FORMAT),
            ('variant', self.variant),
            ('extractor', self.extractor.todict()),
            ('prevalence', self.prevalence.tolist()),
            ('models', OrderedDict([(T, None if M is None else M.todict()) for T, M in self.models.items()])),
        ])

    @classmethod
    def fromdict(klass, obj):
        if obj.get('version')!=BASELINE_FORMAT:
            raise DataError('Unsupported baseline version %r'%(obj.get('version'),))
        ret = klass(obj['variant'])
        ret.extractor = SeverityExtractor.fromdict(obj['extractor'])
        ret.prevalence = numpy.asarray(obj['prevalence'], dtype=numpy.float64)
        ret.models = OrderedDict([(T, None if M is None else LogisticModel.fromdict(M))
                                  for T, M in obj['models'].items()])
        return ret

    def save(self, fname):
        atomic_write(fname, json.dumps(self.todict(), indent=1))

    @classmethod
    def load(klass, fname):
        with open(fname, 'r') as F:
            return klass.fromdict(json.load(F, object_pairs_hook=OrderedDict))
