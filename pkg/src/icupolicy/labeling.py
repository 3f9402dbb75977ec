"""Label derivation from event streams.

Fourteen binary labels per stay: in-ICU mortality followed by the thirteen
intervention onsets, in the order of icupolicy.tasks.TASKS.  An intervention
is positive when a qualifying event falls in the horizon
(prediction_time, end of stay].
"""

import json
import logging
from collections import OrderedDict

import numpy
import pandas

from .errors import DataError
from .tasks import TASKS, INTERVENTIONS, NUM_TASKS

_log = logging.getLogger(__name__)

__all__ = [
    'InterventionDef',
    'HorizonSpec',
    'LabelTable',
    'HorizonError',
    'IntegrityError',
    'default_definitions',
    'load_definitions',
    'dump_definitions',
    'derive_intervention_labels',
    'derive_mortality_label',
    'derive_labels',
    'onset_delays',
    'label_cohort',
]

MODES = ('onset-of-any-code', 'presence-of-item', 'duration-onset')

DEATH_TOLERANCE_HOURS = 0.5


class HorizonError(DataError):
    """Stay too short to have a prediction horizon
    """

class IntegrityError(DataError):
    """Inconsistent timestamps
    """


class InterventionDef(object):
    """Rule deriving one intervention label.

    modes

    * onset-of-any-code - any event with a listed code
    * presence-of-item - a listed item charted with no value or a value > 0
    * duration-onset - a listed episode start with no duration or a duration > 0
    """
    __slots__ = ('name', 'codes', 'mode')

    def __init__(self, name, codes, mode='onset-of-any-code'):
        if name not in INTERVENTIONS:
            raise DataError('Unknown intervention %r'%(name,))
        if mode not in MODES:
            raise DataError('%s: unknown mode %r'%(name, mode))
        codes = frozenset(codes)
        if not codes:
            raise DataError('%s: empty code set'%name)
        self.name, self.codes, self.mode = name, codes, mode

    def matches(self, codes, values):
        """Boolean mask of qualifying events

        :param codes: numpy array of code tokens
        :param values: numpy array of values, NaN where absent
        """
        hit = numpy.isin(codes, sorted(self.codes))
        if self.mode!='onset-of-any-code':
            hit &= numpy.isnan(values) | (values>0)
        return hit

    def todict(self):
        return OrderedDict([('mode', self.mode), ('codes', sorted(self.codes))])

    def __repr__(self):
        return 'InterventionDef(%r, %d codes, %r)'%(self.name, len(self.codes), self.mode)


def _ordered(defs):
    byname = OrderedDict()
    for D in defs:
        if D.name in byname:
            raise DataError('Duplicate definition for %s'%D.name)
        byname[D.name] = D
    missing = [N for N in INTERVENTIONS if N not in byname]
    if missing:
        raise DataError('Missing intervention definitions: %s'%', '.join(missing))
    return [byname[N] for N in INTERVENTIONS]


def default_definitions():
    """Definitions over the synthetic vocabulary
    """
    from .cohort import FAMILY_CODES, FAMILY_MODES
    return [InterventionDef(N, FAMILY_CODES[N], FAMILY_MODES[N]) for N in INTERVENTIONS]


def load_definitions(fname):
    """Read a definition file: JSON object of name -> {"mode":..., "codes":[...]}

    Lets real code sets replace the synthetic ones.
    """
    with open(fname, 'r') as F:
        try:
            raw = json.load(F)
        except ValueError as e:
            raise DataError('%s: %s'%(fname, e))
    if not isinstance(raw, dict):
        raise DataError('%s: expected JSON object'%fname)
    defs = []
    for name, spec in raw.items():
        try:
            defs.append(InterventionDef(name, spec['codes'], spec.get('mode', 'onset-of-any-code')))
        except (KeyError, TypeError, AttributeError):
            raise DataError('%s: malformed entry for %r'%(fname, name))
    return _ordered(defs)


def dump_definitions(defs, fname):
    with open(fname, 'w') as F:
        json.dump(OrderedDict([(D.name, D.todict()) for D in _ordered(defs)]), F, indent=2)


class HorizonSpec(object):
    """Prediction time and horizon end, in hours relative to ICU admission.
    """
    __slots__ = ('prediction_time', 'horizon_end')

    def __init__(self, horizon_end, prediction_time=24.0):
        if not prediction_time<horizon_end:
            raise HorizonError('Horizon end %.3f not after prediction time %.3f'%(horizon_end, prediction_time))
        self.prediction_time = float(prediction_time)
        self.horizon_end = float(horizon_end)

    @classmethod
    def for_record(klass, record, prediction_time=24.0):
        if record.stay_hours<=prediction_time:
            raise HorizonError('%s: stay of %.2f hours ends before prediction time'%(record.patient_id, record.stay_hours))
        return klass(record.stay_hours, prediction_time)

    def window(self, times):
        return (times>self.prediction_time) & (times<=self.horizon_end)


def _qualifying(record, defs, horizon):
    if horizon is None:
        horizon = HorizonSpec.for_record(record)
    elif record.stay_hours<=horizon.prediction_time:
        raise HorizonError('%s: stay of %.2f hours ends before prediction time'%(record.patient_id, record.stay_hours))
    W = horizon.window(record.times)
    times = record.times[W]
    codes = numpy.asarray(record.codes, dtype=object)[W]
    values = record.values[W]
    for D in _ordered(defs):
        yield D, times[D.matches(codes, values)] if len(times) else times


def derive_intervention_labels(record, defs, horizon=None):
    """Thirteen onset bits in INTERVENTIONS order.

    Events at or before prediction time never contribute.

    :param PatientRecord record:
    :param list defs: InterventionDef for all thirteen interventions
    :param HorizonSpec horizon: Defaults to (24h, end of stay)
    :raises HorizonError: if the stay ends at or before prediction time
    :returns: numpy int8 array of 13
    """
    return numpy.asarray([len(T)>0 for _D, T in _qualifying(record, defs, horizon)], dtype=numpy.int8)


def onset_delays(record, defs, horizon=None):
    """Hours from prediction time to the first qualifying event, NaN when none.
    """
    if horizon is None:
        horizon = HorizonSpec.for_record(record)
    return numpy.asarray([T.min()-horizon.prediction_time if len(T) else numpy.nan
                          for _D, T in _qualifying(record, defs, horizon)])


def derive_mortality_label(record):
    """1 if death occurred no later than half an hour after ICU discharge.

    :raises IntegrityError: if death precedes ICU admission
    """
    if record.death_time is None:
        return 0
    if record.death_time<record.in_time:
        raise IntegrityError('%s: death_time %.3f before in_time %.3f'%(record.patient_id, record.death_time, record.in_time))
    return int(record.death_time<=record.out_time+DEATH_TOLERANCE_HOURS)


def derive_labels(record, defs, horizon=None):
    """All fourteen labels
    """
    ret = numpy.zeros(NUM_TASKS, dtype=numpy.int8)
    ret[0] = derive_mortality_label(record)
    ret[1:] = derive_intervention_labels(record, defs, horizon)
    return ret


class LabelTable(object):
    """Labels of a cohort: patient ids and an (N, 14) int8 matrix.
    """
    def __init__(self, patient_ids, labels):
        self.patient_ids = list(patient_ids)
        self.labels = numpy.asarray(labels, dtype=numpy.int8).reshape((-1, NUM_TASKS))
        if len(self.patient_ids)!=self.labels.shape[0]:
            raise ValueError('%d ids for %d label rows'%(len(self.patient_ids), self.labels.shape[0]))
        self._index = dict([(P, i) for i, P in enumerate(self.patient_ids)])

    def __len__(self):
        return len(self.patient_ids)

    def row(self, patient_id):
        return self.labels[self._index[patient_id]]

    def select(self, patient_ids):
        """Sub-table in the given order

        :raises KeyError: for an unknown id
        """
        idx = [self._index[P] for P in patient_ids]
        return LabelTable(patient_ids, self.labels[idx])

    def prevalence(self):
        return self.labels.mean(axis=0)

    def to_csv(self, fname):
        df = pandas.DataFrame(self.labels, columns=list(TASKS))
        df.insert(0, 'patient_id', self.patient_ids)
        df.to_csv(fname, index=False)

    @classmethod
    def from_csv(klass, fname):
        df = pandas.read_csv(fname, dtype={'patient_id': str})
        if list(df.columns)!=['patient_id']+list(TASKS):
            raise DataError('%s: unexpected header %s'%(fname, list(df.columns)))
        return klass(df['patient_id'].tolist(), df[list(TASKS)].to_numpy())


def label_cohort(records, defs=None):
    """Derive labels and onset delays for every record.

    :returns: (LabelTable, (N, 13) array of onset delays)
    """
    defs = _ordered(defs or default_definitions())
    labels, delays = [], []
    for R in records:
        H = HorizonSpec.for_record(R)
        labels.append(derive_labels(R, defs, H))
        delays.append(onset_delays(R, defs, H))
    table = LabelTable([R.patient_id for R in records], numpy.asarray(labels).reshape((-1, NUM_TASKS)))
    _log.info("Labelled %d patients, prevalence %s", len(table),
              ', '.join(['%s=%.3f'%(T, P) for T, P in zip(TASKS, table.prevalence())]) if len(table) else '')
    return table, numpy.asarray(delays).reshape((-1, len(INTERVENTIONS)))
