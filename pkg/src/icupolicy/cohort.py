"""Synthetic ICU cohort generation, splitting and JSONL/CSV persistence.

Each patient has one ICU stay.  A latent state (severity, six organ
dysfunction factors, a deterioration slope, admission type, per-intervention
indications and early intervention exposures) drives both the emitted
event stream and fourteen logistic label models whose intercepts are
calibrated to target prevalences.  The exact label probabilities are kept
as GroundTruth.

>>> records, truth = generate_cohort(SimConfig(n_patients=1000, seed=1))
"""

import json
import logging
import math
from collections import OrderedDict

import numpy
import pandas
from scipy.optimize import brentq
from scipy.special import expit, logit

from .config import Section, as_int, as_float, choice
from .errors import ConfigError, DataError
from .tasks import TASKS, INTERVENTIONS, NUM_TASKS, DEFAULT_PREVALENCE
from .util import ordered_map

_log = logging.getLogger(__name__)

__all__ = [
    'SimConfig',
    'PatientRecord',
    'GroundTruth',
    'generate_cohort',
    'split_cohort',
    'read_cohort',
    'write_cohort',
    'read_ground_truth',
    'write_ground_truth',
    'read_splits',
    'write_splits',
]

MIN_STAY_DAYS, MAX_STAY_DAYS = 2, 14
PREDICTION_HOURS = 24.0

# Intervention families.  Drug lists follow the published label definitions,
# bolus/transfusion item sets are represented by a few named items.
FAMILY_CODES = OrderedDict([
    ('vasopressors', ('med:levophed', 'med:neosynephrine', 'med:phenylephrine', 'med:norepinephrine',
                      'med:vasopressin', 'med:dopamine', 'med:epinephrine')),
    ('inotropes', ('med:dopamine', 'med:dobutamine', 'med:milrinone')),
    ('sedation', ('med:propofol', 'med:midazolam', 'med:ativan', 'med:dexmedetomidine',
                  'med:diazepam', 'med:ketamine', 'med:pentobarbital')),
    ('analgesic', ('med:fentanyl', 'med:morphine_sulfate', 'med:hydromorphone')),
    ('anticoagulation', ('med:heparin', 'med:integrelin', 'med:argatroban', 'med:lepirudin',
                         'med:aggrastat', 'med:reopro', 'med:bivalirudin')),
    ('diuretic', ('med:furosemide', 'med:natrecor')),
    ('paralytic', ('med:cisatracurium', 'med:vecuronium', 'med:atracurium')),
    ('colloid_bolus', ('item:albumin_5', 'item:albumin_25', 'item:hetastarch')),
    ('crystalloid_bolus', ('item:normal_saline_bolus', 'item:lactated_ringers_bolus')),
    ('ffp_transfusion', ('item:ffp',)),
    ('rbc_transfusion', ('item:packed_rbc',)),
    ('ventilation', ('proc:mech_vent_start',)),
    ('antibiotic', ('med:vancomycin_iv', 'med:cefepime_iv', 'med:piperacillin_tazobactam_iv',
                    'med:meropenem_iv', 'med:ceftriaxone_iv')),
])

FAMILY_MODES = OrderedDict([
    (name, 'presence-of-item' if name.endswith(('_bolus', '_transfusion'))
     else 'duration-onset' if name=='ventilation' else 'onset-of-any-code')
    for name in FAMILY_CODES
])

# Bedside assessments charted in the observation window.  The value tracks a
# per-intervention indication factor that the severity summaries never see.
ASSESSMENT_CODES = OrderedDict([
    ('vasopressors', 'assess:perfusion'),
    ('inotropes', 'assess:cardiac_output'),
    ('sedation', 'assess:agitation'),
    ('analgesic', 'assess:pain'),
    ('anticoagulation', 'assess:thrombosis_risk'),
    ('diuretic', 'assess:fluid_overload'),
    ('paralytic', 'assess:vent_dyssynchrony'),
    ('colloid_bolus', 'assess:oncotic_deficit'),
    ('crystalloid_bolus', 'assess:volume_depletion'),
    ('ffp_transfusion', 'assess:bleeding_risk'),
    ('rbc_transfusion', 'assess:anemia'),
    ('ventilation', 'assess:work_of_breathing'),
    ('antibiotic', 'assess:infection'),
])
# one early charting, one in the last hours before prediction time
ASSESSMENT_WINDOWS = ((0.0, 12.0), (20.0, PREDICTION_HOURS-0.01))
ASSESSMENT_NOISE = 0.4

ORGANS = ('respiratory', 'coagulation', 'liver', 'cardiovascular', 'cns', 'renal')
SEVERITY = -1

# (code, driving organ or SEVERITY, base, scale, direction of dysfunction, measurements/hour)
PHYSIOLOGY = (
    ('lab:pao2_fio2',    0, 350.0, 60.0, -1, 0.15),
    ('lab:platelets',    1, 220.0, 50.0, -1, 0.12),
    ('lab:bilirubin',    2, 1.0,   0.6,  +1, 0.08),
    ('vital:map',        3, 78.0,  8.0,  -1, 0.6),
    ('vital:gcs',        4, 13.0,  1.5,  -1, 0.25),
    ('lab:creatinine',   5, 1.1,   0.5,  +1, 0.12),
    ('vital:heart_rate', 3, 88.0,  10.0, +1, 0.6),
    ('vital:sbp',        3, 120.0, 12.0, -1, 0.6),
    ('vital:temperature', SEVERITY, 37.0, 0.5, +1, 0.25),
    ('output:urine',     5, 80.0,  25.0, -1, 0.4),
    ('lab:bun',          5, 20.0,  8.0,  +1, 0.12),
    ('lab:wbc',          SEVERITY, 10.0, 3.0, +1, 0.12),
    ('lab:potassium',    5, 4.1,   0.4,  +1, 0.12),
    ('lab:sodium',       SEVERITY, 139.0, 3.0, -1, 0.12),
    ('lab:bicarbonate',  SEVERITY, 24.0, 3.0, -1, 0.12),
    ('lab:lactate',      3, 1.8,   0.8,  +1, 0.1),
    ('vital:resp_rate',  0, 18.0,  2.5,  +1, 0.85),
)
TREND_CODE = 'vital:resp_rate'
TREND_PER_HOUR = 0.3  # units of scale per hour per unit slope

ADMISSION_CODES = ('adm:elective', 'adm:emergency', 'adm:urgent')
ADMISSION_SHARES = (0.15, 0.82, 0.03)
ELECTIVE = 0

# shared severity loading, scaled by coupling_strength
SEVERITY_LOADING = numpy.array([1.0, 0.8, 0.5, 0.4, 0.2, 0.2, 0.3, 0.7, 0.5, 0.3, 0.5, 0.4, 0.6, 0.4])

# task x organ (respiratory, coagulation, liver, cardiovascular, cns, renal)
ORGAN_LOADING = numpy.array([
    [0.3, 0.1, 0.2, 0.3, 0.3, 0.2],   # mortality
    [0.0, 0.0, 0.0, 0.8, 0.0, 0.0],   # vasopressors
    [0.0, 0.0, 0.0, 0.6, 0.0, 0.0],   # inotropes
    [0.5, 0.0, 0.0, 0.0, 0.4, 0.0],   # sedation
    [0.0, 0.0, 0.0, 0.0, 0.2, 0.0],   # analgesic
    [0.0, -0.4, 0.0, 0.0, 0.0, 0.0],  # anticoagulation
    [0.3, 0.0, 0.0, 0.0, 0.0, 0.3],   # diuretic
    [0.8, 0.0, 0.0, 0.0, 0.0, 0.0],   # paralytic
    [0.0, 0.0, 0.0, 0.5, 0.0, 0.0],   # colloid_bolus
    [0.0, 0.0, 0.0, 0.3, 0.0, 0.2],   # crystalloid_bolus
    [0.0, 0.7, 0.4, 0.0, 0.0, 0.0],   # ffp_transfusion
    [0.0, 0.4, 0.0, 0.0, 0.0, 0.0],   # rbc_transfusion
    [0.8, 0.0, 0.0, 0.0, 0.0, 0.0],   # ventilation
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],   # antibiotic
])

# shift for elective (post-surgical) admissions
ELECTIVE_SHIFT = numpy.array([-0.8, 0.0, 0.2, -0.2, 0.4, 0.6, 0.9, 0.0, 0.0, 0.3, 0.0, 0.7, -0.3, 0.8])

# weight of temporal_signal_strength on the rectified slope, per task
SLOPE_LOADING = numpy.array([2.0] + [0.4]*13)
SLOPE_SEVERITY_INTERACTION = 0.8  # mortality only

# weight of the assessed indication on each intervention logit
INDICATION_LOADING = 2.0
EXPOSURE_EFFECT = 2.0
ORGAN_CORRELATION = 0.6
CALIBRATION_DRAWS = 200000


def _prevalence(val):
    if not isinstance(val, dict):
        raise ValueError('expected object of task -> fraction')
    ret = OrderedDict(DEFAULT_PREVALENCE)
    for K, V in val.items():
        if K not in ret:
            raise ValueError('unknown task %r'%K)
        ret[K] = as_float(V)
    return ret

def _range(val):
    val = [as_float(V) for V in val]
    if len(val)!=2:
        raise ValueError('expected [min_days, max_days]')
    return tuple(val)

def _ratios(val):
    val = [as_float(V) for V in val]
    if len(val)!=3:
        raise ValueError('expected [train, validation, test]')
    return tuple(val)


class SimConfig(Section):
    """Synthetic cohort parameters.

    * n_patients - Number of ICU stays
    * seed - Root seed.  Patient i uses an independent stream derived from (seed, i)
    * vocab_size - Total number of distinct codes, including the reserved ones
    * stay_length_range - [min, max] stay length in days, within [2, 14]
    * events_per_hour_rate - Mean number of background events per hour
    * prevalence_targets - task name -> target positive fraction
    * coupling_strength - Weight of the severity shared between mortality and interventions
    * temporal_signal_strength - Weight of the deterioration slope on the label logits
    * observation_tail_hours - Observations are emitted up to this long past prediction time
    * split_ratios - train/validation/test fractions
    """
    name = 'sim'
    _fields = (
        ('n_patients', as_int, 2000),
        ('seed', as_int, 0),
        ('vocab_size', as_int, 500),
        ('stay_length_range', _range, (2.0, 14.0)),
        ('events_per_hour_rate', as_float, 2.0),
        ('prevalence_targets', _prevalence, DEFAULT_PREVALENCE),
        ('coupling_strength', as_float, 1.0),
        ('temporal_signal_strength', as_float, 1.0),
        ('observation_tail_hours', as_float, 12.0),
        ('split_ratios', _ratios, (0.8, 0.1, 0.1)),
    )

    def validate(self):
        if self.n_patients<1:
            self.fail('n_patients', 'must be >= 1')
        if not 0<=self.seed<2**64:
            self.fail('seed', 'must be a 64-bit unsigned integer')
        lo, hi = self.stay_length_range
        if not MIN_STAY_DAYS<=lo<=hi<=MAX_STAY_DAYS:
            self.fail('stay_length_range', 'must satisfy %d <= min <= max <= %d days'%(MIN_STAY_DAYS, MAX_STAY_DAYS))
        if self.events_per_hour_rate<=0:
            self.fail('events_per_hour_rate', 'must be positive')
        for K, V in self.prevalence_targets.items():
            if not 0.0<V<1.0:
                self.fail('prevalence_targets.'+K, 'must be in (0, 1)')
        if self.vocab_size<len(reserved_codes()):
            self.fail('vocab_size', 'must be >= %d reserved codes'%len(reserved_codes()))
        if self.coupling_strength<0:
            self.fail('coupling_strength', 'must be >= 0')
        if self.temporal_signal_strength<0:
            self.fail('temporal_signal_strength', 'must be >= 0')
        if self.observation_tail_hours<0:
            self.fail('observation_tail_hours', 'must be >= 0')
        if any([R<0 for R in self.split_ratios]) or abs(sum(self.split_ratios)-1.0)>1e-9:
            self.fail('split_ratios', 'must be non-negative and sum to 1')


def reserved_codes():
    """Codes with a fixed meaning: intervention families, physiology and admission type
    """
    ret = []
    for codes in FAMILY_CODES.values():
        ret.extend([C for C in codes if C not in ret])
    ret.extend([P[0] for P in PHYSIOLOGY])
    ret.extend(ASSESSMENT_CODES.values())
    ret.extend(ADMISSION_CODES)
    return ret

def filler_codes(vocab_size):
    nfill = vocab_size - len(reserved_codes())
    return ['obs:%04d'%n for n in range(nfill)]

def sim_vocabulary(vocab_size):
    """All codes the generator may emit, sorted
    """
    return sorted(reserved_codes() + filler_codes(vocab_size))


class PatientRecord(object):
    """One ICU stay.

    Event times are hours relative to in_time.  in_time, out_time and
    death_time share one absolute clock (hours).  Events are held as parallel
    arrays; a missing value is NaN.

    :param str patient_id:
    :param float in_time:
    :param float out_time:
    :param death_time: float or None
    :param times: event times, sorted
    :param codes: event code tokens
    :param values: event values, NaN where absent
    """
    __slots__ = ('patient_id', 'in_time', 'out_time', 'death_time', 'times', 'codes', 'values')

    def __init__(self, patient_id, in_time, out_time, death_time, times, codes, values):
        self.patient_id = str(patient_id)
        self.in_time = float(in_time)
        self.out_time = float(out_time)
        self.death_time = None if death_time is None else float(death_time)
        self.times = numpy.asarray(times, dtype=numpy.float64)
        self.codes = tuple(codes)
        self.values = numpy.asarray(values, dtype=numpy.float64)
        if not (self.times.ndim==1 and self.times.shape==self.values.shape and len(self.codes)==self.times.shape[0]):
            raise DataError('%s: inconsistent event arrays'%self.patient_id)
        self.times.setflags(write=False)
        self.values.setflags(write=False)

    @property
    def stay_hours(self):
        return self.out_time - self.in_time

    @property
    def events(self):
        """List of (t, code, value or None)
        """
        return [(float(T), C, None if math.isnan(V) else float(V))
                for T, C, V in zip(self.times, self.codes, self.values)]

    def __len__(self):
        return len(self.codes)

    def check(self, vocabulary=None):
        """Raise DataError unless the record satisfies the documented invariants
        and inclusion criteria.
        """
        stay = self.stay_hours
        if not 24.0*MIN_STAY_DAYS-1e-6<=stay<=24.0*MAX_STAY_DAYS+1e-6:
            raise DataError('%s: stay of %.2f hours outside [48, 336]'%(self.patient_id, stay))
        if len(self.times):
            if numpy.any(numpy.diff(self.times)<0):
                raise DataError('%s: events not sorted'%self.patient_id)
            if self.times[0]<0 or self.times[-1]>stay+1e-6:
                raise DataError('%s: event time outside stay'%self.patient_id)
        if not numpy.any(self.times<PREDICTION_HOURS):
            raise DataError('%s: no event in the first 24 hours'%self.patient_id)
        if vocabulary is not None:
            unknown = set(self.codes) - set(vocabulary)
            if unknown:
                raise DataError('%s: codes outside vocabulary %s'%(self.patient_id, sorted(unknown)[:5]))
        return self

    def todict(self):
        return OrderedDict([
            ('patient_id', self.patient_id),
            ('in_time', self.in_time),
            ('out_time', self.out_time),
            ('death_time', self.death_time),
            ('events', [OrderedDict([('t', T), ('code', C), ('value', V)]) for T, C, V in self.events]),
        ])

    @classmethod
    def fromdict(klass, obj):
        try:
            events = obj['events']
            times = [float(E['t']) for E in events]
            codes = [str(E['code']) for E in events]
            values = [numpy.nan if E.get('value') is None else float(E['value']) for E in events]
            death = obj.get('death_time')
            rec = klass(obj['patient_id'], obj['in_time'], obj['out_time'], death, times, codes, values)
        except (KeyError, TypeError, ValueError) as e:
            raise DataError('Malformed patient object: %r'%(e,))
        if numpy.any(numpy.diff(rec.times)<0):
            # external files need not be sorted
            order = numpy.argsort(rec.times, kind='stable')
            rec = klass(rec.patient_id, rec.in_time, rec.out_time, rec.death_time,
                        rec.times[order], [rec.codes[i] for i in order], rec.values[order])
        return rec

    def __eq__(self, other):
        return (isinstance(other, PatientRecord)
                and self.todict()==other.todict())

    def __ne__(self, other):
        return not self==other

    def __repr__(self):
        return 'PatientRecord(%r, stay=%.1fh, %d events)'%(self.patient_id, self.stay_hours, len(self))


class GroundTruth(object):
    """Exact label probabilities implied by the latent state, and the realized labels.
    """
    __slots__ = ('patient_id', 'probabilities', 'labels')

    def __init__(self, patient_id, probabilities, labels):
        self.patient_id = patient_id
        self.probabilities = numpy.asarray(probabilities, dtype=numpy.float64)
        self.labels = numpy.asarray(labels, dtype=numpy.int8)
        assert self.probabilities.shape==(NUM_TASKS,), self.probabilities.shape
        assert self.labels.shape==(NUM_TASKS,), self.labels.shape

    def __repr__(self):
        return 'GroundTruth(%r)'%self.patient_id


def _patient_rng(seed, index):
    return numpy.random.default_rng(numpy.random.SeedSequence(seed, spawn_key=(0, index)))

def _calibration_rng(seed):
    return numpy.random.default_rng(numpy.random.SeedSequence(seed, spawn_key=(1,)))


def _draw_latent(rng, m, config):
    """Draw m latent states.

    :returns: dict of arrays: severity (m,), organs (m,6), slope (m,),
              admission (m,), indication (m,13), exposure (m,13) and base
              logits (m,14) lacking intercepts.
    """
    severity = rng.standard_normal(m)
    organs = ORGAN_CORRELATION*severity[:,None] + math.sqrt(1.0-ORGAN_CORRELATION**2)*rng.standard_normal((m, len(ORGANS)))
    slope = rng.standard_normal(m)
    admission = rng.choice(len(ADMISSION_CODES), size=m, p=ADMISSION_SHARES)
    elective = (admission==ELECTIVE).astype(numpy.float64)
    indication = rng.standard_normal((m, len(INTERVENTIONS)))

    propensity = (config.coupling_strength*severity[:,None]*SEVERITY_LOADING[None,:]
                  + organs.dot(ORGAN_LOADING.T)
                  + elective[:,None]*ELECTIVE_SHIFT[None,:])
    propensity[:,1:] += INDICATION_LOADING*indication

    # early (pre-prediction) exposure to each intervention family
    targets = numpy.asarray([config.prevalence_targets[T] for T in INTERVENTIONS])
    base = logit(numpy.clip(0.7*targets, 0.005, 0.6))
    exposure = rng.random((m, len(INTERVENTIONS))) < expit(base[None,:] + 0.8*propensity[:,1:])

    tau = config.temporal_signal_strength
    rslope = numpy.maximum(slope, 0.0)
    logits = propensity + tau*rslope[:,None]*SLOPE_LOADING[None,:]
    logits[:,1:] += EXPOSURE_EFFECT*exposure
    # slope x severity interaction, invisible to per-window aggregates
    logits[:,0] += tau*SLOPE_SEVERITY_INTERACTION*slope*severity

    return {
        'severity': severity,
        'organs': organs,
        'slope': slope,
        'admission': admission,
        'indication': indication,
        'exposure': exposure,
        'logits': logits,
    }


def calibrate_intercepts(config, draws=CALIBRATION_DRAWS):
    """Find per-task intercepts so that the expected label rate matches the target.

    Solved by bracketed root finding against a fixed Monte Carlo sample of
    the latent distribution.  Independent of n_patients.

    :returns: array of 14 intercepts
    """
    latent = _draw_latent(_calibration_rng(config.seed), draws, config)
    ret = numpy.zeros(NUM_TASKS)
    for j, task in enumerate(TASKS):
        eta = latent['logits'][:,j]
        target = config.prevalence_targets[task]
        ret[j] = brentq(lambda b: expit(eta+b).mean()-target, -40.0, 40.0, xtol=1e-10)
    _log.debug("Calibrated intercepts %s", numpy.round(ret, 3).tolist())
    return ret


class _Simulator(object):
    def __init__(self, config):
        self.config = config
        self.intercepts = calibrate_intercepts(config)
        self.filler = filler_codes(config.vocab_size)
        # Zipf-like background code frequencies
        w = 1.0/(numpy.arange(len(self.filler))+10.0)
        self.filler_p = w/w.sum() if len(self.filler) else None

        # code -> set of families containing it
        self.families_of = {}
        for fam, codes in FAMILY_CODES.items():
            for C in codes:
                self.families_of.setdefault(C, set()).add(fam)

    def patient(self, index):
        C = self.config
        rng = _patient_rng(C.seed, index)
        pid = 'P%06d'%index

        latent = _draw_latent(rng, 1, C)
        prob = expit(latent['logits'][0] + self.intercepts)
        labels = (rng.random(NUM_TASKS) < prob).astype(numpy.int8)

        lo, hi = C.stay_length_range
        stay = round(float(numpy.clip(math.exp(rng.normal(math.log(90.0), 0.55)), 24.0*lo, 24.0*hi)), 2)
        # whole hours keep out_time - in_time == stay exactly enough for the bounds check
        in_time = float(rng.integers(0, 87600))
        out_time = in_time + stay
        stay = out_time - in_time

        if labels[0]:
            death = round(out_time + float(rng.uniform(0.0, 0.45)), 3)
        elif rng.random()<0.05:
            death = round(out_time + float(rng.uniform(1.0, 720.0)), 3)
        else:
            death = None

        T, K, V = [], [], []
        def emit(times, code, values):
            T.append(numpy.round(numpy.asarray(times, dtype=numpy.float64), 3))
            if isinstance(code, str):
                code = [code]*len(T[-1])
            K.extend(code)
            V.append(numpy.round(numpy.asarray(values, dtype=numpy.float64), 3))

        # admission type, always within the first half hour
        adm = int(latent['admission'][0])
        emit([rng.uniform(0.0, 0.5)], ADMISSION_CODES[adm], [numpy.nan])

        # physiology
        hours = int(math.ceil(min(stay, PREDICTION_HOURS + C.observation_tail_hours)))
        severity, organs, slope = latent['severity'][0], latent['organs'][0], latent['slope'][0]
        for code, organ, base, scale, sign, rate in PHYSIOLOGY:
            taken = numpy.nonzero(rng.random(hours) < rate)[0]
            times = taken + rng.random(len(taken))
            factor = severity if organ==SEVERITY else organs[organ]
            vals = base + sign*scale*0.9*factor + 0.5*scale*rng.standard_normal(len(taken))
            if code==TREND_CODE:
                vals = vals + sign*scale*TREND_PER_HOUR*slope*times
            keep = times<stay
            emit(times[keep], code, vals[keep])

        # bedside assessments, score-like values around 5
        for j, code in enumerate(ASSESSMENT_CODES.values()):
            z = latent['indication'][0, j]
            times = [rng.uniform(lo, hi) for lo, hi in ASSESSMENT_WINDOWS]
            vals = 5.0 + 2.0*(z + ASSESSMENT_NOISE*rng.standard_normal(len(times)))
            emit(times, code, vals)

        # background activity
        if self.filler_p is not None:
            nbg = rng.poisson(C.events_per_hour_rate*hours)
            times = rng.uniform(0.0, min(stay, float(hours)), nbg)
            which = rng.choice(len(self.filler), size=nbg, p=self.filler_p)
            vals = numpy.where(which%2==0, rng.normal(5.0, 2.0, nbg), numpy.nan)
            emit(times, [self.filler[w] for w in which], vals)

        # interventions
        positive = set([INTERVENTIONS[j] for j in range(len(INTERVENTIONS)) if labels[j+1]])
        for j, fam in enumerate(INTERVENTIONS):
            codes = FAMILY_CODES[fam]
            if latent['exposure'][0, j]:
                code = codes[rng.integers(len(codes))]
                emit([rng.uniform(0.0, PREDICTION_HOURS-0.01)], code, [rng.uniform(0.5, 5.0)])

            if fam in positive:
                # only codes whose every family is positive, so no other label is implied
                ok = [code for code in codes if self.families_of[code] <= positive]
                count = 1 + rng.poisson(1.5)
                times = rng.uniform(PREDICTION_HOURS+0.01, stay, count)
                emit(times, [ok[k] for k in rng.integers(len(ok), size=count)], rng.uniform(0.5, 5.0, count))

            elif FAMILY_MODES[fam]=='presence-of-item' and rng.random()<0.1:
                # charted but not given
                emit([rng.uniform(PREDICTION_HOURS+0.01, stay)], codes[rng.integers(len(codes))], [0.0])

        times = numpy.concatenate(T)
        values = numpy.concatenate(V)
        codes = K
        order = numpy.lexsort((numpy.asarray(codes), times))

        rec = PatientRecord(pid, in_time, out_time, death,
                            times[order], [codes[i] for i in order], values[order])
        return rec, GroundTruth(pid, prob, labels)


def generate_cohort(config, workers=1):
    """Generate a synthetic cohort.

    Patient i depends only on (config, i) so the result is identical for any
    worker count, and a prefix of a larger cohort equals the smaller cohort.

    :param SimConfig config:
    :param int workers: Threads generating patients concurrently
    :returns: (list of PatientRecord, list of GroundTruth)
    """
    if not isinstance(config, SimConfig):
        raise ConfigError('sim', 'expected SimConfig, not %r'%(config,))
    config.validate()
    sim = _Simulator(config)

    chunk = 256
    starts = list(range(0, config.n_patients, chunk))
    def work(start):
        _log.debug("Generate patients %d..", start)
        return [sim.patient(i) for i in range(start, min(start+chunk, config.n_patients))]

    records, truth = [], []
    for block in ordered_map(work, starts, workers=workers, name='cohort'):
        for R, G in block:
            records.append(R)
            truth.append(G)
    _log.info("Generated %d patients, %d events", len(records), sum([len(R) for R in records]))
    return records, truth


def split_sizes(n, ratios):
    if abs(sum(ratios)-1.0)>1e-9 or len(ratios)!=3 or any([R<0 for R in ratios]):
        raise ConfigError('split_ratios', 'must be three non-negative fractions summing to 1, not %r'%(ratios,))
    nval = int(math.floor(n*ratios[1]))
    ntest = int(math.floor(n*ratios[2]))
    return n-nval-ntest, nval, ntest


def split_cohort(cohort, ratios=(0.8, 0.1, 0.1), seed=0):
    """Seeded random partition into (train, validation, test).

    Validation and test sizes are floor(n*ratio), the remainder goes to train.
    Each subset keeps the cohort's original order.

    :raises ConfigError: if ratios do not sum to 1 (tolerance 1e-9)
    """
    cohort = list(cohort)
    n = len(cohort)
    if n==0:
        raise DataError('Cannot split an empty cohort')
    ntrain, nval, ntest = split_sizes(n, ratios)
    perm = numpy.random.default_rng(seed).permutation(n)
    parts = (perm[:ntrain], perm[ntrain:ntrain+nval], perm[ntrain+nval:])
    return tuple([[cohort[i] for i in numpy.sort(P)] for P in parts])


def write_cohort(records, fname):
    with open(fname, 'w') as F:
        for R in records:
            F.write(json.dumps(R.todict(), separators=(',', ':')))
            F.write('\n')


def read_cohort(fname, vocabulary=None, check=True):
    """Read a JSONL cohort, validating each record.

    :param vocabulary: Optional collection of permitted codes
    :raises DataError: naming the line of the first malformed record
    """
    ret = []
    seen = set()
    with open(fname, 'r') as F:
        for lineno, line in enumerate(F, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = PatientRecord.fromdict(json.loads(line))
                if check:
                    rec.check(vocabulary)
            except (ValueError, DataError) as e:
                raise DataError('%s:%d: %s'%(fname, lineno, e))
            if rec.patient_id in seen:
                raise DataError('%s:%d: duplicate patient_id %s'%(fname, lineno, rec.patient_id))
            seen.add(rec.patient_id)
            ret.append(rec)
    _log.info("Read %d patients from %s", len(ret), fname)
    return ret


def write_ground_truth(truth, fname):
    cols = OrderedDict([('patient_id', [G.patient_id for G in truth])])
    P = numpy.asarray([G.probabilities for G in truth]).reshape((-1, NUM_TASKS))
    Y = numpy.asarray([G.labels for G in truth]).reshape((-1, NUM_TASKS))
    for j, task in enumerate(TASKS):
        cols['p_'+task] = P[:,j]
    for j, task in enumerate(TASKS):
        cols['y_'+task] = Y[:,j]
    pandas.DataFrame(cols).to_csv(fname, index=False, float_format='%.10f')


def read_ground_truth(fname):
    df = pandas.read_csv(fname, dtype={'patient_id': str})
    P = df[['p_'+T for T in TASKS]].to_numpy(dtype=numpy.float64)
    Y = df[['y_'+T for T in TASKS]].to_numpy(dtype=numpy.int8)
    return [GroundTruth(pid, P[i], Y[i]) for i, pid in enumerate(df['patient_id'])]


SPLITS = ('train', 'validation', 'test')

def write_splits(train, validation, test, fname):
    rows = [(R, 'train') for R in train] + [(R, 'validation') for R in validation] + [(R, 'test') for R in test]
    ids = [getattr(R, 'patient_id', R) for R, _S in rows]
    order = numpy.argsort(ids, kind='stable')
    pandas.DataFrame({
        'patient_id': [ids[i] for i in order],
        'split': [rows[i][1] for i in order],
    }).to_csv(fname, index=False)


def read_splits(fname, choice_check=choice(*SPLITS)):
    """:returns: dict patient_id -> 'train'|'validation'|'test'
    """
    df = pandas.read_csv(fname, dtype={'patient_id': str, 'split': str})
    ret = OrderedDict()
    for pid, S in zip(df['patient_id'], df['split']):
        try:
            ret[pid] = choice_check(S)
        except ValueError as e:
            raise DataError('%s: patient %s: %s'%(fname, pid, e))
    return ret
