"""Run configuration.

A run is described by a single JSON document (C style comments permitted)
with one object per section.

>>> with open('run.json', 'r') as F:
        conf = RunConfig.fromjson(F.read())
"""

import hashlib
import json
import logging
import re
from collections import OrderedDict

from .errors import ConfigError

_log = logging.getLogger(__name__)

__all__ = [
    'Section',
    'RunConfig',
    'IOConfig',
    'jload',
]


def comment_sub(M):
    '''Replace C style comment with equivalent whitespace, includeing newlines,
       to preserve line and columns numbers in parser errors
    '''
    return re.sub(r'[^\n]', ' ', M.group(0))

def jload(raw):
    '''Parse JSON including C style comments
    '''
    return json.loads(re.sub(r'/\*.*?\*/', comment_sub, raw, flags=re.DOTALL), object_pairs_hook=OrderedDict)


def as_int(val):
    if isinstance(val, bool) or not isinstance(val, (int, float)) or int(val)!=val:
        raise ValueError('expected integer')
    return int(val)

def as_float(val):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValueError('expected number')
    return float(val)

def as_str(val):
    if not isinstance(val, str):
        raise ValueError('expected string')
    return val

def optional(coerce):
    def check(val):
        return None if val is None else coerce(val)
    return check

def choice(*options):
    def check(val):
        if val not in options:
            raise ValueError('expected one of %s'%(', '.join(options)))
        return val
    return check


class Section(object):
    """Base of a validated configuration section.

    Sub-classes list their fields as (name, coerce, default) tuples.
    Unknown keys raise ConfigError naming the key.
    """
    name = None
    _fields = ()

    def __init__(self, **kws):
        for fname, coerce, default in self._fields:
            val = kws.pop(fname, default)
            try:
                val = coerce(val)
            except (TypeError, ValueError) as e:
                raise ConfigError(self._qual(fname), 'invalid value %r: %s'%(val, e))
            setattr(self, fname, val)
        if kws:
            raise ConfigError(self._qual(sorted(kws)[0]), 'unknown key')
        self.validate()

    def _qual(self, fname):
        return '%s.%s'%(self.name, fname) if self.name else fname

    def fail(self, fname, msg):
        raise ConfigError(self._qual(fname), msg)

    def validate(self):
        """Check cross-field invariants.  Raise via fail()
        """

    def todict(self):
        ret = OrderedDict()
        for fname, _coerce, _default in self._fields:
            val = getattr(self, fname)
            if isinstance(val, dict):
                val = OrderedDict(val)
            elif isinstance(val, tuple):
                val = list(val)
            ret[fname] = val
        return ret

    def replace(self, **kws):
        """Copy with some fields changed
        """
        conf = self.todict()
        conf.update(kws)
        return self.__class__(**conf)

    def __eq__(self, other):
        return type(self) is type(other) and self.todict()==other.todict()

    def __ne__(self, other):
        return not self==other

    def __repr__(self):
        return '%s(%s)'%(self.__class__.__name__,
                         ', '.join(['%s=%r'%(K, V) for K, V in self.todict().items()]))


class IOConfig(Section):
    """File locations.

    * out_dir - Directory receiving all artifacts
    * cohort - Optional externally produced JSONL cohort, ingested instead of simulating
    * interventions - Optional intervention definition file (JSON)
    """
    name = 'io'
    _fields = (
        ('out_dir', as_str, 'run'),
        ('cohort', optional(as_str), None),
        ('interventions', optional(as_str), None),
    )


class RunConfig(object):
    """All sections of a run plus the list of training seeds.
    """
    def __init__(self, sim=None, model=None, train=None, eval=None, analytics=None, io=None, seeds=None):
        # sections live in the modules which consume them
        from .cohort import SimConfig
        from .model import ModelConfig, TrainConfig
        from .evaluation import EvalConfig
        from .analytics import AnalyticsConfig

        def build(klass, val):
            if isinstance(val, klass):
                return val
            if val is None:
                val = {}
            if not isinstance(val, dict):
                raise ConfigError(klass.name, 'section must be an object')
            return klass(**val)

        self.sim = build(SimConfig, sim)
        self.model = build(ModelConfig, model)
        self.train = build(TrainConfig, train)
        self.eval = build(EvalConfig, eval)
        self.analytics = build(AnalyticsConfig, analytics)
        self.io = build(IOConfig, io)

        if seeds is None:
            seeds = [self.train.seed]
        if not isinstance(seeds, (list, tuple)) or len(seeds)==0:
            raise ConfigError('seeds', 'expected non-empty list of integers')
        try:
            seeds = [as_int(S) for S in seeds]
        except ValueError as e:
            raise ConfigError('seeds', str(e))
        if len(set(seeds))!=len(seeds):
            raise ConfigError('seeds', 'duplicate seed')
        self.seeds = seeds

    _sections = ('sim', 'model', 'train', 'eval', 'analytics', 'io')

    @classmethod
    def fromdict(klass, conf):
        if not isinstance(conf, dict):
            raise ConfigError('<root>', 'expected JSON object')
        conf = dict(conf)
        for key in conf:
            if key not in klass._sections and key!='seeds':
                raise ConfigError(key, 'unknown key')
        return klass(**conf)

    @classmethod
    def fromjson(klass, raw):
        try:
            conf = jload(raw)
        except ValueError as e:
            raise ConfigError('<json>', 'Syntax Error: %s'%(e.args,))
        return klass.fromdict(conf)

    @classmethod
    def load(klass, fname):
        try:
            with open(fname, 'r') as F:
                raw = F.read()
        except (IOError, OSError) as e:
            raise ConfigError('--config', 'unable to read %s: %s'%(fname, e))
        return klass.fromjson(raw)

    def override(self, seed=None, out_dir=None, threads=None, precision=None):
        """Apply command line overrides.  Returns self
        """
        if seed is not None:
            self.sim = self.sim.replace(seed=seed)
            self.train = self.train.replace(seed=seed)
            self.seeds = [seed]
        if out_dir is not None:
            self.io = self.io.replace(out_dir=out_dir)
        if threads is not None:
            self.train = self.train.replace(threads=threads)
        if precision is not None:
            self.train = self.train.replace(precision=precision)
        return self

    def todict(self):
        ret = OrderedDict()
        for name in self._sections:
            ret[name] = getattr(self, name).todict()
        ret['seeds'] = list(self.seeds)
        return ret

    def digest(self):
        """SHA-256 of the canonical JSON echo
        """
        raw = json.dumps(self.todict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(raw.encode('utf-8')).hexdigest()
