"""Files of a run directory and the manifest recording them.
"""

import json
import logging
import os
import time
from collections import OrderedDict

from . import version as tool_version
from .errors import DataError, MissingArtifact
from .util import atomic_write, sha256_file

_log = logging.getLogger(__name__)

__all__ = [
    'RunDir',
    'Manifest',
    'Stage',
]

MANIFEST_FORMAT = 1


class RunDir(object):
    """Artifact names, and the command producing each.

    >>> D = RunDir('run')
    >>> D.require(D.checkpoint(1), 'train')
    'run/checkpoint_seed1.bin'
    """
    CONFIG = 'config.json'
    COHORT = 'cohort.jsonl'
    TRUTH = 'ground_truth.csv'
    SPLITS = 'splits.csv'
    LABELS = 'labels.csv'
    DELAYS = 'onset_delays.csv'
    VOCAB = 'vocabulary.json'
    TABLE1 = 'table1.csv'
    TABLE2 = 'table2.csv'
    TABLE2_SUMMARY = 'table2_summary.csv'
    REPORT = 'report.txt'
    MANIFEST = 'manifest.json'

    def __init__(self, root):
        self.root = root

    def path(self, name):
        return os.path.join(self.root, name)

    def exists(self, name):
        return os.path.isfile(self.path(name))

    def require(self, name, command):
        """:returns: full path of name
        :raises MissingArtifact: naming the command which produces it
        """
        P = self.path(name)
        if not os.path.isfile(P):
            raise MissingArtifact(P, command)
        return P

    def makedirs(self):
        if not os.path.isdir(self.root):
            os.makedirs(self.root)

    @staticmethod
    def checkpoint(seed):
        return 'checkpoint_seed%d.bin'%seed

    @staticmethod
    def loss_curve(seed):
        return 'loss_curve_seed%d.csv'%seed

    @staticmethod
    def baseline(variant):
        return 'baseline_%s.json'%variant

    @staticmethod
    def predictions(model, seed=None):
        if seed is None:
            return 'predictions_%s.csv'%model
        return 'predictions_%s_seed%d.csv'%(model, seed)

    @staticmethod
    def comparison(id_a, id_b):
        return 'compare_%s_%s.csv'%(id_a, id_b)


class Manifest(object):
    """Tool version, config hash, file digests and per-stage timings.

    Re-written after every completed stage.
    """
    def __init__(self, config_hash=None, files=None, timings=None, version=tool_version):
        self.version = version
        self.config_hash = config_hash
        self.files = OrderedDict(files or ())
        self.timings = OrderedDict(timings or ())

    @classmethod
    def load(klass, rundir):
        P = rundir.path(RunDir.MANIFEST)
        if not os.path.isfile(P):
            return klass()
        with open(P, 'r') as F:
            try:
                raw = json.load(F, object_pairs_hook=OrderedDict)
            except ValueError as e:
                raise DataError('%s: %s'%(P, e))
        if raw.get('format')!=MANIFEST_FORMAT:
            raise DataError('%s: unsupported manifest format %r'%(P, raw.get('format')))
        return klass(raw.get('config_hash'), raw.get('files'), raw.get('timings'), raw.get('version'))

    def record(self, rundir, stage, names, seconds, config_hash):
        """Note a completed stage and the files it wrote
        """
        if self.config_hash is not None and self.config_hash!=config_hash:
            _log.warning("Configuration changed since the last stage (%s... -> %s...)",
                         self.config_hash[:12], config_hash[:12])
        self.config_hash = config_hash
        self.version = tool_version
        for N in names:
            self.files[N] = sha256_file(rundir.path(N))
        self.timings[stage] = round(seconds, 3)
        return self

    def todict(self):
        return OrderedDict([
            ('format', MANIFEST_FORMAT),
            ('version', self.version),
            ('config_hash', self.config_hash),
            ('files', OrderedDict(sorted(self.files.items()))),
            ('timings', self.timings),
        ])

    def save(self, rundir):
        atomic_write(rundir.path(RunDir.MANIFEST), json.dumps(self.todict(), indent=1))


class Stage(object):
    """Times one command and updates the manifest when it completes without error.

    >>> with Stage(rundir, 'label', run.digest()) as S:
            S.wrote('labels.csv')
    """
    def __init__(self, rundir, name, config_hash):
        self.rundir = rundir
        self.name = name
        self.config_hash = config_hash
        self.names = []

    def wrote(self, *names):
        self.names.extend(names)

    def __enter__(self):
        self._T0 = time.time()
        return self

    def __exit__(self, A, B, C):
        if A is not None:
            return
        M = Manifest.load(self.rundir)
        M.record(self.rundir, self.name, self.names, time.time()-self._T0, self.config_hash)
        M.save(self.rundir)
        _log.info("%s done, %d files", self.name, len(self.names))
