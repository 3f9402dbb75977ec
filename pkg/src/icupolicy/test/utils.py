
import logging
import os
import shutil
import tempfile
import unittest

import numpy

from ..cohort import PatientRecord, SimConfig
from ..features import FeatureSequence, Batch
from ..model import ModelConfig, TrainConfig

_log = logging.getLogger(__name__)


class RegularNamedTemporaryFile(object):
    """Like tempfile.NamedTemporaryFile which doesn't use O_TEMPORARY on windows
    """
    def __init__(self, *args, **kws):
        fd, self.name = tempfile.mkstemp()
        try:
            self.file = os.fdopen(fd, *args, **kws)
            self.write = self.file.write
            self.flush = self.file.flush
        except:
            os.unlink(self.name)
            raise
    def __del__(self):
        self.close()
    def close(self):
        if self.file is not None:
            self.file.close()
            os.unlink(self.name)
            self.file = None


class TempDirTestCase(unittest.TestCase):
    """Each test gets a fresh scratch directory, removed afterwards
    """
    def setUp(self):
        super(TempDirTestCase, self).setUp()
        self.tmpdir = tempfile.mkdtemp(prefix='icupolicy-')

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)
        super(TempDirTestCase, self).tearDown()

    def path(self, *names):
        return os.path.join(self.tmpdir, *names)


def make_record(pid='P1', stay=72.0, events=None, death=None, in_time=100.0):
    """A stay from (t, code, value or None) tuples.

    Without events, one heart rate reading in the first hour.
    """
    if events is None:
        events = [(0.5, 'vital:heart_rate', 90.0)]
    events = sorted(events, key=lambda E:E[0])
    return PatientRecord(pid, in_time, in_time+stay,
                         None if death is None else in_time+death,
                         [E[0] for E in events],
                         [E[1] for E in events],
                         [numpy.nan if E[2] is None else E[2] for E in events])


def tiny_sim(**kws):
    conf = dict(n_patients=40, seed=3, vocab_size=100, events_per_hour_rate=1.0,
                observation_tail_hours=2.0)
    conf.update(kws)
    return SimConfig(**conf)


def tiny_model(**kws):
    conf = dict(embedding_dim=8, hidden_size=6, num_layers=2, dropout_prob=0.0, l1_strength=0.0)
    conf.update(kws)
    return ModelConfig(**conf)


def tiny_train(**kws):
    conf = dict(batch_size=8, base_lr=1e-2, total_steps=6, eval_every=2, patience=100,
                precision='double', seed=1)
    conf.update(kws)
    return TrainConfig(**conf)


def random_sequences(rng, N, T, V, per_bin=3):
    """N random FeatureSequence with up to per_bin entries per bin
    """
    ret = []
    for n in range(N):
        count = rng.integers(0, per_bin+1, size=T)
        bins = numpy.repeat(numpy.arange(T), count)
        idx = rng.integers(0, V, size=len(bins))
        w = numpy.where(rng.random(len(bins))<0.5, 1.0, rng.standard_normal(len(bins)))
        ret.append(FeatureSequence(T, V, bins, idx, w, patient_id='S%d'%n))
    return ret


def random_batch(rng, N, T, V, per_bin=3, dtype=numpy.float64):
    return Batch.from_sequences(random_sequences(rng, N, T, V, per_bin), dtype=dtype)
