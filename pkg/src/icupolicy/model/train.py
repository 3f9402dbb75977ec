"""Mini-batch training loop and inference.
"""

import logging
import time

import numpy
import pandas

from ..config import Section, as_int, as_float, choice
from ..errors import NumericError
from ..features import Batch, FeatureSequence, VocabularyMismatch, encode_all
from ..util import ordered_map
from .network import init_params, sample_masks, forward, backward, multilabel_bce
from .optim import AdamState, adam_step, lr_at

_log = logging.getLogger(__name__)

__all__ = [
    'TrainConfig',
    'Dataset',
    'LossCurve',
    'TrainResult',
    'train',
    'predict',
    'evaluate_loss',
]

DTYPES = {'single': numpy.float32, 'double': numpy.float64}


class TrainConfig(Section):
    """Optimisation schedule.

    * batch_size - Sequences per step
    * base_lr - Learning rate before decay
    * decay_factor - Multiplier applied every decay_every steps
    * decay_every - Staircase period in steps
    * total_steps - Step limit
    * seed - Initialisation, shuffling and dropout seed
    * patience - Validation evaluations without improvement before stopping
    * eval_every - Steps between validation evaluations
    * threads - Workers used to assemble batches
    * precision - single or double
    """
    name = 'train'
    _fields = (
        ('batch_size', as_int, 128),
        ('base_lr', as_float, 1e-4),
        ('decay_factor', as_float, 0.85),
        ('decay_every', as_int, 12000),
        ('total_steps', as_int, 20000),
        ('seed', as_int, 0),
        ('patience', as_int, 10),
        ('eval_every', as_int, 200),
        ('threads', as_int, 1),
        ('precision', choice(*DTYPES), 'single'),
    )

    def validate(self):
        for F in ('batch_size', 'decay_every', 'total_steps', 'patience', 'eval_every', 'threads'):
            if getattr(self, F)<1:
                self.fail(F, 'must be >= 1')
        if self.base_lr<=0:
            self.fail('base_lr', 'must be positive')
        if not 0.0<self.decay_factor<=1.0:
            self.fail('decay_factor', 'must be in (0, 1]')
        if self.seed<0:
            self.fail('seed', 'must be >= 0')

    @property
    def dtype(self):
        return DTYPES[self.precision]


class Dataset(object):
    """Encoded sequences with their (N, 14) labels
    """
    def __init__(self, sequences, labels, patient_ids=None):
        self.sequences = list(sequences)
        self.labels = numpy.asarray(labels, dtype=numpy.int8)
        if self.labels.shape[:1]!=(len(self.sequences),):
            raise ValueError('%d sequences, labels %s'%(len(self.sequences), self.labels.shape))
        if patient_ids is None:
            patient_ids = [S.patient_id for S in self.sequences]
        self.patient_ids = list(patient_ids)

    def __len__(self):
        return len(self.sequences)

    @classmethod
    def from_records(klass, records, table, vocab, workers=1):
        """
        :param records: PatientRecord list
        :param LabelTable table: Labels covering every record
        :param Vocabulary vocab:
        """
        ids = [R.patient_id for R in records]
        return klass(encode_all(records, vocab, workers=workers), table.select(ids).labels, ids)

    def batch(self, idx, dtype=numpy.float64):
        return Batch.from_sequences([self.sequences[i] for i in idx], dtype=dtype)


class LossCurve(object):
    """Per step training objective, validation loss where evaluated (else NaN)
    """
    def __init__(self):
        self.steps, self.train_loss, self.val_loss = [], [], []

    def append(self, step, train_loss, val_loss=float('nan')):
        self.steps.append(step)
        self.train_loss.append(train_loss)
        self.val_loss.append(val_loss)

    def set_val(self, val_loss):
        self.val_loss[-1] = val_loss

    def __len__(self):
        return len(self.steps)

    def todataframe(self):
        return pandas.DataFrame({'step':self.steps, 'train_loss':self.train_loss, 'val_loss':self.val_loss},
                                columns=['step', 'train_loss', 'val_loss'])

    def to_csv(self, fname):
        self.todataframe().to_csv(fname, index=False, float_format='%.8g')


class TrainResult(object):
    def __init__(self, checkpoint, curve, best_step, steps_run, best_val_loss):
        self.checkpoint = checkpoint
        self.curve = curve
        self.best_step = best_step
        self.steps_run = steps_run
        self.best_val_loss = best_val_loss

    def __repr__(self):
        return 'TrainResult(best_step=%d, steps_run=%d, best_val_loss=%g)'%(self.best_step, self.steps_run, self.best_val_loss)


def _chunks(n, size):
    return [numpy.arange(i, min(i+size, n)) for i in range(0, n, size)]


def evaluate_loss(params, dataset, batch_size=256):
    """Summed cross-entropy over tasks, averaged over patients, no dropout
    """
    total = 0.0
    for idx in _chunks(len(dataset), batch_size):
        P = forward(params, dataset.batch(idx, params.dtype))
        total += multilabel_bce(P, dataset.labels[idx])
    return total/max(1, len(dataset))


def train(train_set, val_set, model_config, train_config, vocab_fingerprint=None):
    """Fit the multitask network.

    Each epoch visits the training set in a seeded random order.  One
    dropout mask per sequence and layer is drawn for every step.  The
    parameters with the lowest validation loss are returned, and training
    stops after `patience` evaluations without improvement.

    Batches may be assembled by train_config.threads workers, updates are
    always applied in schedule order so the result does not depend on the
    thread count.

    :param Dataset train_set:
    :param Dataset val_set: May be empty, then the final parameters are kept
    :param ModelConfig model_config:
    :param TrainConfig train_config:
    :param str vocab_fingerprint: Stored in the checkpoint
    :returns: TrainResult
    :raises NumericError: if the objective diverges
    """
    if len(train_set)==0:
        raise ValueError('Empty training set')
    C = train_config
    dtype = C.dtype
    V = train_set.sequences[0].vocab_size
    params = init_params(model_config, C.seed, V, dtype=dtype)
    params.vocab_fingerprint = vocab_fingerprint
    params.meta['train'] = C.todict()

    shuffle_rng = numpy.random.default_rng(numpy.random.SeedSequence(C.seed, spawn_key=(1,)))
    mask_rng = numpy.random.default_rng(numpy.random.SeedSequence(C.seed, spawn_key=(2,)))
    state = AdamState(params)
    curve = LossCurve()

    N = len(train_set)
    best, best_step, best_val, bad = None, 0, float('inf'), 0
    step = 0
    T0 = time.time()
    _log.info("Training %s %dx%d on %d patients, %d steps max",
              model_config.cell_type, model_config.num_layers, model_config.hidden_size, N, C.total_steps)

    while step<C.total_steps:
        perm = shuffle_rng.permutation(N)
        order = [perm[i:i+C.batch_size] for i in range(0, N, C.batch_size)]
        order = order[:C.total_steps-step]
        batches = ordered_map(lambda idx:train_set.batch(idx, dtype), order, workers=C.threads, name='batch')

        stop = False
        for idx, B in zip(order, batches):
            step += 1
            masks = sample_masks(model_config, len(idx), mask_rng, dtype=dtype)
            scale = 1.0/len(idx)
            try:
                obj, grads = backward(params, B, train_set.labels[idx], masks, scale=scale)
                adam_step(params, grads, step, C, state)
            except NumericError as e:
                raise NumericError('Training diverged at step %d: %s'%(step, e))
            curve.append(step, obj)

            if len(val_set) and (step%C.eval_every==0 or step==C.total_steps):
                vloss = evaluate_loss(params, val_set, batch_size=max(C.batch_size, 256))
                curve.set_val(vloss)
                _log.debug("step %d lr %.3g train %.4f val %.4f", step, lr_at(step-1, C), obj, vloss)
                if vloss<best_val:
                    best, best_step, best_val, bad = params.copy(), step, vloss, 0
                else:
                    bad += 1
                    if bad>=C.patience:
                        _log.info("Early stop at step %d, best %d", step, best_step)
                        stop = True
                        break
        if stop:
            break

    if best is None:
        best, best_step = params.copy(), step
    _log.info("Trained %d steps in %.1f s, best step %d val loss %.4f",
              step, time.time()-T0, best_step, best_val)
    return TrainResult(best, curve, best_step, step, best_val)


def predict(checkpoint, records, vocab=None, batch_size=256, workers=1):
    """Inference without dropout.

    :param ModelCheckpoint checkpoint:
    :param records: PatientRecord or FeatureSequence list
    :param Vocabulary vocab: Required to encode records
    :returns: (N, 14) probabilities
    :raises VocabularyMismatch: if vocab is not the one the checkpoint was trained with
    """
    if vocab is not None and checkpoint.vocab_fingerprint is not None \
            and checkpoint.vocab_fingerprint!=vocab.fingerprint():
        raise VocabularyMismatch('Checkpoint vocabulary %s... does not match %s...'%(
            checkpoint.vocab_fingerprint[:12], vocab.fingerprint()[:12]))
    records = list(records)
    if records and not isinstance(records[0], FeatureSequence):
        if vocab is None:
            raise ValueError('A vocabulary is required to encode records')
        records = encode_all(records, vocab, workers=workers)
    for S in records:
        if S.vocab_size!=checkpoint.vocab_size:
            raise VocabularyMismatch('Sequence vocabulary size %d != checkpoint %d'%(S.vocab_size, checkpoint.vocab_size))

    ds = Dataset(records, numpy.zeros((len(records), checkpoint.config.num_tasks)))
    out = [forward(checkpoint, ds.batch(idx, checkpoint.dtype)) for idx in _chunks(len(ds), batch_size)]
    if not out:
        return numpy.zeros((0, checkpoint.config.num_tasks))
    return numpy.concatenate(out).astype(numpy.float64)
