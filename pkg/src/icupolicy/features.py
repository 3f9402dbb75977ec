"""Observation window encoding.

A stay's first 24 hours become 24 hourly bins, each holding
(code index, weight) entries.  Weights are z-scored values, or 1.0 for
events without a value.  Index 0 is reserved for codes unseen in training.

>>> vocab = build_vocabulary(train_records)
>>> seqs = encode_all(train_records, vocab)
>>> batch = Batch.from_sequences(seqs[:128])
"""

import hashlib
import json
import logging
import math
from collections import OrderedDict

import numpy
from scipy import sparse

from .errors import DataError
from .util import ordered_map

_log = logging.getLogger(__name__)

__all__ = [
    'Vocabulary',
    'FeatureSequence',
    'Batch',
    'VocabularyMismatch',
    'build_vocabulary',
    'encode',
    'encode_all',
]

OOV = 0
WINDOW_HOURS = 24.0
BIN_HOURS = 1.0

VOCAB_FORMAT = 1


class VocabularyMismatch(DataError):
    """Checkpoint and vocabulary were not built together
    """


class Vocabulary(object):
    """Code -> index map with per-code value statistics from the training split.

    :param codes: Known codes, sorted.  Index i+1 for codes[i]
    :param mean: Per known code value mean
    :param std: Per known code value standard deviation, never 0
    :param has_values: Per known code, whether training events carried values
    """
    def __init__(self, codes, mean, std, has_values):
        codes = list(codes)
        if codes!=sorted(codes) or len(set(codes))!=len(codes):
            raise DataError('Vocabulary codes must be sorted and unique')
        n = len(codes)
        self.codes = tuple(codes)
        self._index = dict([(C, i+1) for i, C in enumerate(codes)])
        # position 0 holds OOV
        self.mean = numpy.concatenate(([0.0], numpy.asarray(mean, dtype=numpy.float64)))
        self.std = numpy.concatenate(([1.0], numpy.asarray(std, dtype=numpy.float64)))
        self.has_values = numpy.concatenate(([False], numpy.asarray(has_values, dtype=bool)))
        if not (self.mean.shape==self.std.shape==self.has_values.shape==(n+1,)):
            raise ValueError('Statistics length mismatch %s %s %s for %d codes'%(self.mean.shape, self.std.shape, self.has_values.shape, n))
        if numpy.any(self.std<=0) or not numpy.all(numpy.isfinite(self.std)):
            raise DataError('Vocabulary std must be positive and finite')
        for A in (self.mean, self.std, self.has_values):
            A.setflags(write=False)

    @property
    def size(self):
        """V, known codes + 1
        """
        return len(self.codes)+1

    def __len__(self):
        return self.size

    def __contains__(self, code):
        return code in self._index

    def index(self, code):
        return self._index.get(code, OOV)

    def indices(self, codes):
        return numpy.asarray([self._index.get(C, OOV) for C in codes], dtype=numpy.int64)

    def fingerprint(self):
        """SHA-256 over the code list and statistics
        """
        H = hashlib.sha256()
        H.update('\n'.join(self.codes).encode('utf-8'))
        H.update(self.mean.astype('<f8').tobytes())
        H.update(self.std.astype('<f8').tobytes())
        return H.hexdigest()

    def todict(self):
        return OrderedDict([
            ('version', VOCAB_FORMAT),
            ('fingerprint', self.fingerprint()),
            ('codes', [OrderedDict([('code', C),
                                    ('index', i+1),
                                    ('mean', float(self.mean[i+1])),
                                    ('std', float(self.std[i+1])),
                                    ('has_values', bool(self.has_values[i+1]))])
                       for i, C in enumerate(self.codes)]),
        ])

    @classmethod
    def fromdict(klass, obj):
        if obj.get('version')!=VOCAB_FORMAT:
            raise DataError('Unsupported vocabulary version %r'%(obj.get('version'),))
        ents = obj['codes']
        for i, E in enumerate(ents):
            if E['index']!=i+1:
                raise DataError('Vocabulary index of %r is %r, expected %d'%(E['code'], E['index'], i+1))
        ret = klass([E['code'] for E in ents],
                    [E['mean'] for E in ents],
                    [E['std'] for E in ents],
                    [E['has_values'] for E in ents])
        if 'fingerprint' in obj and obj['fingerprint']!=ret.fingerprint():
            raise VocabularyMismatch('Vocabulary content does not match its fingerprint')
        return ret

    def save(self, fname):
        with open(fname, 'w') as F:
            json.dump(self.todict(), F, indent=1)

    @classmethod
    def load(klass, fname):
        with open(fname, 'r') as F:
            return klass.fromdict(json.load(F, object_pairs_hook=OrderedDict))

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.fingerprint()==other.fingerprint()

    def __ne__(self, other):
        return not self==other

    def __repr__(self):
        return 'Vocabulary(V=%d, %s)'%(self.size, self.fingerprint()[:12])


def _window(record, window):
    W = record.times<window
    return record.times[W], [C for C, w in zip(record.codes, W) if w], record.values[W]


def build_vocabulary(train_records, window=WINDOW_HOURS):
    """Vocabulary over codes observed in the training observation windows.

    Codes are assigned indices in lexicographic order.  Value statistics use
    training window events only.  A code whose values never vary, or which
    never carries a value, gets std 1.

    :raises DataError: for an empty training set
    """
    train_records = list(train_records)
    if not train_records:
        raise DataError('Cannot build a vocabulary from an empty training set')

    values = {}
    for R in train_records:
        _T, codes, vals = _window(R, window)
        for C, V in zip(codes, vals):
            L = values.setdefault(C, [])
            if not math.isnan(V):
                L.append(V)

    codes = sorted(values)
    mean, std, has = [], [], []
    for C in codes:
        V = numpy.asarray(values[C], dtype=numpy.float64)
        if len(V):
            M, S = V.mean(), V.std()
        else:
            M, S = 0.0, 1.0
        mean.append(M)
        std.append(S if S>0 else 1.0)
        has.append(len(V)>0)

    ret = Vocabulary(codes, mean, std, has)
    _log.info("Vocabulary of %d codes from %d training stays", len(codes), len(train_records))
    return ret


class FeatureSequence(object):
    """Sparse hourly bins of one stay's observation window.

    Entries are held as parallel arrays sorted by (bin, index, weight).

    :param int n_bins: T
    :param int vocab_size: V
    :param bins: bin of each entry
    :param indices: code index of each entry
    :param weights: weight of each entry
    """
    __slots__ = ('patient_id', 'n_bins', 'vocab_size', 'bins', 'indices', 'weights')

    def __init__(self, n_bins, vocab_size, bins, indices, weights, patient_id=None):
        bins = numpy.asarray(bins, dtype=numpy.int64)
        indices = numpy.asarray(indices, dtype=numpy.int64)
        weights = numpy.asarray(weights, dtype=numpy.float64)
        if not (bins.shape==indices.shape==weights.shape) or bins.ndim!=1:
            raise ValueError('Entry arrays shape mismatch %s %s %s'%(bins.shape, indices.shape, weights.shape))
        if len(bins) and (bins.min()<0 or bins.max()>=n_bins or indices.min()<0 or indices.max()>=vocab_size):
            raise DataError('Entry outside %d bins x %d codes'%(n_bins, vocab_size))
        order = numpy.lexsort((weights, indices, bins))
        self.patient_id = patient_id
        self.n_bins = int(n_bins)
        self.vocab_size = int(vocab_size)
        self.bins, self.indices, self.weights = bins[order], indices[order], weights[order]
        for A in (self.bins, self.indices, self.weights):
            A.setflags(write=False)

    def __len__(self):
        return len(self.bins)

    def entries(self, t):
        """List of (code index, weight) in bin t
        """
        lo, hi = numpy.searchsorted(self.bins, [t, t+1])
        return [(int(I), float(W)) for I, W in zip(self.indices[lo:hi], self.weights[lo:hi])]

    def __eq__(self, other):
        return (isinstance(other, FeatureSequence)
                and self.n_bins==other.n_bins and self.vocab_size==other.vocab_size
                and numpy.array_equal(self.bins, other.bins)
                and numpy.array_equal(self.indices, other.indices)
                and numpy.array_equal(self.weights, other.weights))

    def __ne__(self, other):
        return not self==other

    def __repr__(self):
        return 'FeatureSequence(%r, T=%d, %d entries)'%(self.patient_id, self.n_bins, len(self))


def encode(record, vocab, window=WINDOW_HOURS, bin=BIN_HOURS):
    """Bin the events with t < window.

    :param PatientRecord record:
    :param Vocabulary vocab:
    :returns: FeatureSequence with ceil(window/bin) bins
    """
    times, codes, values = _window(record, window)
    idx = vocab.indices(codes)
    valued = ~numpy.isnan(values) & vocab.has_values[idx]
    weights = numpy.ones(len(idx))
    weights[valued] = (values[valued] - vocab.mean[idx[valued]]) / vocab.std[idx[valued]]
    bins = numpy.floor(times/bin).astype(numpy.int64)
    return FeatureSequence(int(math.ceil(window/bin)), vocab.size, bins, idx, weights,
                           patient_id=record.patient_id)


def encode_all(records, vocab, workers=1, **kws):
    return ordered_map(lambda R:encode(R, vocab, **kws), records, workers=workers, name='encode')


class Batch(object):
    """N sequences as one sparse (T*N, V) matrix.

    Row t*N+n holds the summed weights of sequence n's codes in bin t, so
    that the embedding lookup of every bin is S.dot(E).

    :param S: scipy.sparse CSR matrix
    :param int n_bins: T
    :param int size: N
    :param touched: sorted unique code indices present in the batch
    """
    def __init__(self, S, n_bins, size, touched):
        self.S, self.n_bins, self.size, self.touched = S, n_bins, size, touched

    @property
    def vocab_size(self):
        return self.S.shape[1]

    @property
    def dtype(self):
        return self.S.dtype

    def __len__(self):
        return self.size

    @classmethod
    def from_sequences(klass, seqs, dtype=numpy.float64):
        seqs = list(seqs)
        if not seqs:
            raise ValueError('Empty batch')
        T, V, N = seqs[0].n_bins, seqs[0].vocab_size, len(seqs)
        for S in seqs:
            if S.n_bins!=T or S.vocab_size!=V:
                raise ValueError('Sequence shape (%d, %d) != (%d, %d)'%(S.n_bins, S.vocab_size, T, V))
        rows = numpy.concatenate([S.bins*N+n for n, S in enumerate(seqs)])
        cols = numpy.concatenate([S.indices for S in seqs])
        data = numpy.concatenate([S.weights for S in seqs]).astype(dtype)
        M = sparse.coo_matrix((data, (rows, cols)), shape=(T*N, V)).tocsr()
        M.sum_duplicates()
        return klass(M, T, N, numpy.unique(cols))

    def astype(self, dtype):
        return Batch(self.S.astype(dtype), self.n_bins, self.size, self.touched)
