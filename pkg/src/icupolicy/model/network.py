"""Multitask recurrent classifier.

sparse embedding -> stacked LSTM/GRU -> 14 sigmoid heads on the final
hidden state of the top layer.

Parameter arrays, by name

* embedding - (V, E)
* rnn<l>.W - (in, G*H) with in=E for layer 0, else H.  G=4 (LSTM) or 3 (GRU)
* rnn<l>.U - (H, G*H)
* rnn<l>.b - (G*H,)
* head.W - (H, P), column j is head j
* head.b - (P,)
"""

import logging
from collections import OrderedDict

import numpy
from scipy.special import expit

from ..config import Section, as_int, as_float, choice
from ..errors import NumericError
from ..tasks import NUM_TASKS
from .cells import CELLS, gate_count

_log = logging.getLogger(__name__)

__all__ = [
    'ModelConfig',
    'ModelCheckpoint',
    'Masks',
    'init_params',
    'sample_masks',
    'forward',
    'backward',
    'multilabel_bce',
    'EPS',
]

EPS = 1e-7


class ModelConfig(Section):
    """Network shape.

    * embedding_dim - E
    * hidden_size - H
    * num_layers - Recurrent layers
    * cell_type - LSTM or GRU
    * num_tasks - P, always 14
    * dropout_prob - Variational dropout probability for input, recurrent and output connections
    * l1_strength - L1 penalty on embedding rows touched by a batch
    """
    name = 'model'
    _fields = (
        ('embedding_dim', as_int, 300),
        ('hidden_size', as_int, 200),
        ('num_layers', as_int, 3),
        ('cell_type', choice('LSTM', 'GRU'), 'LSTM'),
        ('num_tasks', as_int, NUM_TASKS),
        ('dropout_prob', as_float, 0.4),
        ('l1_strength', as_float, 0.0005),
    )

    def validate(self):
        for F in ('embedding_dim', 'hidden_size', 'num_layers'):
            if getattr(self, F)<1:
                self.fail(F, 'must be >= 1')
        if self.num_tasks!=NUM_TASKS:
            self.fail('num_tasks', 'must be %d'%NUM_TASKS)
        if not 0.0<=self.dropout_prob<1.0:
            self.fail('dropout_prob', 'must be in [0, 1)')
        if self.l1_strength<0:
            self.fail('l1_strength', 'must be >= 0')


def param_shapes(config, vocab_size):
    """OrderedDict of name -> shape, in canonical order
    """
    E, H, P = config.embedding_dim, config.hidden_size, config.num_tasks
    G = gate_count(config.cell_type)
    ret = OrderedDict()
    ret['embedding'] = (vocab_size, E)
    for l in range(config.num_layers):
        ret['rnn%d.W'%l] = (E if l==0 else H, G*H)
        ret['rnn%d.U'%l] = (H, G*H)
        ret['rnn%d.b'%l] = (G*H,)
    ret['head.W'] = (H, P)
    ret['head.b'] = (P,)
    return ret


class ModelCheckpoint(object):
    """Parameters plus training metadata.

    :param ModelConfig config:
    :param arrays: OrderedDict name -> numpy array, in param_shapes() order
    :param int step: Optimizer steps taken
    :param str vocab_fingerprint: Vocabulary the embedding rows refer to
    :param dict meta: Extra JSON-able metadata (eg. training config echo)
    """
    def __init__(self, config, arrays, step=0, vocab_fingerprint=None, meta=None):
        self.config = config
        self.arrays = OrderedDict(arrays)
        self.step = int(step)
        self.vocab_fingerprint = vocab_fingerprint
        self.meta = OrderedDict(meta or {})
        expect = param_shapes(config, self.vocab_size)
        if list(expect)!=list(self.arrays):
            raise ValueError('Parameter names %s != %s'%(list(self.arrays), list(expect)))
        for K, S in expect.items():
            if self.arrays[K].shape!=S:
                raise ValueError('%s shape %s != %s'%(K, self.arrays[K].shape, S))

    @property
    def vocab_size(self):
        return self.arrays['embedding'].shape[0]

    @property
    def dtype(self):
        return self.arrays['embedding'].dtype

    def __getitem__(self, name):
        return self.arrays[name]

    def __iter__(self):
        return iter(self.arrays)

    def items(self):
        return self.arrays.items()

    def copy(self):
        return ModelCheckpoint(self.config, [(K, V.copy()) for K, V in self.arrays.items()],
                               step=self.step, vocab_fingerprint=self.vocab_fingerprint, meta=self.meta)

    def astype(self, dtype):
        return ModelCheckpoint(self.config, [(K, V.astype(dtype)) for K, V in self.arrays.items()],
                               step=self.step, vocab_fingerprint=self.vocab_fingerprint, meta=self.meta)

    def check_finite(self):
        for K, V in self.arrays.items():
            if not numpy.all(numpy.isfinite(V)):
                raise NumericError('Non-finite values in parameter %s'%K)
        return self

    def __repr__(self):
        return 'ModelCheckpoint(%s %s, V=%d, step=%d)'%(self.config.cell_type, self.dtype, self.vocab_size, self.step)


def init_params(config, seed, vocab_size, dtype=numpy.float64):
    """Xavier uniform weights, zero biases.

    Each weight array is drawn from U(-a, a), a = sqrt(6/(rows+cols)),
    in canonical order from one stream seeded by seed.
    """
    rng = numpy.random.default_rng(seed)
    arrays = OrderedDict()
    for K, S in param_shapes(config, vocab_size).items():
        if len(S)==1:
            arrays[K] = numpy.zeros(S, dtype=dtype)
        else:
            a = numpy.sqrt(6.0/(S[0]+S[1]))
            arrays[K] = rng.uniform(-a, a, size=S).astype(dtype)
    return ModelCheckpoint(config, arrays)


class Masks(object):
    """Variational dropout masks of one batch, fixed over time.

    Entries are 0 or 1/(1-p).

    :param inp: (N, E) on the embedding output
    :param recurrent: per layer (N, H) on h(t-1)
    :param output: per layer (N, H) on the layer output
    """
    __slots__ = ('inp', 'recurrent', 'output')

    def __init__(self, inp, recurrent, output):
        self.inp, self.recurrent, self.output = inp, list(recurrent), list(output)


def sample_masks(config, n, rng, dtype=numpy.float64):
    """Draw one mask per sequence and layer.

    :returns: Masks, or None when config.dropout_prob is 0
    """
    p = config.dropout_prob
    if p<=0.0:
        return None
    keep = 1.0/(1.0-p)
    E, H, L = config.embedding_dim, config.hidden_size, config.num_layers
    def draw(shape):
        return ((rng.random(shape)>=p)*keep).astype(dtype)
    inp = draw((n, E))
    recurrent = [draw((n, H)) for l in range(L)]
    output = [draw((n, H)) for l in range(L)]
    return Masks(inp, recurrent, output)


def _check_inputs(params, batch, masks):
    if batch.vocab_size!=params.vocab_size:
        raise ValueError('Batch vocabulary %d != embedding rows %d'%(batch.vocab_size, params.vocab_size))
    if not numpy.all(numpy.isfinite(batch.S.data)):
        raise NumericError('Non-finite input weights')
    params.check_finite()
    if masks is not None:
        N, E, H = batch.size, params.config.embedding_dim, params.config.hidden_size
        if masks.inp.shape!=(N, E):
            raise ValueError('Input mask %s != %s'%(masks.inp.shape, (N, E)))
        for M in masks.recurrent+masks.output:
            if M.shape!=(N, H):
                raise ValueError('Mask %s != %s'%(M.shape, (N, H)))


def _forward(params, batch, masks=None):
    _check_inputs(params, batch, masks)
    config = params.config
    T, N = batch.n_bins, batch.size
    cell_fwd, _cell_bwd = CELLS[config.cell_type]

    dtype = params.dtype
    X = numpy.asarray(batch.S.dot(params['embedding'])).astype(dtype, copy=False)
    X = X.reshape(T, N, config.embedding_dim)
    inp = X if masks is None else X*masks.inp

    caches = []
    for l in range(config.num_layers):
        rmask = None if masks is None else masks.recurrent[l]
        hs, C = cell_fwd(inp, params['rnn%d.W'%l], params['rnn%d.U'%l], params['rnn%d.b'%l], rmask)
        caches.append(C)
        inp = hs if masks is None else hs*masks.output[l]

    top = inp[-1]
    logits = top.dot(params['head.W']) + params['head.b']
    return logits, (batch, masks, caches, top)


def forward(params, batch, masks=None):
    """Probabilities of the 14 tasks.

    :param ModelCheckpoint params:
    :param Batch batch:
    :param Masks masks: None for inference
    :returns: (N, 14) array, clamped into [EPS, 1-EPS]
    :raises NumericError: for non-finite parameters or inputs
    """
    logits, _cache = _forward(params, batch, masks)
    return numpy.clip(expit(logits), EPS, 1.0-EPS)


def multilabel_bce(predictions, labels):
    """Summed binary cross-entropy over all rows and tasks.

    Probabilities are clamped into [1e-7, 1-1e-7] before taking logs.
    """
    predictions = numpy.asarray(predictions, dtype=numpy.float64)
    labels = numpy.asarray(labels, dtype=numpy.float64)
    if predictions.shape!=labels.shape:
        raise ValueError('predictions %s != labels %s'%(predictions.shape, labels.shape))
    p = numpy.clip(predictions, EPS, 1.0-EPS)
    return float(-numpy.sum(labels*numpy.log(p) + (1.0-labels)*numpy.log(1.0-p)))


def backward(params, batch, labels, masks=None, scale=1.0):
    """Objective and gradients.

    objective = scale * sum of per-element cross-entropy (computed from
    logits) + l1_strength * sum |E[r]| over embedding rows r used by the
    batch.

    :returns: (objective, OrderedDict of gradients named as params)
    :raises NumericError: if the objective is not finite
    """
    config = params.config
    labels = numpy.asarray(labels)
    if labels.shape!=(batch.size, config.num_tasks):
        raise ValueError('labels %s != %s'%(labels.shape, (batch.size, config.num_tasks)))
    logits, (batch, masks, caches, top) = _forward(params, batch, masks)
    dtype = params.dtype
    Y = labels.astype(dtype)

    data_loss = scale*numpy.sum(numpy.logaddexp(0.0, logits) - Y*logits)
    E = params['embedding']
    rows = batch.touched
    l1 = config.l1_strength
    objective = float(data_loss + l1*numpy.abs(E[rows]).sum())
    if not numpy.isfinite(objective):
        raise NumericError('Non-finite objective %r'%objective)

    grads = OrderedDict()
    dlogits = (scale*(expit(logits) - Y)).astype(dtype)
    dtop = dlogits.dot(params['head.W'].T)
    dW_head = top.T.dot(dlogits)
    db_head = dlogits.sum(axis=0)

    T, N, H = batch.n_bins, batch.size, config.hidden_size
    _cell_fwd, cell_bwd = CELLS[config.cell_type]

    dhs = numpy.zeros((T, N, H), dtype=dtype)
    dhs[-1] = dtop if masks is None else dtop*masks.output[-1]
    layer_grads = [None]*config.num_layers
    for l in range(config.num_layers-1, -1, -1):
        dinp, dW, dU, db = cell_bwd(dhs, caches[l])
        layer_grads[l] = (dW, dU, db)
        if l>0:
            dhs = dinp if masks is None else dinp*masks.output[l-1]
        else:
            dX = dinp if masks is None else dinp*masks.inp

    dE = numpy.asarray(batch.S.T.dot(dX.reshape(T*N, -1))).astype(dtype, copy=False)
    if l1>0:
        dE[rows] += l1*numpy.sign(E[rows])

    grads['embedding'] = dE
    for l, (dW, dU, db) in enumerate(layer_grads):
        grads['rnn%d.W'%l] = dW
        grads['rnn%d.U'%l] = dU
        grads['rnn%d.b'%l] = db
    grads['head.W'] = dW_head
    grads['head.b'] = db_head
    return objective, grads
