"""Adam with a staircase exponential learning rate.
"""

import math
from collections import OrderedDict

import numpy

from ..errors import NumericError

__all__ = [
    'lr_at',
    'AdamState',
    'adam_step',
]

BETA1 = 0.9
BETA2 = 0.999
ADAM_EPS = 1e-8


def lr_at(step, config):
    """base_lr * decay_factor ** floor(step/decay_every)

    :param int step: Completed optimizer steps, >= 0
    :param config: A TrainConfig, or anything with base_lr, decay_factor and decay_every
    """
    if step<0:
        raise ValueError('step must be >= 0, not %r'%(step,))
    return config.base_lr * config.decay_factor**(step//config.decay_every)


class AdamState(object):
    """First and second moment estimates, one pair per parameter array
    """
    def __init__(self, params):
        self.m = OrderedDict([(K, numpy.zeros_like(V)) for K, V in params.items()])
        self.v = OrderedDict([(K, numpy.zeros_like(V)) for K, V in params.items()])


def adam_step(params, grads, step, config, state):
    """Apply one dense Adam update in place.

    :param params: ModelCheckpoint or mapping name -> array
    :param grads: mapping name -> array, same shapes as params
    :param int step: 1 for the first update.  The learning rate is lr_at(step-1)
    :param config: TrainConfig
    :param AdamState state: Updated in place
    :returns: params
    :raises NumericError: if any gradient is not finite
    """
    if step<1:
        raise ValueError('Adam step counts from 1, not %r'%(step,))
    for K, G in grads.items():
        if G.shape!=params[K].shape:
            raise ValueError('%s gradient %s != %s'%(K, G.shape, params[K].shape))
        if not numpy.all(numpy.isfinite(G)):
            raise NumericError('Non-finite gradient for %s at step %d'%(K, step))

    lr = lr_at(step-1, config)
    c1 = 1.0 - BETA1**step
    c2 = 1.0 - BETA2**step
    alpha = lr*math.sqrt(c2)/c1
    eps = ADAM_EPS*math.sqrt(c2)
    for K, G in grads.items():
        P, M, V = params[K], state.m[K], state.v[K]
        M *= BETA1
        M += (1.0-BETA1)*G
        V *= BETA2
        V += (1.0-BETA2)*G*G
        # lr*mhat/(sqrt(vhat)+eps), with the bias corrections folded into alpha and eps
        P -= (alpha*M/(numpy.sqrt(V)+eps)).astype(P.dtype, copy=False)
    if hasattr(params, 'step'):
        params.step = step
    return params
