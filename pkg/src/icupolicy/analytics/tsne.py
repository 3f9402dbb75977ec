"""Exact t-SNE.

Gaussian affinities with a per-point bandwidth matched to the perplexity,
Student-t affinities in two dimensions, and gradient descent on the KL
divergence with early exaggeration, momentum and adaptive gains.
"""

import logging
import math

import numpy
from scipy.spatial.distance import cdist

from ..errors import DataError
from ..util import ordered_map

_log = logging.getLogger(__name__)

__all__ = [
    'Embedding2D',
    'EmbeddingError',
    'conditional_affinities',
    'joint_affinities',
    'kl_divergence',
    'tsne',
]

EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250
MOMENTUM = (0.5, 0.8)
MIN_GAIN = 0.01
TINY = 1e-12


class EmbeddingError(DataError):
    """Input cannot be embedded (degenerate points or infeasible perplexity)
    """


class Embedding2D(object):
    """
    :param coords: (n, 2)
    :param float kl: Final KL divergence
    :param float kl_initial: KL divergence of the initial layout
    :param list kl_history: (iteration, KL) pairs
    """
    def __init__(self, coords, kl, kl_initial=float('nan'), kl_history=()):
        self.coords = numpy.asarray(coords, dtype=numpy.float64)
        self.kl = float(kl)
        self.kl_initial = float(kl_initial)
        self.kl_history = list(kl_history)

    def __len__(self):
        return self.coords.shape[0]

    def __repr__(self):
        return 'Embedding2D(n=%d, kl=%.4f)'%(len(self), self.kl)


def _row_affinity(D, target, tol, max_tries=200):
    """Binary search for beta=1/(2 sigma^2) giving entropy target (nats).

    :returns: (P row, beta, entropy)
    """
    D = D - D.min()
    beta, lo, hi = 1.0, 0.0, numpy.inf
    for _n in range(max_tries):
        P = numpy.exp(-D*beta)
        S = P.sum()
        H = math.log(S) + beta*(D*P).sum()/S
        diff = H - target
        if abs(diff)<tol:
            return P/S, beta, H
        if diff>0:
            # too flat, narrow the kernel
            lo = beta
            beta = beta*2.0 if hi==numpy.inf else (beta+hi)/2.0
        else:
            hi = beta
            beta = (beta+lo)/2.0
    raise EmbeddingError('Bandwidth search did not reach perplexity (entropy %.6f, target %.6f)'%(H, target))


def conditional_affinities(points, perplexity=30.0, tol=1e-5, workers=1):
    """Row-normalised Gaussian affinities p(j|i), p(i|i)=0.

    :returns: ((n, n) array whose rows each sum to 1, (n,) betas)
    """
    X = numpy.asarray(points, dtype=numpy.float64)
    n = X.shape[0]
    D = cdist(X, X, 'sqeuclidean')
    target = math.log(perplexity)

    def row(i):
        others = numpy.concatenate((D[i,:i], D[i,i+1:]))
        return _row_affinity(others, target, tol)

    P = numpy.zeros((n, n))
    betas = numpy.empty(n)
    for i, (p, beta, _H) in enumerate(ordered_map(row, range(n), workers=workers, name='affinity')):
        P[i,:i] = p[:i]
        P[i,i+1:] = p[i:]
        betas[i] = beta
    return P, betas


def joint_affinities(points, perplexity=30.0, tol=1e-5, workers=1):
    """Symmetrised (P + P^T)/2n
    """
    P, _betas = conditional_affinities(points, perplexity, tol, workers)
    P = (P + P.T)/(2.0*P.shape[0])
    return numpy.maximum(P, TINY)


def _student(Y):
    num = 1.0/(1.0 + cdist(Y, Y, 'sqeuclidean'))
    numpy.fill_diagonal(num, 0.0)
    Q = numpy.maximum(num/num.sum(), TINY)
    return num, Q


def kl_divergence(P, Y):
    """KL(P || Q(Y)) over off-diagonal pairs
    """
    _num, Q = _student(Y)
    mask = ~numpy.eye(P.shape[0], dtype=bool)
    return float(numpy.sum(P[mask]*numpy.log(P[mask]/Q[mask])))


def tsne(points, perplexity=30.0, iters=1000, seed=0, learning_rate=200.0, workers=1, log_every=100):
    """Embed points in two dimensions.

    :param points: (n, d)
    :param float perplexity: Effective neighbourhood size, n must exceed 3*perplexity
    :param int iters: Gradient descent iterations
    :param seed: Seed of the N(0, 1e-4^2) initial layout
    :param int workers: Threads for the affinity computation
    :raises EmbeddingError: for identical points or infeasible perplexity
    """
    X = numpy.asarray(points, dtype=numpy.float64)
    if X.ndim!=2:
        raise ValueError('points must be (n, d), not %s'%(X.shape,))
    n = X.shape[0]
    if not n>3*perplexity:
        raise EmbeddingError('%d points too few for perplexity %g'%(n, perplexity))
    if numpy.all(X==X[0]):
        raise EmbeddingError('All points identical')

    P = joint_affinities(X, perplexity, workers=workers)

    rng = numpy.random.default_rng(seed)
    Y = 1e-4*rng.standard_normal((n, 2))
    update = numpy.zeros_like(Y)
    gains = numpy.ones_like(Y)

    kl0 = kl_divergence(P, Y)
    history = [(0, kl0)]
    _log.debug("t-SNE n=%d perplexity %g initial KL %.4f", n, perplexity, kl0)

    for it in range(iters):
        exag = EXAGGERATION if it<EXAGGERATION_ITERS else 1.0
        momentum = MOMENTUM[0] if it<EXAGGERATION_ITERS else MOMENTUM[1]

        num, Q = _student(Y)
        PQ = (exag*P - Q)*num
        grad = 4.0*(PQ.sum(axis=1)[:,None]*Y - PQ.dot(Y))

        same = (grad>0)==(update>0)
        gains = numpy.where(same, gains*0.8, gains+0.2)
        numpy.maximum(gains, MIN_GAIN, out=gains)
        update = momentum*update - learning_rate*gains*grad
        Y = Y + update
        Y -= Y.mean(axis=0)

        if (it+1)%log_every==0 or it+1==iters:
            kl = kl_divergence(P, Y)
            history.append((it+1, kl))
            _log.debug("t-SNE iteration %d KL %.4f", it+1, kl)

    if not numpy.all(numpy.isfinite(Y)):
        raise EmbeddingError('t-SNE diverged')
    kl = kl_divergence(P, Y)
    _log.info("t-SNE of %d points, KL %.4f -> %.4f", n, kl0, kl)
    return Embedding2D(Y, kl, kl0, history)
