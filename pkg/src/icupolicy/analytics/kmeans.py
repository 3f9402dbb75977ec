
import logging

import numpy
from scipy.spatial.distance import cdist

from ..errors import DataError

_log = logging.getLogger(__name__)

__all__ = [
    'ClusterResult',
    'kmeans',
    'kmeans_plusplus',
]


class ClusterResult(object):
    """
    :param assignments: (n,) cluster id of each point
    :param centroids: (K, d)
    :param float inertia: Sum of squared distances to the assigned centroid
    :param list inertia_history: Inertia after each assignment step
    :param int iterations: Lloyd iterations run
    """
    def __init__(self, assignments, centroids, inertia, inertia_history=(), iterations=0):
        self.assignments = numpy.asarray(assignments, dtype=numpy.int64)
        self.centroids = numpy.asarray(centroids, dtype=numpy.float64)
        self.inertia = float(inertia)
        self.inertia_history = list(inertia_history)
        self.iterations = iterations

    @property
    def n_clusters(self):
        return self.centroids.shape[0]

    def sizes(self):
        return numpy.bincount(self.assignments, minlength=self.n_clusters)

    def __repr__(self):
        return 'ClusterResult(K=%d, inertia=%g, %d iterations)'%(self.n_clusters, self.inertia, self.iterations)


def kmeans_plusplus(X, K, rng):
    """Seed K centroids, each next one drawn with probability proportional to
    the squared distance from the nearest chosen centroid.
    """
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    D2 = cdist(X, X[chosen], 'sqeuclidean').ravel()
    for _k in range(1, K):
        total = D2.sum()
        if total>0:
            nxt = int(rng.choice(n, p=D2/total))
        else:
            # every point coincides with a chosen centroid
            nxt = int(rng.integers(n))
        chosen.append(nxt)
        D2 = numpy.minimum(D2, cdist(X, X[nxt:nxt+1], 'sqeuclidean').ravel())
    return X[chosen].copy()


def _assign(X, C):
    D2 = cdist(X, C, 'sqeuclidean')
    A = D2.argmin(axis=1)
    d = D2[numpy.arange(len(A)), A]
    return A, d


def kmeans(points, K=9, seed=0, max_iter=300, tol=1e-6):
    """Lloyd's algorithm from k-means++ seeds.

    Stops when no centroid moves by tol or more, or after max_iter
    iterations.  A cluster left empty takes the point farthest from its own
    centroid.

    :param points: (n, d)
    :raises DataError: if n < K
    """
    X = numpy.asarray(points, dtype=numpy.float64)
    if X.ndim!=2:
        raise ValueError('points must be (n, d), not %s'%(X.shape,))
    n = X.shape[0]
    if K<1 or n<K:
        raise DataError('Cannot form %d clusters from %d points'%(K, n))
    rng = numpy.random.default_rng(seed)
    C = kmeans_plusplus(X, K, rng)

    history = []
    it = 0
    for it in range(1, max_iter+1):
        A, d = _assign(X, C)
        history.append(float(d.sum()))

        newC = C.copy()
        counts = numpy.bincount(A, minlength=K)
        for k in range(K):
            if counts[k]:
                newC[k] = X[A==k].mean(axis=0)
        empty = numpy.nonzero(counts==0)[0]
        if len(empty):
            far = numpy.argsort(-d, kind='stable')
            for k, i in zip(empty, far):
                _log.debug("Re-seed empty cluster %d from point %d", k, i)
                newC[k] = X[i]

        shift = numpy.sqrt(((newC-C)**2).sum(axis=1)).max()
        C = newC
        if shift<tol:
            break

    A, d = _assign(X, C)
    inertia = float(d.sum())
    history.append(inertia)
    _log.debug("k-means K=%d converged after %d iterations, inertia %g", K, it, inertia)
    return ClusterResult(A, C, inertia, history, it)
