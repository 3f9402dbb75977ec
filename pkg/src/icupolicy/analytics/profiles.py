"""Per-cluster and per-patient summaries of intervention predictions.
"""

import logging
from collections import OrderedDict

import numpy
import pandas

from ..errors import DataError
from ..tasks import INTERVENTIONS

_log = logging.getLogger(__name__)

__all__ = [
    'radar_profile',
    'radar_table',
    'cluster_profiles',
    'patient_compare',
]


def _aligned(cluster_result, predictions):
    P = numpy.asarray(predictions, dtype=numpy.float64)
    if P.ndim!=2 or P.shape[1]!=len(INTERVENTIONS):
        raise ValueError('predictions must be (n, %d), not %s'%(len(INTERVENTIONS), P.shape))
    if P.shape[0]!=len(cluster_result.assignments):
        raise ValueError('%d predictions for %d assignments'%(P.shape[0], len(cluster_result.assignments)))
    return P


def radar_profile(cluster_result, predictions):
    """Mean predicted probability of each intervention per cluster.

    Empty clusters are omitted with a warning.

    :param ClusterResult cluster_result:
    :param predictions: (n, 13)
    :returns: (OrderedDict cluster -> 13 means, 13 global means)
    """
    P = _aligned(cluster_result, predictions)
    A = cluster_result.assignments
    per = OrderedDict()
    for k in range(cluster_result.n_clusters):
        sel = A==k
        if not sel.any():
            _log.warning("Cluster %d is empty, omitted from profile", k)
            continue
        per[k] = P[sel].mean(axis=0)
    return per, P.mean(axis=0)


def radar_table(per_cluster, global_means):
    rows = []
    for k, means in per_cluster.items():
        for name, M, G in zip(INTERVENTIONS, means, global_means):
            rows.append((k, name, M, G))
    return pandas.DataFrame(rows, columns=['cluster', 'intervention', 'cluster_mean', 'global_mean'])


def cluster_profiles(cluster_result, mortality_probs, intervention_probs, stay_hours, mortality_labels):
    """Size, risk and length of stay of each non-empty cluster.

    :returns: DataFrame with columns cluster, size, mean_mortality_prob,
              observed_mortality, mean_intervention_score, mean_stay_hours
    """
    P = _aligned(cluster_result, intervention_probs)
    M = numpy.asarray(mortality_probs, dtype=numpy.float64).ravel()
    S = numpy.asarray(stay_hours, dtype=numpy.float64).ravel()
    Y = numpy.asarray(mortality_labels, dtype=numpy.float64).ravel()
    if not (M.shape==S.shape==Y.shape==(P.shape[0],)):
        raise ValueError('Misaligned inputs %s %s %s for %d patients'%(M.shape, S.shape, Y.shape, P.shape[0]))
    A = cluster_result.assignments
    score = P.sum(axis=1)
    rows = []
    for k in range(cluster_result.n_clusters):
        sel = A==k
        if sel.any():
            rows.append((k, int(sel.sum()), M[sel].mean(), Y[sel].mean(), score[sel].mean(), S[sel].mean()))
    return pandas.DataFrame(rows, columns=['cluster', 'size', 'mean_mortality_prob', 'observed_mortality',
                                           'mean_intervention_score', 'mean_stay_hours'])


def patient_compare(predictions, patient_ids, id_a, id_b):
    """Side by side intervention probabilities of two patients.

    Rows are sorted by descending absolute difference, ties in task order.

    :param predictions: (n, 13)
    :param patient_ids: n ids aligned with predictions
    :returns: DataFrame with columns intervention, a, b, difference, abs_difference
              where difference = a - b
    :raises DataError: for an unknown id
    """
    P = numpy.asarray(predictions, dtype=numpy.float64)
    ids = list(patient_ids)
    if P.shape!=(len(ids), len(INTERVENTIONS)):
        raise ValueError('predictions %s for %d ids'%(P.shape, len(ids)))
    index = dict([(pid, i) for i, pid in enumerate(ids)])
    for pid in (id_a, id_b):
        if pid not in index:
            raise DataError('Unknown patient %r'%(pid,))
    a, b = P[index[id_a]], P[index[id_b]]
    diff = a - b
    order = numpy.argsort(-numpy.abs(diff), kind='stable')
    return pandas.DataFrame(OrderedDict([
        ('intervention', [INTERVENTIONS[i] for i in order]),
        ('a', a[order]),
        ('b', b[order]),
        ('difference', diff[order]),
        ('abs_difference', numpy.abs(diff[order])),
    ]))
