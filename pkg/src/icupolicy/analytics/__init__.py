"""Interpretability analyses over predicted intervention probabilities.

K-means clusters and a t-SNE layout of the thirteen intervention
probabilities, quantile colourings, cluster profiles and patient comparisons.
"""

import json
import logging
import os
from collections import OrderedDict

import numpy
import pandas

from ..config import Section, as_int, as_float
from ..tasks import INTERVENTIONS
from ..util import atomic_write
from .groups import quantile_groups
from .kmeans import ClusterResult, kmeans
from .tsne import Embedding2D, EmbeddingError, tsne
from .profiles import radar_profile, radar_table, cluster_profiles, patient_compare

_log = logging.getLogger(__name__)

__all__ = [
    'AnalyticsConfig',
    'AnalysisResult',
    'ClusterResult',
    'Embedding2D',
    'EmbeddingError',
    'quantile_groups',
    'kmeans',
    'tsne',
    'radar_profile',
    'radar_table',
    'cluster_profiles',
    'patient_compare',
    'analyze',
]


class AnalyticsConfig(Section):
    """
    * n_clusters - K of k-means
    * kmeans_max_iter, kmeans_tol - Lloyd iteration limits
    * perplexity, tsne_iters, learning_rate - t-SNE settings
    * mortality_groups - Colour groups of predicted mortality
    * intervention_groups - Colour groups of the summed intervention probabilities
    * max_points - Larger sets are subsampled (seeded) before clustering and embedding
    * seed - Subsampling, k-means++ and t-SNE initialisation seed
    """
    name = 'analytics'
    _fields = (
        ('n_clusters', as_int, 9),
        ('kmeans_max_iter', as_int, 300),
        ('kmeans_tol', as_float, 1e-6),
        ('perplexity', as_float, 30.0),
        ('tsne_iters', as_int, 1000),
        ('learning_rate', as_float, 200.0),
        ('mortality_groups', as_int, 3),
        ('intervention_groups', as_int, 3),
        ('max_points', as_int, 3000),
        ('seed', as_int, 0),
    )

    def validate(self):
        for F in ('n_clusters', 'kmeans_max_iter', 'tsne_iters', 'mortality_groups', 'intervention_groups'):
            if getattr(self, F)<1:
                self.fail(F, 'must be >= 1')
        if self.perplexity<=0:
            self.fail('perplexity', 'must be positive')
        if self.learning_rate<=0:
            self.fail('learning_rate', 'must be positive')
        if self.kmeans_tol<0:
            self.fail('kmeans_tol', 'must be >= 0')
        if self.max_points<=3*self.perplexity:
            self.fail('max_points', 'must exceed 3*perplexity')
        if self.seed<0:
            self.fail('seed', 'must be >= 0')


class AnalysisResult(object):
    def __init__(self, patient_ids, clusters, embedding, mortality_groups, intervention_groups,
                 radar, cluster_table):
        self.patient_ids = patient_ids
        self.clusters = clusters
        self.embedding = embedding
        self.mortality_groups = mortality_groups
        self.intervention_groups = intervention_groups
        self.radar = radar
        self.cluster_table = cluster_table

    def embedding_table(self):
        return pandas.DataFrame(OrderedDict([
            ('patient_id', self.patient_ids),
            ('x', self.embedding.coords[:,0]),
            ('y', self.embedding.coords[:,1]),
            ('cluster', self.clusters.assignments),
            ('mortality_quantile', self.mortality_groups),
            ('intervention_score_quantile', self.intervention_groups),
        ]))

    def summary(self):
        return OrderedDict([
            ('n', len(self.patient_ids)),
            ('kmeans', OrderedDict([
                ('k', self.clusters.n_clusters),
                ('iterations', self.clusters.iterations),
                ('inertia', self.clusters.inertia),
                ('inertia_history', self.clusters.inertia_history),
            ])),
            ('tsne', OrderedDict([
                ('kl_initial', self.embedding.kl_initial),
                ('kl', self.embedding.kl),
                ('kl_history', [list(H) for H in self.embedding.kl_history]),
            ])),
        ])

    def write(self, out_dir):
        """:returns: list of written file names
        """
        from .plot import scatter_svg
        fmt = '%.6f'
        atomic_write(os.path.join(out_dir, 'embedding.csv'), self.embedding_table().to_csv(index=False, float_format=fmt))
        atomic_write(os.path.join(out_dir, 'radar.csv'), radar_table(*self.radar).to_csv(index=False, float_format=fmt))
        atomic_write(os.path.join(out_dir, 'clusters.csv'), self.cluster_table.to_csv(index=False, float_format=fmt))
        atomic_write(os.path.join(out_dir, 'analysis.json'), json.dumps(self.summary(), indent=1))
        scatter_svg(self.embedding.coords, self.clusters.assignments, self.mortality_groups,
                    self.intervention_groups, os.path.join(out_dir, 'scatter.svg'))
        return ['embedding.csv', 'radar.csv', 'clusters.csv', 'analysis.json', 'scatter.svg']


def analyze(patient_ids, probs, stay_hours, mortality_labels, config=None, workers=1):
    """Cluster, embed and profile one set of predictions.

    :param patient_ids: n ids
    :param probs: (n, 14) predicted probabilities, mortality first
    :param stay_hours: (n,) length of stay
    :param mortality_labels: (n,) observed mortality
    :param AnalyticsConfig config:
    :returns: AnalysisResult
    """
    config = config or AnalyticsConfig()
    probs = numpy.asarray(probs, dtype=numpy.float64)
    ids = list(patient_ids)
    stay = numpy.asarray(stay_hours, dtype=numpy.float64)
    ylab = numpy.asarray(mortality_labels)
    if probs.shape!=(len(ids), 1+len(INTERVENTIONS)):
        raise ValueError('probs %s for %d ids'%(probs.shape, len(ids)))

    if len(ids)>config.max_points:
        rng = numpy.random.default_rng(numpy.random.SeedSequence(config.seed, spawn_key=(1,)))
        keep = numpy.sort(rng.choice(len(ids), size=config.max_points, replace=False))
        _log.info("Analyze %d of %d patients", len(keep), len(ids))
        ids = [ids[i] for i in keep]
        probs, stay, ylab = probs[keep], stay[keep], ylab[keep]

    P = probs[:,1:]
    clusters = kmeans(P, config.n_clusters, seed=config.seed,
                      max_iter=config.kmeans_max_iter, tol=config.kmeans_tol)
    emb = tsne(P, config.perplexity, config.tsne_iters, seed=config.seed,
               learning_rate=config.learning_rate, workers=workers)
    mgroups = quantile_groups(probs[:,0], config.mortality_groups)
    igroups = quantile_groups(P.sum(axis=1), config.intervention_groups)
    radar = radar_profile(clusters, P)
    table = cluster_profiles(clusters, probs[:,0], P, stay, ylab)
    return AnalysisResult(ids, clusters, emb, mgroups, igroups, radar, table)
