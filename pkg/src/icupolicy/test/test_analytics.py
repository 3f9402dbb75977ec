
import json
import logging
import os
import unittest

import numpy
from numpy.testing import assert_array_equal, assert_array_almost_equal as assert_aequal
from scipy.spatial.distance import cdist

from ..analytics import (AnalyticsConfig, ClusterResult, EmbeddingError, quantile_groups, kmeans, tsne,
                         radar_profile, radar_table, cluster_profiles, patient_compare, analyze)
from ..analytics.plot import scatter_svg
from ..analytics.tsne import conditional_affinities, joint_affinities
from ..errors import ConfigError, DataError
from ..tasks import INTERVENTIONS
from .utils import TempDirTestCase

_log = logging.getLogger(__name__)

NI = len(INTERVENTIONS)


def blobs(n_per=20, k=3, seed=0, spread=0.02):
    """k well separated clusters in the 13 intervention dimensions
    """
    rng = numpy.random.default_rng(seed)
    centres = numpy.linspace(0.1, 0.9, k)
    X = numpy.concatenate([numpy.clip(c + spread*rng.standard_normal((n_per, NI)), 0, 1) for c in centres])
    truth = numpy.repeat(numpy.arange(k), n_per)
    return X, truth


def same_partition(A, B):
    pairs = set(zip(A.tolist(), B.tolist()))
    return len(pairs)==len(set(A.tolist()))==len(set(B.tolist()))


class TestGroups(unittest.TestCase):
    def test_sizes(self):
        G = quantile_groups(numpy.arange(10)[::-1], 3)
        self.assertEqual(sorted(numpy.bincount(G).tolist()), [3, 3, 4])
        # lowest values first
        self.assertEqual(G[-1], 0)
        self.assertEqual(G[0], 2)

    def test_ties(self):
        G = quantile_groups([1.0, 1.0, 1.0, 1.0], 2)
        assert_array_equal(G, [0, 0, 1, 1])

    def test_errors(self):
        self.assertRaises(DataError, quantile_groups, [1.0], 2)
        self.assertRaises(ValueError, quantile_groups, [1.0], 0)


class TestKMeans(unittest.TestCase):
    def test_blobs(self):
        X, truth = blobs()
        R = kmeans(X, 3, seed=1)
        self.assertTrue(same_partition(R.assignments, truth))
        self.assertEqual(R.n_clusters, 3)
        self.assertEqual(sorted(R.sizes().tolist()), [20, 20, 20])
        H = numpy.asarray(R.inertia_history)
        self.assertTrue(numpy.all(numpy.diff(H)<=1e-9), H)
        self.assertAlmostEqual(R.inertia, ((X-R.centroids[R.assignments])**2).sum())

    def test_inertia_non_increasing(self):
        rng = numpy.random.default_rng(6)
        X = rng.random((200, NI))
        R = kmeans(X, 9, seed=3)
        H = numpy.asarray(R.inertia_history)
        self.assertTrue(numpy.all(numpy.diff(H)<=1e-9), H)

    def test_deterministic(self):
        X = numpy.random.default_rng(6).random((100, NI))
        A, B = kmeans(X, 5, seed=2), kmeans(X, 5, seed=2)
        assert_array_equal(A.assignments, B.assignments)
        assert_array_equal(A.centroids, B.centroids)

    def test_duplicates(self):
        X = numpy.zeros((5, NI))
        X[4] = 1.0
        R = kmeans(X, 3, seed=0)
        self.assertEqual(len(R.assignments), 5)
        self.assertAlmostEqual(R.inertia, 0.0)

    def test_errors(self):
        self.assertRaises(DataError, kmeans, numpy.zeros((2, NI)), 3)
        self.assertRaises(ValueError, kmeans, numpy.zeros(5), 2)


class TestTSNE(unittest.TestCase):
    def test_perplexity(self):
        X, _truth = blobs(seed=2, spread=0.1)
        P, betas = conditional_affinities(X, perplexity=5.0)
        self.assertTrue(numpy.all(betas>0))
        assert_aequal(P.sum(axis=1), 1.0)
        assert_array_equal(numpy.diag(P), 0.0)
        H = numpy.asarray([-numpy.sum(p[p>0]*numpy.log(p[p>0])) for p in P])
        assert_aequal(H, numpy.log(5.0), decimal=4)

        J = joint_affinities(X, perplexity=5.0, workers=2)
        assert_aequal(J, J.T)
        self.assertAlmostEqual(J.sum(), 1.0, places=6)

    def test_separates_blobs(self):
        X, truth = blobs(seed=3)
        E = tsne(X, perplexity=5.0, iters=300, seed=0)
        self.assertEqual(E.coords.shape, (60, 2))
        self.assertLess(E.kl, E.kl_initial)
        self.assertEqual(E.kl_history[0], (0, E.kl_initial))
        D = cdist(E.coords, E.coords)
        numpy.fill_diagonal(D, numpy.inf)
        nearest = D.argmin(axis=1)
        self.assertGreaterEqual(numpy.mean(truth[nearest]==truth), 0.95)

    def test_deterministic(self):
        X, _truth = blobs(seed=4)
        A = tsne(X, perplexity=5.0, iters=50, seed=1)
        B = tsne(X, perplexity=5.0, iters=50, seed=1, workers=3)
        assert_array_equal(A.coords, B.coords)

    def test_errors(self):
        self.assertRaises(EmbeddingError, tsne, numpy.ones((40, NI)), 5.0)
        self.assertRaises(EmbeddingError, tsne, numpy.random.default_rng(0).random((15, NI)), 5.0)


class TestProfiles(unittest.TestCase):
    def setUp(self):
        self.P = numpy.asarray([[0.1]*NI, [0.3]*NI, [0.8]*NI])
        self.C = ClusterResult([0, 0, 2], numpy.zeros((3, NI)), 0.0)

    def test_radar(self):
        per, glob = radar_profile(self.C, self.P)
        self.assertEqual(list(per), [0, 2])
        assert_aequal(per[0], [0.2]*NI)
        assert_aequal(glob, [0.4]*NI)
        T = radar_table(per, glob)
        self.assertEqual(len(T), 2*NI)
        self.assertEqual(list(T.columns), ['cluster', 'intervention', 'cluster_mean', 'global_mean'])

    def test_cluster_profiles(self):
        T = cluster_profiles(self.C, [0.2, 0.4, 0.9], self.P, [50.0, 70.0, 100.0], [0, 1, 1])
        self.assertEqual(list(T.cluster), [0, 2])
        self.assertEqual(list(T['size']), [2, 1])
        self.assertAlmostEqual(T.mean_mortality_prob[0], 0.3)
        self.assertAlmostEqual(T.observed_mortality[0], 0.5)
        self.assertAlmostEqual(T.mean_intervention_score[1], 0.8*NI)
        self.assertAlmostEqual(T.mean_stay_hours[0], 60.0)
        self.assertRaises(ValueError, cluster_profiles, self.C, [0.2], self.P, [1.0], [0])

    def test_compare(self):
        P = numpy.random.default_rng(0).random((3, NI))
        T = patient_compare(P, ['a', 'b', 'c'], 'a', 'c')
        self.assertEqual(len(T), NI)
        assert_aequal(T.difference, T.a-T.b)
        self.assertTrue(numpy.all(numpy.diff(T.abs_difference)<=0))

        same = patient_compare(P, ['a', 'b', 'c'], 'b', 'b')
        assert_array_equal(same.difference, 0.0)
        self.assertEqual(list(same.intervention), list(INTERVENTIONS))

        self.assertRaises(DataError, patient_compare, P, ['a', 'b', 'c'], 'a', 'z')


class TestAnalyze(TempDirTestCase):
    def setUp(self):
        super(TestAnalyze, self).setUp()
        X, self.truth = blobs(seed=5)
        mort = numpy.linspace(0.01, 0.6, len(X))
        self.probs = numpy.column_stack((mort, X))
        self.ids = ['P%03d'%i for i in range(len(X))]
        self.conf = AnalyticsConfig(n_clusters=3, perplexity=5.0, tsne_iters=100, max_points=50)

    def test_config(self):
        self.assertRaises(ConfigError, AnalyticsConfig, perplexity=30.0, max_points=90)
        self.assertRaises(ConfigError, AnalyticsConfig, n_clusters=0)

    def test_write(self):
        stay = numpy.full(len(self.ids), 72.0)
        ylab = numpy.zeros(len(self.ids), dtype=int)
        R = analyze(self.ids, self.probs, stay, ylab, self.conf)
        self.assertEqual(len(R.patient_ids), 50)
        self.assertEqual(R.patient_ids, sorted(R.patient_ids))
        self.assertEqual(sorted(numpy.bincount(R.mortality_groups).tolist()), [16, 17, 17])

        files = R.write(self.tmpdir)
        for name in files:
            self.assertTrue(os.path.isfile(self.path(name)), name)
        with open(self.path('analysis.json'), 'r') as F:
            summary = json.load(F)
        self.assertEqual(summary['n'], 50)
        self.assertEqual(summary['kmeans']['k'], 3)

        again = analyze(self.ids, self.probs, stay, ylab, self.conf)
        assert_array_equal(again.embedding.coords, R.embedding.coords)

    def test_svg_bytes(self):
        X, truth = blobs(seed=6)
        coords = X[:,:2]
        A = scatter_svg(coords, truth, truth, truth)
        B = scatter_svg(coords, truth, truth, truth, fname=self.path('s.svg'))
        self.assertEqual(A, B)
        self.assertIn(b'<svg', A)
        with open(self.path('s.svg'), 'rb') as F:
            self.assertEqual(F.read(), A)
