
import logging
import unittest

import numpy
from numpy.testing import assert_array_equal, assert_array_almost_equal as assert_aequal

from ..errors import ConfigError, DataError, NumericError
from ..features import Batch, FeatureSequence
from ..model import (ModelConfig, init_params, sample_masks, forward, backward,
                     multilabel_bce, param_shapes, checkpoint)
from ..model.network import EPS, Masks
from ..tasks import NUM_TASKS
from .utils import random_batch, random_sequences, tiny_model

_log = logging.getLogger(__name__)


class GradCheck(object):
    """Compare analytic gradients against central differences.
    """
    cell_type = None
    h = 1e-5
    samples = 20

    def setUp(self):
        self.rng = numpy.random.default_rng(42)
        self.conf = ModelConfig(embedding_dim=8, hidden_size=12, num_layers=3, cell_type=self.cell_type,
                                dropout_prob=0.3, l1_strength=0.01)
        self.V, self.T, self.N = 20, 5, 4
        self.params = init_params(self.conf, 7, self.V)
        # non-zero biases so every term contributes
        for K, A in self.params.items():
            if A.ndim==1:
                A[:] = self.rng.uniform(-0.5, 0.5, size=A.shape)
        self.batch = random_batch(self.rng, self.N, self.T, self.V)
        self.labels = self.rng.integers(0, 2, size=(self.N, NUM_TASKS))
        self.masks = sample_masks(self.conf, self.N, self.rng)
        self.scale = 1.0/self.N

    def objective(self):
        obj, _G = backward(self.params, self.batch, self.labels, self.masks, scale=self.scale)
        return obj

    def test_gradients(self):
        _obj, grads = backward(self.params, self.batch, self.labels, self.masks, scale=self.scale)
        self.assertEqual(list(grads), list(param_shapes(self.conf, self.V)))

        for K, A in self.params.items():
            G = grads[K]
            self.assertEqual(G.shape, A.shape, K)
            flat = A.reshape(-1)
            if K=='embedding':
                # rows absent from the batch have zero gradient
                rows = self.batch.touched
                cand = (rows[:,None]*A.shape[1] + numpy.arange(A.shape[1])[None,:]).ravel()
            else:
                cand = numpy.arange(flat.size)
            pick = self.rng.choice(cand, size=min(self.samples, cand.size), replace=False)
            for i in pick:
                orig = flat[i]
                flat[i] = orig+self.h
                up = self.objective()
                flat[i] = orig-self.h
                down = self.objective()
                flat[i] = orig
                num = (up-down)/(2*self.h)
                ana = G.reshape(-1)[i]
                err = abs(ana-num)/max(1e-4, abs(ana)+abs(num))
                self.assertLess(err, 1e-4, (K, i, ana, num))

    def test_untouched_rows(self):
        _obj, grads = backward(self.params, self.batch, self.labels, self.masks, scale=self.scale)
        untouched = numpy.setdiff1d(numpy.arange(self.V), self.batch.touched)
        assert_array_equal(grads['embedding'][untouched], 0.0)


class TestGradLSTM(GradCheck, unittest.TestCase):
    cell_type = 'LSTM'


class TestGradGRU(GradCheck, unittest.TestCase):
    cell_type = 'GRU'


class TestForward(unittest.TestCase):
    def setUp(self):
        self.rng = numpy.random.default_rng(1)

    def test_range(self):
        for cell in ('LSTM', 'GRU'):
            conf = tiny_model(cell_type=cell)
            params = init_params(conf, 0, 30)
            P = forward(params, random_batch(self.rng, 7, 24, 30))
            self.assertEqual(P.shape, (7, NUM_TASKS))
            self.assertTrue(numpy.all(P>=EPS) and numpy.all(P<=1-EPS))

    def test_single_precision(self):
        conf = tiny_model()
        params = init_params(conf, 0, 30, dtype=numpy.float32)
        B = random_batch(self.rng, 3, 6, 30, dtype=numpy.float32)
        P32 = forward(params, B)
        P64 = forward(params.astype(numpy.float64), B.astype(numpy.float64))
        self.assertEqual(P32.dtype, numpy.float32)
        assert_aequal(P32, P64, decimal=5)

    def test_batch_independent(self):
        # dropout free inference of one sequence does not depend on its batch mates
        conf = tiny_model(num_layers=3)
        params = init_params(conf, 2, 30)
        B = random_batch(numpy.random.default_rng(9), 5, 8, 30)
        seqs = random_sequences(numpy.random.default_rng(9), 5, 8, 30)
        whole = forward(params, Batch.from_sequences(seqs))
        alone = forward(params, Batch.from_sequences(seqs[2:3]))
        assert_aequal(whole[2:3], alone, decimal=12)
        assert_aequal(forward(params, B), whole, decimal=12)

    def test_objective_is_bce(self):
        conf = tiny_model(l1_strength=0.0)
        params = init_params(conf, 3, 30)
        B = random_batch(self.rng, 6, 10, 30)
        Y = self.rng.integers(0, 2, size=(6, NUM_TASKS))
        obj, _G = backward(params, B, Y)
        self.assertAlmostEqual(obj, multilabel_bce(forward(params, B), Y), places=6)

    def test_l1_term(self):
        params = init_params(tiny_model(l1_strength=0.5), 3, 30)
        noreg = init_params(tiny_model(l1_strength=0.0), 3, 30)
        B = random_batch(self.rng, 2, 4, 30)
        Y = numpy.zeros((2, NUM_TASKS))
        a, _G = backward(params, B, Y)
        b, _G = backward(noreg, B, Y)
        self.assertAlmostEqual(a-b, 0.5*numpy.abs(params['embedding'][B.touched]).sum(), places=8)

    def test_vocab_mismatch(self):
        params = init_params(tiny_model(), 0, 30)
        self.assertRaises(ValueError, forward, params, random_batch(self.rng, 2, 4, 31))

    def test_nonfinite(self):
        params = init_params(tiny_model(), 0, 30)
        params['head.W'][0, 0] = numpy.nan
        self.assertRaises(NumericError, forward, params, random_batch(self.rng, 2, 4, 30))

    def test_bce(self):
        self.assertAlmostEqual(multilabel_bce([[0.5, 0.5]], [[1, 0]]), 2*numpy.log(2.0))
        # clamped, finite
        self.assertAlmostEqual(multilabel_bce([[0.0]], [[1]]), -numpy.log(EPS))
        self.assertRaises(ValueError, multilabel_bce, [[0.5]], [[1, 0]])


class TestMasks(unittest.TestCase):
    def test_disabled(self):
        self.assertIsNone(sample_masks(tiny_model(dropout_prob=0.0), 4, numpy.random.default_rng(0)))

    def test_values(self):
        conf = tiny_model(dropout_prob=0.4)
        M = sample_masks(conf, 50, numpy.random.default_rng(0))
        self.assertEqual(M.inp.shape, (50, conf.embedding_dim))
        self.assertEqual(len(M.recurrent), conf.num_layers)
        self.assertEqual(len(M.output), conf.num_layers)
        for A in [M.inp]+M.recurrent+M.output:
            vals = set(numpy.unique(A).tolist())
            self.assertTrue(vals<=set([0.0, 1.0/0.6]), vals)
        frac = numpy.mean(numpy.concatenate([A.ravel() for A in M.recurrent])==0.0)
        self.assertTrue(0.3<frac<0.5, frac)


class TestInit(unittest.TestCase):
    def test_deterministic(self):
        conf = tiny_model()
        A, B, C = init_params(conf, 5, 30), init_params(conf, 5, 30), init_params(conf, 6, 30)
        for K in A:
            assert_array_equal(A[K], B[K])
        self.assertFalse(numpy.array_equal(A['embedding'], C['embedding']))

    def test_shapes(self):
        conf = tiny_model(cell_type='GRU', num_layers=2)
        P = init_params(conf, 0, 30)
        self.assertEqual(P['embedding'].shape, (30, 8))
        self.assertEqual(P['rnn0.W'].shape, (8, 18))
        self.assertEqual(P['rnn1.W'].shape, (6, 18))
        self.assertEqual(P['rnn1.U'].shape, (6, 18))
        self.assertEqual(P['head.W'].shape, (6, NUM_TASKS))
        for K, V in P.items():
            if V.ndim==1:
                assert_array_equal(V, 0.0)
            else:
                a = numpy.sqrt(6.0/sum(V.shape))
                self.assertLessEqual(numpy.abs(V).max(), a)

    def test_config(self):
        self.assertRaises(ConfigError, ModelConfig, num_tasks=13)
        self.assertRaises(ConfigError, ModelConfig, dropout_prob=1.0)
        self.assertRaises(ConfigError, ModelConfig, cell_type='RNN')
        self.assertRaises(ConfigError, ModelConfig, hidden_size=0)
        self.assertRaises(ConfigError, ModelConfig, l1_strength=-1.0)


class TestCheckpoint(unittest.TestCase):
    def setUp(self):
        self.params = init_params(tiny_model(), 4, 30, dtype=numpy.float32)
        self.params.step = 17
        self.params.vocab_fingerprint = 'ab'*32
        self.params.meta['train'] = {'seed': 4}

    def test_exact(self):
        raw = checkpoint.dumps(self.params)
        self.assertEqual(raw[:8], checkpoint.MAGIC)
        back = checkpoint.loads(raw, dtype=numpy.float32)
        self.assertEqual(back.config, self.params.config)
        self.assertEqual(back.step, 17)
        self.assertEqual(back.vocab_fingerprint, 'ab'*32)
        self.assertEqual(back.meta['train'], {'seed': 4})
        for K in self.params:
            assert_array_equal(back[K], self.params[K])
        self.assertEqual(checkpoint.dumps(back), raw)

    def test_bad_magic(self):
        raw = checkpoint.dumps(self.params)
        self.assertRaises(DataError, checkpoint.loads, b'NOTACKPT'+raw[8:])

    def test_truncated(self):
        raw = checkpoint.dumps(self.params)
        self.assertRaises(DataError, checkpoint.loads, raw[:-4])
        self.assertRaises(DataError, checkpoint.loads, raw[:10])
        self.assertRaises(DataError, checkpoint.loads, raw+b'\0\0\0\0')

    def test_nan(self):
        self.params['head.b'][1] = numpy.nan
        self.assertRaises(NumericError, checkpoint.loads, checkpoint.dumps(self.params))
        self.assertRaises(NumericError, checkpoint.save, self.params, '/nonexistent/x.bin')


class TestStructure(unittest.TestCase):
    """Network properties that hold for any parameter values
    """
    def setUp(self):
        self.rng = numpy.random.default_rng(11)
        self.seqs = random_sequences(self.rng, 6, 7, 30)
        self.batch = Batch.from_sequences(self.seqs)
        self.labels = self.rng.integers(0, 2, size=(6, NUM_TASKS))

    def randomized(self, conf, seed=4):
        params = init_params(conf, seed, 30)
        for K, A in params.items():
            if A.ndim==1:
                A[:] = self.rng.uniform(-0.5, 0.5, size=A.shape)
        return params

    def test_head_isolation(self):
        params = self.randomized(tiny_model())
        before = forward(params, self.batch)
        for j in (0, 5, NUM_TASKS-1):
            P = params.copy()
            P['head.W'][:,j] = 0.0
            P['head.b'][j] = 0.0
            after = forward(P, self.batch)
            others = numpy.arange(NUM_TASKS)!=j
            assert_aequal(after[:,others], before[:,others], decimal=14)
            assert_aequal(after[:,j], 0.5, decimal=12)
            self.assertFalse(numpy.allclose(before[:,j], 0.5))

    def test_loss_additive(self):
        params = self.randomized(tiny_model())
        P = forward(params, self.batch)
        rows = [multilabel_bce(P[i:i+1], self.labels[i:i+1]) for i in range(len(self.seqs))]
        self.assertAlmostEqual(multilabel_bce(P, self.labels), sum(rows), places=9)

        obj, _G = backward(params, self.batch, self.labels)
        rows = [backward(params, Batch.from_sequences(self.seqs[i:i+1]), self.labels[i:i+1])[0]
                for i in range(len(self.seqs))]
        self.assertAlmostEqual(obj, sum(rows), places=9)

    def test_inference_ignores_dropout_rate(self):
        # without masks the dropout probability plays no part
        A = self.randomized(tiny_model(dropout_prob=0.0), seed=8)
        B = A.copy()
        B.config = tiny_model(dropout_prob=0.6)
        assert_array_equal(forward(A, self.batch), forward(B, self.batch))

        conf = tiny_model(dropout_prob=0.6)
        N, E, H = len(self.seqs), conf.embedding_dim, conf.hidden_size
        ones = Masks(numpy.ones((N, E)), [numpy.ones((N, H))]*conf.num_layers,
                     [numpy.ones((N, H))]*conf.num_layers)
        assert_aequal(forward(B, self.batch, ones), forward(B, self.batch), decimal=14)

        M = sample_masks(conf, N, numpy.random.default_rng(0))
        self.assertFalse(numpy.allclose(forward(B, self.batch, M), forward(B, self.batch)))

    def test_duplicate_doubles_gradient(self):
        params = self.randomized(tiny_model())
        a, b = self.seqs[0], self.seqs[1]
        Y = self.labels[:2]

        def grads(seqs, labels):
            return backward(params, Batch.from_sequences(seqs), labels)[1]

        single = grads([a], Y[:1])
        pair = grads([a, b], Y)
        dup = grads([a, a, b], numpy.concatenate([Y[:1], Y]))
        for K in params:
            assert_aequal(dup[K]-pair[K], single[K], decimal=10)

        twice = grads([a, a], numpy.concatenate([Y[:1], Y[:1]]))
        for K in params:
            assert_aequal(twice[K], 2*single[K], decimal=10)

    def test_zero_params(self):
        params = init_params(tiny_model(cell_type='LSTM'), 0, 30)
        for K, A in params.items():
            A[:] = 0.0
        assert_array_equal(forward(params, self.batch), 0.5)

        params = init_params(tiny_model(cell_type='GRU'), 0, 30)
        for K, A in params.items():
            A[:] = 0.0
        assert_array_equal(forward(params, self.batch), 0.5)

    def test_one_step_by_hand(self):
        conf = tiny_model(num_layers=1, hidden_size=3, embedding_dim=4)
        params = self.randomized(conf)
        k, w = 7, 1.5
        seq = FeatureSequence(1, 30, numpy.asarray([0]), numpy.asarray([k]), numpy.asarray([w]))
        P = forward(params, Batch.from_sequences([seq]))

        def sigmoid(x):
            return 1.0/(1.0+numpy.exp(-x))
        H = 3
        x = w*params['embedding'][k]
        z = x.dot(params['rnn0.W']) + params['rnn0.b']
        i, g, o = sigmoid(z[:H]), numpy.tanh(z[2*H:3*H]), sigmoid(z[3*H:])
        # forget gate has no effect on the first step, c(-1) = 0
        h = o*numpy.tanh(i*g)
        expect = sigmoid(h.dot(params['head.W']) + params['head.b'])
        assert_aequal(P[0], expect, decimal=12)


class TestXavier(unittest.TestCase):
    def test_variance(self):
        # a 300x200 embedding
        conf = tiny_model(embedding_dim=200)
        E = init_params(conf, 21, 300)['embedding']
        self.assertEqual(E.shape, (300, 200))
        expect = 2.0/(300+200)
        self.assertLess(abs(E.var()-expect), 0.1*expect, (E.var(), expect))
        self.assertLess(abs(E.mean()), 0.01)
