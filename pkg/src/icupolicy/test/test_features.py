
import json
import logging
import unittest

import numpy
from numpy.testing import assert_array_equal, assert_array_almost_equal as assert_aequal

from ..errors import DataError
from ..features import (Vocabulary, FeatureSequence, Batch, VocabularyMismatch, OOV,
                        build_vocabulary, encode, encode_all)
from .utils import TempDirTestCase, make_record

_log = logging.getLogger(__name__)


def training_records():
    return [
        make_record('A', stay=60.0, events=[(0.5, 'vital:map', 70.0), (2.2, 'vital:map', 80.0),
                                            (3.0, 'adm:elective', None), (30.0, 'late:code', 5.0)]),
        make_record('B', stay=60.0, events=[(1.0, 'vital:map', 90.0), (1.5, 'lab:sodium', 140.0),
                                            (5.0, 'lab:sodium', 140.0)]),
    ]


class TestVocabulary(TempDirTestCase):
    def setUp(self):
        super(TestVocabulary, self).setUp()
        self.vocab = build_vocabulary(training_records())

    def test_codes(self):
        V = self.vocab
        # window codes only, sorted, index 0 reserved
        self.assertEqual(V.codes, ('adm:elective', 'lab:sodium', 'vital:map'))
        self.assertEqual(V.size, 4)
        self.assertEqual(V.index('adm:elective'), 1)
        self.assertEqual(V.index('vital:map'), 3)
        self.assertEqual(V.index('late:code'), OOV)
        self.assertNotIn('late:code', V)

    def test_stats(self):
        V = self.vocab
        i = V.index('vital:map')
        self.assertAlmostEqual(V.mean[i], 80.0)
        self.assertAlmostEqual(V.std[i], numpy.std([70.0, 80.0, 90.0]))
        # constant value
        self.assertEqual(V.std[V.index('lab:sodium')], 1.0)
        # never valued
        self.assertFalse(V.has_values[V.index('adm:elective')])
        self.assertEqual(V.std[V.index('adm:elective')], 1.0)

    def test_empty(self):
        self.assertRaises(DataError, build_vocabulary, [])

    def test_invalid(self):
        self.assertRaises(DataError, Vocabulary, ['b', 'a'], [0, 0], [1, 1], [True, True])
        self.assertRaises(DataError, Vocabulary, ['a'], [0], [0.0], [True])

    def test_fingerprint(self):
        V = self.vocab
        other = build_vocabulary(training_records()[:1])
        self.assertNotEqual(V.fingerprint(), other.fingerprint())
        self.assertEqual(V.fingerprint(), build_vocabulary(training_records()).fingerprint())

    def test_file(self):
        self.vocab.save(self.path('v.json'))
        self.assertEqual(Vocabulary.load(self.path('v.json')), self.vocab)

        with open(self.path('v.json'), 'r') as F:
            raw = json.load(F)
        raw['codes'][0]['mean'] = 42.0
        with open(self.path('v.json'), 'w') as F:
            json.dump(raw, F)
        self.assertRaises(VocabularyMismatch, Vocabulary.load, self.path('v.json'))


class TestEncode(unittest.TestCase):
    def setUp(self):
        self.vocab = build_vocabulary(training_records())

    def test_bins_and_weights(self):
        V = self.vocab
        R = make_record('C', stay=60.0, events=[
            (0.0, 'vital:map', 90.0),
            (0.9, 'adm:elective', None),
            (0.95, 'vital:map', None),
            (3.5, 'unknown:code', 7.0),
            (23.99, 'lab:sodium', 150.0),
            (24.0, 'vital:map', 100.0),
        ])
        S = encode(R, V)
        self.assertEqual(S.n_bins, 24)
        self.assertEqual(S.vocab_size, V.size)
        self.assertEqual(S.patient_id, 'C')
        self.assertEqual(len(S), 5)

        imap = V.index('vital:map')
        z = (90.0-80.0)/numpy.std([70.0, 80.0, 90.0])
        ents = S.entries(0)
        self.assertEqual([I for I, _W in ents], sorted([imap, V.index('adm:elective'), imap]))
        self.assertEqual(sorted([W for I, W in ents if I==imap]), sorted([1.0, z]))
        self.assertEqual(S.entries(3), [(OOV, 1.0)])
        self.assertEqual(S.entries(23), [(V.index('lab:sodium'), 10.0)])
        self.assertEqual(S.entries(12), [])

    def test_empty_window(self):
        R = make_record('D', stay=60.0, events=[(30.0, 'vital:map', 1.0)])
        S = encode(R, self.vocab)
        self.assertEqual(len(S), 0)

    def test_workers(self):
        recs = training_records()*5
        self.assertEqual(encode_all(recs, self.vocab), encode_all(recs, self.vocab, workers=3))


class TestSequence(unittest.TestCase):
    def test_invalid(self):
        self.assertRaises(DataError, FeatureSequence, 2, 3, [2], [0], [1.0])
        self.assertRaises(DataError, FeatureSequence, 2, 3, [0], [3], [1.0])
        self.assertRaises(ValueError, FeatureSequence, 2, 3, [0, 1], [0], [1.0])

    def test_order(self):
        S = FeatureSequence(3, 5, [2, 0, 0], [1, 4, 2], [0.5, 1.0, -1.0])
        assert_array_equal(S.bins, [0, 0, 2])
        assert_array_equal(S.indices, [2, 4, 1])
        self.assertEqual(S.entries(0), [(2, -1.0), (4, 1.0)])


class TestBatch(unittest.TestCase):
    def test_matrix(self):
        A = FeatureSequence(2, 4, [0, 0, 1], [1, 1, 3], [0.5, 0.25, 2.0])
        B = FeatureSequence(2, 4, [1], [2], [1.0])
        M = Batch.from_sequences([A, B])
        self.assertEqual(M.S.shape, (4, 4))
        self.assertEqual((M.n_bins, M.size, M.vocab_size), (2, 2, 4))
        # row t*N+n
        dense = M.S.toarray()
        expect = numpy.zeros((4, 4))
        expect[0, 1] = 0.75
        expect[2, 3] = 2.0
        expect[3, 2] = 1.0
        assert_aequal(dense, expect)
        assert_array_equal(M.touched, [1, 2, 3])

    def test_dtype(self):
        A = FeatureSequence(2, 4, [0], [1], [0.5])
        self.assertEqual(Batch.from_sequences([A], dtype=numpy.float32).dtype, numpy.float32)
        self.assertEqual(Batch.from_sequences([A]).astype(numpy.float32).dtype, numpy.float32)

    def test_mismatch(self):
        A = FeatureSequence(2, 4, [0], [1], [0.5])
        B = FeatureSequence(3, 4, [0], [1], [0.5])
        self.assertRaises(ValueError, Batch.from_sequences, [A, B])
        self.assertRaises(ValueError, Batch.from_sequences, [])
