
import hashlib
import json
import logging
import os
import threading
import unittest
from functools import partial

from ..artifacts import RunDir, Manifest, Stage
from ..config import RunConfig, IOConfig, jload
from ..errors import ConfigError, DataError, MissingArtifact
from ..util import ThreadedWorkQueue, ordered_map, atomic_write, sha256_file
from .utils import TempDirTestCase

_log = logging.getLogger(__name__)


class TestJLoad(unittest.TestCase):
    def test_comments(self):
        V = jload('''{ /* a comment
        over lines */
        "a": 1, /* another */ "b": [2]
        }''')
        self.assertEqual(dict(V), {'a': 1, 'b': [2]})

    def test_syntax(self):
        with self.assertRaisesRegex(ConfigError, '<json>'):
            RunConfig.fromjson('{"sim": ')


class TestRunConfig(TempDirTestCase):
    def test_defaults(self):
        C = RunConfig()
        self.assertEqual(C.seeds, [0])
        self.assertEqual(C.io.out_dir, 'run')
        self.assertEqual(C.model.cell_type, 'LSTM')
        self.assertEqual(C.train.batch_size, 128)

    def test_sections(self):
        C = RunConfig.fromjson('''{
            /* six sections plus seeds */
            "sim": {"n_patients": 50},
            "model": {"cell_type": "GRU"},
            "seeds": [3, 4]
        }''')
        self.assertEqual(C.sim.n_patients, 50)
        self.assertEqual(C.model.cell_type, 'GRU')
        self.assertEqual(C.seeds, [3, 4])

    def test_unknown(self):
        with self.assertRaisesRegex(ConfigError, 'bogus'):
            RunConfig.fromjson('{"bogus": {}}')
        with self.assertRaisesRegex(ConfigError, 'model.widths'):
            RunConfig.fromjson('{"model": {"widths": 3}}')
        with self.assertRaisesRegex(ConfigError, 'train.batch_size'):
            RunConfig.fromjson('{"train": {"batch_size": "big"}}')
        with self.assertRaises(ConfigError):
            RunConfig.fromjson('{"sim": 5}')
        with self.assertRaises(ConfigError):
            RunConfig.fromjson('[]')

    def test_seeds(self):
        self.assertRaises(ConfigError, RunConfig, seeds=[1, 1])
        self.assertRaises(ConfigError, RunConfig, seeds=[])
        self.assertRaises(ConfigError, RunConfig, seeds=[1.5])

    def test_override(self):
        C = RunConfig(seeds=[1, 2]).override(seed=9, out_dir='elsewhere', threads=4, precision='double')
        self.assertEqual(C.seeds, [9])
        self.assertEqual(C.sim.seed, 9)
        self.assertEqual(C.train.seed, 9)
        self.assertEqual(C.io.out_dir, 'elsewhere')
        self.assertEqual(C.train.threads, 4)
        self.assertEqual(C.train.precision, 'double')
        self.assertRaises(ConfigError, RunConfig().override, precision='quad')

    def test_digest(self):
        A, B = RunConfig(seeds=[1, 2]), RunConfig(seeds=[1, 2])
        self.assertEqual(A.digest(), B.digest())
        self.assertNotEqual(A.digest(), RunConfig(seeds=[1, 3]).digest())
        # the echo parses back to the same configuration
        self.assertEqual(RunConfig.fromdict(json.loads(json.dumps(A.todict()))).digest(), A.digest())

    def test_load(self):
        with open(self.path('run.json'), 'w') as F:
            F.write('{"io": {"out_dir": "x"}}')
        self.assertEqual(RunConfig.load(self.path('run.json')).io, IOConfig(out_dir='x'))
        with self.assertRaisesRegex(ConfigError, '--config'):
            RunConfig.load(self.path('missing.json'))


class TestOrderedMap(unittest.TestCase):
    def test_order(self):
        self.assertEqual(ordered_map(lambda x:x*x, range(50), workers=4), [x*x for x in range(50)])
        self.assertEqual(ordered_map(lambda x:x, [], workers=4), [])

    def test_threads(self):
        seen = set()
        def fn(x):
            seen.add(threading.current_thread().name)
            return x
        ordered_map(fn, range(20), workers=3, name='square')
        self.assertNotIn(threading.current_thread().name, seen)

    def test_error(self):
        def fn(x):
            if x in (7, 3):
                raise KeyError(x)
            return x
        with self.assertRaises(KeyError) as ctx:
            ordered_map(fn, range(10), workers=3)
        self.assertEqual(ctx.exception.args, (3,))

    def test_queue(self):
        # a failing job is logged and the workers carry on
        done = []
        def boom():
            raise RuntimeError('expected')
        with ThreadedWorkQueue(name='jobs', workers=2, daemon=True) as Q:
            Q.push_wait(boom)
            for i in range(10):
                Q.push_wait(partial(done.append, i))
            Q.join()
        self.assertEqual(sorted(done), list(range(10)))
        self.assertFalse(hasattr(Q, 'push'))


class TestFiles(TempDirTestCase):
    def test_atomic_write(self):
        atomic_write(self.path('sub', 'a.txt'), 'hello')
        atomic_write(self.path('sub', 'b.bin'), b'\x00\x01')
        with open(self.path('sub', 'a.txt'), 'r') as F:
            self.assertEqual(F.read(), 'hello')
        self.assertEqual(sorted(os.listdir(self.path('sub'))), ['a.txt', 'b.bin'])
        self.assertEqual(sha256_file(self.path('sub', 'b.bin')), hashlib.sha256(b'\x00\x01').hexdigest())

    def test_require(self):
        D = RunDir(self.tmpdir)
        with self.assertRaises(MissingArtifact) as ctx:
            D.require(D.checkpoint(1), 'train')
        self.assertEqual(ctx.exception.command, 'train')
        self.assertIn('run train first', str(ctx.exception))
        self.assertEqual(ctx.exception.exit_code, 3)

    def test_stage(self):
        D = RunDir(self.path('run'))
        D.makedirs()
        with Stage(D, 'label', 'a'*64) as S:
            atomic_write(D.path(D.LABELS), 'x\n')
            S.wrote(D.LABELS)
        M = Manifest.load(D)
        self.assertEqual(M.config_hash, 'a'*64)
        self.assertEqual(list(M.files), [D.LABELS])
        self.assertEqual(M.files[D.LABELS], sha256_file(D.path(D.LABELS)))
        self.assertIn('label', M.timings)

        # a failing stage leaves the manifest alone
        with self.assertRaises(RuntimeError):
            with Stage(D, 'train', 'a'*64) as S:
                S.wrote(D.LABELS)
                raise RuntimeError('boom')
        self.assertNotIn('train', Manifest.load(D).timings)

    def test_bad_manifest(self):
        D = RunDir(self.tmpdir)
        self.assertEqual(Manifest.load(D).files, {})
        with open(D.path(D.MANIFEST), 'w') as F:
            F.write('{"format": 99}')
        self.assertRaises(DataError, Manifest.load, D)
