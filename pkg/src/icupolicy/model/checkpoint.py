"""Checkpoint file format.

::

    8 bytes   magic b'ICUPCKPT'
    uint32    format version (little endian)
    uint32    header length in bytes
    header    UTF-8 JSON: config, step, vocab_fingerprint, meta,
              arrays: [{name, shape}, ...]
    arrays    in header order, little endian float32, C order
"""

import json
import logging
import struct
from collections import OrderedDict

import numpy

from ..errors import DataError
from ..util import atomic_write
from .network import ModelConfig, ModelCheckpoint

_log = logging.getLogger(__name__)

__all__ = [
    'MAGIC',
    'FORMAT_VERSION',
    'dumps',
    'loads',
    'save',
    'load',
]

MAGIC = b'ICUPCKPT'
FORMAT_VERSION = 1

_prefix = struct.Struct('<II')


def dumps(ckpt):
    header = OrderedDict([
        ('config', ckpt.config.todict()),
        ('step', ckpt.step),
        ('vocab_fingerprint', ckpt.vocab_fingerprint),
        ('meta', ckpt.meta),
        ('arrays', [OrderedDict([('name', K), ('shape', list(V.shape))]) for K, V in ckpt.items()]),
    ])
    raw = json.dumps(header, sort_keys=True, separators=(',', ':')).encode('utf-8')
    parts = [MAGIC, _prefix.pack(FORMAT_VERSION, len(raw)), raw]
    for _K, V in ckpt.items():
        parts.append(numpy.ascontiguousarray(V, dtype='<f4').tobytes())
    return b''.join(parts)


def loads(raw, dtype=numpy.float64):
    """Decode checkpoint bytes

    :raises DataError: for a malformed or truncated file
    """
    if raw[:len(MAGIC)]!=MAGIC:
        raise DataError('Not a checkpoint (bad magic)')
    off = len(MAGIC)
    if len(raw)<off+_prefix.size:
        raise DataError('Truncated checkpoint header')
    version, hlen = _prefix.unpack_from(raw, off)
    if version!=FORMAT_VERSION:
        raise DataError('Unsupported checkpoint version %d'%version)
    off += _prefix.size
    try:
        header = json.loads(raw[off:off+hlen].decode('utf-8'), object_pairs_hook=OrderedDict)
    except ValueError as e:
        raise DataError('Corrupt checkpoint header: %s'%e)
    off += hlen

    arrays = OrderedDict()
    for ent in header['arrays']:
        shape = tuple(ent['shape'])
        count = int(numpy.prod(shape))
        nbytes = 4*count
        if len(raw)<off+nbytes:
            raise DataError('Truncated checkpoint at %s'%ent['name'])
        arrays[ent['name']] = numpy.frombuffer(raw, dtype='<f4', count=count, offset=off).reshape(shape).astype(dtype)
        off += nbytes
    if off!=len(raw):
        raise DataError('%d trailing bytes in checkpoint'%(len(raw)-off))

    return ModelCheckpoint(ModelConfig(**header['config']), arrays,
                           step=header['step'],
                           vocab_fingerprint=header['vocab_fingerprint'],
                           meta=header['meta']).check_finite()


def save(ckpt, fname):
    atomic_write(fname, dumps(ckpt.check_finite()))
    _log.debug("Wrote checkpoint %s", fname)


def load(fname, dtype=numpy.float64):
    with open(fname, 'rb') as F:
        return loads(F.read(), dtype=dtype)
