
import logging
_log = logging.getLogger(__name__)

import hashlib
import os
import shutil
from functools import partial

try:
    from Queue import Queue, Empty
except ImportError:
    from queue import Queue, Empty
from threading import Thread

__all__ = [
    'WorkQueue',
    'ThreadedWorkQueue',
    'ordered_map',
    'atomic_write',
    'sha256_file',
]


class WorkQueue(object):

    """A threaded work queue.
    """
    _stopit = object()

    def __init__(self, maxsize=0):
        self._Q = Queue(maxsize=maxsize)

    def push_wait(self, callable):
        self._Q.put(callable)

    def interrupt(self):
        """Break one call to handle()

        eg. Call N times to break N threads.

        This call blocks if the queue is full.
        """
        self._Q.put(self._stopit)

    def handle(self):
        """Process queued work until interrupt() is called
        """
        while True:
            try:
                callable = None # ensure no lingering references to past work while blocking
                callable = self._Q.get(True, 1.0)
            except Empty:
                continue  # retry on timeout
            try:
                if callable is self._stopit:
                    break
                callable()
            except:
                _log.exception("Error from WorkQueue")
            finally:
                self._Q.task_done()

class ThreadedWorkQueue(WorkQueue):
    def __init__(self, name=None, workers=1, daemon=False, **kws):
        assert workers>=1, workers
        WorkQueue.__init__(self, **kws)
        self.name = name
        self._daemon = daemon
        self._T = [None]*workers

    def __enter__(self):
        return self.start()
    def __exit__(self, A,B,C):
        self.stop()

    def start(self):
        for n in range(len(self._T)):
            if self._T[n] is not None:
                continue
            T = self._T[n] = Thread(name='%s[%d]'%(self.name, n), target=self.handle)
            T.daemon = self._daemon
            T.start()

        return self # allow chaining

    def stop(self):
        [self.interrupt() for T in self._T if T is not None]
        [T.join()      for T in self._T if T is not None]
        self._T = [None]*len(self._T)

        return self # allow chaining

    def join(self):
        """Wait until all queued work has been handled
        """
        self._Q.join()
        return self


def _run_slot(fn, item, slots, errors, idx):
    try:
        slots[idx] = fn(item)
    except Exception as e:
        errors[idx] = e


def ordered_map(fn, items, workers=1, name='map'):
    """Apply fn to each item, returning results in input order.

    With workers>1 calls are made from a ThreadedWorkQueue.
    The first exception (in input order) is re-raised in the caller.

    :param callable fn: Called once per item
    :param items: A sequence
    :param int workers: Number of worker threads.  1 runs inline.
    :returns: list
    """
    items = list(items)
    if workers<=1 or len(items)<=1:
        return [fn(item) for item in items]

    slots = [None]*len(items)
    errors = [None]*len(items)
    with ThreadedWorkQueue(name=name, workers=min(workers, len(items)), daemon=True) as Q:
        for idx, item in enumerate(items):
            Q.push_wait(partial(_run_slot, fn, item, slots, errors, idx))
        Q.join()

    for err in errors:
        if err is not None:
            raise err
    return slots


def atomic_write(path, data):
    """Write bytes or text to path via a temporary file and rename.
    """
    mode = 'wb' if isinstance(data, bytes) else 'w'
    tmp = path+'.tmp'
    dname = os.path.dirname(path)
    if dname:
        try:
            os.makedirs(dname)
        except OSError:
            pass
    with open(tmp, mode) as F:
        F.write(data)
        F.flush()
    shutil.move(tmp, path)


def sha256_file(path, blocksize=1<<20):
    H = hashlib.sha256()
    with open(path, 'rb') as F:
        while True:
            blk = F.read(blocksize)
            if not blk:
                break
            H.update(blk)
    return H.hexdigest()
