#!/usr/bin/env python
"""Train the recurrent model and both severity baselines on one simulated cohort,
then check that the model beats the better baseline.

    python example/table_ordering.py --steps 12000

Exits non-zero unless mortality AUROC improves on both baselines by --margin
and the model wins at least --wins of the fourteen tasks.
"""

from __future__ import print_function

import logging
import sys

import numpy

from icupolicy.baselines import VARIANTS, BaselineSuite
from icupolicy.cohort import SimConfig, generate_cohort, split_cohort
from icupolicy.evaluation import auroc, UndefinedMetric
from icupolicy.features import build_vocabulary
from icupolicy.labeling import label_cohort
from icupolicy.model import ModelConfig, TrainConfig, Dataset, train, predict
from icupolicy.tasks import TASKS

def getargs():
    from argparse import ArgumentParser
    P = ArgumentParser()
    P.add_argument('-d','--debug', action='store_true', default=False)
    P.add_argument('-n', '--patients', type=int, default=6200)
    P.add_argument('--steps', type=int, default=12000)
    P.add_argument('--seed', type=int, default=0)
    P.add_argument('--threads', type=int, default=2)
    P.add_argument('--margin', type=float, default=0.03)
    P.add_argument('--wins', type=int, default=10)
    return P.parse_args()

args = getargs()

logging.basicConfig(level=logging.DEBUG if args.debug else logging.INFO)

records, _truth = generate_cohort(SimConfig(n_patients=args.patients, seed=args.seed), workers=args.threads)
table, _delays = label_cohort(records)
# 5000/600/600 at the default size
tr, va, te = split_cohort(records, (5000/6200., 600/6200., 600/6200.), args.seed)

vocab = build_vocabulary(tr)
train_set = Dataset.from_records(tr, table, vocab, workers=args.threads)
val_set = Dataset.from_records(va, table, vocab, workers=args.threads)
Ytr = table.select([R.patient_id for R in tr]).labels
Y = table.select([R.patient_id for R in te]).labels

mconf = ModelConfig(embedding_dim=64, hidden_size=64, num_layers=2)
tconf = TrainConfig(total_steps=args.steps, batch_size=64, base_lr=1e-3, eval_every=250,
                    seed=args.seed, threads=args.threads)
R = train(train_set, val_set, mconf, tconf, vocab_fingerprint=vocab.fingerprint())

scores = {'lstm': predict(R.checkpoint, te, vocab, workers=args.threads)}
for V in VARIANTS:
    scores[V] = BaselineSuite(V).fit(tr, Ytr, workers=args.threads).predict(te)

def score(P, j):
    try:
        return auroc(P[:,j], Y[:,j])
    except UndefinedMetric:
        return numpy.nan

names = ['lstm']+list(VARIANTS)
print(('%-20s'+' %8s'*len(names))%(('task',)+tuple(names)))
wins, mort = 0, None
for j, T in enumerate(TASKS):
    A = [score(scores[M], j) for M in names]
    print(('%-20s'+' %8.3f'*len(A))%((T,)+tuple(A)))
    base = numpy.nanmax(A[1:])
    if A[0]>base:
        wins += 1
    if T=='mortality':
        mort = A[0]-base

print('wins %d of %d, mortality margin %+.3f'%(wins, len(TASKS), mort))
ok = mort>=args.margin and wins>=args.wins
print('PASS' if ok else 'FAIL')
sys.exit(0 if ok else 1)
