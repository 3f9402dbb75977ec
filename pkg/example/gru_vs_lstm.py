#!/usr/bin/env python
"""Train an LSTM and a GRU on the same simulated cohort and print test AUROC.

    python example/gru_vs_lstm.py -n 1000 --steps 500
"""

from __future__ import print_function

import logging

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
    P.add_argument('-n', '--patients', type=int, default=1000)
    P.add_argument('--steps', type=int, default=500)
    P.add_argument('--seed', type=int, default=0)
    return P.parse_args()

args = getargs()

logging.basicConfig(level=logging.DEBUG if args.debug else logging.INFO)

records, _truth = generate_cohort(SimConfig(n_patients=args.patients, seed=args.seed))
table, _delays = label_cohort(records)
tr, va, te = split_cohort(records, (0.8, 0.1, 0.1), args.seed)

vocab = build_vocabulary(tr)
train_set = Dataset.from_records(tr, table, vocab)
val_set = Dataset.from_records(va, table, vocab)
Y = table.select([R.patient_id for R in te]).labels

tconf = TrainConfig(total_steps=args.steps, batch_size=64, base_lr=1e-3, eval_every=50, seed=args.seed)
results = {}
for cell in ('LSTM', 'GRU'):
    mconf = ModelConfig(cell_type=cell, embedding_dim=64, hidden_size=64, num_layers=2)
    R = train(train_set, val_set, mconf, tconf, vocab_fingerprint=vocab.fingerprint())
    results[cell] = predict(R.checkpoint, te, vocab)

def fmt(P, j):
    try:
        return '%.3f'%auroc(P[:,j], Y[:,j])
    except UndefinedMetric:
        return 'n/a'

print('%-20s %8s %8s'%('task', 'LSTM', 'GRU'))
for j, T in enumerate(TASKS):
    print('%-20s %8s %8s'%(T, fmt(results['LSTM'], j), fmt(results['GRU'], j)))
