"""Multitask recurrent network: parameters, gradients, optimisation and training.

>>> result = train(train_set, val_set, ModelConfig(), TrainConfig(seed=1))
>>> probs = predict(result.checkpoint, test_records, vocab)
"""

from .network import (ModelConfig, ModelCheckpoint, Masks, init_params, sample_masks,
                      forward, backward, multilabel_bce, param_shapes)
from .optim import lr_at, adam_step, AdamState
from .train import TrainConfig, Dataset, LossCurve, TrainResult, train, predict, evaluate_loss
from . import checkpoint

__all__ = [
    'ModelConfig',
    'ModelCheckpoint',
    'Masks',
    'TrainConfig',
    'Dataset',
    'LossCurve',
    'TrainResult',
    'init_params',
    'sample_masks',
    'forward',
    'backward',
    'multilabel_bce',
    'param_shapes',
    'lr_at',
    'adam_step',
    'AdamState',
    'train',
    'predict',
    'evaluate_loss',
    'checkpoint',
]
