"""Joint intervention-policy and adverse-event risk modelling for ICU stays.
"""
import logging

from .tasks import TASKS, INTERVENTIONS, NUM_TASKS

_log = logging.getLogger(__name__)

__all__ = (
    'TASKS',
    'INTERVENTIONS',
    'NUM_TASKS',
    'version',
)

version = '0.3.0'
