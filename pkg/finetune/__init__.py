# -*- coding: utf-8 -*-
"""
端到端微调包
"""

from .policy import CombinedPolicy, combined_q, combined_policy, bottleneck_error
from .replay import ImageReplayBuffer, TaskBatch
from .trainer import (FinetuneConfig, FinetuneSession, FinetuneResult, FinetuneStepLog, BatchAccounting,
                      mix_gradients, backprop_task_to_perception, task_targets, task_gradients,
                      finetune_step, finetune)

__all__ = ['CombinedPolicy', 'combined_q', 'combined_policy', 'bottleneck_error',
           'ImageReplayBuffer', 'TaskBatch', 'FinetuneConfig', 'FinetuneSession', 'FinetuneResult',
           'FinetuneStepLog', 'BatchAccounting', 'mix_gradients', 'backprop_task_to_perception',
           'task_targets', 'task_gradients', 'finetune_step', 'finetune']
