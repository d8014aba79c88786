# -*- coding: utf-8 -*-
"""
控制模块包
"""

from .qnet import (CONTROL_NAME, TransitionBatch, TDResult, control_layers, build_control_net, q_values,
                   greedy_action, bellman_target, bellman_targets, td_terms, td_loss, td_loss_details)
from .replay import ReplayBuffer
from .trainer import (QLearningConfig, behavior_action, cr_policy, q_agreement, train_control,
                      select_best_control)

__all__ = ['CONTROL_NAME', 'TransitionBatch', 'TDResult', 'control_layers', 'build_control_net', 'q_values',
           'greedy_action', 'bellman_target', 'bellman_targets', 'td_terms', 'td_loss', 'td_loss_details',
           'ReplayBuffer', 'QLearningConfig', 'behavior_action', 'cr_policy', 'q_agreement', 'train_control',
           'select_best_control']
