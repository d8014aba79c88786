# -*- coding: utf-8 -*-
"""
平面到达仿真包
"""

from .arm import (ArmModel, SceneState, ReachAction, Transition, ALL_ACTIONS, DEFAULT_ARM, DEFAULT_VIEWPORT,
                  forward_kinematics, joint_positions, apply_action, reward, sample_task, guided_action,
                  coerce_action)
from .episode import run_episode, distance_trace

__all__ = ['ArmModel', 'SceneState', 'ReachAction', 'Transition', 'ALL_ACTIONS', 'DEFAULT_ARM',
           'DEFAULT_VIEWPORT', 'forward_kinematics', 'joint_positions', 'apply_action', 'reward',
           'sample_task', 'guided_action', 'coerce_action', 'run_episode', 'distance_trace']
