# -*- coding: utf-8 -*-
"""
控制网络模块
Q(Θ, a)：5→128→128→9 全连接网络，Bellman 目标与 TD 损失
"""

from dataclasses import dataclass

import numpy as np

from constants import NUM_ACTIONS, THETA_DIM
from network import LayerSpec, Network
from reacher.arm import ALL_ACTIONS

CONTROL_NAME = "control"


def control_layers(hidden=128):
    return [LayerSpec.fc(THETA_DIM, hidden, "relu"),
            LayerSpec.fc(hidden, hidden, "relu"),
            LayerSpec.fc(hidden, NUM_ACTIONS, "linear")]


def build_control_net(seed=0, hidden=128, dtype=np.float32):
    return Network(control_layers(hidden), (THETA_DIM,), seed=seed, dtype=dtype)


def q_values(net, theta):
    """Θ（单个或批量）-> Q 值"""
    return net.predict(theta)


def greedy_action(q):
    """Q 值最大的动作，并列取最小编号"""
    return ALL_ACTIONS[int(np.argmax(np.asarray(q)))]


def bellman_target(r, next_q, gamma, terminal):
    """终止时为 r，否则 r + γ max(next_q)"""
    if terminal:
        return float(r)
    return float(r) + gamma * float(np.max(next_q))


def bellman_targets(rewards, next_q, gamma, terminals):
    """批量 Bellman 目标"""
    rewards = np.asarray(rewards, dtype=np.float64)
    bootstrap = gamma * np.max(np.asarray(next_q, dtype=np.float64), axis=1)
    return np.where(np.asarray(terminals, dtype=bool), rewards, rewards + bootstrap)


@dataclass
class TransitionBatch:
    """m 条 (Θ_t, a_t, r_t, Θ_{t+1}, terminal)"""
    thetas: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_thetas: np.ndarray
    terminals: np.ndarray

    @property
    def size(self):
        return len(self.actions)


@dataclass
class TDResult:
    loss: float
    grads: object
    bottleneck_grads: np.ndarray
    q_values: np.ndarray
    targets: np.ndarray


def td_terms(net, thetas, actions, targets):
    """
    在给定目标下计算 L_q = 1/(2m) Σ (Q(Θ_t,a_t) - target)² 及其梯度

    目标视为常数，梯度只经过 Q(Θ_t, a_t)
    """
    q_all, tape = net.forward(np.asarray(thetas))
    m = len(actions)
    rows = np.arange(m)
    diff = q_all[rows, actions].astype(np.float64) - targets
    loss = 0.5 * float(np.sum(diff * diff)) / m
    upstream = np.zeros_like(q_all)
    upstream[rows, actions] = diff / m
    grads, d_input = net.backward(tape, upstream)
    return TDResult(loss, grads, d_input, q_all, targets)


def td_loss_details(net, target_net, batch, gamma):
    next_q = target_net.predict(np.asarray(batch.next_thetas))
    targets = bellman_targets(batch.rewards, next_q, gamma, batch.terminals)
    return td_terms(net, batch.thetas, np.asarray(batch.actions, dtype=np.int64), targets)


def td_loss(net, target_net, batch, gamma):
    """
    L_q 与其梯度

    Returns:
        tuple: (L_q, 控制参数梯度 δ_Lq, 每个样本对 Θ_t 的瓶颈梯度 (m,5))
    """
    result = td_loss_details(net, target_net, batch, gamma)
    return result.loss, result.grads, result.bottleneck_grads
