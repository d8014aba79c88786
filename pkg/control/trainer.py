# -*- coding: utf-8 -*-
"""
控制训练模块
以真值 Θ 为状态的 Q 学习：经验回放、目标网络，
前半程用运动学引导动作探索，后半程贪心，全程 ε 随机
"""

import logging
from dataclasses import dataclass, asdict

import numpy as np

from constants import EPISODE_HORIZON
from control.qnet import build_control_net, greedy_action, q_values, td_loss_details
from control.replay import ReplayBuffer
from evaluation.harness import run_campaign, summarize
from network import LinearSchedule
from reacher.arm import ALL_ACTIONS, DEFAULT_ARM, apply_action, guided_action, reward, sample_task
from utils.common_utils import derive_rng, write_csv
from utils.decorators import performance_monitor
from utils.errors import DivergenceError, UsageError
from vision.camera import DEFAULT_CAMERA, normalize_theta

logger = logging.getLogger(__name__)

LOG_FIELDS = ["env_step", "loss", "mean_max_q", "rbar_eval"]
TASK_STREAM = 3


@dataclass
class QLearningConfig:
    """Q 学习配置"""
    gamma: float = 0.9
    lr_start: float = 0.01
    lr_end: float = 0.001
    batch_size: int = 64
    epsilon: float = 0.1
    target_sync_interval: int = 1000
    total_steps: int = 200000
    replay_capacity: int = 200000
    guided_fraction: float = 0.5
    horizon: int = EPISODE_HORIZON
    hidden: int = 128
    log_interval: int = 5000
    eval_interval: int = 50000
    eval_trials: int = 50
    candidates: int = 3
    seed: int = 0

    def validate(self):
        errors = []
        if not 0.0 <= self.gamma < 1.0:
            errors.append("gamma 必须在 [0,1) 内")
        if not 0.0 <= self.epsilon <= 1.0:
            errors.append("epsilon 必须在 [0,1] 内")
        if self.lr_start <= 0 or self.lr_end <= 0:
            errors.append("学习率必须为正")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            errors.append("replay_capacity 必须不小于 batch_size ≥ 1")
        if self.target_sync_interval < 1:
            errors.append("target_sync_interval 必须 ≥ 1")
        if self.total_steps < 0:
            errors.append("total_steps 不能为负")
        if not 0.0 <= self.guided_fraction <= 1.0:
            errors.append("guided_fraction 必须在 [0,1] 内")
        if self.horizon < 1 or self.log_interval < 1 or self.eval_interval < 1 or self.eval_trials < 1:
            errors.append("horizon/log_interval/eval_interval/eval_trials 必须 ≥ 1")
        if self.candidates < 1:
            errors.append("candidates 必须 ≥ 1")
        return errors

    def to_dict(self):
        return asdict(self)


def behavior_action(net, state, epsilon, rng, guided, camera=DEFAULT_CAMERA):
    """
    行为策略：概率 ε 均匀随机；否则引导阶段用 guided_action，之后对 Q 值贪心

    Args:
        net (Network): 控制网络
        state (SceneState): 当前状态
        epsilon (float): 随机动作概率
        rng (numpy.random.Generator): 随机数生成器
        guided (bool): 是否处于引导阶段
        camera (Camera): 用于 Θ 归一化

    Returns:
        ReachAction: 动作
    """
    if rng.random() < epsilon:
        return ALL_ACTIONS[int(rng.integers(len(ALL_ACTIONS)))]
    if guided:
        return guided_action(state)
    return greedy_action(q_values(net, normalize_theta(state, camera)))


def cr_policy(net, camera=DEFAULT_CAMERA):
    """以真值 Θ 为输入的贪心策略"""
    def policy(state):
        return greedy_action(q_values(net, normalize_theta(state, camera)))
    return policy


def q_agreement(net, states, camera=DEFAULT_CAMERA):
    """贪心动作与 guided_action 一致的比例"""
    if not states:
        return 0.0
    thetas = np.stack([normalize_theta(s, camera) for s in states])
    greedy = np.argmax(q_values(net, thetas), axis=1)
    return float(np.mean([int(g) == guided_action(s).id for g, s in zip(greedy, states)]))


@performance_monitor
def train_control(config, arm=DEFAULT_ARM, camera=DEFAULT_CAMERA, net=None, log_path=None, eval_seed=None):
    """
    训练控制网络

    Args:
        config (QLearningConfig): 配置
        arm (ArmModel): 机械臂
        camera (Camera): 相机（视野与 Θ 归一化）
        net (Network): 初始网络；为 None 时按 config.seed 初始化
        log_path (str): 训练日志 CSV (env_step, loss, mean_max_q, rbar_eval)
        eval_seed (int): 评估快照使用的种子

    Returns:
        tuple: (训练后的网络, 日志行列表)
    """
    problems = config.validate()
    if problems:
        raise UsageError("; ".join(problems))
    if net is None:
        net = build_control_net(config.seed, config.hidden)
    target_net = net.copy()
    rng = np.random.default_rng(config.seed)
    schedule = LinearSchedule(config.lr_start, config.lr_end, config.total_steps)
    buffer = ReplayBuffer(config.replay_capacity)
    guided_steps = int(config.total_steps * config.guided_fraction)
    eval_seed = config.seed + 1 if eval_seed is None else eval_seed

    log, env_step, updates, episode = [], 0, 0, 0
    window_loss, window_q, last_loss = [], [], None
    while env_step < config.total_steps:
        state = sample_task(derive_rng(config.seed, TASK_STREAM, episode), arm, camera.bounds())
        theta = normalize_theta(state, camera)
        episode += 1
        for t in range(config.horizon):
            if env_step >= config.total_steps:
                break
            action = behavior_action(net, state, config.epsilon, rng, env_step < guided_steps, camera)
            next_state = apply_action(state, action)
            next_theta = normalize_theta(next_state, camera)
            buffer.add(theta, action.id, reward(next_state), next_theta, t == config.horizon - 1)
            state, theta = next_state, next_theta
            env_step += 1

            if len(buffer) >= config.batch_size:
                result = td_loss_details(net, target_net, buffer.sample(config.batch_size, rng), config.gamma)
                if not np.isfinite(result.loss) or not result.grads.is_finite():
                    raise DivergenceError("control", env_step, last_loss)
                net.apply_gradients(result.grads, schedule(updates))
                updates += 1
                last_loss = result.loss
                window_loss.append(result.loss)
                window_q.append(float(np.mean(np.max(result.q_values, axis=1))))
                if updates % config.target_sync_interval == 0:
                    target_net = net.copy()

            if env_step % config.log_interval == 0 or env_step == config.total_steps:
                row = {"env_step": env_step,
                       "loss": float(np.mean(window_loss)) if window_loss else None,
                       "mean_max_q": float(np.mean(window_q)) if window_q else None,
                       "rbar_eval": None}
                if env_step % config.eval_interval == 0 or env_step == config.total_steps:
                    reports = run_campaign(cr_policy(net, camera), config.eval_trials, eval_seed, arm,
                                           camera.bounds(), config.horizon)
                    row["rbar_eval"] = summarize(reports, camera).rbar
                log.append(row)
                window_loss, window_q = [], []
                logger.info(f"控制训练 env_step={env_step} L_q={row['loss']} "
                            f"mean_max_q={row['mean_max_q']} R̄={row['rbar_eval']}")
    if log_path:
        write_csv(log_path, log, LOG_FIELDS)
    return net, log


@performance_monitor
def select_best_control(config, arm=DEFAULT_ARM, camera=DEFAULT_CAMERA, eval_trials=400, eval_seed=None,
                        log_path=None):
    """
    用 config.candidates 个种子分别训练，按 R̄ 选出最佳网络（并列取先训练者）

    Returns:
        tuple: (最佳网络, 最佳种子, {种子: R̄})
    """
    eval_seed = config.seed + 1 if eval_seed is None else eval_seed
    best_net, best_seed, scores = None, None, {}
    for k in range(config.candidates):
        candidate = QLearningConfig(**{**config.to_dict(), "seed": config.seed + k})
        path = None
        if log_path:
            path = log_path if config.candidates == 1 else str(log_path).replace(".csv", f"_seed{candidate.seed}.csv")
        net, _ = train_control(candidate, arm, camera, log_path=path, eval_seed=eval_seed)
        reports = run_campaign(cr_policy(net, camera), eval_trials, eval_seed, arm, camera.bounds(), config.horizon)
        scores[candidate.seed] = summarize(reports, camera).rbar
        logger.info(f"控制候选 seed={candidate.seed} R̄={scores[candidate.seed]:.3f}")
        if best_net is None or scores[candidate.seed] > scores[best_seed]:
            best_net, best_seed = net, candidate.seed
    return best_net, best_seed, scores
