# -*- coding: utf-8 -*-
"""
端到端微调模块
控制网络只用 L_q 更新；感知网络用 δ_L = β·δ_Lp + (1-β)·δ_Lq^BN 更新，
其中 δ_Lq^BN 是瓶颈处的输入梯度经感知网络反传得到的参数梯度
"""

import logging
from dataclasses import dataclass, asdict, field

import numpy as np

from constants import DOMAIN_PSEUDO_REAL, DOMAIN_SIM, EPISODE_HORIZON
from control.qnet import bellman_targets, greedy_action, td_terms
from evaluation.harness import run_campaign, summarize
from finetune.policy import bottleneck_error, combined_policy, combined_q
from finetune.replay import ImageReplayBuffer
from network import GradSet, LinearSchedule
from perception.model import PerceptionBatch, as_batch_input, perceive_batch, perception_loss, sample_domain
from reacher.arm import ALL_ACTIONS, DEFAULT_ARM, apply_action, reward, sample_task
from utils.common_utils import derive_rng, write_csv
from utils.decorators import performance_monitor
from utils.errors import DivergenceError, NumericalError, UsageError
from vision.camera import DEFAULT_CAMERA, normalize_theta
from vision.renderer import ImageFrame, render

logger = logging.getLogger(__name__)

LOG_FIELDS = ["step", "L_p", "L_q", "beta", "eval_rbar", "eval_d_med_cm", "theta_mae"]
# 瓶颈误差监控所用的仿真帧数
THETA_CHECK_FRAMES = 256
TASK_STREAM = 5


@dataclass
class FinetuneConfig:
    """微调配置；beta=0 即只用 Q 学习的朴素微调"""
    beta: float = 0.8
    task_batch_size: int = 64
    perception_batch_size: int = 256
    real_fraction: float = 0.75
    lr_start: float = 0.002
    lr_end: float = 0.0005
    gamma: float = 0.9
    epsilon: float = 0.1
    steps: int = 5000
    warmup_steps: int = 1000
    replay_capacity: int = 2000
    target_sync_interval: int = 500
    horizon: int = EPISODE_HORIZON
    log_interval: int = 100
    eval_interval: int = 1000
    eval_trials: int = 50
    seed: int = 0

    @property
    def real_count(self):
        return self.perception_batch_size - self.task_batch_size

    def validate(self):
        errors = []
        if not 0.0 <= self.beta <= 1.0:
            errors.append("beta 必须在 [0,1] 内")
        if self.task_batch_size < 1 or self.perception_batch_size < self.task_batch_size:
            errors.append("perception_batch_size 必须不小于 task_batch_size ≥ 1")
        elif self.real_count != int(round(self.perception_batch_size * self.real_fraction)):
            errors.append("perception_batch_size - task_batch_size 必须等于 round(perception_batch_size × real_fraction)")
        if self.lr_start < 0 or self.lr_end < 0:
            errors.append("学习率不能为负")
        if not 0.0 <= self.gamma < 1.0:
            errors.append("gamma 必须在 [0,1) 内")
        if not 0.0 <= self.epsilon <= 1.0:
            errors.append("epsilon 必须在 [0,1] 内")
        if self.steps < 0:
            errors.append("steps 不能为负")
        if self.warmup_steps < self.task_batch_size:
            errors.append("warmup_steps 必须不小于 task_batch_size")
        if self.replay_capacity < self.task_batch_size:
            errors.append("replay_capacity 必须不小于 task_batch_size")
        if min(self.target_sync_interval, self.horizon, self.log_interval, self.eval_interval, self.eval_trials) < 1:
            errors.append("target_sync_interval/horizon/log_interval/eval_interval/eval_trials 必须 ≥ 1")
        return errors

    def to_dict(self):
        return asdict(self)


def mix_gradients(gp, gq_bn, beta):
    """
    δ_L = β·gp + (1-β)·gq_bn，逐元素，不做归一化

    Args:
        gp (GradSet): 感知损失梯度 δ_Lp
        gq_bn (GradSet): 经瓶颈传回的任务损失梯度 δ_Lq^BN
        beta (float): 权重，[0,1]

    Returns:
        GradSet: 混合梯度
    """
    if not 0.0 <= beta <= 1.0:
        raise UsageError(f"beta 必须在 [0,1] 内: {beta}")
    if not gp.compatible_with(gq_bn):
        raise UsageError("两组梯度形状不一致，无法混合")
    if beta == 1.0:
        return GradSet([w.copy() for w in gp.weights], [b.copy() for b in gp.biases])
    if beta == 0.0:
        return GradSet([w.copy() for w in gq_bn.weights], [b.copy() for b in gq_bn.biases])
    weights = [beta * a + (1.0 - beta) * b for a, b in zip(gp.weights, gq_bn.weights)]
    biases = [beta * a + (1.0 - beta) * b for a, b in zip(gp.biases, gq_bn.biases)]
    return GradSet(weights, biases)


@dataclass
class TaskGradients:
    loss: float
    control_grads: GradSet
    perception_grads: GradSet
    bottleneck_grads: np.ndarray
    thetas: np.ndarray
    targets: np.ndarray


def task_targets(policy, target_control, batch, gamma):
    """Θ_{t+1} 由当前感知网络给出（不求梯度），Q 值由目标控制网络给出"""
    next_thetas = perceive_batch(policy.perception, batch.next_frames)
    next_q = target_control.predict(next_thetas)
    return bellman_targets(batch.rewards, next_q, gamma, batch.terminals)


def task_gradients(policy, batch, targets):
    """固定目标下 L_q 对控制参数与感知参数的梯度"""
    thetas, tape = policy.perception.forward(as_batch_input(batch.frames))
    result = td_terms(policy.control, thetas, np.asarray(batch.actions, dtype=np.int64), targets)
    perception_grads, _ = policy.perception.backward(tape, result.bottleneck_grads)
    return TaskGradients(result.loss, result.grads, perception_grads, result.bottleneck_grads, thetas, targets)


def backprop_task_to_perception(policy, batch, gamma=0.9, target_control=None, targets=None):
    """
    任务损失经瓶颈反传到感知网络

    Args:
        policy (CombinedPolicy): 组合策略
        batch (TaskBatch): 带图像的转移
        gamma (float): 折扣
        target_control (Network): 目标控制网络，默认为当前控制网络
        targets: 直接给定 Bellman 目标（用于梯度检查）

    Returns:
        tuple: (δ_Lq 控制梯度, δ_Lq^BN 感知梯度, L_q)
    """
    if targets is None:
        targets = task_targets(policy, target_control or policy.control, batch, gamma)
    result = task_gradients(policy, batch, np.asarray(targets, dtype=np.float64))
    return result.control_grads, result.perception_grads, result.loss


@dataclass
class BatchAccounting:
    """单步消耗的批次"""
    step: int
    task_batch: object
    perception_batch: PerceptionBatch

    @property
    def task_size(self):
        return self.task_batch.size

    @property
    def perception_size(self):
        return self.perception_batch.size

    @property
    def composition(self):
        return dict(self.perception_batch.composition)


@dataclass
class FinetuneStepLog:
    step: int
    loss_p: float
    loss_q: float
    beta: float
    lr: float
    accounting: BatchAccounting = field(repr=False, default=None)


class FinetuneSession:
    """
    微调会话：持有组合策略、目标控制网络、图像回放与当前回合状态

    Args:
        policy (CombinedPolicy): 被原地更新的组合策略
        dataset (Dataset): 提供扰动域帧
        config (FinetuneConfig): 配置
        arm (ArmModel): 机械臂
        camera (Camera): 相机
        on_batch: 每步批次记录的回调
    """

    def __init__(self, policy, dataset, config, arm=DEFAULT_ARM, camera=DEFAULT_CAMERA, on_batch=None):
        problems = config.validate()
        if problems:
            raise UsageError("; ".join(problems))
        self.policy = policy
        self.dataset = dataset
        self.config = config
        self.arm = arm
        self.camera = camera
        self.on_batch = on_batch
        self.target_control = policy.control.copy()
        self.replay = ImageReplayBuffer(config.replay_capacity, camera.resolution)
        self.rng = np.random.default_rng(config.seed)
        self.schedule = LinearSchedule(config.lr_start, config.lr_end, max(config.steps, 1))
        self.updates = 0
        self.env_steps = 0
        self.episodes = 0
        self._state = None
        self._frame = None
        self._t = 0

    def _reset_episode(self):
        task_rng = derive_rng(self.config.seed, TASK_STREAM, self.episodes)
        self._state = sample_task(task_rng, self.arm, self.camera.bounds())
        self._frame = render(self._state, self.camera).pixels
        self._t = 0
        self.episodes += 1

    def behavior_action(self):
        """ε 随机，否则对组合 Q 值贪心"""
        if self.rng.random() < self.config.epsilon:
            return ALL_ACTIONS[int(self.rng.integers(len(ALL_ACTIONS)))]
        return greedy_action(combined_q(self.policy, ImageFrame(self._frame)))

    def collect(self, n):
        """用当前组合策略前进 n 个环境步，写入回放"""
        for _ in range(n):
            if self._state is None or self._t >= self.config.horizon:
                self._reset_episode()
            action = self.behavior_action()
            next_state = apply_action(self._state, action)
            next_frame = render(next_state, self.camera).pixels
            terminal = self._t == self.config.horizon - 1
            self.replay.add(self._frame, normalize_theta(self._state, self.camera), action.id,
                            reward(next_state), next_frame, terminal)
            self._state, self._frame = next_state, next_frame
            self._t += 1
            self.env_steps += 1

    def warmup(self):
        self.collect(max(self.config.warmup_steps - len(self.replay), 0))
        logger.info(f"微调预热完成，回放 {len(self.replay)} 条")

    def perception_batch(self, task_batch):
        """任务批次的仿真帧 + 数据集中的扰动域帧"""
        sim = PerceptionBatch(task_batch.frames, task_batch.thetas, {DOMAIN_SIM: task_batch.size})
        idx = sample_domain(self.dataset, DOMAIN_PSEUDO_REAL, self.config.real_count, self.rng)
        if len(idx) == 0:
            return sim
        real = PerceptionBatch(self.dataset.frames[idx], self.dataset.thetas[idx],
                               {DOMAIN_PSEUDO_REAL: len(idx)})
        return PerceptionBatch.concat(sim, real)

    def step(self):
        """
        一次微调更新

        Returns:
            FinetuneStepLog: 本步日志
        """
        config = self.config
        self.collect(1)
        task_batch = self.replay.sample(config.task_batch_size, self.rng)
        targets = task_targets(self.policy, self.target_control, task_batch, config.gamma)
        task = task_gradients(self.policy, task_batch, targets)
        p_batch = self.perception_batch(task_batch)
        loss_p, grads_p = perception_loss(self.policy.perception, p_batch)
        if not (np.isfinite(task.loss) and np.isfinite(loss_p)):
            raise DivergenceError("finetune", self.updates, None)
        mixed = mix_gradients(grads_p, task.perception_grads, config.beta)

        lr = self.schedule(self.updates)
        if lr > 0:
            try:
                self.policy.control.apply_gradients(task.control_grads, lr)
                self.policy.perception.apply_gradients(mixed, lr)
            except NumericalError as e:
                raise DivergenceError("finetune", self.updates, task.loss) from e
        self.updates += 1
        if self.updates % config.target_sync_interval == 0:
            self.target_control = self.policy.control.copy()

        accounting = BatchAccounting(self.updates, task_batch, p_batch)
        if self.on_batch is not None:
            self.on_batch(accounting)
        return FinetuneStepLog(self.updates, loss_p, task.loss, config.beta, lr, accounting)


def finetune_step(session):
    """
    采样 64 条转移；控制网络以 δ_Lq 更新；64 仿真帧 + 192 扰动域帧组成感知批次；
    感知网络以 mix_gradients(δ_Lp, δ_Lq^BN, β) 更新

    回放不足 task_batch_size 时拒绝（需先 warmup）
    """
    return session.step()


@dataclass
class FinetuneResult:
    policy: object
    log: list
    best_step: int
    best_rbar: float
    diverged: bool = False
    error: str = ""


def evaluate_policy(policy, trials, seed, arm, camera, horizon):
    reports = run_campaign(combined_policy(policy, camera), trials, seed, arm, camera.bounds(), horizon)
    return summarize(reports, camera)


@performance_monitor
def finetune(policy, dataset, config, arm=DEFAULT_ARM, camera=DEFAULT_CAMERA, log_path=None, eval_seed=None,
             on_batch=None):
    """
    端到端微调

    预热后执行 config.steps 次 finetune_step，每 eval_interval 步评估一次，
    返回评估 R̄ 最高的快照（含第 0 步的初始策略）；发散时中止并保留最佳快照

    Args:
        policy (CombinedPolicy): 独立训练得到的初始组合策略（不会被修改）
        dataset (Dataset): 含扰动域帧的数据集
        config (FinetuneConfig): 配置
        arm (ArmModel): 机械臂
        camera (Camera): 相机
        log_path (str): 日志 CSV (step, L_p, L_q, beta, eval_rbar, eval_d_med_cm, theta_mae)
        eval_seed (int): 评估快照种子
        on_batch: 每步批次记录的回调

    Returns:
        FinetuneResult: 最佳策略与日志
    """
    problems = config.validate()
    if problems:
        raise UsageError("; ".join(problems))
    if config.steps == 0:
        return FinetuneResult(policy.copy(), [], 0, float("nan"))
    eval_seed = config.seed + 1 if eval_seed is None else eval_seed
    session = FinetuneSession(policy.copy(), dataset, config, arm, camera, on_batch)
    reference = dataset.select(DOMAIN_SIM).subset(np.arange(min(dataset.count(DOMAIN_SIM), THETA_CHECK_FRAMES)))

    summary = evaluate_policy(session.policy, config.eval_trials, eval_seed, arm, camera, config.horizon)
    best, best_step, best_rbar = session.policy.copy(), 0, summary.rbar
    log = [{"step": 0, "L_p": None, "L_q": None, "beta": config.beta,
            "eval_rbar": summary.rbar, "eval_d_med_cm": summary.d_med_cm,
            "theta_mae": bottleneck_error(session.policy, reference.frames, reference.thetas)}]
    logger.info(f"微调开始 β={config.beta} 初始 R̄={summary.rbar:.3f} d_med={summary.d_med_cm:.2f}cm")

    session.warmup()
    window_p, window_q, diverged, error = [], [], False, ""
    for _ in range(config.steps):
        try:
            entry = session.step()
        except DivergenceError as e:
            logger.error(f"微调发散，保留第 {best_step} 步的最佳快照: {e}")
            diverged, error = True, str(e)
            break
        window_p.append(entry.loss_p)
        window_q.append(entry.loss_q)
        step = entry.step
        evaluate = step % config.eval_interval == 0 or step == config.steps
        if step % config.log_interval == 0 or evaluate:
            row = {"step": step, "L_p": float(np.mean(window_p)), "L_q": float(np.mean(window_q)),
                   "beta": config.beta, "eval_rbar": None, "eval_d_med_cm": None, "theta_mae": None}
            window_p, window_q = [], []
            if evaluate:
                summary = evaluate_policy(session.policy, config.eval_trials, eval_seed, arm, camera, config.horizon)
                row["eval_rbar"], row["eval_d_med_cm"] = summary.rbar, summary.d_med_cm
                row["theta_mae"] = bottleneck_error(session.policy, reference.frames, reference.thetas)
                if summary.rbar > best_rbar:
                    best, best_step, best_rbar = session.policy.copy(), step, summary.rbar
            log.append(row)
            logger.info(f"微调 step={step} L_p={row['L_p']:.5f} L_q={row['L_q']:.5f} R̄={row['eval_rbar']} "
                        f"Θ MAE={row['theta_mae']}")

    if log_path:
        write_csv(log_path, log, LOG_FIELDS)
    logger.info(f"微调结束，最佳快照 step={best_step} R̄={best_rbar:.3f}")
    return FinetuneResult(best, log, best_step, best_rbar, diverged, error)
