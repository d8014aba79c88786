# -*- coding: utf-8 -*-
"""
控制模块测试：Bellman 目标、TD 损失梯度、经验回放与 Q 学习
"""

import numpy as np
import pytest

from control import (QLearningConfig, ReplayBuffer, TransitionBatch, behavior_action, bellman_target,
                     bellman_targets, build_control_net, cr_policy, greedy_action, q_agreement, td_loss,
                     td_terms, train_control)
from evaluation import guided_policy, random_policy, run_campaign, summarize
from network import ParamSet, finite_diff_grad, gradient_check
from reacher import ALL_ACTIONS, guided_action, sample_task
from utils.common_utils import derive_rng
from utils.errors import DataError, UsageError


def random_batch(rng, m=8):
    return TransitionBatch(rng.random((m, 5)), rng.integers(0, 9, size=m), (rng.random(m) < 0.3).astype(float),
                           rng.random((m, 5)), rng.random(m) < 0.2)


class TestBellman:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(10000):
            r = float(rng.integers(0, 2))
            q = rng.normal(size=9)
            gamma = float(rng.uniform(0, 0.99))
            terminal = bool(rng.random() < 0.2)
            best = q[0]
            for value in q[1:]:
                if value > best:
                    best = value
            expected = r if terminal else r + gamma * best
            assert bellman_target(r, q, gamma, terminal) == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_examples(self):
        assert bellman_target(1.0, np.zeros(9), 0.9, False) == 1.0
        assert bellman_target(0.0, np.arange(9.0), 0.9, False) == pytest.approx(7.2)
        assert bellman_target(1.0, np.arange(9.0), 0.9, True) == 1.0

    def test_vectorized_agrees(self, rng):
        rewards, next_q = rng.random(20), rng.normal(size=(20, 9))
        terminals = rng.random(20) < 0.3
        expected = [bellman_target(r, q, 0.9, t) for r, q, t in zip(rewards, next_q, terminals)]
        np.testing.assert_allclose(bellman_targets(rewards, next_q, 0.9, terminals), expected, rtol=1e-12)

    def test_greedy_ties_take_lowest_id(self):
        assert greedy_action(np.array([0, 3, 3, 1, 0, 0, 0, 0, 0])).id == 1
        assert greedy_action(np.zeros(9)).id == 0


class TestTdLoss:
    def test_gradient_matches_finite_differences(self, tiny_control, rng):
        batch = random_batch(rng)
        target_net = tiny_control.copy()
        loss, grads, _ = td_loss(tiny_control, target_net, batch, 0.9)
        targets = bellman_targets(batch.rewards, target_net.predict(batch.next_thetas), 0.9, batch.terminals)
        rows = np.arange(batch.size)

        def loss_fn(out):
            return 0.5 * float(np.sum((out[rows, batch.actions] - targets) ** 2)) / batch.size

        assert loss == pytest.approx(loss_fn(tiny_control.predict(batch.thetas)), rel=1e-12)
        numeric = finite_diff_grad(tiny_control, batch.thetas, loss_fn)
        assert gradient_check(grads, numeric, 1e-4) >= 0.99

    def test_bottleneck_gradient(self, tiny_control, rng):
        batch = random_batch(rng, 4)
        targets = rng.random(4)
        result = td_terms(tiny_control, batch.thetas, batch.actions, targets)
        rows = np.arange(4)

        def loss_at(thetas):
            q = tiny_control.predict(thetas)
            return 0.5 * float(np.sum((q[rows, batch.actions] - targets) ** 2)) / 4

        h = 1e-6
        for j in range(4):
            for k in range(5):
                up, down = batch.thetas.copy(), batch.thetas.copy()
                up[j, k] += h
                down[j, k] -= h
                numeric = (loss_at(up) - loss_at(down)) / (2 * h)
                assert result.bottleneck_grads[j, k] == pytest.approx(numeric, rel=1e-5, abs=1e-9)

    def test_zero_weights_zero_bottleneck_gradient(self, rng):
        net = build_control_net(seed=0, dtype=np.float64)
        net.params = ParamSet.zeros_like(net.params)
        result = td_terms(net, rng.random((4, 5)), np.array([0, 1, 2, 3]), np.ones(4))
        assert np.all(result.bottleneck_grads == 0)


class TestReplay:
    def test_ring_overwrites_oldest(self):
        buffer = ReplayBuffer(3)
        for i in range(5):
            buffer.add(np.full(5, i), i, 0.0, np.full(5, i + 1), False)
        assert len(buffer) == 3
        assert sorted(buffer.actions.tolist()) == [2, 3, 4]

    def test_sample_shapes(self, rng):
        buffer = ReplayBuffer(10)
        for i in range(4):
            buffer.add(np.full(5, 0.1 * i), i, 1.0, np.full(5, 0.2), i == 3)
        batch = buffer.sample(16, rng)
        assert batch.thetas.shape == (16, 5) and batch.size == 16
        assert set(batch.actions.tolist()) <= {0, 1, 2, 3}

    def test_empty(self, rng):
        with pytest.raises(DataError):
            ReplayBuffer(4).sample(2, rng)

    def test_invalid_capacity(self):
        with pytest.raises(UsageError):
            ReplayBuffer(0)

    def test_sampling_is_uniform(self):
        buffer = ReplayBuffer(100)
        for i in range(100):
            buffer.add(np.zeros(5), i % 9, 0.0, np.zeros(5), False)
        n = 100000
        counts = np.bincount(buffer.sample_indices(n, np.random.default_rng(3)), minlength=100)
        expected = n / 100
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        # 99 个自由度，p = 0.001 的临界值
        assert chi2 < 148.2

    def test_sampling_ignores_unfilled_slots(self, rng):
        buffer = ReplayBuffer(50)
        for _ in range(7):
            buffer.add(np.zeros(5), 0, 0.0, np.zeros(5), False)
        assert buffer.sample_indices(1000, rng).max() < 7


class TestBehavior:
    def test_guided_without_exploration(self, arm, camera, rng):
        net = build_control_net(seed=0)
        for i in range(20):
            state = sample_task(derive_rng(2, i), arm)
            assert behavior_action(net, state, 0.0, rng, True, camera) == guided_action(state)

    def test_greedy_without_exploration(self, arm, camera, rng):
        net = build_control_net(seed=0)
        state = sample_task(derive_rng(2, 0), arm)
        assert behavior_action(net, state, 0.0, rng, False, camera) == cr_policy(net, camera)(state)

    def test_full_exploration_covers_actions(self, arm, camera):
        net = build_control_net(seed=0)
        state = sample_task(derive_rng(2, 0), arm)
        rng = np.random.default_rng(0)
        seen = {behavior_action(net, state, 1.0, rng, True, camera).id for _ in range(300)}
        assert seen == set(range(len(ALL_ACTIONS)))

    def test_full_exploration_is_uniform(self, arm, camera):
        net = build_control_net(seed=0)
        state = sample_task(derive_rng(2, 0), arm)
        rng = np.random.default_rng(7)
        n = 10000
        counts = np.bincount([behavior_action(net, state, 1.0, rng, False, camera).id for _ in range(n)],
                             minlength=9)
        p = 1.0 / 9
        sigma = np.sqrt(n * p * (1.0 - p))
        assert np.all(np.abs(counts - n * p) <= 3.0 * sigma)

    def test_q_agreement_range(self, arm, camera):
        states = [sample_task(derive_rng(3, i), arm) for i in range(30)]
        value = q_agreement(build_control_net(seed=0), states, camera)
        assert 0.0 <= value <= 1.0
        assert q_agreement(build_control_net(seed=0), [], camera) == 0.0


class TestTraining:
    def small_config(self, **overrides):
        values = dict(total_steps=300, batch_size=16, replay_capacity=200, target_sync_interval=50,
                      horizon=20, log_interval=100, eval_interval=300, eval_trials=3, hidden=16, seed=5)
        values.update(overrides)
        return QLearningConfig(**values)

    def test_log_rows_and_csv(self, arm, camera, tmp_path):
        path = tmp_path / "control_log.csv"
        net, log = train_control(self.small_config(), arm, camera, log_path=path)
        assert [row["env_step"] for row in log] == [100, 200, 300]
        assert log[-1]["rbar_eval"] is not None and 0.0 <= log[-1]["rbar_eval"] <= 1.0
        assert log[0]["rbar_eval"] is None
        assert all(np.isfinite(row["loss"]) for row in log)
        assert path.read_text().splitlines()[0] == "env_step,loss,mean_max_q,rbar_eval"

    def test_deterministic(self, arm, camera):
        a, _ = train_control(self.small_config(), arm, camera)
        b, _ = train_control(self.small_config(), arm, camera)
        assert np.array_equal(a.params.flatten(), b.params.flatten())

    def test_invalid_config(self, arm, camera):
        with pytest.raises(UsageError) as excinfo:
            train_control(self.small_config(gamma=1.5, epsilon=-0.1), arm, camera)
        assert "gamma" in str(excinfo.value) and "epsilon" in str(excinfo.value)


@pytest.fixture(scope="module")
def trained_control():
    """默认配置（200k 环境步）训练的单个控制网络"""
    net, _ = train_control(QLearningConfig(seed=0))
    return net


@pytest.mark.slow
class TestTrainedControl:
    def test_beats_random_policy(self, trained_control):
        cr = summarize(run_campaign(cr_policy(trained_control), 400, seed=0))
        uniform = summarize(run_campaign(random_policy(0), 400, seed=0))
        assert cr.rbar > uniform.rbar

    def test_close_to_guided_oracle(self, trained_control):
        cr = summarize(run_campaign(cr_policy(trained_control), 400, seed=0))
        oracle = summarize(run_campaign(guided_policy, 400, seed=0))
        assert cr.rbar >= oracle.rbar - 0.1

    def test_agrees_with_guided_action(self, trained_control, arm):
        states = [sample_task(derive_rng(11, i), arm) for i in range(1000)]
        assert q_agreement(trained_control, states) >= 0.8
