# -*- coding: utf-8 -*-
"""
端到端微调测试：梯度混合、瓶颈反传、批次组成与微调循环
"""

import numpy as np
import pytest

from constants import DOMAIN_PSEUDO_REAL, DOMAIN_SIM
from control import build_control_net, q_values
from finetune import (CombinedPolicy, FinetuneConfig, FinetuneSession, TaskBatch, backprop_task_to_perception,
                      bottleneck_error, combined_policy, combined_q, finetune, finetune_step, mix_gradients,
                      task_gradients)
from network import GradSet, LayerSpec, Network, ParamSet, finite_diff_grad, gradient_check, sgd_step
from perception import PerceptionBatch, as_batch_input, build_perception_net, perceive, perception_loss
from reacher import sample_task
from utils.common_utils import derive_rng
from utils.errors import DataError, NetworkConfigError, UsageError
from vision import normalize_theta, render


def small_config(**overrides):
    values = dict(task_batch_size=4, perception_batch_size=16, real_fraction=0.75, lr_start=0.01, lr_end=0.01,
                  steps=4, warmup_steps=4, replay_capacity=50, target_sync_interval=2, horizon=10,
                  log_interval=1, eval_interval=2, eval_trials=2, seed=9)
    values.update(overrides)
    return FinetuneConfig(**values)


def full_policy(seed=0):
    return CombinedPolicy(build_perception_net(seed=seed), build_control_net(seed=seed + 1, hidden=16))


def tiny_batch(rng, m=5):
    return TaskBatch(np.arange(m), rng.random((m, 8, 8)), rng.random((m, 8, 8)), rng.random((m, 5)),
                     rng.integers(0, 9, size=m), (rng.random(m) < 0.5).astype(float), rng.random(m) < 0.2)


def random_gradset(rng, template):
    return GradSet([rng.normal(size=w.shape) for w in template.weights],
                   [rng.normal(size=b.shape) for b in template.biases])


class TestMixGradients:
    @pytest.mark.parametrize("beta", [0.0, 0.25, 0.8, 1.0])
    def test_affine_identity(self, beta, tiny_control):
        rng = np.random.default_rng(int(beta * 100))
        for _ in range(1000):
            gp = random_gradset(rng, tiny_control.params)
            gq = random_gradset(rng, tiny_control.params)
            mixed = mix_gradients(gp, gq, beta)
            if beta == 1.0:
                assert np.array_equal(mixed.flatten(), gp.flatten())
            elif beta == 0.0:
                assert np.array_equal(mixed.flatten(), gq.flatten())
            else:
                for m, a, b in zip(mixed.arrays(), gp.arrays(), gq.arrays()):
                    assert np.array_equal(m, beta * a + (1.0 - beta) * b)

    def test_endpoints_are_copies(self, tiny_control, rng):
        gp = random_gradset(rng, tiny_control.params)
        gq = random_gradset(rng, tiny_control.params)
        mixed = mix_gradients(gp, gq, 1.0)
        mixed.weights[0][0, 0] += 1.0
        assert mixed.weights[0][0, 0] != gp.weights[0][0, 0]

    def test_negative_zero_preserved_at_endpoints(self):
        gp = GradSet([np.array([[-0.0, 1.0]])], [np.array([0.0])])
        gq = GradSet([np.array([[0.0, -2.0]])], [np.array([-0.0])])
        assert np.signbit(mix_gradients(gp, gq, 1.0).weights[0][0, 0])
        assert np.signbit(mix_gradients(gp, gq, 0.0).biases[0][0])

    def test_example(self):
        gp = GradSet([np.array([[1.0, 0.0]])], [np.array([0.0])])
        gq = GradSet([np.array([[0.0, 1.0]])], [np.array([0.0])])
        np.testing.assert_allclose(mix_gradients(gp, gq, 0.8).weights[0], [[0.8, 0.2]])

    def test_shape_mismatch(self, tiny_control, tiny_perception):
        with pytest.raises(UsageError):
            mix_gradients(GradSet.zeros_like(tiny_control.params), GradSet.zeros_like(tiny_perception.params), 0.5)

    def test_beta_out_of_range(self, tiny_control):
        g = GradSet.zeros_like(tiny_control.params)
        with pytest.raises(UsageError):
            mix_gradients(g, g, 1.5)


class TestCombinedPolicy:
    def test_combined_q_is_composition(self, arm, camera):
        policy = full_policy()
        frame = render(sample_task(derive_rng(1), arm), camera)
        expected = q_values(policy.control, perceive(policy.perception, frame))
        assert np.array_equal(combined_q(policy, frame), expected)
        assert combined_q(policy, frame).shape == (9,)

    def test_zero_control_gives_zero_q(self, arm, camera):
        policy = full_policy()
        policy.control.params = ParamSet.zeros_like(policy.control.params)
        for i in range(3):
            frame = render(sample_task(derive_rng(i), arm), camera)
            assert np.all(combined_q(policy, frame) == 0)

    def test_bottleneck_width_checked(self, tiny_perception):
        wide = build_control_net(seed=0)
        wrong = Network([LayerSpec.fc(6, 9)], (6,))
        with pytest.raises(NetworkConfigError):
            CombinedPolicy(tiny_perception, wrong)
        CombinedPolicy(tiny_perception, wide)

    def test_greedy_policy_returns_actions(self, arm, camera):
        act = combined_policy(full_policy(), camera)
        assert 0 <= act(sample_task(derive_rng(0), arm)).id < 9

    def test_q_gap_shrinks_with_bottleneck_error(self, arm, camera):
        control = Network([LayerSpec.fc(5, 9, "linear")], (5,), seed=3, dtype=np.float64)
        for i in range(3):
            scene = sample_task(derive_rng(40, i), arm)
            frame = render(scene, camera)
            theta = normalize_theta(scene, camera).astype(np.float64)
            offset = 0.04 * np.sign(0.5 - theta)
            errors, gaps = [], []
            for scale in (1.0, 0.5, 0.25, 0.1, 0.0):
                perception = build_perception_net(seed=0, dtype=np.float64)
                weights = [w.copy() for w in perception.params.weights]
                biases = [b.copy() for b in perception.params.biases]
                weights[-1][:] = 0.0
                estimate = theta + scale * offset
                biases[-1] = np.log(estimate / (1.0 - estimate))
                perception.params = ParamSet(weights, biases)
                policy = CombinedPolicy(perception, control)
                errors.append(bottleneck_error(policy, frame.pixels[None], theta[None]))
                gaps.append(float(np.max(np.abs(combined_q(policy, frame) - q_values(control, theta)))))
            assert all(a > b for a, b in zip(errors, errors[1:]))
            assert all(a > b for a, b in zip(gaps, gaps[1:]))
            assert gaps[-1] < 1e-9


class TestTaskBackprop:
    def test_zero_control_gives_zero_perception_gradient(self, tiny_perception, tiny_control, rng):
        tiny_control.params = ParamSet.zeros_like(tiny_control.params)
        policy = CombinedPolicy(tiny_perception, tiny_control)
        _, perception_grads, _ = backprop_task_to_perception(policy, tiny_batch(rng), 0.9)
        assert perception_grads.max_abs() == 0.0

    def test_doubling_bottleneck_gradient_doubles_result(self, tiny_perception, tiny_control, rng):
        policy = CombinedPolicy(tiny_perception, tiny_control)
        batch = tiny_batch(rng)
        result = task_gradients(policy, batch, rng.random(batch.size))
        _, tape = tiny_perception.forward(as_batch_input(batch.frames))
        doubled, _ = tiny_perception.backward(tape, 2.0 * result.bottleneck_grads)
        np.testing.assert_allclose(doubled.flatten(), 2.0 * result.perception_grads.flatten(), rtol=1e-12)

    def test_task_gradient_matches_finite_differences(self, tiny_perception, tiny_control, rng):
        policy = CombinedPolicy(tiny_perception, tiny_control)
        batch = tiny_batch(rng)
        targets = rng.random(batch.size)
        control_grads, perception_grads, loss = backprop_task_to_perception(policy, batch, targets=targets)
        rows = np.arange(batch.size)

        def task_loss(thetas):
            q = tiny_control.predict(thetas)
            return 0.5 * float(np.sum((q[rows, batch.actions] - targets) ** 2)) / batch.size

        assert loss == pytest.approx(task_loss(tiny_perception.predict(as_batch_input(batch.frames))), rel=1e-12)
        numeric = finite_diff_grad(tiny_perception, as_batch_input(batch.frames), task_loss)
        assert gradient_check(perception_grads, numeric, 1e-4) >= 0.99
        assert control_grads.compatible_with(GradSet.zeros_like(tiny_control.params))

    @pytest.mark.parametrize("beta", [0.0, 0.3, 0.8, 1.0])
    def test_end_to_end_mixed_gradient(self, tiny_perception, tiny_control, rng, beta):
        policy = CombinedPolicy(tiny_perception, tiny_control)
        batch = tiny_batch(rng, 6)
        targets = rng.random(batch.size)
        _, grads_q, _ = backprop_task_to_perception(policy, batch, targets=targets)
        _, grads_p = perception_loss(tiny_perception, PerceptionBatch(batch.frames, batch.thetas))
        mixed = mix_gradients(grads_p, grads_q, beta)
        rows = np.arange(batch.size)

        def total_loss(thetas):
            q = tiny_control.predict(thetas)
            loss_q = 0.5 * float(np.sum((q[rows, batch.actions] - targets) ** 2)) / batch.size
            loss_p = 0.5 * float(np.sum((thetas - batch.thetas) ** 2)) / batch.size
            return beta * loss_p + (1.0 - beta) * loss_q

        numeric = finite_diff_grad(tiny_perception, as_batch_input(batch.frames), total_loss)
        assert gradient_check(mixed, numeric, 1e-3) >= 0.99


class TestFinetuneStep:
    def test_batch_accounting_defaults(self, small_dataset):
        records = []
        config = FinetuneConfig(steps=3, warmup_steps=64, replay_capacity=200, seed=1)
        session = FinetuneSession(full_policy(), small_dataset, config, on_batch=records.append)
        session.warmup()
        for _ in range(3):
            finetune_step(session)
        assert len(records) == 3
        for record in records:
            assert record.task_size == 64
            assert record.perception_size == 256
            assert record.composition == {DOMAIN_SIM: 64, DOMAIN_PSEUDO_REAL: 192}
            assert np.array_equal(record.perception_batch.frames[:64], record.task_batch.frames)
            assert np.array_equal(record.perception_batch.thetas[:64], record.task_batch.thetas)

    def test_batch_accounting_over_many_steps(self, small_dataset):
        records = []
        session = FinetuneSession(full_policy(), small_dataset, small_config(steps=100), on_batch=records.append)
        session.warmup()
        for _ in range(100):
            finetune_step(session)
        assert len(records) == 100
        for record in records:
            assert record.task_size == 4
            assert record.composition == {DOMAIN_SIM: 4, DOMAIN_PSEUDO_REAL: 12}
            assert np.array_equal(record.perception_batch.frames[:4], record.task_batch.frames)
            real = record.perception_batch.frames[4:]
            assert len({frame.tobytes() for frame in real}) == 12

    def test_beta_one_is_pure_supervised_update(self, small_dataset):
        records = []
        session = FinetuneSession(full_policy(), small_dataset, small_config(beta=1.0), on_batch=records.append)
        session.warmup()
        before = session.policy.copy()
        entry = finetune_step(session)
        _, grads_p = perception_loss(before.perception, records[0].perception_batch)
        expected = sgd_step(before.perception.params, grads_p, entry.lr)
        np.testing.assert_allclose(session.policy.perception.params.flatten(), expected.flatten(),
                                   rtol=1e-6, atol=1e-7)
        assert not np.array_equal(session.policy.control.params.flatten(), before.control.params.flatten())

    def test_control_update_independent_of_beta(self, small_dataset):
        finals = []
        for beta in (0.2, 0.9):
            session = FinetuneSession(full_policy(), small_dataset, small_config(beta=beta))
            session.warmup()
            finetune_step(session)
            finals.append(session.policy.control.params.flatten())
        assert np.array_equal(finals[0], finals[1])

    def test_zero_learning_rate_keeps_policy(self, small_dataset):
        session = FinetuneSession(full_policy(), small_dataset, small_config(lr_start=0.0, lr_end=0.0))
        session.warmup()
        before = session.policy.copy()
        entry = finetune_step(session)
        assert np.array_equal(session.policy.perception.params.flatten(), before.perception.params.flatten())
        assert np.array_equal(session.policy.control.params.flatten(), before.control.params.flatten())
        assert np.isfinite(entry.loss_p) and np.isfinite(entry.loss_q) and entry.beta == 0.8

    def test_refused_before_warmup(self, small_dataset):
        session = FinetuneSession(full_policy(), small_dataset, small_config())
        with pytest.raises(DataError):
            finetune_step(session)

    def test_invalid_config(self, small_dataset):
        with pytest.raises(UsageError):
            FinetuneSession(full_policy(), small_dataset, small_config(beta=1.2))
        with pytest.raises(UsageError):
            FinetuneSession(full_policy(), small_dataset, small_config(real_fraction=0.5))

    def test_replay_holds_rendered_frames(self, small_dataset, camera):
        session = FinetuneSession(full_policy(), small_dataset, small_config())
        session.warmup()
        replay = session.replay
        assert len(replay) == 4
        for i in range(3):
            assert np.array_equal(replay.next_frames[i], replay.frames[i + 1])


class TestFinetune:
    def test_zero_steps_returns_initial(self, small_dataset):
        policy = full_policy()
        result = finetune(policy, small_dataset, small_config(steps=0))
        assert np.array_equal(result.policy.perception.params.flatten(), policy.perception.params.flatten())
        assert np.array_equal(result.policy.control.params.flatten(), policy.control.params.flatten())

    def test_deterministic_and_logged(self, small_dataset, tmp_path):
        policy = full_policy()
        initial = policy.copy()
        path = tmp_path / "finetune_log.csv"
        first = finetune(policy, small_dataset, small_config(), log_path=path)
        second = finetune(policy, small_dataset, small_config())
        assert np.array_equal(first.policy.perception.params.flatten(), second.policy.perception.params.flatten())
        assert first.log == second.log
        assert np.array_equal(policy.perception.params.flatten(), initial.perception.params.flatten())
        assert [row["step"] for row in first.log] == [0, 1, 2, 3, 4]
        assert first.log[2]["eval_rbar"] is not None and first.log[1]["eval_rbar"] is None
        assert path.read_text().splitlines()[0] == "step,L_p,L_q,beta,eval_rbar,eval_d_med_cm,theta_mae"
        assert first.best_step in (0, 2, 4)
        assert first.best_rbar == max(row["eval_rbar"] for row in first.log if row["eval_rbar"] is not None)

    def test_naive_variant_runs(self, small_dataset):
        result = finetune(full_policy(), small_dataset, small_config(beta=0.0, steps=2))
        assert not result.diverged
        assert all(row["beta"] == 0.0 for row in result.log)
