# -*- coding: utf-8 -*-
"""
相机、渲染与数据集测试
"""

import json
import math
import struct

import numpy as np
import pytest

from constants import DOMAIN_PSEUDO_REAL, DOMAIN_SIM
from reacher import SceneState, sample_task
from utils.common_utils import derive_rng, sha256_bytes, sha256_file
from utils.errors import DataError, RangeError, UsageError
from vision import (Camera, Dataset, ImageFrame, PerturbationSpec, build_dataset, dataset_context,
                    denormalize_theta, encode_dataset, load_dataset, normalize_theta, render, render_pseudo_real,
                    save_dataset, theta_to_scene)
from vision.dataset import MAGIC as DATASET_MAGIC
from vision.renderer import BACKGROUND_LEVEL, EFFECTOR_LEVEL, LINK_LEVEL, TARGET_LEVEL


class TestCamera:
    def test_scale(self, camera):
        assert camera.px_per_m == 42.0
        assert camera.px_per_cm == pytest.approx(0.42)

    def test_center_and_corners(self, camera):
        assert camera.world_to_pixel((0.0, 0.0)) == (42, 42)
        assert camera.world_to_pixel((-1.0, 1.0)) == (0, 0)
        assert camera.world_to_pixel((0.5, 0.0)) == (63, 42)
        assert camera.world_to_pixel((0.0, 0.5)) == (42, 21)

    @pytest.mark.parametrize("cm, px", [(4.598, 1.929), (3.568, 1.497), (3.449, 1.447)])
    def test_cm_to_px_matches_reported_values(self, camera, cm, px):
        assert abs(camera.cm_to_px(cm) - px) <= 0.01

    def test_invalid(self):
        with pytest.raises(UsageError):
            Camera(width=0.0)


class TestTheta:
    def test_normalized_range(self, arm, camera):
        for i in range(50):
            theta = normalize_theta(sample_task(derive_rng(9, i), arm), camera)
            assert theta.shape == (5,)
            assert np.all((theta >= 0) & (theta <= 1))

    def test_inverse(self, arm, camera):
        scene = sample_task(derive_rng(9, 1), arm)
        target, q = denormalize_theta(normalize_theta(scene, camera), camera, arm)
        assert target == pytest.approx(scene.target, abs=1e-12)
        assert q == pytest.approx(scene.q, abs=1e-12)
        assert theta_to_scene(normalize_theta(scene, camera), camera, arm).q == pytest.approx(scene.q)

    def test_known_values(self, arm, camera):
        theta = normalize_theta(SceneState((0.0, -2.8, 2.8), (0.0, -1.0), arm), camera)
        np.testing.assert_allclose(theta, [0.5, 0.0, 0.5, 0.0, 1.0])

    def test_out_of_range(self, camera, arm):
        with pytest.raises(RangeError):
            denormalize_theta(np.array([0.5, 0.5, 0.5, 0.5, 1.2]), camera, arm)


class TestRender:
    def test_shape_levels_and_determinism(self, arm, camera):
        scene = sample_task(derive_rng(4), arm)
        frame = render(scene, camera)
        assert frame.pixels.shape == (84, 84)
        assert frame.domain == DOMAIN_SIM
        levels = np.array([BACKGROUND_LEVEL, LINK_LEVEL, TARGET_LEVEL, EFFECTOR_LEVEL], dtype=np.float32)
        assert np.all(np.isin(frame.pixels, levels))
        assert np.array_equal(frame.pixels, render(scene, camera).pixels)

    def test_target_disc_drawn(self, arm, camera):
        scene = SceneState((0.0, 0.0, 0.0), (0.0, 0.5), arm)
        col, row = camera.world_to_pixel(scene.target)
        assert render(scene, camera).pixels[row, col] == pytest.approx(TARGET_LEVEL)

    def test_base_is_link_colored(self, arm, camera):
        scene = SceneState((0.0, 0.0, 0.0), (0.0, 0.5), arm)
        assert render(scene, camera).pixels[42, 43] == LINK_LEVEL

    def test_scenes_differ(self, arm, camera):
        a = render(sample_task(derive_rng(4), arm), camera).pixels
        b = render(sample_task(derive_rng(5), arm), camera).pixels
        assert not np.array_equal(a, b)

    def test_null_perturbation(self, arm, camera):
        scene = sample_task(derive_rng(4), arm)
        frame = render_pseudo_real(scene, camera, PerturbationSpec.null(), np.random.default_rng(0))
        assert frame.domain == DOMAIN_PSEUDO_REAL
        assert np.array_equal(frame.pixels, render(scene, camera).pixels)

    def test_pseudo_real_seeded(self, arm, camera):
        scene = sample_task(derive_rng(4), arm)
        a = render_pseudo_real(scene, camera, PerturbationSpec(), np.random.default_rng(1)).pixels
        b = render_pseudo_real(scene, camera, PerturbationSpec(), np.random.default_rng(1)).pixels
        c = render_pseudo_real(scene, camera, PerturbationSpec(), np.random.default_rng(2)).pixels
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert a.min() >= 0.0 and a.max() <= 1.0

    def test_pseudo_real_gap_is_moderate(self, arm, camera):
        gaps = []
        for i in range(100):
            scene = sample_task(derive_rng(30, i), arm)
            real = render_pseudo_real(scene, camera, PerturbationSpec(), derive_rng(31, i)).pixels
            gaps.append(np.mean(np.abs(real - render(scene, camera).pixels)))
        assert 0.0 < np.mean(gaps) < 0.2

    def test_target_shift_moves_disc(self, arm, camera):
        def disc_column(target):
            pixels = render(SceneState((-math.pi / 2, 0.0, 0.0), target, arm), camera).pixels
            _, cols = np.nonzero(np.isclose(pixels, TARGET_LEVEL))
            return cols.mean()

        assert disc_column((0.1, 0.5)) - disc_column((0.0, 0.5)) == pytest.approx(4.0)

    def test_frame_shape_enforced(self):
        with pytest.raises(UsageError):
            ImageFrame(np.ones((84, 83), dtype=np.float32))
        with pytest.raises(UsageError):
            ImageFrame(np.ones((1, 84, 84), dtype=np.float32))

    def test_negative_perturbation(self):
        with pytest.raises(UsageError):
            PerturbationSpec(noise_sigma=-0.1)


class TestDataset:
    def test_counts(self, small_dataset):
        assert len(small_dataset) == 224
        assert small_dataset.count(DOMAIN_SIM) == 24
        assert small_dataset.count(DOMAIN_PSEUDO_REAL) == 200
        assert small_dataset.thetas.shape == (224, 5)

    def test_labels_match_scenes(self, small_dataset, arm, camera):
        scene = sample_task(derive_rng(3, 0, 0), arm, camera.bounds())
        np.testing.assert_allclose(small_dataset.thetas[0], normalize_theta(scene, camera), rtol=1e-6, atol=1e-6)
        assert np.array_equal(small_dataset.frames[0], render(scene, camera).pixels)

    def test_deterministic(self):
        a, b = build_dataset(3, 3, seed=8), build_dataset(3, 3, seed=8)
        assert np.array_equal(a.frames, b.frames) and np.array_equal(a.thetas, b.thetas)

    def test_save_load(self, tmp_path):
        dataset = build_dataset(4, 5, seed=2)
        path = tmp_path / "sub" / "data.bin"
        save_dataset(path, dataset)
        loaded = load_dataset(path)
        assert np.array_equal(loaded.frames, dataset.frames)
        assert np.array_equal(loaded.thetas, dataset.thetas)
        assert np.array_equal(loaded.domains, dataset.domains)
        arm, camera, perturbation = dataset_context(loaded)
        assert camera.resolution == 84 and perturbation == PerturbationSpec()

    def test_file_checksum_stable(self, tmp_path):
        save_dataset(tmp_path / "a.bin", build_dataset(3, 3, seed=2))
        save_dataset(tmp_path / "b.bin", build_dataset(3, 3, seed=2))
        assert sha256_file(tmp_path / "a.bin") == sha256_file(tmp_path / "b.bin")

    def test_golden_encoding(self, tmp_path):
        dataset = Dataset(np.ones((2, 84, 84), dtype=np.float32), np.full((2, 5), 0.5, dtype=np.float32),
                          np.array([0, 1], dtype=np.uint8), {"seed": 7})
        data = encode_dataset(dataset)
        assert len(data) == 16 + 201 + 2 * 28245
        assert sha256_bytes(data[217:]) == "aa0a10f15d0749375f6046983026d4984bec893356bfe0eeb7f7850f5e13da46"
        assert sha256_bytes(data) == "ab8996d641f04c6b041930a5a118e383645cdc812defe55e40d6b72eb7bda207"
        path = tmp_path / "golden.bin"
        path.write_bytes(data)
        loaded = load_dataset(path)
        assert loaded.count(DOMAIN_PSEUDO_REAL) == 1 and loaded.meta["seed"] == 7

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "data.bin"
        save_dataset(path, build_dataset(2, 2, seed=2))
        data = bytearray(path.read_bytes())
        data[-3] ^= 0x01
        path.write_bytes(bytes(data))
        with pytest.raises(DataError):
            load_dataset(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_dataset(tmp_path / "absent.bin")

    @pytest.mark.parametrize("cut", [0, 12, 16, 30])
    def test_truncated_file(self, tmp_path, cut):
        path = tmp_path / "data.bin"
        save_dataset(path, build_dataset(2, 2, seed=2))
        path.write_bytes(path.read_bytes()[:cut])
        with pytest.raises(DataError):
            load_dataset(path)

    def test_header_without_checksum(self, tmp_path):
        header = json.dumps({"format_version": 1, "image_size": 84}).encode("utf-8")
        path = tmp_path / "data.bin"
        path.write_bytes(DATASET_MAGIC + struct.pack("<Q", len(header)) + header)
        with pytest.raises(DataError, match="字段"):
            load_dataset(path)

    def test_split_is_stratified(self, small_dataset):
        train, validation = small_dataset.split(0.1, seed=0)
        assert len(train) + len(validation) == len(small_dataset)
        assert validation.count(DOMAIN_SIM) == 2
        assert validation.count(DOMAIN_PSEUDO_REAL) == 20

    def test_select(self, small_dataset):
        assert len(small_dataset.select(DOMAIN_PSEUDO_REAL)) == 200
