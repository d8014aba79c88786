# -*- coding: utf-8 -*-
"""
视觉包：相机投影、渲染与数据集
"""

from .camera import Camera, DEFAULT_CAMERA, normalize_theta, denormalize_theta, theta_to_scene
from .renderer import ImageFrame, PerturbationSpec, render, render_pseudo_real
from .dataset import Dataset, build_dataset, save_dataset, load_dataset, encode_dataset, dataset_context

__all__ = ['Camera', 'DEFAULT_CAMERA', 'normalize_theta', 'denormalize_theta', 'theta_to_scene',
           'ImageFrame', 'PerturbationSpec', 'render', 'render_pseudo_real', 'Dataset', 'build_dataset',
           'save_dataset', 'load_dataset', 'encode_dataset', 'dataset_context']
