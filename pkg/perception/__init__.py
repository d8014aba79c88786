# -*- coding: utf-8 -*-
"""
感知模块包
"""

from .model import (PERCEPTION_NAME, PerceptionBatch, perception_layers, build_perception_net, perceive,
                    perceive_batch, perception_loss, perception_loss_value, make_mixed_batch, sample_domain,
                    evaluate_perception, as_batch_input)
from .trainer import PerceptionTrainConfig, train_perception, validation_batch

__all__ = ['PERCEPTION_NAME', 'PerceptionBatch', 'perception_layers', 'build_perception_net', 'perceive',
           'perceive_batch', 'perception_loss', 'perception_loss_value', 'make_mixed_batch', 'sample_domain',
           'evaluate_perception', 'as_batch_input', 'PerceptionTrainConfig', 'train_perception',
           'validation_batch']
