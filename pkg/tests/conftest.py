import logging

import numpy as np
import pytest
import torch

from src.core.models.mixture import MixtureSpec
from src.core.models.run_config import ModelConfig


@pytest.fixture(autouse=True)
def _seed_torch():
    torch.manual_seed(0)
    yield


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    """Модель размера, при котором прямой проход занимает миллисекунды"""
    return ModelConfig(d_model=8, heads=2, asr_layers=2, ff_dim=16, subsample=2, conv_kernel=3,
                       pred_dim=8, joint_dim=8, tvector_layers=2, profile_dim=8, max_frames=256)


@pytest.fixture
def tiny_spec() -> MixtureSpec:
    return MixtureSpec(vocab_size=6, min_tokens=2, max_tokens=3, feature_dim=8, profile_dim=8,
                       population_size=10, num_profiles=4, seed=7)


@pytest.fixture(autouse=True)
def _quiet_logging(caplog):
    caplog.set_level(logging.WARNING)
    yield


@pytest.fixture
def restore_root_logger():
    """Возвращает обработчики корневого логгера после setup_logging"""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in list(root.handlers):
        root.removeHandler(handler)
        if handler not in handlers:
            handler.close()
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel(level)
