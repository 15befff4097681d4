"""Оптимизатор и расписание скорости обучения"""

from typing import Iterable, Tuple

import torch
from torch.optim.lr_scheduler import LambdaLR

from src.core.models.run_config import TrainingConfig

GRADIENT_CLIP = 5.0


def warmup_linear_decay(step: int, warmup_steps: int, total_steps: int) -> float:
    """
    Множитель скорости обучения: линейный разогрев, затем линейный спад до нуля

    Args:
        step: Номер шага (с нуля)
        warmup_steps: Длина разогрева
        total_steps: Общее число шагов

    Returns:
        float: Множитель в [0, 1]
    """
    if warmup_steps > 0 and step < warmup_steps:
        return (step + 1) / warmup_steps
    remaining = total_steps - step
    span = max(1, total_steps - warmup_steps)
    return max(0.0, min(1.0, remaining / span))


def build_optimizer(parameters: Iterable[torch.nn.Parameter],
                    config: TrainingConfig) -> Tuple[torch.optim.AdamW, LambdaLR]:
    """
    Создает AdamW с расписанием разогрев + линейный спад

    Args:
        parameters: Обучаемые параметры
        config: Параметры обучения

    Returns:
        Tuple[AdamW, LambdaLR]: Оптимизатор и планировщик
    """
    optimizer = torch.optim.AdamW(list(parameters), lr=config.learning_rate, weight_decay=config.weight_decay)
    scheduler = LambdaLR(optimizer, lambda step: warmup_linear_decay(step, config.warmup_steps, config.steps))
    return optimizer, scheduler


def clip_gradients(parameters: Iterable[torch.nn.Parameter]) -> float:
    return float(torch.nn.utils.clip_grad_norm_(list(parameters), GRADIENT_CLIP))
