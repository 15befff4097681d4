import math
from typing import Sequence

import numpy as np

from src.core.models.mask import MaskSpec


def algorithmic_latency(mask: MaskSpec, frame_hop_seconds: float = 0.01, subsample: int = 4) -> float:
    """
    Наихудшее заглядывание вперед потокового энкодера

    Args:
        mask: Маска внимания
        frame_hop_seconds: Шаг входных кадров в секундах
        subsample: Коэффициент прореживания сверточного фронтенда

    Returns:
        float: chunk_size * subsample * frame_hop секунд (inf для полного внимания)
    """
    if mask.is_unbounded:
        return math.inf
    return mask.chunk_size * subsample * frame_hop_seconds


def chunk_frames_for(seconds: float, frame_hop_seconds: float = 0.01, subsample: int = 4) -> int:
    """Число кадров энкодера в блоке заданной длительности"""
    frames = seconds / (frame_hop_seconds * subsample)
    return max(1, int(round(frames)))


def delay_latency_seconds(word_durations: Sequence[float], delay_words: int) -> float:
    """
    Дополнительная задержка решения в D слов

    Args:
        word_durations: Длительности слов корпуса в секундах
        delay_words: Задержка решения D в словах

    Returns:
        float: D * средняя длительность слова
    """
    if delay_words == 0 or len(word_durations) == 0:
        return 0.0
    return delay_words * float(np.mean(word_durations))
