"""
Динамическое программирование на решетке трансдьюсера

Решетка имеет размер T x (U+1): состояние (t, u) означает, что к кадру t
выданы первые u токенов эталона. Из (t, u) возможны переходы blank -> (t+1, u)
и выдача токена y_{u+1} -> (t, u+1). Путь завершается blank-переходом из
(T-1, U). Индексы кадров с нуля.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np

from src.core.errors import TargetLongerThanFrames, DimensionMismatch, NonFiniteValue
from src.core.models.vocabulary import BLANK_INDEX

logger = logging.getLogger(__name__)


def _check_lattice(log_probs: np.ndarray, targets: Sequence[int]) -> Tuple[int, int]:
    if log_probs.ndim != 3:
        raise DimensionMismatch(f"Ожидался тензор [T, U+1, V], получена размерность {log_probs.shape}")
    num_frames, positions, _ = log_probs.shape
    num_targets = len(targets)
    if positions != num_targets + 1:
        raise DimensionMismatch(f"Вторая ось решетки {positions} не равна U+1={num_targets + 1}")
    if num_frames == 0:
        raise DimensionMismatch("Решетка не содержит кадров")
    if num_targets > num_frames:
        raise TargetLongerThanFrames(f"Эталон из {num_targets} токенов длиннее {num_frames} кадров")
    return num_frames, num_targets


def compute_alphas(log_probs: np.ndarray, targets: Sequence[int],
                   blank: int = BLANK_INDEX) -> Tuple[np.ndarray, float]:
    """
    Прямой проход по решетке

    Args:
        log_probs: Логарифмы вероятностей совместной сети [T, U+1, V]
        targets: Индексы токенов эталона длины U
        blank: Индекс символа blank

    Returns:
        Tuple[np.ndarray, float]: Матрица alpha [T, U+1] и log P(y|x)
    """
    num_frames, num_targets = _check_lattice(log_probs, targets)
    blank_lp = log_probs[:, :, blank]
    emit_lp = log_probs[:, np.arange(num_targets), np.asarray(targets, dtype=int)] if num_targets else None

    alphas = np.full((num_frames, num_targets + 1), -np.inf)
    alphas[0, 0] = 0.0
    for t in range(num_frames):
        for u in range(num_targets + 1):
            if t == 0 and u == 0:
                continue
            no_emit = alphas[t - 1, u] + blank_lp[t - 1, u] if t > 0 else -np.inf
            emit = alphas[t, u - 1] + emit_lp[t, u - 1] if u > 0 else -np.inf
            alphas[t, u] = np.logaddexp(no_emit, emit)

    loglike = float(alphas[num_frames - 1, num_targets] + blank_lp[num_frames - 1, num_targets])
    return alphas, loglike


def compute_betas(log_probs: np.ndarray, targets: Sequence[int],
                  blank: int = BLANK_INDEX) -> Tuple[np.ndarray, float]:
    """
    Обратный проход по решетке

    Args:
        log_probs: Логарифмы вероятностей совместной сети [T, U+1, V]
        targets: Индексы токенов эталона длины U
        blank: Индекс символа blank

    Returns:
        Tuple[np.ndarray, float]: Матрица beta [T, U+1] и log P(y|x)
    """
    num_frames, num_targets = _check_lattice(log_probs, targets)
    blank_lp = log_probs[:, :, blank]
    emit_lp = log_probs[:, np.arange(num_targets), np.asarray(targets, dtype=int)] if num_targets else None

    betas = np.full((num_frames, num_targets + 1), -np.inf)
    betas[num_frames - 1, num_targets] = blank_lp[num_frames - 1, num_targets]
    for t in range(num_frames - 1, -1, -1):
        for u in range(num_targets, -1, -1):
            if t == num_frames - 1 and u == num_targets:
                continue
            no_emit = betas[t + 1, u] + blank_lp[t, u] if t < num_frames - 1 else -np.inf
            emit = betas[t, u + 1] + emit_lp[t, u] if u < num_targets else -np.inf
            betas[t, u] = np.logaddexp(no_emit, emit)

    return betas, float(betas[0, 0])


def transducer_loss_and_grad(log_probs: np.ndarray, targets: Sequence[int],
                             blank: int = BLANK_INDEX) -> Tuple[float, np.ndarray]:
    """
    Функция потерь трансдьюсера и ее градиент по логарифмам вероятностей

    Args:
        log_probs: Логарифмы вероятностей совместной сети [T, U+1, V]
        targets: Индексы токенов эталона длины U
        blank: Индекс символа blank

    Returns:
        Tuple[float, np.ndarray]: -log P(y|x) и d loss / d log_probs той же формы

    Raises:
        TargetLongerThanFrames: Если U > T
        NonFiniteValue: Если эталон недостижим в решетке
    """
    log_probs = np.asarray(log_probs, dtype=np.float64)
    alphas, loglike = compute_alphas(log_probs, targets, blank)
    betas, _ = compute_betas(log_probs, targets, blank)
    if not np.isfinite(loglike):
        raise NonFiniteValue("Логарифм правдоподобия эталона не конечен")

    num_frames, num_targets = alphas.shape[0], alphas.shape[1] - 1
    grads = np.zeros_like(log_probs)

    # blank-переходы (t, u) -> (t+1, u) и финальный blank из (T-1, U)
    next_beta = np.full_like(betas, -np.inf)
    next_beta[:-1, :] = betas[1:, :]
    next_beta[num_frames - 1, num_targets] = 0.0
    grads[:, :, blank] = -np.exp(alphas + log_probs[:, :, blank] + next_beta - loglike)

    # выдача токена (t, u) -> (t, u+1)
    for u, label in enumerate(targets):
        grads[:, u, label] -= np.exp(alphas[:, u] + log_probs[:, u, label] + betas[:, u + 1] - loglike)

    return -loglike, grads


def viterbi_alignment(log_probs: np.ndarray, targets: Sequence[int],
                      blank: int = BLANK_INDEX) -> Tuple[List[int], float]:
    """
    Наиболее вероятное монотонное выравнивание эталона по кадрам

    Args:
        log_probs: Логарифмы вероятностей совместной сети [T, U+1, V]
        targets: Индексы токенов эталона длины U
        blank: Индекс символа blank

    Returns:
        Tuple[List[int], float]: Кадры выдачи t_u каждого токена (неубывающие) и
        логарифм вероятности лучшего пути

    Raises:
        TargetLongerThanFrames: Если U > T
    """
    log_probs = np.asarray(log_probs, dtype=np.float64)
    num_frames, num_targets = _check_lattice(log_probs, targets)
    blank_lp = log_probs[:, :, blank]

    scores = np.full((num_frames, num_targets + 1), -np.inf)
    came_by_emit = np.zeros((num_frames, num_targets + 1), dtype=bool)
    scores[0, 0] = 0.0
    for t in range(num_frames):
        for u in range(num_targets + 1):
            if t == 0 and u == 0:
                continue
            no_emit = scores[t - 1, u] + blank_lp[t - 1, u] if t > 0 else -np.inf
            emit = scores[t, u - 1] + log_probs[t, u - 1, targets[u - 1]] if u > 0 else -np.inf
            if emit > no_emit:
                scores[t, u] = emit
                came_by_emit[t, u] = True
            else:
                scores[t, u] = no_emit

    best = float(scores[num_frames - 1, num_targets] + blank_lp[num_frames - 1, num_targets])

    frames = [0] * num_targets
    t, u = num_frames - 1, num_targets
    while u > 0 or t > 0:
        if came_by_emit[t, u]:
            frames[u - 1] = t
            u -= 1
        else:
            t -= 1
    logger.debug(f"Выравнивание Витерби: T={num_frames}, U={num_targets}, log p={best:.4f}")
    return frames, best
