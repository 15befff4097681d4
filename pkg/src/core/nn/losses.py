"""Функции потерь: трансдьюсер и косинусный softmax по дикторам"""

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from src.core.algorithms.transducer_dp import transducer_loss_and_grad
from src.core.errors import EmptyReference, DimensionMismatch
from src.core.models.speaker import SpeakerProfile, TVector, profile_matrix
from src.core.models.vocabulary import BLANK_INDEX
from src.core.nn.kernel import DTYPE, cosine_softmax_logits


class TransducerLossFunction(torch.autograd.Function):
    """-log P(y|x) по решетке [T, U+1, V]; градиент из прямого и обратного проходов"""

    @staticmethod
    def forward(ctx, log_probs: torch.Tensor, targets: Tuple[int, ...], blank: int) -> torch.Tensor:
        loss, grads = transducer_loss_and_grad(log_probs.detach().cpu().numpy(), list(targets), blank)
        ctx.save_for_backward(torch.from_numpy(grads).to(log_probs.dtype))
        return log_probs.new_tensor(loss)

    @staticmethod
    def backward(ctx, grad_output: torch.Tensor):
        (grads,) = ctx.saved_tensors
        return grad_output * grads, None, None


def transducer_loss(log_probs: torch.Tensor, targets: Sequence[int], blank: int = BLANK_INDEX) -> torch.Tensor:
    """
    Функция потерь трансдьюсера

    Args:
        log_probs: log_softmax выхода совместной сети [T, U+1, V]
        targets: Индексы токенов эталона
        blank: Индекс blank

    Returns:
        torch.Tensor: Скаляр -log P(y|x)

    Raises:
        TargetLongerThanFrames: Если U > T
    """
    return TransducerLossFunction.apply(log_probs, tuple(int(t) for t in targets), blank)


def speaker_loss(embeddings: torch.Tensor, references: torch.Tensor,
                 distractors: Union[torch.Tensor, Sequence[torch.Tensor], None],
                 is_cc: Optional[Sequence[bool]] = None) -> torch.Tensor:
    """
    Косинусный softmax-лосс идентификации дикторов

    Для каждого обычного токена: logsumexp(cos(e_u, [d_u; Φ_u])) - cos(e_u, d_u).
    Токены <cc> не дают вклада.

    Args:
        embeddings: t-векторы [U, D]
        references: d-векторы дикторов токенов [U, D]
        distractors: Общая матрица Φ [N, D] или по матрице на токен
        is_cc: Флаги токенов <cc>

    Returns:
        torch.Tensor: Сумма потерь по обычным токенам

    Raises:
        EmptyReference: Если обычных токенов нет
    """
    if embeddings.shape != references.shape:
        raise DimensionMismatch(f"Формы t-векторов {tuple(embeddings.shape)} и эталонов {tuple(references.shape)} различны")
    flags = list(is_cc) if is_cc is not None else [False] * embeddings.shape[0]
    if len(flags) != embeddings.shape[0]:
        raise DimensionMismatch("Число флагов <cc> не совпадает с числом t-векторов")

    terms: List[torch.Tensor] = []
    for u in range(embeddings.shape[0]):
        if flags[u]:
            continue
        if distractors is None:
            phi = None
        elif isinstance(distractors, torch.Tensor):
            phi = distractors
        else:
            phi = distractors[u]
        logits = cosine_softmax_logits(embeddings[u], references[u], phi)
        terms.append(torch.logsumexp(logits, dim=0) - logits[0])

    if not terms:
        raise EmptyReference("Нет обычных токенов для функции потерь дикторов")
    return torch.stack(terms).sum()


def speaker_loss_for_profiles(tvectors: Sequence[TVector], references: Sequence[SpeakerProfile],
                              candidates: Sequence[SpeakerProfile]) -> Tuple[float, np.ndarray]:
    """
    Значение и градиент потерь для готовых t-векторов

    Для каждого токена Φ - кандидаты без его собственного диктора.

    Args:
        tvectors: t-векторы токенов
        references: Профиль диктора каждого токена
        candidates: Пул кандидатов

    Returns:
        Tuple[float, np.ndarray]: Потери и градиент по t-векторам [U, D]
    """
    embeddings = torch.tensor(np.stack([t.embedding for t in tvectors]), dtype=DTYPE, requires_grad=True)
    reference_matrix = torch.tensor(profile_matrix(references), dtype=DTYPE)
    per_token = []
    for reference in references:
        others = [p for p in candidates if p.speaker_id != reference.speaker_id]
        per_token.append(torch.tensor(profile_matrix(others), dtype=DTYPE) if others else None)
    loss = speaker_loss(embeddings, reference_matrix, per_token, [t.is_cc for t in tvectors])
    loss.backward()
    return float(loss.detach()), embeddings.grad.numpy().copy()
