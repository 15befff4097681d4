"""Конкатенированный WER с минимизацией по перестановкам дикторов (cpWER)"""

import itertools
import logging
from dataclasses import dataclass
from typing import List, Dict, Any, Optional, Sequence, Tuple

import editdistance
import numpy as np
from scipy.optimize import linear_sum_assignment

logger = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 8


@dataclass(frozen=True)
class CpWerResult:
    """Итог cpWER"""

    errors: int
    length: int
    assignment: Tuple[Tuple[Optional[str], Optional[str]], ...]
    solver: str
    missed_speakers: int = 0
    falarm_speakers: int = 0

    @property
    def rate(self) -> float:
        return self.errors / max(1, self.length)

    def mapping(self) -> Dict[str, str]:
        """Отображение диктор гипотезы -> диктор эталона"""
        return {hyp: ref for ref, hyp in self.assignment if ref is not None and hyp is not None}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'errors': self.errors,
            'length': self.length,
            'cpwer': self.rate,
            'assignment': [list(pair) for pair in self.assignment],
            'solver': self.solver,
            'missed_speakers': self.missed_speakers,
            'falarm_speakers': self.falarm_speakers,
        }


def cost_matrix(references: Sequence[Sequence[str]], hypotheses: Sequence[Sequence[str]]) -> np.ndarray:
    """
    Попарные расстояния редактирования, дополненные до квадратной матрицы

    Отсутствующий диктор одной из сторон считается пустой транскрипцией.

    Args:
        references: Транскрипции дикторов эталона
        hypotheses: Транскрипции дикторов гипотезы

    Returns:
        np.ndarray: Матрица [N, N], N = max(#эталон, #гипотеза)
    """
    size = max(len(references), len(hypotheses))
    padded_refs = list(references) + [[]] * (size - len(references))
    padded_hyps = list(hypotheses) + [[]] * (size - len(hypotheses))
    return np.array(
        [[editdistance.eval(list(ref), list(hyp)) for hyp in padded_hyps] for ref in padded_refs],
        dtype=np.int64
    ).reshape(size, size)


def cpwer(references: Dict[str, Sequence[str]], hypotheses: Dict[str, Sequence[str]]) -> CpWerResult:
    """
    Вычисляет cpWER

    Транскрипции каждого диктора уже должны быть сконкатенированы в порядке
    времени. До EXHAUSTIVE_LIMIT дикторов выполняется полный перебор
    перестановок, иначе венгерский алгоритм по той же матрице цен.

    Args:
        references: Диктор эталона -> последовательность слов
        hypotheses: Диктор гипотезы -> последовательность слов

    Returns:
        CpWerResult: Ошибки, длина эталона, назначение и использованный решатель
    """
    ref_keys = list(references)
    hyp_keys = list(hypotheses)
    length = sum(len(words) for words in references.values())
    size = max(len(ref_keys), len(hyp_keys))
    if size == 0:
        return CpWerResult(errors=0, length=0, assignment=(), solver='exhaustive')

    costs = cost_matrix([references[k] for k in ref_keys], [hypotheses[k] for k in hyp_keys])

    if size <= EXHAUSTIVE_LIMIT:
        solver = 'exhaustive'
        best_perm = None
        best_cost = None
        rows = np.arange(size)
        for perm in itertools.permutations(range(size)):
            total = int(costs[rows, list(perm)].sum())
            if best_cost is None or total < best_cost:
                best_cost, best_perm = total, perm
        columns = list(best_perm)
    else:
        solver = 'hungarian'
        _, columns = linear_sum_assignment(costs)
        columns = [int(c) for c in columns]
        best_cost = int(costs[np.arange(size), columns].sum())

    assignment = tuple(
        (ref_keys[r] if r < len(ref_keys) else None, hyp_keys[c] if c < len(hyp_keys) else None)
        for r, c in enumerate(columns)
    )
    logger.debug(f"cpWER: решатель {solver}, ошибок {best_cost} на {length} словах")
    return CpWerResult(
        errors=best_cost,
        length=length,
        assignment=assignment,
        solver=solver,
        missed_speakers=max(0, len(ref_keys) - len(hyp_keys)),
        falarm_speakers=max(0, len(hyp_keys) - len(ref_keys)),
    )


def concatenate_by_speaker(events: Sequence[Any]) -> Dict[str, List[str]]:
    """
    Конкатенирует слова каждого диктора в порядке времени начала

    Args:
        events: Токены с полями token, speaker_id, start_time

    Returns:
        Dict[str, List[str]]: Диктор -> слова
    """
    result: Dict[str, List[str]] = {}
    order = sorted(range(len(events)), key=lambda i: (events[i].start_time, i))
    for i in order:
        event = events[i]
        speaker = event.speaker_id if event.speaker_id is not None else 'unknown'
        result.setdefault(speaker, []).append(event.token)
    return result
