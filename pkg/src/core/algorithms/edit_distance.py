"""Выравнивание Левенштейна, WER и метрики с атрибуцией дикторов (SER, SAWER)"""

from dataclasses import dataclass
from typing import List, Dict, Any, Optional, Sequence, Tuple, Hashable

import numpy as np

AlignedPair = Tuple[Optional[int], Optional[int]]


@dataclass(frozen=True)
class AlignmentResult:
    """Итог выравнивания эталона и гипотезы"""

    hits: int
    substitutions: int
    deletions: int
    insertions: int
    pairs: Tuple[AlignedPair, ...]
    reference_length: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        return self.errors / max(1, self.reference_length)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'hits': self.hits,
            'substitutions': self.substitutions,
            'deletions': self.deletions,
            'insertions': self.insertions,
            'errors': self.errors,
            'reference_length': self.reference_length,
            'wer': self.wer,
        }


def align(reference: Sequence[Hashable], hypothesis: Sequence[Hashable]) -> AlignmentResult:
    """
    Выравнивание с единичными ценами и детерминированным разрешением равенств

    При равной цене при обратном проходе предпочитается совпадение, затем
    замена, затем удаление, затем вставка.

    Args:
        reference: Эталонные символы
        hypothesis: Гипотеза

    Returns:
        AlignmentResult: Счетчики ошибок и выровненные пары
    """
    n, m = len(reference), len(hypothesis)
    cost = np.zeros((n + 1, m + 1), dtype=np.int64)
    cost[:, 0] = np.arange(n + 1)
    cost[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            diagonal = cost[i - 1, j - 1] + (0 if reference[i - 1] == hypothesis[j - 1] else 1)
            cost[i, j] = min(diagonal, cost[i - 1, j] + 1, cost[i, j - 1] + 1)

    pairs: List[AlignedPair] = []
    hits = substitutions = deletions = insertions = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and reference[i - 1] == hypothesis[j - 1] and cost[i - 1, j - 1] == cost[i, j]:
            hits += 1
            pairs.append((i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and cost[i - 1, j - 1] + 1 == cost[i, j]:
            substitutions += 1
            pairs.append((i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and cost[i - 1, j] + 1 == cost[i, j]:
            deletions += 1
            pairs.append((i - 1, None))
            i -= 1
        else:
            insertions += 1
            pairs.append((None, j - 1))
            j -= 1

    pairs.reverse()
    return AlignmentResult(hits, substitutions, deletions, insertions, tuple(pairs), n)


def wer(reference: Sequence[str], hypothesis: Sequence[str]) -> AlignmentResult:
    """WER: выравнивание последовательностей слов"""
    return align(list(reference), list(hypothesis))


@dataclass(frozen=True)
class SpeakerAttributedResult:
    """SER, WER и SAWER одной пары эталон/гипотеза"""

    word_alignment: AlignmentResult
    joint_errors: int
    word_hits: int
    speaker_errors: int
    reference_length: int
    joint_pairs: Tuple[AlignedPair, ...] = ()

    @property
    def wer(self) -> float:
        return self.word_alignment.wer

    @property
    def sawer(self) -> float:
        return self.joint_errors / max(1, self.reference_length)

    @property
    def ser(self) -> float:
        return self.speaker_errors / self.word_hits if self.word_hits else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'wer': self.wer,
            'ser': self.ser,
            'sawer': self.sawer,
            'word_errors': self.word_alignment.errors,
            'joint_errors': self.joint_errors,
            'word_hits': self.word_hits,
            'speaker_errors': self.speaker_errors,
            'reference_length': self.reference_length,
        }


def sawer(reference: Sequence[Tuple[str, str]], hypothesis: Sequence[Tuple[str, str]]) -> SpeakerAttributedResult:
    """
    Метрики с атрибуцией дикторов

    SAWER - расстояние редактирования по парам (слово, диктор), деленное на
    длину эталона. Среди выравниваний минимальной цены выбирается то, где
    больше пар с совпадающим словом; SER - доля таких пар с неверным диктором.

    Args:
        reference: Эталонные пары (слово, диктор)
        hypothesis: Гипотеза в виде пар (слово, диктор)

    Returns:
        SpeakerAttributedResult: SER, WER, SAWER и счетчики
    """
    reference = [tuple(item) for item in reference]
    hypothesis = [tuple(item) for item in hypothesis]
    n, m = len(reference), len(hypothesis)

    # Лексикографическая цена: (ошибки, -число пар с совпадающим словом)
    errors = np.zeros((n + 1, m + 1), dtype=np.int64)
    matches = np.zeros((n + 1, m + 1), dtype=np.int64)
    errors[:, 0] = np.arange(n + 1)
    errors[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            same_word = reference[i - 1][0] == hypothesis[j - 1][0]
            joint_hit = same_word and reference[i - 1][1] == hypothesis[j - 1][1]
            options = (
                (errors[i - 1, j - 1] + (0 if joint_hit else 1), -(matches[i - 1, j - 1] + int(same_word))),
                (errors[i - 1, j] + 1, -matches[i - 1, j]),
                (errors[i, j - 1] + 1, -matches[i, j - 1]),
            )
            best = min(options)
            errors[i, j] = best[0]
            matches[i, j] = -best[1]

    pairs: List[AlignedPair] = []
    word_hits = speaker_errors = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            same_word = reference[i - 1][0] == hypothesis[j - 1][0]
            joint_hit = same_word and reference[i - 1][1] == hypothesis[j - 1][1]
            diagonal = (errors[i - 1, j - 1] + (0 if joint_hit else 1), matches[i - 1, j - 1] + int(same_word))
            if diagonal == (errors[i, j], matches[i, j]):
                if same_word:
                    word_hits += 1
                    speaker_errors += int(not joint_hit)
                pairs.append((i - 1, j - 1))
                i, j = i - 1, j - 1
                continue
        if i > 0 and (errors[i - 1, j] + 1, matches[i - 1, j]) == (errors[i, j], matches[i, j]):
            pairs.append((i - 1, None))
            i -= 1
        else:
            pairs.append((None, j - 1))
            j -= 1
    pairs.reverse()

    return SpeakerAttributedResult(
        word_alignment=wer([w for w, _ in reference], [w for w, _ in hypothesis]),
        joint_errors=int(errors[n, m]),
        word_hits=word_hits,
        speaker_errors=speaker_errors,
        reference_length=n,
        joint_pairs=tuple(pairs),
    )
