from collections import Counter
from typing import Dict, Hashable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment


def speaker_accuracy(reference_labels: Sequence[Hashable], hypothesis_labels: Sequence[Hashable]) -> float:
    """Доля токенов с верной меткой диктора (последовательности одной длины)"""
    if len(reference_labels) != len(hypothesis_labels):
        raise ValueError("Число меток эталона и гипотезы не совпадает")
    if not reference_labels:
        return 1.0
    correct = sum(1 for r, h in zip(reference_labels, hypothesis_labels) if r == h)
    return correct / len(reference_labels)


def cluster_purity(reference_labels: Sequence[Hashable], cluster_labels: Sequence[Hashable]) -> float:
    """
    Чистота кластеризации

    Args:
        reference_labels: Истинные дикторы токенов
        cluster_labels: Кластеры токенов

    Returns:
        float: Сумма по кластерам числа токенов мажоритарного диктора, деленная на число токенов
    """
    if len(reference_labels) != len(cluster_labels):
        raise ValueError("Число меток эталона и кластеров не совпадает")
    if not reference_labels:
        return 1.0
    members: Dict[Hashable, Counter] = {}
    for ref, cluster in zip(reference_labels, cluster_labels):
        members.setdefault(cluster, Counter())[ref] += 1
    majority = sum(counter.most_common(1)[0][1] for counter in members.values())
    return majority / len(reference_labels)


def best_label_mapping(reference_labels: Sequence[Hashable],
                       hypothesis_labels: Sequence[Hashable]) -> Dict[Hashable, Hashable]:
    """
    Взаимно однозначное сопоставление меток гипотезы меткам эталона

    Максимизирует число совпавших токенов (венгерский алгоритм по матрице
    совместной встречаемости).

    Args:
        reference_labels: Истинные дикторы токенов
        hypothesis_labels: Метки гипотезы (кластеры)

    Returns:
        dict: Метка гипотезы -> метка эталона (несопоставленные метки отсутствуют)
    """
    if len(reference_labels) != len(hypothesis_labels):
        raise ValueError("Число меток эталона и гипотезы не совпадает")
    references = list(dict.fromkeys(reference_labels))
    hypotheses = list(dict.fromkeys(hypothesis_labels))
    if not references or not hypotheses:
        return {}
    counts = np.zeros((len(hypotheses), len(references)))
    for ref, hyp in zip(reference_labels, hypothesis_labels):
        counts[hypotheses.index(hyp), references.index(ref)] += 1
    rows, cols = linear_sum_assignment(counts, maximize=True)
    return {hypotheses[r]: references[c] for r, c in zip(rows, cols)}


def mapped_accuracy(reference_labels: Sequence[Hashable], hypothesis_labels: Sequence[Hashable]) -> float:
    """Точность атрибуции после оптимального переименования меток гипотезы"""
    mapping = best_label_mapping(reference_labels, hypothesis_labels)
    return speaker_accuracy(reference_labels, [mapping.get(label) for label in hypothesis_labels])
