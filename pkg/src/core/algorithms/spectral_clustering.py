"""Спектральная кластеризация с нормированным максимальным собственным зазором (NME-SC)"""

import logging
from collections import Counter
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csgraph
from sklearn.cluster import KMeans
from sklearn.metrics.pairwise import cosine_similarity

from src.core.errors import TooFewSegments, EmptyInput
from src.core.models.attribution import ClusterResult

logger = logging.getLogger(__name__)

EPS = 1e-10


def binarize_affinity(affinity: np.ndarray, p_neighbors: int) -> np.ndarray:
    """
    Оставляет в каждой строке p наибольших внедиагональных связей и симметризует

    Значения, равные p-му по величине, сохраняются все.

    Args:
        affinity: Матрица косинусной близости [n, n]
        p_neighbors: Число соседей p

    Returns:
        np.ndarray: Симметричная матрица 0.5 * (A + A^T) с нулевой диагональю
    """
    n = affinity.shape[0]
    ranked = affinity.astype(np.float64).copy()
    np.fill_diagonal(ranked, -np.inf)
    binary = np.zeros_like(ranked)
    for i in range(n):
        threshold = np.sort(ranked[i])[::-1][p_neighbors - 1]
        binary[i] = ranked[i] >= threshold
    np.fill_diagonal(binary, 0.0)
    return 0.5 * (binary + binary.T)


def normalized_laplacian_spectrum(graph: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Собственные значения и векторы нормированного лапласиана по возрастанию"""
    laplacian = csgraph.laplacian(graph, normed=True)
    return eigh(laplacian)


def eigengap_ratio(eigenvalues: np.ndarray, p_neighbors: int, n: int,
                   num_clusters: Optional[int], max_clusters: int) -> Tuple[float, int]:
    """
    Отношение g_p = (p / n) / нормированный зазор

    Args:
        eigenvalues: Спектр лапласиана по возрастанию
        p_neighbors: Число соседей p
        n: Число точек
        num_clusters: Известное число кластеров или None
        max_clusters: Верхняя граница оценки числа кластеров

    Returns:
        Tuple[float, int]: g_p и число кластеров (заданное или оцененное)
    """
    lambda_max = float(eigenvalues[-1]) + EPS
    gaps = np.diff(eigenvalues)
    if num_clusters is not None:
        gap = float(gaps[num_clusters - 1])
        estimate = num_clusters
    else:
        limit = max(1, min(max_clusters, len(gaps)))
        estimate = int(np.argmax(gaps[:limit])) + 1
        gap = float(gaps[estimate - 1])
    return (p_neighbors / n) / (gap / lambda_max + EPS), estimate


def first_appearance_labels(labels: Sequence[int]) -> List[int]:
    """Перенумеровывает кластеры в порядке первого появления"""
    mapping = {}
    for label in labels:
        mapping.setdefault(int(label), len(mapping))
    return [mapping[int(label)] for label in labels]


def nme_spectral_clustering(embeddings: np.ndarray, num_clusters: Optional[int] = None,
                            max_clusters: int = 8, max_neighbors: int = 20,
                            n_init: int = 10, seed: int = 0) -> ClusterResult:
    """
    Кластеризует эмбеддинги сегментов методом NME-SC

    Точные дубликаты строк кластеризуются один раз. Для каждого p из
    1..min(max_neighbors, n-1) строится бинаризованный граф; графы с большим
    числом компонент связности, чем кластеров, пропускаются. Без заданного K
    число кластеров определяется большинством оценок по всем p. Выбирается p с
    минимальным g_p среди согласных с этим числом, после чего первые K
    собственных векторов нормированного лапласиана кластеризуются k-means.

    Args:
        embeddings: Эмбеддинги сегментов [n, d]
        num_clusters: Известное (оракульное) число кластеров K или None
        max_clusters: Верхняя граница K при оценке
        max_neighbors: Верхняя граница перебора p
        n_init: Число перезапусков k-means
        seed: Зерно k-means

    Returns:
        ClusterResult: Метки в порядке первого появления

    Raises:
        EmptyInput: Если эмбеддингов нет
        TooFewSegments: Если сегментов меньше K
    """
    points = np.asarray(embeddings, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise EmptyInput("Нет эмбеддингов для кластеризации")
    if num_clusters is not None:
        if num_clusters < 1:
            raise ValueError(f"Число кластеров должно быть положительным, получено {num_clusters}")
        if points.shape[0] < num_clusters:
            raise TooFewSegments(f"Сегментов {points.shape[0]} меньше числа кластеров {num_clusters}")

    unique, inverse = np.unique(points, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    n = unique.shape[0]

    if num_clusters == 1 or n == 1:
        labels = [0] * points.shape[0]
        return ClusterResult(labels=tuple(labels), num_clusters=num_clusters or 1, estimated=num_clusters is None)
    if num_clusters is not None and n <= num_clusters:
        labels = first_appearance_labels(inverse)
        return ClusterResult(labels=tuple(labels), num_clusters=num_clusters)

    affinity = cosine_similarity(unique)
    component_limit = num_clusters if num_clusters is not None else max_clusters

    candidates = []
    for p in range(1, min(max_neighbors, n - 1) + 1):
        graph = binarize_affinity(affinity, p)
        num_components, _ = csgraph.connected_components(graph, directed=False)
        if num_components > component_limit:
            continue
        eigenvalues, _ = normalized_laplacian_spectrum(graph)
        ratio, estimate = eigengap_ratio(eigenvalues, p, n, num_clusters, max_clusters)
        candidates.append((ratio, p, estimate, graph))

    if num_clusters is None and candidates:
        # число дикторов - большинство голосов по всем p, при равенстве меньшее
        votes = Counter(estimate for _, _, estimate, _ in candidates)
        top = max(votes.values())
        majority = min(k for k, count in votes.items() if count == top)
        candidates = [c for c in candidates if c[2] == majority]
    best = min(candidates, key=lambda c: (c[0], c[1])) if candidates else None

    if best is None:
        graph = np.clip(affinity, 0.0, None)
        np.fill_diagonal(graph, 0.0)
        eigenvalues, _ = normalized_laplacian_spectrum(graph)
        _, estimate = eigengap_ratio(eigenvalues, 1, n, num_clusters, max_clusters)
        chosen_p = None
        logger.warning("NME-SC: все уровни бинаризации дробят граф, используется косинусная близость")
    else:
        _, chosen_p, estimate, graph = best

    k = num_clusters if num_clusters is not None else min(estimate, n)
    _, eigenvectors = normalized_laplacian_spectrum(graph)
    spectral = eigenvectors[:, :k]
    norms = np.linalg.norm(spectral, axis=1, keepdims=True)
    spectral = spectral / np.where(norms > 0, norms, 1.0)

    kmeans = KMeans(n_clusters=k, n_init=n_init, random_state=seed)
    unique_labels = kmeans.fit_predict(spectral)
    labels = first_appearance_labels(unique_labels[inverse])
    logger.debug(f"NME-SC: n={points.shape[0]}, уникальных {n}, K={k}, p={chosen_p}")
    return ClusterResult(labels=tuple(labels), num_clusters=k, neighbors=chosen_p, estimated=num_clusters is None)


def stitch_labels(previous: Sequence[int], current: Sequence[int]) -> List[int]:
    """
    Согласует новые метки с предыдущими венгерским алгоритмом

    Args:
        previous: Метки первых len(previous) сегментов после прошлой кластеризации
        current: Новые метки всех сегментов

    Returns:
        List[int]: Новые метки, переименованные так, чтобы максимально совпадать с прошлыми
    """
    current = [int(c) for c in current]
    if not previous:
        return current
    size = max(max(previous), max(current)) + 1
    overlap = np.zeros((size, size), dtype=np.int64)
    for old, new in zip(previous, current):
        overlap[new, old] += 1
    rows, columns = linear_sum_assignment(-overlap)
    mapping = {int(r): int(c) for r, c in zip(rows, columns)}
    return [mapping[c] for c in current]
