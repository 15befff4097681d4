"""
Потоковые решающие процедуры SID и SD по t-векторам

В каждом канале первое слово открывает ожидающий сегмент; обнаруженная смена
диктора также открывает сегмент, который финализируется через D слов. Пока
сегмент ожидает финализации, новые смены в канале не обнаруживаются.
"""

import logging
from collections import Counter
from typing import List, Dict, Optional, Sequence, Tuple

import numpy as np

from src.core.algorithms.spectral_clustering import nme_spectral_clustering, stitch_labels
from src.core.algorithms.tsot import deserialize, merge_channels
from src.core.errors import NoProfiles, TVectorCountMismatch
from src.core.models.attribution import (
    AttributionState, ChannelState, PendingChange, Segment, ClusterResult, AttributionResult, LabelRevision
)
from src.core.models.run_config import AttributionConfig
from src.core.models.speaker import SpeakerProfile, TVector, profile_matrix
from src.core.models.token import SerializedStream, TokenEvent

logger = logging.getLogger(__name__)


def _unit(vector: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vector)
    return vector / norm if norm > 0 else vector


def adjacent_cosine(current: np.ndarray, previous: np.ndarray) -> float:
    """Косинус соседних t-векторов, ограниченный отрезком [-1, 1]"""
    return float(np.clip(np.dot(_unit(current), _unit(previous)), -1.0, 1.0))


def identify_speaker(tvector: TVector, profiles: Sequence[SpeakerProfile]) -> str:
    """
    Сырое решение SID: профиль с наибольшим косинусом

    Args:
        tvector: t-вектор токена
        profiles: Профили дикторов (единичные d-векторы)

    Returns:
        str: Идентификатор диктора (при равенстве - первый профиль)

    Raises:
        NoProfiles: Если профили не заданы
    """
    if not profiles:
        raise NoProfiles("Для SID нужен хотя бы один профиль диктора")
    scores = profile_matrix(profiles) @ tvector.normalized()
    return profiles[int(np.argmax(scores))].speaker_id


def _decide(pending: PendingChange, rule: str) -> Optional[str]:
    labels = pending.raw_labels
    if not labels or labels[-1] is None:
        return None
    if rule == 'final':
        return labels[-1]
    counts = Counter(labels)
    top = max(counts.values())
    # при равенстве голосов побеждает метка, встретившаяся позже
    for label in reversed(labels):
        if counts[label] == top:
            return label
    return labels[-1]


def _advance(state: AttributionState, channel_state: ChannelState, is_change: bool,
             raw_label: Optional[str], embedding: np.ndarray) -> Optional[Segment]:
    index = channel_state.word_count
    finalized = None

    if channel_state.pending is None and (index == 0 or is_change):
        if index > 0:
            channel_state.change_points.append(index)
            current = channel_state.current_segment
            if current is not None:
                current.end = index - 1
        channel_state.pending = PendingChange(start=index, is_stream_start=index == 0)
        channel_state.segments.append(Segment(channel=channel_state.channel, start=index))

    if channel_state.pending is not None:
        channel_state.pending.raw_labels.append(raw_label)
        if index == channel_state.pending.start + state.delay_words:
            segment = channel_state.segments[-1]
            segment.final_at = index
            segment.label = _decide(channel_state.pending, state.decision_rule)
            segment.embedding = embedding
            channel_state.pending = None
            finalized = segment

    channel_state.word_count += 1
    return finalized


def sid_step(state: AttributionState, channel: int, tvector: TVector,
             profiles: Sequence[SpeakerProfile]) -> Tuple[AttributionState, Optional[Segment]]:
    """
    Один шаг потоковой идентификации дикторов

    Args:
        state: Состояние атрибуции
        channel: Виртуальный канал слова
        tvector: t-вектор слова
        profiles: Профили кандидатов

    Returns:
        Tuple[AttributionState, Optional[Segment]]: Состояние и финализированный сегмент, если он есть

    Raises:
        NoProfiles: Если профили не заданы
    """
    raw_label = identify_speaker(tvector, profiles)
    channel_state = state.channel(channel)
    is_change = channel_state.last_raw_label is not None and raw_label != channel_state.last_raw_label
    finalized = _advance(state, channel_state, is_change, raw_label, tvector.embedding)
    channel_state.last_raw_label = raw_label
    channel_state.last_embedding = tvector.embedding
    return state, finalized


def sd_step(state: AttributionState, channel: int, tvector: TVector,
            threshold: float = 0.98) -> Tuple[AttributionState, Optional[Segment]]:
    """
    Один шаг потоковой диаризации

    Смена диктора объявляется, когда косинус соседних t-векторов меньше порога;
    t-вектор через D слов после смены становится эмбеддингом сегмента.

    Args:
        state: Состояние атрибуции
        channel: Виртуальный канал слова
        tvector: t-вектор слова
        threshold: Порог косинуса

    Returns:
        Tuple[AttributionState, Optional[Segment]]: Состояние и сегмент с новым эмбеддингом, если он есть
    """
    channel_state = state.channel(channel)
    previous = channel_state.last_embedding
    is_change = previous is not None and adjacent_cosine(tvector.embedding, previous) < threshold
    finalized = _advance(state, channel_state, is_change, None, tvector.embedding)
    channel_state.last_embedding = tvector.embedding
    return state, finalized


def flush_channel(state: AttributionState, channel: int) -> Optional[Segment]:
    """
    Финализирует ожидающий сегмент в конце потока по последнему t-вектору канала

    Args:
        state: Состояние атрибуции
        channel: Канал

    Returns:
        Optional[Segment]: Финализированный сегмент или None
    """
    channel_state = state.channel(channel)
    if channel_state.pending is None:
        return None
    segment = channel_state.segments[-1]
    segment.final_at = channel_state.word_count - 1
    segment.label = _decide(channel_state.pending, state.decision_rule)
    segment.embedding = channel_state.last_embedding
    channel_state.pending = None
    logger.debug(f"Канал {channel}: сегмент с позиции {segment.start} финализирован в конце потока")
    return segment


def recluster(embeddings: Sequence[np.ndarray], oracle_k: Optional[int] = None, max_speakers: int = 8,
              max_neighbors: int = 20, n_init: int = 10, seed: int = 0) -> ClusterResult:
    """
    Повторная кластеризация всех сегментных эмбеддингов (NME-SC)

    Args:
        embeddings: Эмбеддинги сегментов всех каналов
        oracle_k: Известное число дикторов или None для оценки по собственному зазору
        max_speakers: Верхняя граница оценки числа дикторов
        max_neighbors: Верхняя граница перебора p
        n_init: Число перезапусков k-means
        seed: Зерно k-means

    Returns:
        ClusterResult: Кластеры сегментов

    Raises:
        TooFewSegments: Если сегментов меньше oracle_k
    """
    matrix = np.stack([_unit(np.asarray(e, dtype=np.float64)) for e in embeddings])
    return nme_spectral_clustering(matrix, num_clusters=oracle_k, max_clusters=max_speakers,
                                   max_neighbors=max_neighbors, n_init=n_init, seed=seed)


def group_words(events: Sequence[TokenEvent], marker: Optional[str]) -> List[List[int]]:
    """
    Группирует токены в слова внутри каналов

    Без маркера каждый токен - отдельное слово. С маркером токен, не
    начинающийся с него, продолжает предыдущее слово своего канала.

    Args:
        events: Токены в порядке потока с заполненным каналом
        marker: Маркер начала слова (например, '▁') или None

    Returns:
        List[List[int]]: Индексы токенов каждого слова, слова упорядочены по последнему токену
    """
    if marker is None:
        return [[i] for i in range(len(events))]
    open_words: Dict[int, List[int]] = {}
    words: List[List[int]] = []
    for i, event in enumerate(events):
        current = open_words.get(event.channel)
        if current is None or event.token.startswith(marker):
            current = [i]
            words.append(current)
            open_words[event.channel] = current
        else:
            current.append(i)
    return sorted(words, key=lambda word: word[-1])


class _LabelBook:
    """Метки токенов, моменты их финализации и история пересмотров"""

    def __init__(self, num_tokens: int):
        self.labels: List[Optional[str]] = [None] * num_tokens
        self.final_at: List[int] = [-1] * num_tokens
        self.delays: List[int] = [0] * num_tokens
        self.history: List[LabelRevision] = []

    def assign(self, tokens: Sequence[int], label: Optional[str], step: int, delay: int) -> None:
        for token in tokens:
            if self.labels[token] is not None and self.labels[token] != label:
                self.history.append(LabelRevision(step, token, self.labels[token], label))
            self.labels[token] = label
            self.final_at[token] = max(self.final_at[token], step)
            self.delays[token] = max(self.delays[token], delay)


def attribute_stream(stream: SerializedStream, tvectors: Sequence[TVector], mode: str = 'sid',
                     config: Optional[AttributionConfig] = None,
                     profiles: Optional[Sequence[SpeakerProfile]] = None,
                     num_speakers: Optional[int] = None,
                     times: Optional[Sequence[float]] = None) -> AttributionResult:
    """
    Потоковая атрибуция дикторов сериализованной гипотезы

    Поток раскладывается по виртуальным каналам, затем слова обрабатываются
    в порядке потока процедурой SID или SD своего канала.

    Args:
        stream: Сериализованная гипотеза
        tvectors: По одному t-вектору на обычный (не <cc>) токен
        mode: 'sid' или 'sd'
        config: Параметры атрибуции
        profiles: Профили кандидатов (для SID)
        num_speakers: Оракульное число дикторов (для SD)
        times: Времена начала по позициям потока

    Returns:
        AttributionResult: Итоговые метки, моменты финализации, сегменты и история меток

    Raises:
        TVectorCountMismatch: Если число t-векторов не равно числу обычных токенов
        NoProfiles: Если в режиме SID не заданы профили
    """
    config = config or AttributionConfig(mode=mode)
    if mode not in ('sid', 'sd'):
        raise ValueError(f"Неизвестный режим атрибуции '{mode}'")
    if mode == 'sid' and not profiles:
        raise NoProfiles("Для SID нужны профили дикторов")

    events = merge_channels(deserialize(stream, times))
    if len(tvectors) != len(events):
        raise TVectorCountMismatch(f"t-векторов {len(tvectors)}, обычных токенов {len(events)}")

    state = AttributionState(delay_words=config.delay_words, decision_rule=config.decision_rule)
    book = _LabelBook(len(events))
    words = group_words(events, config.word_boundary_marker)
    channel_words: Dict[int, List[List[int]]] = {}

    oracle_k = num_speakers if (mode == 'sd' and config.oracle_num_speakers) else None
    sd_segments: List[Segment] = []
    sd_labels: List[int] = []

    def segment_label(segment: Segment) -> Optional[str]:
        if mode == 'sid':
            return segment.label
        return f"spk{sd_labels[sd_segments.index(segment)]}"

    def label_segment_words(channel: int, segment: Segment, step: int, last_word: int) -> None:
        label = segment_label(segment)
        for word_index in range(segment.start, last_word + 1):
            book.assign(channel_words[channel][word_index], label, step, last_word - word_index)

    def on_finalized(channel: int, segment: Segment, step: int) -> None:
        if mode == 'sd':
            sd_segments.append(segment)
            k = min(oracle_k, len(sd_segments)) if oracle_k is not None else None
            result = recluster([s.embedding for s in sd_segments], k, config.max_speakers,
                               config.max_neighbors, config.kmeans_restarts, config.seed)
            sd_labels[:] = stitch_labels(sd_labels, result.labels)
            for other in sd_segments[:-1]:
                last = state.channel(other.channel).word_count - 1 if other.end is None else other.end
                relabel = segment_label(other)
                for word_index in range(other.start, last + 1):
                    for token in channel_words[other.channel][word_index]:
                        if book.labels[token] is not None and book.labels[token] != relabel:
                            book.assign([token], relabel, step, book.delays[token])
        label_segment_words(channel, segment, step, segment.final_at)

    for word in words:
        channel = events[word[0]].channel
        channel_words.setdefault(channel, []).append(word)
        tvector = tvectors[word[-1]]
        step = word[-1]
        if mode == 'sid':
            _, finalized = sid_step(state, channel, tvector, profiles)
        else:
            _, finalized = sd_step(state, channel, tvector, config.sd_threshold)

        channel_state = state.channel(channel)
        if finalized is not None:
            on_finalized(channel, finalized, step)
        elif channel_state.pending is None and channel_state.current_segment is not None:
            book.assign(word, segment_label(channel_state.current_segment), step, 0)

    last_step = len(events) - 1
    for channel in sorted(state.channels):
        segment = flush_channel(state, channel)
        if segment is not None:
            on_finalized(channel, segment, last_step)

    labeled = [
        TokenEvent(token=event.token, speaker_id=label, start_time=event.start_time,
                   duration=event.duration, channel=event.channel, position=event.position)
        for event, label in zip(events, book.labels)
    ]
    segments = state.all_segments()
    result = AttributionResult(
        tokens=labeled,
        final_at=book.final_at,
        decision_delays=book.delays,
        segments=segments,
        change_points={c: list(s.change_points) for c, s in state.channels.items()},
        history=book.history,
        mode=mode,
    )
    logger.info(
        f"Атрибуция ({mode}, D={config.delay_words}): токенов {len(events)}, "
        f"сегментов {len(segments)}, смен {result.num_changes}"
    )
    return result


def missed_changes(true_changes: Sequence[int], detected_changes: Sequence[int]) -> int:
    """Число истинных точек смены, не обнаруженных точно в своей позиции"""
    detected = set(detected_changes)
    return sum(1 for point in true_changes if point not in detected)
