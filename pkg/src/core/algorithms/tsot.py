import logging
from typing import List, Dict, Optional, Sequence, Tuple, Hashable

from src.core.errors import OverlapBudgetExceeded, EmptyInput
from src.core.models.token import TokenEvent, SerializedStream, ChannelTranscript, CC_SYMBOL

logger = logging.getLogger(__name__)

CHANNEL_POLICIES = ('speaker', 'virtual')


def _speaker_key(event: TokenEvent, stream_index: int) -> Hashable:
    # Поток без меток дикторов считается отдельным диктором
    return event.speaker_id if event.speaker_id is not None else ('stream', stream_index)


def utterance_spans(streams: Sequence[Sequence[TokenEvent]]) -> List[Tuple[float, float, int, Hashable]]:
    """
    Вычисляет временные интервалы высказываний

    Высказывание - группа токенов одного потока с общим utterance_id; если
    utterance_id не задан, весь поток считается одним высказыванием.

    Args:
        streams: Последовательности токенов по дикторам

    Returns:
        List[Tuple[float, float, int, Hashable]]: (начало, конец, индекс потока, ключ высказывания),
        отсортированные по началу и индексу потока
    """
    spans = []
    for stream_index, stream in enumerate(streams):
        groups: Dict[Hashable, List[TokenEvent]] = {}
        for event in stream:
            groups.setdefault(event.utterance_id, []).append(event)
        for key, events in groups.items():
            start = min(e.start_time for e in events)
            end = max(e.end_time for e in events)
            spans.append((start, end, stream_index, key))
    spans.sort(key=lambda span: (span[0], span[2]))
    return spans


def check_overlap_budget(streams: Sequence[Sequence[TokenEvent]], max_overlap: int) -> int:
    """
    Проверяет, что одновременно звучит не больше max_overlap высказываний

    Args:
        streams: Последовательности токенов по дикторам
        max_overlap: Допустимое число одновременных высказываний M

    Returns:
        int: Максимальное наблюдаемое число одновременных высказываний

    Raises:
        OverlapBudgetExceeded: Если бюджет M превышен
    """
    events = []
    for start, end, _, _ in utterance_spans(streams):
        events.append((start, 1))
        events.append((max(end, start), -1))
    # На одном моменте окончание обрабатывается раньше начала
    events.sort(key=lambda item: (item[0], item[1]))

    active = 0
    peak = 0
    for time, delta in events:
        active += delta
        peak = max(peak, active)
        if active > max_overlap:
            raise OverlapBudgetExceeded(
                f"В момент {time:.3f} с звучат {active} высказываний при бюджете M={max_overlap}"
            )
    return peak


def chronological_order(streams: Sequence[Sequence[TokenEvent]]) -> List[Tuple[int, TokenEvent]]:
    """
    Сортирует токены всех потоков по времени начала

    Равные моменты упорядочиваются по индексу потока, затем по позиции в потоке.

    Args:
        streams: Последовательности токенов по дикторам

    Returns:
        List[Tuple[int, TokenEvent]]: Пары (индекс потока, токен) в хронологическом порядке
    """
    indexed = []
    for stream_index, stream in enumerate(streams):
        previous = None
        for position, event in enumerate(stream):
            if previous is not None and event.start_time < previous:
                raise ValueError(f"Поток {stream_index} не отсортирован по времени (позиция {position})")
            previous = event.start_time
            indexed.append((event.start_time, stream_index, position, event))
    indexed.sort(key=lambda item: item[:3])
    return [(stream_index, event) for _, stream_index, _, event in indexed]


def assign_virtual_channels(streams: Sequence[Sequence[TokenEvent]], max_channels: int) -> List[TokenEvent]:
    """
    Назначает высказываниям виртуальные каналы

    Каждое высказывание получает канал с наименьшим номером, предыдущее
    высказывание которого уже закончилось.

    Args:
        streams: Последовательности токенов по дикторам
        max_channels: Число виртуальных каналов M

    Returns:
        List[TokenEvent]: Токены в хронологическом порядке с заполненным channel

    Raises:
        OverlapBudgetExceeded: Если свободного канала не нашлось
    """
    channel_end = [float('-inf')] * max_channels
    assignment: Dict[Tuple[int, Hashable], int] = {}
    for start, end, stream_index, key in utterance_spans(streams):
        free = [c for c in range(max_channels) if channel_end[c] <= start]
        if not free:
            raise OverlapBudgetExceeded(
                f"Нет свободного канала для высказывания, начинающегося в {start:.3f} с (M={max_channels})"
            )
        channel = free[0]
        channel_end[channel] = end
        assignment[(stream_index, key)] = channel

    return [
        event.with_channel(assignment[(stream_index, event.utterance_id)])
        for stream_index, event in chronological_order(streams)
    ]


def serialize(streams: Sequence[Sequence[TokenEvent]], max_overlap: int = 2,
              channel_policy: str = 'speaker') -> SerializedStream:
    """
    Сериализует потоки токенов нескольких дикторов в один поток t-SOT

    Args:
        streams: Отсортированные по времени последовательности токенов по дикторам
        max_overlap: Допустимое число одновременных высказываний M
        channel_policy: 'speaker' - <cc> между токенами разных дикторов,
            'virtual' - <cc> при смене виртуального канала

    Returns:
        SerializedStream: Поток с маркерами <cc>

    Raises:
        EmptyInput: Если все потоки пусты
        OverlapBudgetExceeded: Если одновременно звучит больше M высказываний
    """
    if channel_policy not in CHANNEL_POLICIES:
        raise ValueError(f"Неизвестная политика каналов '{channel_policy}'")
    if not any(len(stream) for stream in streams):
        raise EmptyInput("Все потоки токенов пусты")

    check_overlap_budget(streams, max_overlap)

    if channel_policy == 'virtual':
        keys = [event.channel for event in assign_virtual_channels(streams, max_overlap)]
        ordered = [event for _, event in chronological_order(streams)]
    else:
        pairs = chronological_order(streams)
        keys = [_speaker_key(event, stream_index) for stream_index, event in pairs]
        ordered = [event for _, event in pairs]

    entries: List[str] = []
    for index, event in enumerate(ordered):
        if index > 0 and keys[index] != keys[index - 1]:
            entries.append(CC_SYMBOL)
        entries.append(event.token)

    stream = SerializedStream(entries=tuple(entries), max_channels=max_overlap)
    logger.debug(f"Сериализовано {len(ordered)} токенов, маркеров <cc>: {stream.cc_count}")
    return stream


def _next_channel(channel: int, max_channels: int) -> int:
    if max_channels <= 1:
        return 0
    if max_channels == 2:
        return 1 - channel
    return (channel + 1) % max_channels


def deserialize(stream: SerializedStream, times: Optional[Sequence[float]] = None) -> List[ChannelTranscript]:
    """
    Восстанавливает транскрипции виртуальных каналов из потока t-SOT

    Активный канал переключается на каждом <cc>: для M=2 попеременно,
    для M>2 по кругу. При M>2 номера каналов могут не совпасть с
    назначенными в assign_virtual_channels: там высказывание занимает
    наименьший свободный канал, а здесь выбирается следующий по кругу.
    Сохраняется только структура смен канала, и reserialize возвращает
    исходный поток.

    Args:
        stream: Сериализованный поток
        times: Необязательные времена начала для каждой позиции потока

    Returns:
        List[ChannelTranscript]: Ровно M транскрипций (для M=1 - одна)

    Raises:
        MalformedStream: Если поток начинается с <cc> или содержит два <cc> подряд
    """
    stream.validate()
    if times is not None and len(times) != len(stream.entries):
        raise ValueError(f"Число меток времени ({len(times)}) не совпадает с длиной потока ({len(stream)})")

    num_channels = max(1, stream.max_channels)
    lanes: List[List[TokenEvent]] = [[] for _ in range(num_channels)]
    channel = 0
    for position, symbol in enumerate(stream.entries):
        if symbol == CC_SYMBOL:
            channel = _next_channel(channel, num_channels)
            continue
        start = float(times[position]) if times is not None else 0.0
        lanes[channel].append(TokenEvent(token=symbol, start_time=start, channel=channel, position=position))

    return [ChannelTranscript(channel=index, tokens=tuple(tokens)) for index, tokens in enumerate(lanes)]


def merge_channels(channels: Sequence[ChannelTranscript]) -> List[TokenEvent]:
    """
    Объединяет токены каналов в исходном порядке сериализованного потока

    Args:
        channels: Транскрипции каналов с заполненными позициями

    Returns:
        List[TokenEvent]: Токены в порядке позиций
    """
    events = [event for transcript in channels for event in transcript.tokens]
    if any(event.position is None for event in events):
        raise ValueError("Для объединения каналов у всех токенов должна быть задана позиция")
    return sorted(events, key=lambda event: event.position)


def reserialize(channels: Sequence[ChannelTranscript], max_channels: Optional[int] = None) -> SerializedStream:
    """
    Обратная к deserialize операция: вставляет <cc> на сменах канала

    Args:
        channels: Транскрипции каналов с заполненными позициями
        max_channels: Число каналов M (по умолчанию число транскрипций)

    Returns:
        SerializedStream: Восстановленный поток
    """
    entries: List[str] = []
    previous = None
    for event in merge_channels(channels):
        if previous is not None and event.channel != previous:
            entries.append(CC_SYMBOL)
        entries.append(event.token)
        previous = event.channel
    return SerializedStream(entries=tuple(entries), max_channels=max_channels or max(1, len(channels)))
