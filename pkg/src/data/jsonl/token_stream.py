import json
import logging
from typing import List, Iterable, Sequence

from src.core.errors import EmptyInput
from src.core.models.speaker import SpeakerProfile
from src.core.models.token import TokenEvent, SerializedStream
from src.utils.file_utils import ensure_parent

logger = logging.getLogger(__name__)


def write_records(path: str, records: Iterable[dict]) -> int:
    """
    Записывает словари в JSONL-файл

    Args:
        path: Путь к файлу
        records: Записи

    Returns:
        int: Число записанных строк
    """
    ensure_parent(path)
    count = 0
    with open(path, 'w', encoding='utf-8') as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False))
            f.write('\n')
            count += 1
    return count


def read_records(path: str) -> List[dict]:
    """
    Читает JSONL-файл, пропуская пустые строки

    Args:
        path: Путь к файлу

    Returns:
        List[dict]: Записи

    Raises:
        ValueError: Если строка не является JSON-объектом
    """
    records = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{line_number}: некорректный JSON: {e}") from e
            if not isinstance(record, dict):
                raise ValueError(f"{path}:{line_number}: ожидался JSON-объект")
            records.append(record)
    return records


def write_tokens(path: str, events: Sequence[TokenEvent]) -> int:
    """Сохраняет токены в формате {token, speaker, start, duration}"""
    count = write_records(path, (event.to_dict() for event in events))
    logger.debug(f"Записано {count} токенов в {path}")
    return count


def read_tokens(path: str) -> List[TokenEvent]:
    return [TokenEvent.from_dict(record) for record in read_records(path)]


def split_by_speaker(events: Sequence[TokenEvent]) -> List[List[TokenEvent]]:
    """
    Раскладывает токены по дикторам (в порядке первого появления)

    Args:
        events: Токены с метками дикторов

    Returns:
        List[List[TokenEvent]]: Потоки токенов, отсортированные по времени начала

    Raises:
        EmptyInput: Если токенов нет
    """
    if not events:
        raise EmptyInput("Файл токенов пуст")
    streams = {}
    for event in events:
        streams.setdefault(event.speaker_id, []).append(event)
    return [sorted(stream, key=lambda e: e.start_time) for stream in streams.values()]


def write_profiles(path: str, profiles: Sequence[SpeakerProfile]) -> int:
    """Сохраняет пул профилей: по строке {speaker_id, vector} на диктора"""
    return write_records(path, (profile.to_dict() for profile in profiles))


def read_profiles(path: str) -> List[SpeakerProfile]:
    return [SpeakerProfile.from_dict(record) for record in read_records(path)]


def write_stream_text(path: str, stream: SerializedStream) -> None:
    """Сохраняет поток t-SOT как одну строку с литералом <cc>"""
    ensure_parent(path)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(stream.to_text())
        f.write('\n')


def read_stream_text(path: str, max_channels: int = 2) -> SerializedStream:
    with open(path, 'r', encoding='utf-8') as f:
        return SerializedStream.from_text(f.read(), max_channels=max_channels)
