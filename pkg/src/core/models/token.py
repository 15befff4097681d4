from dataclasses import dataclass, field, replace
from typing import List, Dict, Any, Optional, Tuple

from src.core.errors import MalformedStream

CC_SYMBOL = "<cc>"
BLANK_SYMBOL = "<blank>"
RESERVED_SYMBOLS = (CC_SYMBOL, BLANK_SYMBOL)


@dataclass(frozen=True)
class TokenEvent:
    """Распознанный (или эталонный) токен с меткой диктора и временем"""

    token: str
    speaker_id: Optional[str] = None
    start_time: float = 0.0
    duration: float = 0.0
    channel: Optional[int] = None
    utterance_id: Optional[str] = None
    position: Optional[int] = None

    def __post_init__(self):
        if self.token in RESERVED_SYMBOLS:
            raise ValueError(f"Токен '{self.token}' зарезервирован и не может быть событием")
        if self.start_time < 0:
            raise ValueError(f"Время начала токена '{self.token}' отрицательно: {self.start_time}")
        if self.duration < 0:
            raise ValueError(f"Длительность токена '{self.token}' отрицательна: {self.duration}")

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration

    def with_channel(self, channel: int, position: Optional[int] = None) -> 'TokenEvent':
        """
        Возвращает копию события с назначенным каналом

        Args:
            channel: Номер виртуального канала
            position: Позиция в сериализованном потоке

        Returns:
            TokenEvent: Новое событие
        """
        return replace(self, channel=channel, position=self.position if position is None else position)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TokenEvent':
        """
        Создает событие из записи JSONL-формата

        Args:
            data: Словарь с полями token, speaker, start, duration

        Returns:
            TokenEvent: Созданное событие
        """
        return cls(
            token=data['token'],
            speaker_id=data.get('speaker'),
            start_time=float(data.get('start', 0.0)),
            duration=float(data.get('duration', 0.0)),
            channel=data.get('channel'),
            utterance_id=data.get('utterance'),
            position=data.get('position')
        )

    def to_dict(self) -> Dict[str, Any]:
        """
        Преобразует событие в запись JSONL-формата

        Returns:
            dict: Словарь с данными токена
        """
        record = {
            'token': self.token,
            'speaker': self.speaker_id,
            'start': self.start_time,
            'duration': self.duration,
        }
        if self.channel is not None:
            record['channel'] = self.channel
        if self.utterance_id is not None:
            record['utterance'] = self.utterance_id
        if self.position is not None:
            record['position'] = self.position
        return record


@dataclass(frozen=True)
class SerializedStream:
    """Последовательность символов t-SOT с маркерами смены канала"""

    entries: Tuple[str, ...]
    max_channels: int = 2

    def __post_init__(self):
        object.__setattr__(self, 'entries', tuple(self.entries))
        if self.max_channels < 1:
            raise ValueError(f"Число каналов должно быть не меньше 1, получено {self.max_channels}")

    def validate(self) -> None:
        """
        Проверяет инварианты потока

        Raises:
            MalformedStream: Если поток начинается с <cc> или содержит два <cc> подряд
        """
        if self.entries and self.entries[0] == CC_SYMBOL:
            raise MalformedStream("Поток не может начинаться с <cc>")
        for index in range(1, len(self.entries)):
            if self.entries[index] == CC_SYMBOL and self.entries[index - 1] == CC_SYMBOL:
                raise MalformedStream(f"Два <cc> подряд в позиции {index}")
        if BLANK_SYMBOL in self.entries:
            raise MalformedStream("Символ <blank> не может входить в сериализованный поток")

    @property
    def cc_count(self) -> int:
        return sum(1 for symbol in self.entries if symbol == CC_SYMBOL)

    @property
    def tokens(self) -> List[str]:
        """Обычные токены без маркеров <cc>"""
        return [symbol for symbol in self.entries if symbol != CC_SYMBOL]

    def __len__(self) -> int:
        return len(self.entries)

    def to_text(self) -> str:
        return " ".join(self.entries)

    @classmethod
    def from_text(cls, text: str, max_channels: int = 2) -> 'SerializedStream':
        """
        Разбирает поток из текстового представления

        Args:
            text: Символы через пробел, маркер смены канала записан как <cc>
            max_channels: Число виртуальных каналов

        Returns:
            SerializedStream: Разобранный поток
        """
        return cls(entries=tuple(text.split()), max_channels=max_channels)

    def to_dict(self) -> Dict[str, Any]:
        return {'entries': list(self.entries), 'max_channels': self.max_channels}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SerializedStream':
        return cls(entries=tuple(data['entries']), max_channels=data.get('max_channels', 2))


@dataclass(frozen=True)
class ChannelTranscript:
    """Транскрипция одного виртуального канала"""

    channel: int
    tokens: Tuple[TokenEvent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'tokens', tuple(self.tokens))

    @property
    def words(self) -> List[str]:
        return [event.token for event in self.tokens]

    def to_dict(self) -> Dict[str, Any]:
        return {'channel': self.channel, 'tokens': [event.to_dict() for event in self.tokens]}
