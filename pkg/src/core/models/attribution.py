from dataclasses import dataclass, field
from typing import List, Dict, Any, Optional, Tuple

import numpy as np

from src.core.models.token import TokenEvent


@dataclass(eq=False)
class Segment:
    """Сегмент одного диктора внутри канала (индексы слов канала, включительно)"""

    channel: int
    start: int
    end: Optional[int] = None
    label: Optional[str] = None
    embedding: Optional[np.ndarray] = None
    final_at: Optional[int] = None

    @property
    def is_closed(self) -> bool:
        return self.end is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'channel': self.channel,
            'start': self.start,
            'end': self.end,
            'label': self.label,
            'final_at': self.final_at,
        }


@dataclass
class PendingChange:
    """Незавершенная смена диктора: ожидает D слов до финализации"""

    start: int
    raw_labels: List[str] = field(default_factory=list)
    is_stream_start: bool = False


@dataclass
class ChannelState:
    """Состояние решающей процедуры одного виртуального канала"""

    channel: int
    word_count: int = 0
    last_raw_label: Optional[str] = None
    last_embedding: Optional[np.ndarray] = None
    pending: Optional[PendingChange] = None
    segments: List[Segment] = field(default_factory=list)
    change_points: List[int] = field(default_factory=list)

    @property
    def current_segment(self) -> Optional[Segment]:
        if not self.segments or self.segments[-1].is_closed:
            return None
        return self.segments[-1]


@dataclass
class AttributionState:
    """
    Состояние потоковой атрибуции

    Хранит по одному ChannelState на канал. Между обнаруженной сменой и ее
    финализацией новая смена в канале не обнаруживается.
    """

    delay_words: int = 2
    decision_rule: str = 'final'
    channels: Dict[int, ChannelState] = field(default_factory=dict)

    def channel(self, channel: int) -> ChannelState:
        if channel not in self.channels:
            self.channels[channel] = ChannelState(channel=channel)
        return self.channels[channel]

    def all_segments(self) -> List[Segment]:
        """Финализированные сегменты всех каналов в порядке финализации"""
        segments = [s for state in self.channels.values() for s in state.segments if s.final_at is not None]
        return sorted(segments, key=lambda s: (s.final_at, s.channel))


@dataclass(frozen=True)
class ClusterResult:
    """Результат кластеризации сегментных эмбеддингов"""

    labels: Tuple[int, ...]
    num_clusters: int
    neighbors: Optional[int] = None
    estimated: bool = False

    def __post_init__(self):
        labels = tuple(int(label) for label in self.labels)
        if any(not 0 <= label < self.num_clusters for label in labels):
            raise ValueError(f"Индексы кластеров должны лежать в [0, {self.num_clusters})")
        object.__setattr__(self, 'labels', labels)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'labels': list(self.labels),
            'num_clusters': self.num_clusters,
            'neighbors': self.neighbors,
            'estimated': self.estimated,
        }


@dataclass(frozen=True)
class LabelRevision:
    """Изменение метки токена после очередной перекластеризации"""

    step: int
    token_index: int
    old_label: Optional[str]
    new_label: str


@dataclass
class AttributionResult:
    """Итог атрибуции потока: метки, моменты финализации и история меток"""

    tokens: List[TokenEvent]
    final_at: List[int]
    decision_delays: List[int]
    segments: List[Segment]
    change_points: Dict[int, List[int]]
    history: List[LabelRevision] = field(default_factory=list)
    mode: str = 'sid'

    @property
    def labels(self) -> List[Optional[str]]:
        return [event.speaker_id for event in self.tokens]

    @property
    def mean_decision_delay(self) -> float:
        """Средняя задержка финального решения в словах канала"""
        if not self.decision_delays:
            return 0.0
        return float(np.mean(self.decision_delays))

    @property
    def num_changes(self) -> int:
        return sum(len(points) for points in self.change_points.values())

    def to_records(self) -> List[Dict[str, Any]]:
        """Записи JSONL {token, channel, speaker, final_at_token_index}"""
        return [
            {
                'token': event.token,
                'channel': event.channel,
                'speaker': event.speaker_id,
                'final_at_token_index': final_at,
            }
            for event, final_at in zip(self.tokens, self.final_at)
        ]
