from dataclasses import dataclass, field
from typing import List, Dict, Any, Optional, Sequence, Tuple

from src.core.models.token import CC_SYMBOL, SerializedStream


@dataclass
class DecodedStream:
    """Результат распознавания смеси: поток t-SOT с кадрами и временами выдачи"""

    sample_id: str
    stream: SerializedStream
    frames: List[int] = field(default_factory=list)
    times: List[float] = field(default_factory=list)
    score: float = 0.0
    commits: List[int] = field(default_factory=list)

    @property
    def token_frames(self) -> List[int]:
        """Кадры выдачи обычных (не <cc>) токенов"""
        return [frame for symbol, frame in zip(self.stream.entries, self.frames) if symbol != CC_SYMBOL]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sample_id': self.sample_id,
            'stream': self.stream.to_dict(),
            'frames': list(self.frames),
            'times': list(self.times),
            'score': self.score,
            'commits': list(self.commits),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DecodedStream':
        return cls(
            sample_id=data['sample_id'],
            stream=SerializedStream.from_dict(data['stream']),
            frames=[int(f) for f in data.get('frames', [])],
            times=[float(t) for t in data.get('times', [])],
            score=float(data.get('score', 0.0)),
            commits=[int(c) for c in data.get('commits', [])],
        )


def clean_symbols(symbols: Sequence[Tuple[str, int]]) -> List[Tuple[str, int]]:
    """
    Убирает из гипотезы ведущий <cc> и повторные <cc> подряд

    Args:
        symbols: Пары (символ, кадр) в порядке выдачи

    Returns:
        List[Tuple[str, int]]: Пары, образующие корректный поток t-SOT
    """
    cleaned: List[Tuple[str, int]] = []
    for symbol, frame in symbols:
        if symbol == CC_SYMBOL and (not cleaned or cleaned[-1][0] == CC_SYMBOL):
            continue
        cleaned.append((symbol, frame))
    return cleaned


def build_decoded_stream(sample_id: str, symbols: Sequence[Tuple[str, int]], frame_seconds: float,
                         max_channels: int = 2, score: float = 0.0,
                         commits: Optional[Sequence[int]] = None) -> DecodedStream:
    """
    Собирает DecodedStream из выданных символов

    Args:
        sample_id: Идентификатор образца
        symbols: Пары (символ, кадр энкодера)
        frame_seconds: Длительность кадра энкодера в секундах
        max_channels: Число виртуальных каналов
        score: Оценка гипотезы
        commits: Кадры фиксации луча

    Returns:
        DecodedStream: Поток с кадрами и временами
    """
    cleaned = clean_symbols(symbols)
    return DecodedStream(
        sample_id=sample_id,
        stream=SerializedStream(entries=tuple(s for s, _ in cleaned), max_channels=max_channels),
        frames=[f for _, f in cleaned],
        times=[round(f * frame_seconds, 6) for _, f in cleaned],
        score=score,
        commits=list(commits or []),
    )
