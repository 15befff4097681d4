from dataclasses import dataclass, field, fields, asdict
from typing import List, Dict, Any, Optional, Tuple

import numpy as np

from src.core.models.speaker import SpeakerProfile
from src.core.models.token import TokenEvent, SerializedStream


@dataclass(frozen=True)
class MixtureSpec:
    """
    Параметры генерации синтетических смесей

    Задержки между началами высказываний распределены равномерно в
    [min_delay_seconds, max_delay_seconds].
    """

    min_speakers: int = 2
    max_speakers: int = 2
    utterances_per_speaker: int = 1
    min_delay_seconds: float = 0.5
    max_delay_seconds: float = 1.5
    vocab_size: int = 32
    min_tokens: int = 4
    max_tokens: int = 8
    min_word_seconds: float = 0.16
    max_word_seconds: float = 0.32
    max_gap_seconds: float = 0.08
    intra_cosine: float = 0.95
    inter_cosine: float = 0.2
    noise_level: float = 0.05
    voice_gain: float = 0.6
    feature_dim: int = 24
    profile_dim: int = 32
    frame_hop_seconds: float = 0.01
    population_size: int = 40
    num_profiles: int = 8
    profile_utterances: int = 2
    max_overlap: int = 2
    max_attempts: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.min_speakers <= self.max_speakers <= 5:
            raise ValueError("Число дикторов в смеси должно лежать в диапазоне 1..5")
        if self.min_delay_seconds < 0 or self.max_delay_seconds < self.min_delay_seconds:
            raise ValueError("Некорректное окно задержек")
        if not 1 <= self.min_tokens <= self.max_tokens:
            raise ValueError("Некорректная длина высказываний")
        if not 0 < self.min_word_seconds <= self.max_word_seconds:
            raise ValueError("Некорректная длительность слов")
        if not -1.0 <= self.inter_cosine < 1.0 or not 0.0 < self.intra_cosine <= 1.0:
            raise ValueError("Косинусы должны лежать в [-1, 1]")
        if self.population_size < self.max_speakers:
            raise ValueError("Популяция дикторов меньше числа дикторов в смеси")
        if self.num_profiles < self.max_speakers:
            raise ValueError("Пул профилей должен включать всех дикторов смеси")
        if self.population_size < self.num_profiles:
            raise ValueError("Популяция дикторов меньше пула профилей")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MixtureSpec':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"Неизвестные параметры симуляции: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Mixture:
    """Одна синтетическая смесь с эталонной разметкой"""

    sample_id: str
    features: np.ndarray
    tokens: List[TokenEvent]
    serialized: SerializedStream
    speaker_labels: List[str]
    profiles: List[SpeakerProfile]
    seed: int = 0
    word_durations: List[float] = field(default_factory=list)
    oracle_embeddings: Optional[np.ndarray] = None

    @property
    def num_frames(self) -> int:
        return int(self.features.shape[0])

    @property
    def speakers(self) -> List[str]:
        """Дикторы смеси в порядке первого появления"""
        seen: Dict[str, None] = {}
        for event in self.tokens:
            seen.setdefault(event.speaker_id, None)
        return list(seen)

    def tokens_by_speaker(self) -> Dict[str, List[TokenEvent]]:
        result: Dict[str, List[TokenEvent]] = {}
        for event in self.tokens:
            result.setdefault(event.speaker_id, []).append(event)
        return result

    def summary(self) -> Dict[str, Any]:
        return {
            'sample_id': self.sample_id,
            'num_frames': self.num_frames,
            'feature_dim': int(self.features.shape[1]),
            'num_tokens': len(self.tokens),
            'speakers': self.speakers,
            'serialized': self.serialized.to_text(),
            'seed': self.seed,
        }


@dataclass(frozen=True)
class SpeakerPopulation:
    """Популяция синтетических дикторов с истинными d-векторами"""

    speaker_ids: Tuple[str, ...]
    dvectors: np.ndarray
    voice_matrix: np.ndarray

    def vector(self, speaker_id: str) -> np.ndarray:
        return self.dvectors[self.speaker_ids.index(speaker_id)]

    def voice(self, speaker_id: str) -> np.ndarray:
        """Голосовой вектор диктора в пространстве признаков"""
        return self.voice_matrix @ self.vector(speaker_id)

    def profile(self, speaker_id: str) -> SpeakerProfile:
        return SpeakerProfile.from_vector(speaker_id, self.vector(speaker_id))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpeakerPopulation):
            return NotImplemented
        return (self.speaker_ids == other.speaker_ids and np.array_equal(self.dvectors, other.dvectors)
                and np.array_equal(self.voice_matrix, other.voice_matrix))

    __hash__ = None
