from dataclasses import dataclass
from typing import List, Dict, Any, Sequence

import numpy as np

PROFILE_NORM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SpeakerProfile:
    """Профиль диктора: единичный d-вектор"""

    speaker_id: str
    dvector: np.ndarray

    def __post_init__(self):
        vector = np.asarray(self.dvector, dtype=np.float64).copy()
        vector.setflags(write=False)
        if vector.ndim != 1 or vector.size == 0:
            raise ValueError(f"d-вектор диктора {self.speaker_id} должен быть непустым одномерным массивом")
        norm = float(np.linalg.norm(vector))
        if abs(norm - 1.0) > PROFILE_NORM_TOLERANCE:
            raise ValueError(f"d-вектор диктора {self.speaker_id} не нормирован: ||d|| = {norm}")
        object.__setattr__(self, 'dvector', vector)

    @classmethod
    def from_vector(cls, speaker_id: str, vector: Sequence[float]) -> 'SpeakerProfile':
        """
        Создает профиль, нормируя произвольный ненулевой вектор

        Args:
            speaker_id: Идентификатор диктора
            vector: Ненормированный вектор

        Returns:
            SpeakerProfile: Профиль с единичным d-вектором
        """
        array = np.asarray(vector, dtype=np.float64)
        norm = np.linalg.norm(array)
        if norm == 0 or not np.isfinite(norm):
            raise ValueError(f"Нельзя нормировать вектор диктора {speaker_id}")
        return cls(speaker_id=speaker_id, dvector=array / norm)

    @property
    def dim(self) -> int:
        return int(self.dvector.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpeakerProfile):
            return NotImplemented
        return self.speaker_id == other.speaker_id and np.array_equal(self.dvector, other.dvector)

    def __hash__(self) -> int:
        return hash((self.speaker_id, self.dvector.tobytes()))

    def to_dict(self) -> Dict[str, Any]:
        return {'speaker_id': self.speaker_id, 'vector': self.dvector.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SpeakerProfile':
        return cls.from_vector(data['speaker_id'], data['vector'])


def enroll_profile(speaker_id: str, embeddings: Sequence[Sequence[float]]) -> SpeakerProfile:
    """
    Строит профиль по нескольким эмбеддингам высказываний диктора

    Args:
        speaker_id: Идентификатор диктора
        embeddings: Эмбеддинги отдельных высказываний

    Returns:
        SpeakerProfile: Нормированное среднее нормированных эмбеддингов
    """
    matrix = np.asarray(embeddings, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValueError(f"Для диктора {speaker_id} не передано ни одного эмбеддинга")
    matrix = matrix / np.linalg.norm(matrix, axis=1, keepdims=True)
    return SpeakerProfile.from_vector(speaker_id, matrix.mean(axis=0))


def profile_matrix(profiles: Sequence[SpeakerProfile]) -> np.ndarray:
    """Матрица d-векторов профилей (по строке на профиль)"""
    return np.stack([profile.dvector for profile in profiles])


@dataclass(frozen=True)
class TVector:
    """Потокенный эмбеддинг диктора e_u"""

    embedding: np.ndarray
    token_index: int
    emission_frame: int
    token: str = ""
    is_cc: bool = False

    def __post_init__(self):
        vector = np.asarray(self.embedding, dtype=np.float64).copy()
        vector.setflags(write=False)
        if not np.all(np.isfinite(vector)):
            raise ValueError(f"t-вектор токена {self.token_index} содержит нечисловые значения")
        object.__setattr__(self, 'embedding', vector)

    def normalized(self) -> np.ndarray:
        norm = np.linalg.norm(self.embedding)
        if norm == 0:
            return self.embedding
        return self.embedding / norm

    def __eq__(self, other) -> bool:
        if not isinstance(other, TVector):
            return NotImplemented
        return (self.token_index == other.token_index and self.emission_frame == other.emission_frame
                and self.token == other.token and self.is_cc == other.is_cc
                and np.array_equal(self.embedding, other.embedding))

    def __hash__(self) -> int:
        return hash((self.token_index, self.emission_frame, self.embedding.tobytes()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'embedding': self.embedding.tolist(),
            'token_index': self.token_index,
            'emission_frame': self.emission_frame,
            'token': self.token,
            'is_cc': self.is_cc,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TVector':
        return cls(
            embedding=np.asarray(data['embedding'], dtype=np.float64),
            token_index=int(data['token_index']),
            emission_frame=int(data['emission_frame']),
            token=data.get('token', ''),
            is_cc=bool(data.get('is_cc', False))
        )


def tvector_matrix(tvectors: Sequence[TVector]) -> np.ndarray:
    """Матрица эмбеддингов t-векторов (по строке на токен)"""
    if not tvectors:
        return np.zeros((0, 0))
    return np.stack([tvector.embedding for tvector in tvectors])


def ids_of(profiles: Sequence[SpeakerProfile]) -> List[str]:
    return [profile.speaker_id for profile in profiles]
