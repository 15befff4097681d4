from dataclasses import dataclass
from typing import Dict, Any, Optional, Tuple


@dataclass(frozen=True)
class MaskSpec:
    """
    Поблочная (chunk-wise) маска внимания потокового энкодера

    Кадр t видит окно m(t) = [max(0, начало_блока - left_context), конец_блока),
    индексы кадров с нуля. chunk_size=None означает неограниченный блок
    (полное внимание), left_context=None - неограниченный левый контекст.
    """

    chunk_size: Optional[int] = 4
    left_context: Optional[int] = None

    def __post_init__(self):
        if self.chunk_size is not None and self.chunk_size < 1:
            raise ValueError(f"Размер блока должен быть положительным, получено {self.chunk_size}")
        if self.left_context is not None and self.left_context < 0:
            raise ValueError(f"Левый контекст не может быть отрицательным, получено {self.left_context}")

    @property
    def is_unbounded(self) -> bool:
        return self.chunk_size is None

    def window(self, t: int, num_frames: int) -> Tuple[int, int]:
        """
        Возвращает видимое окно кадра t

        Args:
            t: Индекс кадра
            num_frames: Общее число кадров

        Returns:
            Tuple[int, int]: Полуинтервал [начало, конец)
        """
        if not 0 <= t < num_frames:
            raise IndexError(f"Кадр {t} вне диапазона [0, {num_frames})")
        if self.chunk_size is None:
            chunk_start, chunk_end = 0, num_frames
        else:
            chunk_start = (t // self.chunk_size) * self.chunk_size
            chunk_end = min(num_frames, chunk_start + self.chunk_size)
        if self.left_context is None:
            start = 0
        else:
            start = max(0, chunk_start - self.left_context)
        return start, chunk_end

    def to_dict(self) -> Dict[str, Any]:
        return {'chunk_size': self.chunk_size, 'left_context': self.left_context}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MaskSpec':
        return cls(chunk_size=data.get('chunk_size'), left_context=data.get('left_context'))
