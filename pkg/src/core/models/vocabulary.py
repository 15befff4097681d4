from dataclasses import dataclass
from typing import List, Dict, Any, Sequence, Tuple

from src.core.models.token import BLANK_SYMBOL, CC_SYMBOL

BLANK_INDEX = 0
CC_INDEX = 1


@dataclass(frozen=True)
class Vocabulary:
    """Словарь распознавания: <blank>, <cc> и словарные символы"""

    symbols: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, 'symbols', tuple(self.symbols))
        if self.symbols[:2] != (BLANK_SYMBOL, CC_SYMBOL):
            raise ValueError("Словарь должен начинаться с <blank> и <cc>")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("Символы словаря должны быть уникальны")
        object.__setattr__(self, '_index', {symbol: i for i, symbol in enumerate(self.symbols)})

    @classmethod
    def from_words(cls, words: Sequence[str]) -> 'Vocabulary':
        """
        Создает словарь из списка слов

        Args:
            words: Словарные символы без служебных

        Returns:
            Vocabulary: Словарь с <blank> и <cc> в начале
        """
        return cls(symbols=(BLANK_SYMBOL, CC_SYMBOL) + tuple(words))

    @classmethod
    def synthetic(cls, size: int) -> 'Vocabulary':
        """Словарь из size синтетических слов w00, w01, ..."""
        width = max(2, len(str(size - 1)))
        return cls.from_words([f"w{i:0{width}d}" for i in range(size)])

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def blank_index(self) -> int:
        return BLANK_INDEX

    @property
    def cc_index(self) -> int:
        return CC_INDEX

    @property
    def words(self) -> List[str]:
        return list(self.symbols[2:])

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise ValueError(f"Символ '{symbol}' отсутствует в словаре")

    def encode(self, symbols: Sequence[str]) -> List[int]:
        return [self.index(symbol) for symbol in symbols]

    def decode(self, indices: Sequence[int]) -> List[str]:
        return [self.symbols[i] for i in indices]

    def to_dict(self) -> Dict[str, Any]:
        return {'symbols': list(self.symbols)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Vocabulary':
        return cls(symbols=tuple(data['symbols']))
