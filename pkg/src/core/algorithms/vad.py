import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from src.core.errors import EmptyInput

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnergyVad:
    """Детектор речи по порогу средней энергии кадра"""

    threshold: float
    stride: int = 1

    def frame_energy(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] == 0:
            raise EmptyInput("Для VAD нужна непустая матрица признаков [T, F]")
        return np.mean(features ** 2, axis=1)

    def silence_mask(self, features: np.ndarray) -> List[bool]:
        """
        Маска тишины по кадрам после прореживания

        Кадр энкодера считается тихим, если тихи все входные кадры его окна.

        Args:
            features: Признаки [T', F]

        Returns:
            List[bool]: Флаги тишины длины ceil(T'/stride)
        """
        quiet = self.frame_energy(features) < self.threshold
        num_frames = -(-len(quiet) // self.stride)
        mask = [bool(np.all(quiet[i * self.stride:(i + 1) * self.stride])) for i in range(num_frames)]
        logger.debug(f"VAD: тихих кадров {sum(mask)} из {num_frames}")
        return mask
