import logging
from typing import List, Dict, Optional, Sequence, Tuple

import numpy as np
import torch

from src.core.errors import DimensionMismatch, EmptyInput
from src.core.models.mixture import Mixture, SpeakerPopulation
from src.core.models.run_config import ModelConfig, TrainingConfig
from src.core.models.speaker import TVector
from src.core.models.token import CC_SYMBOL
from src.core.models.vocabulary import CC_INDEX
from src.core.nn.checkpoint import load_checkpoint, save_checkpoint
from src.core.nn.kernel import DTYPE
from src.core.nn.losses import speaker_loss
from src.core.nn.optim import build_optimizer, clip_gradients
from src.core.nn.speaker import SpeakerEncoder, TVectorDecoder
from src.core.services.asr_service import AsrService

logger = logging.getLogger(__name__)


class SpeakerModule(torch.nn.Module):
    """Энкодер дикторов и декодер t-векторов как один обучаемый модуль"""

    def __init__(self, config: ModelConfig, feature_dim: int, vocab_size: int):
        super().__init__()
        self.encoder = SpeakerEncoder(config, feature_dim)
        self.decoder = TVectorDecoder(config, vocab_size)


def sample_candidates(rng: np.random.Generator, speakers: Sequence[str], population: SpeakerPopulation,
                      max_candidates: int = 8) -> List[str]:
    """
    Кандидаты для функции потерь: истинные дикторы смеси и случайные дикторы популяции

    Args:
        rng: Генератор случайных чисел
        speakers: Дикторы смеси
        population: Популяция
        max_candidates: Общее число кандидатов

    Returns:
        List[str]: Идентификаторы кандидатов (истинные дикторы первыми)
    """
    candidates = list(dict.fromkeys(speakers))
    others = [s for s in population.speaker_ids if s not in candidates]
    extra = max(0, min(len(others), max_candidates - len(candidates)))
    if extra:
        candidates += [others[i] for i in rng.choice(len(others), size=extra, replace=False)]
    return candidates


class SpeakerService:
    """Сервис обучения и применения модуля t-векторов поверх замороженного ASR"""

    def __init__(self, asr: AsrService):
        """
        Инициализирует сервис дикторов

        Args:
            asr: Сервис распознавания с обученной моделью
        """
        self.asr = asr
        self.config = asr.config
        self.module = SpeakerModule(asr.config, asr.feature_dim, len(asr.vocabulary))
        self._alignments: Dict[str, List[int]] = {}

    def embeddings(self, features: np.ndarray, tokens_with_frames: Sequence[Tuple[int, int]]) -> torch.Tensor:
        """
        t-векторы [U, profile_dim] с графом вычислений по параметрам модуля дикторов

        Args:
            features: Признаки [T', F]
            tokens_with_frames: Пары (индекс токена, кадр энкодера)

        Returns:
            torch.Tensor: Эмбеддинги токенов
        """
        features = torch.as_tensor(features, dtype=DTYPE)
        with torch.no_grad():
            asr_state = self.asr.model.encode(features, self.asr.mask)
        speaker_state = self.module.encoder(features, asr_state, self.asr.mask)
        return self.module.decoder.embeddings(speaker_state.output, tokens_with_frames)

    def extract(self, features: np.ndarray, symbols: Sequence[str], frames: Sequence[int]) -> List[TVector]:
        """
        t-векторы обычных токенов потока

        Args:
            features: Признаки [T', F]
            symbols: Символы потока (с <cc>)
            frames: Кадры выдачи символов

        Returns:
            List[TVector]: По t-вектору на каждый обычный токен, в порядке потока
        """
        if len(symbols) != len(frames):
            raise DimensionMismatch("Число символов и кадров выдачи не совпадает")
        tokens = self.asr.vocabulary.encode(symbols)
        with torch.no_grad():
            matrix = self.embeddings(features, list(zip(tokens, frames))).numpy()
        return [
            TVector(embedding=matrix[u], token_index=u, emission_frame=int(frames[u]), token=symbols[u])
            for u in range(len(symbols)) if symbols[u] != CC_SYMBOL
        ]

    def alignment(self, mixture: Mixture) -> List[int]:
        """Кадры t_u эталонных символов смеси (кэшируются)"""
        if mixture.sample_id not in self._alignments:
            self._alignments[mixture.sample_id] = self.asr.viterbi_align(mixture.features, self.asr.targets(mixture))
        return self._alignments[mixture.sample_id]

    def reference_tvectors(self, mixture: Mixture) -> List[TVector]:
        """t-векторы эталонной транскрипции, выровненной по Витерби"""
        return self.extract(mixture.features, mixture.serialized.entries, self.alignment(mixture))

    def train(self, mixtures: Sequence[Mixture], population: SpeakerPopulation,
              config: TrainingConfig) -> List[float]:
        """
        Обучает энкодер дикторов и декодер t-векторов при замороженном ASR

        На каждом шаге берется случайная смесь, кадры токенов берутся из
        выравнивания Витерби, кандидаты - истинные дикторы плюс случайные
        дикторы популяции (всего не больше max_candidates).

        Args:
            mixtures: Обучающие смеси
            population: Популяция с d-векторами
            config: Параметры обучения

        Returns:
            List[float]: Кривая потерь (средняя потеря на обычный токен)

        Raises:
            EmptyInput: Если обучающих смесей нет
            DimensionMismatch: Если размер профиля модели не совпадает с d-векторами
        """
        if not mixtures:
            raise EmptyInput("Нет обучающих смесей для модуля дикторов")
        if population.dvectors.shape[1] != self.config.profile_dim:
            raise DimensionMismatch(
                f"Размер профиля модели {self.config.profile_dim}, d-векторов {population.dvectors.shape[1]}"
            )

        self.asr.freeze()
        torch.manual_seed(config.seed)
        rng = np.random.default_rng(config.seed)
        optimizer, scheduler = build_optimizer(self.module.parameters(), config)
        self.module.train()

        losses: List[float] = []
        for step in range(config.steps):
            mixture = mixtures[int(rng.integers(len(mixtures)))]
            targets = self.asr.targets(mixture)
            frames = self.alignment(mixture)
            is_cc = [token == CC_INDEX for token in targets]
            labels = iter(mixture.speaker_labels)
            token_speakers = [None if flag else next(labels) for flag in is_cc]

            candidates = sample_candidates(rng, mixture.speakers, population, config.max_candidates)
            references = torch.zeros((len(targets), self.config.profile_dim), dtype=DTYPE)
            distractors: List[Optional[torch.Tensor]] = []
            for u, speaker in enumerate(token_speakers):
                if speaker is None:
                    distractors.append(None)
                    continue
                references[u] = torch.as_tensor(population.vector(speaker), dtype=DTYPE)
                others = [population.vector(c) for c in candidates if c != speaker]
                distractors.append(torch.as_tensor(np.stack(others), dtype=DTYPE) if others else None)

            optimizer.zero_grad()
            embeddings = self.embeddings(mixture.features, list(zip(targets, frames)))
            loss = speaker_loss(embeddings, references, distractors, is_cc)
            loss.backward()
            clip_gradients(self.module.parameters())
            optimizer.step()
            scheduler.step()

            value = float(loss.detach()) / max(1, len(targets) - sum(is_cc))
            losses.append(value)
            if (step + 1) % max(1, config.log_every) == 0:
                logger.info(f"Дикторы шаг {step + 1}/{config.steps}: потеря на токен {value:.4f}")
            else:
                logger.debug(f"Дикторы шаг {step + 1}: {value:.4f}")

        self.module.eval()
        return losses

    def save(self, stem: str) -> str:
        return save_checkpoint(self.module, stem, {'profile_dim': self.config.profile_dim})

    def load(self, stem: str) -> None:
        load_checkpoint(self.module, stem)
        self.module.eval()
