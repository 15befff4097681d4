import logging
from dataclasses import asdict
from typing import List, Sequence

import numpy as np
import torch

from src.core.algorithms.beam_search import StopPolicy, beam_decode
from src.core.algorithms.transducer_dp import viterbi_alignment
from src.core.algorithms.vad import EnergyVad
from src.core.errors import CheckpointError, EmptyInput
from src.core.models.hypothesis import DecodedStream, build_decoded_stream
from src.core.models.mask import MaskSpec
from src.core.models.mixture import Mixture
from src.core.models.run_config import DecodingConfig, ModelConfig, TrainingConfig
from src.core.models.vocabulary import Vocabulary
from src.core.nn.checkpoint import load_checkpoint, save_checkpoint
from src.core.nn.losses import transducer_loss
from src.core.nn.optim import build_optimizer, clip_gradients
from src.core.nn.transducer import ModelScorer, TransducerModel

logger = logging.getLogger(__name__)


class AsrService:
    """Сервис обучения и применения игрушечного трансформер-трансдьюсера"""

    def __init__(self, model_config: ModelConfig, mask: MaskSpec, vocabulary: Vocabulary,
                 feature_dim: int, frame_hop_seconds: float = 0.01, max_channels: int = 2):
        """
        Инициализирует сервис распознавания

        Args:
            model_config: Размеры модели
            mask: Маска внимания энкодера
            vocabulary: Словарь с <blank> и <cc>
            feature_dim: Размерность входных признаков
            frame_hop_seconds: Шаг входных кадров
            max_channels: Число виртуальных каналов M
        """
        self.config = model_config
        self.mask = mask
        self.vocabulary = vocabulary
        self.feature_dim = feature_dim
        self.frame_hop_seconds = frame_hop_seconds
        self.max_channels = max_channels
        self.model = TransducerModel(model_config, feature_dim, len(vocabulary))

    @property
    def frame_seconds(self) -> float:
        """Длительность кадра энкодера"""
        return self.frame_hop_seconds * self.config.subsample

    def targets(self, mixture: Mixture) -> List[int]:
        return self.vocabulary.encode(mixture.serialized.entries)

    def lattice(self, features: np.ndarray, targets: Sequence[int]) -> torch.Tensor:
        return self.model.lattice(torch.as_tensor(features, dtype=torch.float64), targets, self.mask)

    def train(self, mixtures: Sequence[Mixture], config: TrainingConfig) -> List[float]:
        """
        Обучает модель на сериализованных эталонах t-SOT

        На каждом шаге берется случайная смесь; оптимизатор AdamW с линейным
        разогревом и линейным спадом скорости обучения.

        Args:
            mixtures: Обучающие смеси
            config: Параметры обучения

        Returns:
            List[float]: Кривая потерь по шагам

        Raises:
            EmptyInput: Если обучающих смесей нет
        """
        if not mixtures:
            raise EmptyInput("Нет обучающих смесей для ASR")
        torch.manual_seed(config.seed)
        rng = np.random.default_rng(config.seed)
        optimizer, scheduler = build_optimizer(self.model.parameters(), config)
        self.model.train()

        losses: List[float] = []
        for step in range(config.steps):
            mixture = mixtures[int(rng.integers(len(mixtures)))]
            targets = self.targets(mixture)
            optimizer.zero_grad()
            loss = transducer_loss(self.lattice(mixture.features, targets), targets)
            loss.backward()
            clip_gradients(self.model.parameters())
            optimizer.step()
            scheduler.step()

            value = float(loss.detach()) / max(1, len(targets))
            losses.append(value)
            if (step + 1) % max(1, config.log_every) == 0:
                logger.info(f"ASR шаг {step + 1}/{config.steps}: потеря на токен {value:.4f}")
            else:
                logger.debug(f"ASR шаг {step + 1}: {value:.4f}")

        self.model.eval()
        return losses

    def encoder_output(self, features: np.ndarray) -> torch.Tensor:
        with torch.no_grad():
            state = self.model.encode(torch.as_tensor(features, dtype=torch.float64), self.mask)
            return self.model.encoder_output(state)

    def decode(self, sample_id: str, features: np.ndarray, config: DecodingConfig) -> DecodedStream:
        """
        Распознает смесь лучевым поиском

        Args:
            sample_id: Идентификатор образца
            features: Признаки [T', F]
            config: Параметры поиска и фиксации луча

        Returns:
            DecodedStream: Поток t-SOT с кадрами выдачи
        """
        scorer = ModelScorer(self.model, self.encoder_output(features))
        silence = None
        if config.vad_threshold is not None:
            silence = EnergyVad(config.vad_threshold, self.config.subsample).silence_mask(features)
        policy = StopPolicy(config.min_segment_seconds, config.max_segment_seconds, self.frame_seconds)
        result = beam_decode(scorer, config.beam_width, config.max_symbols_per_frame, policy, silence)

        symbols = [(self.vocabulary.symbols[token], frame) for token, frame in result.hypothesis.tokens]
        decoded = build_decoded_stream(sample_id, symbols, self.frame_seconds, self.max_channels,
                                       result.hypothesis.score, result.commits)
        logger.debug(f"{sample_id}: распознано '{decoded.stream.to_text()}'")
        return decoded

    def viterbi_align(self, features: np.ndarray, targets: Sequence[int]) -> List[int]:
        """
        Кадры выдачи эталонных токенов по лучшему выравниванию

        Args:
            features: Признаки [T', F]
            targets: Индексы токенов эталона (включая <cc>)

        Returns:
            List[int]: Кадр t_u для каждого токена

        Raises:
            TargetLongerThanFrames: Если токенов больше, чем кадров энкодера
        """
        with torch.no_grad():
            log_probs = self.lattice(features, targets).numpy()
        frames, _ = viterbi_alignment(log_probs, targets)
        return frames

    def freeze(self) -> None:
        for parameter in self.model.parameters():
            parameter.requires_grad_(False)
        self.model.eval()

    def save(self, stem: str) -> str:
        meta = {'vocabulary': self.vocabulary.to_dict(), 'feature_dim': self.feature_dim,
                'model': asdict(self.config), 'mask': asdict(self.mask)}
        return save_checkpoint(self.model, stem, meta)

    def load(self, stem: str) -> None:
        """
        Загружает параметры модели

        Raises:
            CheckpointError: Если чекпоинт несовместим
        """
        meta = load_checkpoint(self.model, stem)
        if meta.get('vocabulary', {}).get('symbols') not in (None, list(self.vocabulary.symbols)):
            raise CheckpointError(f"Словарь чекпоинта {stem} не совпадает со словарем корпуса")
        self.model.eval()
