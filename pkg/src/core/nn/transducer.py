"""Игрушечный трансформер-трансдьюсер: потоковый энкодер, сеть предсказания и совместная сеть"""

import logging
from dataclasses import dataclass
from typing import List, Dict, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from src.core.errors import EmptyInput
from src.core.models.mask import MaskSpec
from src.core.models.run_config import ModelConfig
from src.core.models.vocabulary import BLANK_INDEX
from src.core.nn.kernel import DTYPE, CausalConv1d, EncoderBlock, LstmCell, LstmState, build_attention_mask

logger = logging.getLogger(__name__)


@dataclass
class AsrEncoderState:
    """Активации всех слоев энкодера z^asr_{t,l}, l = 0..L"""

    layers: List[torch.Tensor]
    mask: MaskSpec

    @property
    def output(self) -> torch.Tensor:
        return self.layers[-1]

    @property
    def num_frames(self) -> int:
        return int(self.layers[0].shape[0])

    @property
    def num_layers(self) -> int:
        return len(self.layers) - 1


class TransducerModel(nn.Module):
    """
    Трансформер-трансдьюсер

    CNN-фронтенд с прореживанием, обучаемые позиционные эмбеддинги, L блоков
    энкодера с поблочной маской, сеть предсказания (эмбеддинг + LSTM) и
    совместная сеть tanh(W_e z_t + W_p g_u) -> log_softmax.
    """

    def __init__(self, config: ModelConfig, feature_dim: int, vocab_size: int):
        super().__init__()
        self.config = config
        self.feature_dim = feature_dim
        self.vocab_size = vocab_size
        self.frontend = CausalConv1d(feature_dim, config.d_model, config.conv_kernel, stride=config.subsample)
        self.positions = nn.Embedding(config.max_frames, config.d_model, dtype=DTYPE)
        self.blocks = nn.ModuleList(
            [EncoderBlock(config.d_model, config.heads, config.ff_dim) for _ in range(config.asr_layers)]
        )
        self.output_norm = nn.LayerNorm(config.d_model, dtype=DTYPE)
        self.embedding = nn.Embedding(vocab_size, config.pred_dim, dtype=DTYPE)
        self.predictor = LstmCell(config.pred_dim, config.pred_dim)
        self.joint_encoder = nn.Linear(config.d_model, config.joint_dim, dtype=DTYPE)
        self.joint_predictor = nn.Linear(config.pred_dim, config.joint_dim, bias=False, dtype=DTYPE)
        self.joint_output = nn.Linear(config.joint_dim, vocab_size, dtype=DTYPE)

    def frontend_frames(self, num_input_frames: int) -> int:
        return self.frontend.output_frames(num_input_frames)

    def encode(self, features: torch.Tensor, mask: MaskSpec) -> AsrEncoderState:
        """
        Потоковое кодирование признаков

        Args:
            features: Признаки [T', F]
            mask: Поблочная маска внимания

        Returns:
            AsrEncoderState: Активации слоев 0..L, T = ceil(T'/subsample) кадров

        Raises:
            EmptyInput: Если признаков нет
        """
        features = torch.as_tensor(features, dtype=DTYPE)
        if features.dim() != 2 or features.shape[0] == 0:
            raise EmptyInput("Для кодирования нужна непустая последовательность кадров")
        hidden = torch.relu(self.frontend(features))
        num_frames = hidden.shape[0]
        if num_frames > self.config.max_frames:
            raise ValueError(f"Последовательность из {num_frames} кадров длиннее max_frames={self.config.max_frames}")
        hidden = hidden + self.positions.weight[:num_frames]

        allowed = build_attention_mask(num_frames, mask)
        layers = [hidden]
        for block in self.blocks:
            hidden = block(hidden, allowed)
            layers.append(hidden)
        return AsrEncoderState(layers=layers, mask=mask)

    def encoder_output(self, state: AsrEncoderState) -> torch.Tensor:
        return self.output_norm(state.output)

    def predict(self, tokens: Sequence[int]) -> torch.Tensor:
        """
        Выходы сети предсказания g_0..g_U (g_0 - по символу blank)

        Args:
            tokens: Индексы токенов префикса

        Returns:
            torch.Tensor: [U+1, pred_dim]
        """
        state = self.predictor.initial_state()
        outputs = []
        for token in [BLANK_INDEX] + list(tokens):
            output, state = self.predictor(self.embedding.weight[token], state)
            outputs.append(output)
        return torch.stack(outputs)

    def predict_step(self, token: int, state: Optional[LstmState]) -> Tuple[torch.Tensor, LstmState]:
        return self.predictor(self.embedding.weight[token], state)

    def joint(self, encoder_out: torch.Tensor, predictions: torch.Tensor) -> torch.Tensor:
        """
        Логарифмы вероятностей y_{t,u} для всех пар (t, u)

        Args:
            encoder_out: [T, d_model]
            predictions: [U+1, pred_dim]

        Returns:
            torch.Tensor: [T, U+1, V]
        """
        hidden = self.joint_encoder(encoder_out).unsqueeze(1) + self.joint_predictor(predictions).unsqueeze(0)
        return torch.log_softmax(self.joint_output(torch.tanh(hidden)), dim=-1)

    def lattice(self, features: torch.Tensor, targets: Sequence[int], mask: MaskSpec) -> torch.Tensor:
        """Решетка log y_{t,u} [T, U+1, V] для обучения и выравнивания"""
        state = self.encode(features, mask)
        return self.joint(self.encoder_output(state), self.predict(targets))


class ModelScorer:
    """
    Источник распределений для поиска по замороженной модели

    Состояния сети предсказания и выходы совместной сети кэшируются по
    префиксу, поэтому повторные проходы поиска с разной шириной луча не
    пересчитывают сеть. При фиксации гипотезы поиск вызывает release(),
    и кэш сокращается до кадров после фиксации и продолжений
    зафиксированного префикса.
    """

    def __init__(self, model: TransducerModel, encoder_out: torch.Tensor):
        self.model = model
        self.encoder_out = encoder_out.detach()
        self.num_frames = int(encoder_out.shape[0])
        self._states: Dict[Tuple[int, ...], Tuple[torch.Tensor, LstmState]] = {}
        self._log_probs: Dict[Tuple[int, Tuple[int, ...]], np.ndarray] = {}
        self._encoded = model.joint_encoder(self.encoder_out).detach() if self.num_frames else None

    def initial_state(self) -> Tuple[int, ...]:
        return ()

    def _prediction(self, prefix: Tuple[int, ...]) -> torch.Tensor:
        depth = len(prefix)
        while depth > 0 and prefix[:depth] not in self._states:
            depth -= 1
        with torch.no_grad():
            if depth == 0 and () not in self._states:
                self._states[()] = self.model.predict_step(BLANK_INDEX, None)
            for end in range(depth + 1, len(prefix) + 1):
                _, parent_state = self._states[prefix[:end - 1]]
                self._states[prefix[:end]] = self.model.predict_step(prefix[end - 1], parent_state)
        return self._states[prefix][0]

    def log_probs(self, t: int, state: Tuple[int, ...]) -> np.ndarray:
        key = (t, state)
        if key not in self._log_probs:
            with torch.no_grad():
                prediction = self._prediction(state)
                hidden = torch.tanh(self._encoded[t] + self.model.joint_predictor(prediction))
                self._log_probs[key] = torch.log_softmax(self.model.joint_output(hidden), dim=-1).numpy()
        return self._log_probs[key]

    def advance(self, state: Tuple[int, ...], token: int) -> Tuple[int, ...]:
        return state + (int(token),)

    def release(self, t: int, prefix: Tuple[int, ...]) -> None:
        """
        Освобождает кэш после фиксации гипотезы на кадре t

        Args:
            t: Кадр фиксации, распределения кадров <= t больше не нужны
            prefix: Зафиксированный префикс, сохраняются только его продолжения
        """
        self._log_probs = {key: value for key, value in self._log_probs.items() if key[0] > t}
        size = len(prefix)
        self._states = {key: value for key, value in self._states.items() if key[:size] == prefix}
        logger.debug(f"Кэш оценщика сокращен на кадре {t}: {len(self._states)} состояний, "
                     f"{len(self._log_probs)} распределений")
