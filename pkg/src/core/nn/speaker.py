"""Энкодер дикторов с перекрестным вниманием и LSTM-декодер t-векторов"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import torch
from torch import nn

from src.core.errors import FrameCountMismatch, FrameOutOfRange
from src.core.models.mask import MaskSpec
from src.core.models.run_config import ModelConfig
from src.core.models.speaker import TVector
from src.core.models.vocabulary import CC_INDEX
from src.core.nn.kernel import DTYPE, CausalConv1d, LstmCell, MultiHeadAttention, build_attention_mask
from src.core.nn.transducer import AsrEncoderState

logger = logging.getLogger(__name__)


@dataclass
class SpeakerEncoderState:
    """Активации z^spk_{t,l}, l = 0..L"""

    layers: List[torch.Tensor]

    @property
    def output(self) -> torch.Tensor:
        return self.layers[-1]

    @property
    def num_frames(self) -> int:
        return int(self.layers[0].shape[0])


class CrossAttentionLayer(nn.Module):
    """z^spk_l = z^spk_{l-1} + MHA(LN(z^asr_{l-1}), LN(z^asr_{l-1}), LN(z^spk_{l-1})), без FF-подслоя"""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.asr_norm = nn.LayerNorm(dim, dtype=DTYPE)
        self.speaker_norm = nn.LayerNorm(dim, dtype=DTYPE)
        self.attention = MultiHeadAttention(dim, heads)

    def forward(self, speaker: torch.Tensor, asr: torch.Tensor, mask) -> torch.Tensor:
        query_key = self.asr_norm(asr)
        return speaker + self.attention(query_key, query_key, self.speaker_norm(speaker), mask)


class SpeakerEncoder(nn.Module):
    """
    Энкодер дикторов

    Слой 0 - двухслойный причинный сверточный экстрактор (первая свертка с
    тем же прореживанием, что у фронтенда ASR); слои 1..L - перекрестное
    внимание, где запросы и ключи берутся из энкодера ASR.
    """

    def __init__(self, config: ModelConfig, feature_dim: int):
        super().__init__()
        self.config = config
        self.extractor_in = CausalConv1d(feature_dim, config.d_model, config.conv_kernel, stride=config.subsample)
        self.extractor_out = CausalConv1d(config.d_model, config.d_model, config.conv_kernel)
        self.layers = nn.ModuleList([CrossAttentionLayer(config.d_model, config.heads) for _ in range(config.asr_layers)])

    def forward(self, features: torch.Tensor, asr_state: AsrEncoderState, mask: MaskSpec) -> SpeakerEncoderState:
        """
        Вычисляет активации энкодера дикторов

        Args:
            features: Признаки [T', F]
            asr_state: Активации замороженного энкодера ASR
            mask: Маска внимания (общая с ASR)

        Returns:
            SpeakerEncoderState: Слои 0..L

        Raises:
            FrameCountMismatch: Если число кадров не совпадает с энкодером ASR
        """
        features = torch.as_tensor(features, dtype=DTYPE)
        hidden = self.extractor_out(torch.relu(self.extractor_in(features)))
        if hidden.shape[0] != asr_state.num_frames:
            raise FrameCountMismatch(f"Кадров у энкодера дикторов {hidden.shape[0]}, у ASR {asr_state.num_frames}")
        if asr_state.num_layers < len(self.layers):
            raise FrameCountMismatch(f"У энкодера ASR {asr_state.num_layers} слоев, требуется {len(self.layers)}")

        allowed = build_attention_mask(hidden.shape[0], mask)
        layers = [hidden]
        for index, layer in enumerate(self.layers):
            hidden = layer(hidden, asr_state.layers[index], allowed)
            layers.append(hidden)
        return SpeakerEncoderState(layers=layers)


class TVectorDecoder(nn.Module):
    """
    Декодер t-векторов

    e_u, h'_u = LSTM(W z^spk_{t_u,L} + Embed(o_u), h'_{u-1}); e_u - выход
    верхнего слоя размера profile_dim. Таблица эмбеддингов своя, не общая
    с сетью предсказания.
    """

    def __init__(self, config: ModelConfig, vocab_size: int):
        super().__init__()
        self.config = config
        self.projection = nn.Linear(config.d_model, config.profile_dim, dtype=DTYPE)
        self.embedding = nn.Embedding(vocab_size, config.profile_dim, dtype=DTYPE)
        self.cells = nn.ModuleList(
            [LstmCell(config.profile_dim, config.profile_dim) for _ in range(config.tvector_layers)]
        )

    def embeddings(self, speaker_out: torch.Tensor, tokens_with_frames: Sequence[Tuple[int, int]]) -> torch.Tensor:
        """
        t-векторы как тензор [U, profile_dim] (с графом вычислений)

        Args:
            speaker_out: Верхний слой энкодера дикторов [T, d_model]
            tokens_with_frames: Пары (индекс токена o_u, кадр t_u)

        Returns:
            torch.Tensor: [U, profile_dim]

        Raises:
            FrameOutOfRange: Если кадр вне диапазона
        """
        num_frames = speaker_out.shape[0]
        states = [None] * len(self.cells)
        outputs = []
        for token, frame in tokens_with_frames:
            if not 0 <= frame < num_frames:
                raise FrameOutOfRange(f"Кадр {frame} вне диапазона [0, {num_frames})")
            hidden = self.projection(speaker_out[frame]) + self.embedding.weight[token]
            for index, cell in enumerate(self.cells):
                hidden, states[index] = cell(hidden, states[index])
            outputs.append(hidden)
        if not outputs:
            return torch.zeros((0, self.config.profile_dim), dtype=DTYPE)
        return torch.stack(outputs)

    def forward(self, speaker_out: torch.Tensor, tokens_with_frames: Sequence[Tuple[int, int]]) -> List[TVector]:
        with torch.no_grad():
            matrix = self.embeddings(speaker_out, tokens_with_frames)
        return [
            TVector(embedding=matrix[u].numpy(), token_index=u, emission_frame=int(frame), is_cc=token == CC_INDEX)
            for u, (token, frame) in enumerate(tokens_with_frames)
        ]
