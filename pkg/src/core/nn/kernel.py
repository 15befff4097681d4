"""
Плотное численное ядро игрушечной модели (torch, float64)

Функциональные операции mha, lstm_step, causal_conv и модули-обертки над
ними с обучаемыми параметрами. Все тензоры имеют тип torch.float64.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import torch
import torch.nn.functional as F
from torch import nn

from src.core.errors import DimensionMismatch, EmptyInput, NonFiniteValue
from src.core.models.mask import MaskSpec

logger = logging.getLogger(__name__)

DTYPE = torch.float64
GRAD_CHECK_EPS = 1e-8

LstmState = Tuple[torch.Tensor, torch.Tensor]


def build_attention_mask(num_frames: int, mask: Optional[MaskSpec]) -> torch.Tensor:
    """
    Материализует окна m(t) в булеву матрицу [T, T]

    Args:
        num_frames: Число кадров T
        mask: Поблочная маска (None - полное внимание)

    Returns:
        torch.Tensor: allowed[t, s] = True, если кадр t видит кадр s
    """
    allowed = torch.zeros((num_frames, num_frames), dtype=torch.bool)
    if mask is None or (mask.is_unbounded and mask.left_context is None):
        allowed[:] = True
        return allowed
    for t in range(num_frames):
        start, end = mask.window(t, num_frames)
        allowed[t, start:end] = True
    return allowed


def mha(query: torch.Tensor, key: torch.Tensor, value: torch.Tensor, heads: int,
        mask: Union[MaskSpec, torch.Tensor, None] = None,
        return_weights: bool = False) -> Union[torch.Tensor, Tuple[torch.Tensor, torch.Tensor]]:
    """
    Многоголовое масштабированное скалярное внимание без проекций

    Позиции вне окна m(t) исключаются из softmax заполнением -inf.

    Args:
        query: Запросы [Tq, d]
        key: Ключи [Tk, d]
        value: Значения [Tk, dv]
        heads: Число голов (делит d и dv)
        mask: MaskSpec (при Tq == Tk), булева матрица [Tq, Tk] или None
        return_weights: Вернуть также веса внимания [heads, Tq, Tk]

    Returns:
        torch.Tensor: Выход [Tq, dv]

    Raises:
        DimensionMismatch: При несогласованных размерностях
    """
    if query.dim() != 2 or key.dim() != 2 or value.dim() != 2:
        raise DimensionMismatch("mha ожидает матрицы [T, d]")
    num_queries, dim = query.shape
    num_keys, value_dim = value.shape
    if key.shape[1] != dim:
        raise DimensionMismatch(f"Размерность ключей {key.shape[1]} не равна размерности запросов {dim}")
    if key.shape[0] != num_keys:
        raise DimensionMismatch(f"Число ключей {key.shape[0]} не равно числу значений {num_keys}")
    if heads < 1 or dim % heads != 0 or value_dim % heads != 0:
        raise DimensionMismatch(f"Размерности {dim} и {value_dim} не делятся на число голов {heads}")

    if isinstance(mask, MaskSpec):
        if num_queries != num_keys:
            raise DimensionMismatch("MaskSpec применим только к самовниманию по одной оси времени")
        allowed = build_attention_mask(num_queries, mask)
    elif mask is None:
        allowed = None
    else:
        allowed = mask
        if tuple(allowed.shape) != (num_queries, num_keys):
            raise DimensionMismatch(f"Маска {tuple(allowed.shape)} не соответствует [{num_queries}, {num_keys}]")

    head_dim = dim // heads
    q = query.reshape(num_queries, heads, head_dim).transpose(0, 1)
    k = key.reshape(num_keys, heads, head_dim).transpose(0, 1)
    v = value.reshape(num_keys, heads, value_dim // heads).transpose(0, 1)

    scores = q @ k.transpose(1, 2) / math.sqrt(head_dim)
    if allowed is not None:
        scores = scores.masked_fill(~allowed.unsqueeze(0), float('-inf'))
    weights = torch.softmax(scores, dim=-1)
    output = (weights @ v).transpose(0, 1).reshape(num_queries, value_dim)
    if return_weights:
        return output, weights
    return output


@dataclass
class LstmParams:
    """Параметры ячейки LSTM; ворота в порядке i, f, g, o"""

    w_ih: torch.Tensor
    w_hh: torch.Tensor
    bias: torch.Tensor

    @property
    def hidden_size(self) -> int:
        return self.w_hh.shape[1]

    @property
    def input_size(self) -> int:
        return self.w_ih.shape[1]


def lstm_step(inputs: torch.Tensor, state: LstmState, params: LstmParams) -> Tuple[torch.Tensor, LstmState]:
    """
    Один шаг ячейки LSTM

    Args:
        inputs: Вход [I]
        state: Пара (h, c) размера [H]
        params: Параметры ячейки

    Returns:
        Tuple[torch.Tensor, LstmState]: Выход h' и новое состояние (h', c')

    Raises:
        DimensionMismatch: При несогласованных размерностях
    """
    hidden, cell = state
    size = params.hidden_size
    if params.w_ih.shape[0] != 4 * size or params.w_hh.shape != (4 * size, size) or params.bias.shape != (4 * size,):
        raise DimensionMismatch("Параметры LSTM имеют несогласованные размеры")
    if inputs.shape != (params.input_size,):
        raise DimensionMismatch(f"Вход LSTM размера {tuple(inputs.shape)}, ожидается ({params.input_size},)")
    if hidden.shape != (size,) or cell.shape != (size,):
        raise DimensionMismatch(f"Состояние LSTM должно иметь размер ({size},)")

    gates = params.w_ih @ inputs + params.w_hh @ hidden + params.bias
    input_gate, forget_gate, candidate, output_gate = gates.split(size)
    new_cell = torch.sigmoid(forget_gate) * cell + torch.sigmoid(input_gate) * torch.tanh(candidate)
    new_hidden = torch.sigmoid(output_gate) * torch.tanh(new_cell)
    return new_hidden, (new_hidden, new_cell)


def causal_conv(inputs: torch.Tensor, kernels: torch.Tensor, bias: Optional[torch.Tensor] = None,
                stride: int = 1) -> torch.Tensor:
    """
    Причинная одномерная свертка по времени с прореживанием

    Вход дополняется K-1 нулевыми кадрами слева, так что выход в момент t
    вычисляется только по кадрам t-K+1..t. С шагом s берутся выходы на
    концах окон s-1, 2s-1, ... (последнее окно дополняется нулями справа),
    всего ceil(T/s) кадров.

    Args:
        inputs: Кадры [T, C_in]
        kernels: Ядра [C_out, C_in, K]
        bias: Смещения [C_out]
        stride: Шаг прореживания

    Returns:
        torch.Tensor: Кадры [ceil(T/s), C_out]

    Raises:
        EmptyInput: Если нет ни одного кадра
        DimensionMismatch: При несогласованных размерностях
    """
    if inputs.dim() != 2 or inputs.shape[0] == 0:
        raise EmptyInput("Причинной свертке передана пустая последовательность кадров")
    if kernels.dim() != 3 or kernels.shape[1] != inputs.shape[1]:
        raise DimensionMismatch(f"Ядра {tuple(kernels.shape)} не соответствуют входу {tuple(inputs.shape)}")
    if stride < 1:
        raise ValueError(f"Шаг свертки должен быть положительным, получено {stride}")

    num_frames, channels = inputs.shape
    out_channels, _, width = kernels.shape
    right = (-num_frames) % stride
    padded = F.pad(inputs, (0, 0, width - 1, right))
    # окна [T + right, K, C_in]: кадр t видит только кадры t-K+1..t
    windows = padded.unfold(0, width, 1).transpose(1, 2)
    windows = windows[stride - 1::stride]
    output = windows.reshape(windows.shape[0], width * channels) @ kernels.permute(2, 1, 0).reshape(width * channels, out_channels)
    if bias is not None:
        output = output + bias
    return output


def cosine_similarity(a: torch.Tensor, b: torch.Tensor, eps: float = 1e-12) -> torch.Tensor:
    """Косинусная близость строк a [N, D] (или вектора) со строками b [M, D]"""
    a2 = a if a.dim() == 2 else a.unsqueeze(0)
    b2 = b if b.dim() == 2 else b.unsqueeze(0)
    a_norm = a2 / a2.norm(dim=1, keepdim=True).clamp_min(eps)
    b_norm = b2 / b2.norm(dim=1, keepdim=True).clamp_min(eps)
    result = a_norm @ b_norm.T
    return result[0] if a.dim() == 1 else result


def cosine_softmax_logits(embedding: torch.Tensor, reference: torch.Tensor,
                          distractors: Optional[torch.Tensor] = None) -> torch.Tensor:
    """
    Логиты косинусного softmax: [cos(e, d), cos(e, d'_1), ...]

    Args:
        embedding: Эмбеддинг e [D]
        reference: Эталонный d-вектор [D]
        distractors: Отвлекающие d-векторы [N, D] или None

    Returns:
        torch.Tensor: Логиты [1 + N], эталон первым
    """
    candidates = reference.unsqueeze(0)
    if distractors is not None and distractors.shape[0] > 0:
        candidates = torch.cat([candidates, distractors], dim=0)
    return cosine_similarity(embedding, candidates)


def grad_check(function: Callable[[torch.Tensor], torch.Tensor], point: torch.Tensor,
               step: float = 1e-5) -> float:
    """
    Сравнивает аналитический градиент с центральными разностями

    Args:
        function: Скалярная функция тензора
        point: Точка проверки
        step: Шаг конечных разностей

    Returns:
        float: max |a - n| / (|a| + |n| + eps) по координатам

    Raises:
        NonFiniteValue: Если значение или градиент не конечны
    """
    x = point.detach().clone().to(DTYPE).requires_grad_(True)
    value = function(x)
    if not torch.isfinite(value).all():
        raise NonFiniteValue("Значение функции в точке проверки не конечно")
    if value.requires_grad:
        (analytic,) = torch.autograd.grad(value, x, allow_unused=True)
        if analytic is None:
            analytic = torch.zeros_like(x)
    else:
        analytic = torch.zeros_like(x)

    numeric = torch.zeros_like(x)
    flat = numeric.view(-1)
    with torch.no_grad():
        base = x.detach().clone()
        for i in range(base.numel()):
            shifted = base.clone()
            shifted.view(-1)[i] += step
            plus = function(shifted)
            shifted.view(-1)[i] -= 2 * step
            minus = function(shifted)
            flat[i] = (plus - minus) / (2 * step)

    analytic = analytic.detach()
    if not (torch.isfinite(analytic).all() and torch.isfinite(numeric).all()):
        raise NonFiniteValue("Градиент не конечен")
    error = (analytic - numeric).abs() / (analytic.abs() + numeric.abs() + GRAD_CHECK_EPS)
    return float(error.max()) if error.numel() else 0.0


class MultiHeadAttention(nn.Module):
    """Многоголовое внимание с обучаемыми проекциями Q, K, V и выхода"""

    def __init__(self, dim: int, heads: int, value_dim: Optional[int] = None):
        super().__init__()
        if dim % heads != 0:
            raise DimensionMismatch(f"Размерность {dim} не делится на число голов {heads}")
        value_dim = value_dim or dim
        self.heads = heads
        self.query = nn.Linear(dim, dim, dtype=DTYPE)
        self.key = nn.Linear(dim, dim, dtype=DTYPE)
        self.value = nn.Linear(value_dim, dim, dtype=DTYPE)
        self.output = nn.Linear(dim, value_dim, dtype=DTYPE)

    def forward(self, query: torch.Tensor, key: torch.Tensor, value: torch.Tensor,
                mask: Union[MaskSpec, torch.Tensor, None] = None) -> torch.Tensor:
        attended = mha(self.query(query), self.key(key), self.value(value), self.heads, mask)
        return self.output(attended)


class CausalConv1d(nn.Module):
    """Причинная свертка: отводов заглядывания вперед нет по построению"""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, stride: int = 1):
        super().__init__()
        if kernel_size < 1:
            raise ValueError(f"Ширина ядра должна быть не меньше 1, получено {kernel_size}")
        self.stride = stride
        bound = 1.0 / math.sqrt(in_channels * kernel_size)
        self.weight = nn.Parameter(torch.empty(out_channels, in_channels, kernel_size, dtype=DTYPE).uniform_(-bound, bound))
        self.bias = nn.Parameter(torch.zeros(out_channels, dtype=DTYPE))

    def output_frames(self, num_frames: int) -> int:
        return -(-num_frames // self.stride)

    def forward(self, inputs: torch.Tensor) -> torch.Tensor:
        return causal_conv(inputs, self.weight, self.bias, self.stride)


class LstmCell(nn.Module):
    """Ячейка LSTM с параметрами в формате lstm_step"""

    def __init__(self, input_size: int, hidden_size: int):
        super().__init__()
        bound = 1.0 / math.sqrt(hidden_size)
        self.hidden_size = hidden_size
        self.w_ih = nn.Parameter(torch.empty(4 * hidden_size, input_size, dtype=DTYPE).uniform_(-bound, bound))
        self.w_hh = nn.Parameter(torch.empty(4 * hidden_size, hidden_size, dtype=DTYPE).uniform_(-bound, bound))
        self.bias = nn.Parameter(torch.zeros(4 * hidden_size, dtype=DTYPE))

    @property
    def params(self) -> LstmParams:
        return LstmParams(self.w_ih, self.w_hh, self.bias)

    def initial_state(self) -> LstmState:
        zeros = torch.zeros(self.hidden_size, dtype=DTYPE)
        return zeros, zeros.clone()

    def forward(self, inputs: torch.Tensor, state: Optional[LstmState] = None) -> Tuple[torch.Tensor, LstmState]:
        return lstm_step(inputs, state if state is not None else self.initial_state(), self.params)


class FeedForward(nn.Module):
    def __init__(self, dim: int, hidden: int):
        super().__init__()
        self.inner = nn.Linear(dim, hidden, dtype=DTYPE)
        self.outer = nn.Linear(hidden, dim, dtype=DTYPE)

    def forward(self, inputs: torch.Tensor) -> torch.Tensor:
        return self.outer(torch.relu(self.inner(inputs)))


class EncoderBlock(nn.Module):
    """Блок энкодера с пред-нормализацией: z + MHA(LN(z)), затем z + FF(LN(z))"""

    def __init__(self, dim: int, heads: int, ff_dim: int):
        super().__init__()
        self.attention_norm = nn.LayerNorm(dim, dtype=DTYPE)
        self.attention = MultiHeadAttention(dim, heads)
        self.ff_norm = nn.LayerNorm(dim, dtype=DTYPE)
        self.ff = FeedForward(dim, ff_dim)

    def forward(self, inputs: torch.Tensor, mask: Union[MaskSpec, torch.Tensor, None]) -> torch.Tensor:
        normed = self.attention_norm(inputs)
        hidden = inputs + self.attention(normed, normed, normed, mask)
        return hidden + self.ff(self.ff_norm(hidden))
