"""Жадный и синхронный по времени лучевой поиск для трансдьюсера"""

import logging
from dataclasses import dataclass, field
from typing import List, Dict, Any, Optional, Sequence, Tuple, Protocol

import numpy as np

from src.core.models.vocabulary import BLANK_INDEX

logger = logging.getLogger(__name__)


class Scorer(Protocol):
    """
    Источник распределений совместной сети y_{t,u}

    Необязательный метод release(t, prefix) вызывается при фиксации гипотезы
    на кадре t, после него поиск не запрашивает кадры <= t и состояния вне
    продолжений зафиксированного префикса.
    """

    num_frames: int

    def initial_state(self) -> Any:
        ...

    def log_probs(self, t: int, state: Any) -> np.ndarray:
        ...

    def advance(self, state: Any, token: int) -> Any:
        ...


@dataclass
class DecodeHypothesis:
    """Гипотеза декодирования: токены с кадрами выдачи, оценка и состояние сети предсказания"""

    tokens: Tuple[Tuple[int, int], ...] = ()
    score: float = 0.0
    state: Any = None

    @property
    def prefix(self) -> Tuple[int, ...]:
        return tuple(token for token, _ in self.tokens)

    @property
    def frames(self) -> List[int]:
        return [frame for _, frame in self.tokens]

    def extend(self, token: int, frame: int, log_prob: float, state: Any) -> 'DecodeHypothesis':
        return DecodeHypothesis(self.tokens + ((token, frame),), self.score + log_prob, state)

    def close(self, log_prob: float) -> 'DecodeHypothesis':
        return DecodeHypothesis(self.tokens, self.score + log_prob, self.state)


@dataclass(frozen=True)
class StopPolicy:
    """
    Правило фиксации гипотезы лучевого поиска

    Гипотеза фиксируется на первом тихом кадре после min_segment_seconds
    и принудительно по достижении max_segment_seconds.
    """

    min_segment_seconds: float = 20.0
    max_segment_seconds: float = 40.0
    frame_seconds: float = 0.04

    def __post_init__(self):
        if self.frame_seconds <= 0:
            raise ValueError("Длительность кадра должна быть положительной")
        if self.max_segment_seconds < self.min_segment_seconds:
            raise ValueError("Максимальная длина сегмента меньше минимальной")

    def should_commit(self, t: int, segment_start: int, is_silent: bool) -> bool:
        elapsed = (t - segment_start + 1) * self.frame_seconds
        if elapsed >= self.max_segment_seconds:
            return True
        return is_silent and elapsed >= self.min_segment_seconds


@dataclass
class DecodeResult:
    """Лучшая гипотеза и кадры, на которых луч был зафиксирован"""

    hypothesis: DecodeHypothesis
    commits: List[int] = field(default_factory=list)
    beam_width: int = 1


def greedy_decode(scorer: Scorer, max_symbols_per_frame: int = 4, blank: int = BLANK_INDEX) -> DecodeHypothesis:
    """
    Жадное декодирование: на каждом шаге выбирается argmax y_{t,u}

    Args:
        scorer: Источник распределений совместной сети
        max_symbols_per_frame: Максимум токенов, выдаваемых на одном кадре
        blank: Индекс символа blank

    Returns:
        DecodeHypothesis: Единственная гипотеза
    """
    hypothesis = DecodeHypothesis(state=scorer.initial_state())
    for t in range(scorer.num_frames):
        for step in range(max_symbols_per_frame + 1):
            log_probs = scorer.log_probs(t, hypothesis.state)
            token = int(np.argmax(log_probs)) if step < max_symbols_per_frame else blank
            if token == blank:
                hypothesis = hypothesis.close(float(log_probs[blank]))
                break
            hypothesis = hypothesis.extend(token, t, float(log_probs[token]), scorer.advance(hypothesis.state, token))
    return hypothesis


def _merge(pool: Dict[Tuple[bool, Tuple[int, ...]], DecodeHypothesis], closed: bool,
           hypothesis: DecodeHypothesis) -> None:
    key = (closed, hypothesis.prefix)
    existing = pool.get(key)
    if existing is None:
        pool[key] = hypothesis
        return
    best = existing if existing.score >= hypothesis.score else hypothesis
    pool[key] = DecodeHypothesis(best.tokens, float(np.logaddexp(existing.score, hypothesis.score)), best.state)


def _prune(pool: Dict[Tuple[bool, Tuple[int, ...]], DecodeHypothesis],
           width: int) -> Dict[Tuple[bool, Tuple[int, ...]], DecodeHypothesis]:
    # sorted устойчив: при равных оценках сохраняется порядок вставки
    ranked = sorted(pool.items(), key=lambda item: -item[1].score)
    return dict(ranked[:width])


def _search(scorer: Scorer, beam_width: int, max_symbols_per_frame: int, blank: int,
            stop_policy: Optional[StopPolicy], silence: Optional[Sequence[bool]]) -> DecodeResult:
    beam = [DecodeHypothesis(state=scorer.initial_state())]
    commits: List[int] = []
    segment_start = 0

    for t in range(scorer.num_frames):
        closed: Dict[Tuple[bool, Tuple[int, ...]], DecodeHypothesis] = {}
        active = beam
        for step in range(max_symbols_per_frame + 1):
            pool = dict(closed)
            for hypothesis in active:
                log_probs = scorer.log_probs(t, hypothesis.state)
                _merge(pool, True, hypothesis.close(float(log_probs[blank])))
                if step == max_symbols_per_frame:
                    continue
                for token in range(len(log_probs)):
                    if token == blank:
                        continue
                    _merge(pool, False, hypothesis.extend(
                        token, t, float(log_probs[token]), scorer.advance(hypothesis.state, token)
                    ))
            pool = _prune(pool, beam_width)
            closed = {key: h for key, h in pool.items() if key[0]}
            active = [h for key, h in pool.items() if not key[0]]
            if not active:
                break
        beam = list(closed.values())

        if stop_policy is not None:
            is_silent = bool(silence[t]) if silence is not None else False
            if stop_policy.should_commit(t, segment_start, is_silent):
                beam = beam[:1]
                commits.append(t)
                segment_start = t + 1
                release = getattr(scorer, 'release', None)
                if release is not None:
                    release(t, beam[0].prefix)
                logger.debug(f"Гипотеза зафиксирована на кадре {t}")

    return DecodeResult(hypothesis=beam[0], commits=commits, beam_width=beam_width)


def beam_decode(scorer: Scorer, beam_width: int = 4, max_symbols_per_frame: int = 4,
                stop_policy: Optional[StopPolicy] = None, silence: Optional[Sequence[bool]] = None,
                blank: int = BLANK_INDEX) -> DecodeResult:
    """
    Синхронный по времени лучевой поиск

    На каждом кадре гипотезы расширяются не более max_symbols_per_frame раз;
    закрытые (blank) и открытые гипотезы отсекаются совместно до beam_width,
    гипотезы с одинаковым префиксом объединяются. Поиск с шириной K
    возвращает лучший результат среди ширин 1..K.

    Args:
        scorer: Источник распределений совместной сети
        beam_width: Ширина луча K >= 1
        max_symbols_per_frame: Максимум токенов на кадр
        stop_policy: Правило фиксации луча (None - без фиксации)
        silence: Маска тишины по кадрам энкодера
        blank: Индекс символа blank

    Returns:
        DecodeResult: Лучшая гипотеза (пустая гипотеза допустима)
    """
    if beam_width < 1:
        raise ValueError(f"Ширина луча должна быть не меньше 1, получено {beam_width}")
    if silence is not None and len(silence) != scorer.num_frames:
        raise ValueError("Длина маски тишины не совпадает с числом кадров")

    best: Optional[DecodeResult] = None
    for width in range(1, beam_width + 1):
        result = _search(scorer, width, max_symbols_per_frame, blank, stop_policy, silence)
        if best is None or result.hypothesis.score > best.hypothesis.score:
            best = result
    logger.debug(
        f"Лучевой поиск: K={beam_width}, выбрана ширина {best.beam_width}, "
        f"токенов {len(best.hypothesis.tokens)}, оценка {best.hypothesis.score:.4f}"
    )
    return best
