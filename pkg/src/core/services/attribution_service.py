import logging
from typing import List, Dict, Any, Optional, Sequence

from src.core.algorithms.scoring import cluster_purity, mapped_accuracy, speaker_accuracy
from src.core.algorithms.streaming_attribution import attribute_stream
from src.core.models.attribution import AttributionResult
from src.core.models.hypothesis import DecodedStream
from src.core.models.mixture import Mixture
from src.core.models.run_config import AttributionConfig
from src.core.models.speaker import SpeakerProfile, TVector
from src.core.models.token import CC_SYMBOL

logger = logging.getLogger(__name__)


def reference_times(mixture: Mixture) -> List[float]:
    """Время начала для каждой позиции эталонного потока (<cc> наследует время предыдущего токена)"""
    starts = iter(event.start_time for event in mixture.tokens)
    times: List[float] = []
    last = 0.0
    for symbol in mixture.serialized.entries:
        if symbol != CC_SYMBOL:
            last = next(starts)
        times.append(last)
    return times


class AttributionService:
    """Сервис потоковой атрибуции дикторов (SID или SD)"""

    def __init__(self, config: AttributionConfig):
        """
        Инициализирует сервис атрибуции

        Args:
            config: Параметры атрибуции
        """
        self.config = config

    @property
    def mode(self) -> str:
        return self.config.mode

    def attribute(self, mixture: Mixture, decoded: DecodedStream, tvectors: Sequence[TVector],
                  profiles: Optional[Sequence[SpeakerProfile]] = None) -> AttributionResult:
        """
        Атрибуция распознанного потока

        Args:
            mixture: Смесь (источник пула профилей и числа дикторов)
            decoded: Распознанный поток
            tvectors: t-векторы обычных токенов гипотезы
            profiles: Пул профилей (по умолчанию пул смеси)

        Returns:
            AttributionResult: Метки дикторов токенов гипотезы
        """
        return attribute_stream(decoded.stream, tvectors, mode=self.mode, config=self.config,
                                profiles=profiles or mixture.profiles,
                                num_speakers=len(mixture.speakers),
                                times=decoded.times or None)

    def attribute_reference(self, mixture: Mixture, tvectors: Sequence[TVector],
                            profiles: Optional[Sequence[SpeakerProfile]] = None) -> AttributionResult:
        """Атрибуция эталонного потока (для оценки точности атрибуции без ошибок ASR)"""
        return attribute_stream(mixture.serialized, tvectors, mode=self.mode, config=self.config,
                                profiles=profiles or mixture.profiles,
                                num_speakers=len(mixture.speakers),
                                times=reference_times(mixture))

    def score_reference(self, mixture: Mixture, result: AttributionResult) -> Dict[str, Any]:
        """
        Точность атрибуции на эталонной транскрипции

        Args:
            mixture: Смесь
            result: Результат attribute_reference

        Returns:
            dict: tokens, correct, accuracy, purity (purity - только для SD)
        """
        reference = mixture.speaker_labels
        if self.mode == 'sid':
            accuracy = speaker_accuracy(reference, result.labels)
        else:
            accuracy = mapped_accuracy(reference, result.labels)
        scores = {
            'sample_id': mixture.sample_id,
            'tokens': len(reference),
            'correct': int(round(accuracy * len(reference))),
            'accuracy': accuracy,
            'mean_decision_delay': result.mean_decision_delay,
        }
        if self.mode == 'sd':
            scores['purity'] = cluster_purity(reference, result.labels)
        return scores


def summarize_reference_scores(scores: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
    """Сводка точности атрибуции по корпусу (микроусреднение по токенам)"""
    tokens = sum(s['tokens'] for s in scores)
    summary: Dict[str, Any] = {
        'samples': len(scores),
        'tokens': tokens,
        'accuracy': sum(s['correct'] for s in scores) / tokens if tokens else 1.0,
    }
    if scores and 'purity' in scores[0]:
        summary['purity'] = sum(s['purity'] * s['tokens'] for s in scores) / tokens if tokens else 1.0
    logger.info(f"Точность атрибуции на эталоне: {summary['accuracy']:.4f} ({tokens} токенов)")
    return summary
