import logging
from dataclasses import replace
from typing import List, Dict, Any, Sequence

from src.core.algorithms.cpwer import concatenate_by_speaker, cpwer
from src.core.algorithms.edit_distance import sawer, wer
from src.core.models.attribution import AttributionResult
from src.core.models.mixture import Mixture
from src.core.models.token import TokenEvent

logger = logging.getLogger(__name__)


class EvaluationService:
    """Сервис подсчета метрик WER, SER, SAWER и cpWER"""

    def __init__(self, metrics: Sequence[str] = ('sawer', 'cpwer')):
        """
        Инициализирует сервис оценки

        Args:
            metrics: Набор метрик ('wer', 'sawer', 'cpwer')
        """
        self.metrics = list(metrics)

    @staticmethod
    def _relabel(reference: Sequence[TokenEvent], hypothesis: Sequence[TokenEvent]) -> List[TokenEvent]:
        """Переименовывает анонимные метки гипотезы в дикторов эталона по назначению cpWER"""
        mapping = cpwer(concatenate_by_speaker(reference), concatenate_by_speaker(hypothesis)).mapping()
        return [replace(e, speaker_id=mapping.get(e.speaker_id, e.speaker_id)) for e in hypothesis]

    def evaluate_sample(self, mixture: Mixture, result: AttributionResult) -> Dict[str, Any]:
        """
        Метрики одной смеси

        Args:
            mixture: Смесь с эталонными токенами
            result: Атрибутированная гипотеза

        Returns:
            dict: Счетчики выбранных метрик
        """
        reference = mixture.tokens
        hypothesis = list(result.tokens)
        if result.mode == 'sd':
            hypothesis = self._relabel(reference, hypothesis)

        scores: Dict[str, Any] = {'sample_id': mixture.sample_id, 'reference_length': len(reference)}
        if 'wer' in self.metrics:
            alignment = wer([e.token for e in reference], [e.token for e in hypothesis])
            scores['word_errors'] = alignment.errors
        if 'sawer' in self.metrics:
            attributed = sawer([(e.token, e.speaker_id) for e in reference],
                               [(e.token, e.speaker_id) for e in hypothesis])
            scores.update({
                'word_errors': attributed.word_alignment.errors,
                'joint_errors': attributed.joint_errors,
                'word_hits': attributed.word_hits,
                'speaker_errors': attributed.speaker_errors,
            })
        if 'cpwer' in self.metrics:
            permuted = cpwer(concatenate_by_speaker(reference), concatenate_by_speaker(result.tokens))
            scores.update({'cp_errors': permuted.errors, 'cp_length': permuted.length, 'cp_solver': permuted.solver})
        return scores

    def aggregate(self, samples: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
        """
        Сводные метрики по корпусу (отношение сумм ошибок к сумме длин эталонов)

        Args:
            samples: Результаты evaluate_sample

        Returns:
            dict: wer, ser, sawer, cpwer (для выбранных метрик) и число образцов
        """
        length = sum(s['reference_length'] for s in samples)
        report: Dict[str, Any] = {'samples': len(samples), 'reference_length': length}

        def total(key: str) -> int:
            return sum(s.get(key, 0) for s in samples)

        if 'wer' in self.metrics or 'sawer' in self.metrics:
            report['wer'] = total('word_errors') / max(1, length)
        if 'sawer' in self.metrics:
            hits = total('word_hits')
            report['sawer'] = total('joint_errors') / max(1, length)
            report['ser'] = total('speaker_errors') / hits if hits else 0.0
        if 'cpwer' in self.metrics:
            report['cpwer'] = total('cp_errors') / max(1, total('cp_length'))
            report['cpwer_solvers'] = sorted({s['cp_solver'] for s in samples if 'cp_solver' in s})
        logger.info(f"Метрики по {len(samples)} смесям: " + ", ".join(
            f"{key}={value:.4f}" for key, value in report.items() if isinstance(value, float)
        ))
        return report

    def evaluate(self, pairs: Sequence[tuple]) -> Dict[str, Any]:
        """Метрики по списку пар (смесь, результат атрибуции)"""
        return self.aggregate([self.evaluate_sample(mixture, result) for mixture, result in pairs])

    def compare(self, reference: Sequence[TokenEvent], hypothesis: Sequence[TokenEvent],
                relabel: bool = False) -> Dict[str, Any]:
        """
        Подробный отчет по одной паре эталон/гипотеза

        Args:
            reference: Эталонные токены с дикторами
            hypothesis: Атрибутированная гипотеза
            relabel: Переименовать метки гипотезы по назначению cpWER (для SD)

        Returns:
            dict: Счетчики и доли по каждой выбранной метрике, для cpWER - назначение дикторов
        """
        hypothesis = list(hypothesis)
        if relabel:
            hypothesis = self._relabel(reference, hypothesis)
        report: Dict[str, Any] = {}
        if 'wer' in self.metrics:
            report['wer'] = wer([e.token for e in reference], [e.token for e in hypothesis]).to_dict()
        if 'sawer' in self.metrics:
            report['sawer'] = sawer([(e.token, e.speaker_id) for e in reference],
                                    [(e.token, e.speaker_id) for e in hypothesis]).to_dict()
        if 'cpwer' in self.metrics:
            report['cpwer'] = cpwer(concatenate_by_speaker(reference), concatenate_by_speaker(hypothesis)).to_dict()
        return report
