import json
import logging
import math
import os
from typing import List, Dict, Any, Optional

from src.core.algorithms.latency import algorithmic_latency, delay_latency_seconds
from src.core.errors import StageFailure
from src.core.models.attribution import AttributionResult
from src.core.models.hypothesis import DecodedStream
from src.core.models.mixture import Mixture, SpeakerPopulation
from src.core.models.run_config import RunConfig
from src.core.models.speaker import TVector
from src.core.models.vocabulary import Vocabulary
from src.core.reports.delay_sweep_chart import DelaySweepChart
from src.core.reports.run_report import RunReport
from src.core.reports.timeline_chart import AttributionTimelineChart
from src.core.services.asr_service import AsrService
from src.core.services.attribution_service import AttributionService, reference_times, summarize_reference_scores
from src.core.services.evaluation_service import EvaluationService
from src.core.services.simulation_service import SimulationService, oracle_tvectors, run_delay_sweep
from src.core.services.speaker_service import SpeakerService
from src.data.corpus.repository import CorpusRepository
from src.data.jsonl.token_stream import write_records

logger = logging.getLogger(__name__)


class PipelineService:
    """
    Конвейер simulate -> asr-train -> spk-train -> decode -> attribute -> eval

    Артефакты в рабочем каталоге:
        corpus/                  - синтетический корпус
        checkpoints/asr.*        - модель распознавания
        checkpoints/speaker.*    - модуль t-векторов
        decode/<id>.json         - распознанные потоки
        attribute/<id>.jsonl     - атрибутированные токены
        charts/                  - диаграммы (если включены)
        report.json, manifest.json
    """

    def __init__(self, config: RunConfig, workers: int = 1):
        """
        Инициализирует конвейер

        Args:
            config: Конфигурация запуска
            workers: Число потоков внутри этапов
        """
        self.config = config
        self.workers = max(1, workers)
        self.work_dir = config.work_dir
        self.repository = CorpusRepository(os.path.join(self.work_dir, 'corpus'))
        self.report = RunReport(config=config.to_dict())

        self._corpus: Dict[str, List[Mixture]] = {}
        self._vocabulary: Optional[Vocabulary] = None
        self._population: Optional[SpeakerPopulation] = None
        self._asr: Optional[AsrService] = None
        self._speaker: Optional[SpeakerService] = None
        self._decoded: Dict[str, DecodedStream] = {}
        self._results: Dict[str, AttributionResult] = {}
        self._tvectors: Dict[str, List[TVector]] = {}

    @property
    def uses_oracle(self) -> bool:
        return self.config.embedding_source == 'oracle'

    def _path(self, *parts: str) -> str:
        return os.path.join(self.work_dir, *parts)

    # --- Корпус и модели ---

    def split(self, name: str) -> List[Mixture]:
        """Смеси части корпуса (из памяти или с диска)"""
        if name not in self._corpus:
            if not self.repository.exists():
                raise FileNotFoundError(f"Корпус не найден: {self.repository.root}")
            self._corpus[name] = self.repository.load_split(name)
        return self._corpus[name]

    @property
    def vocabulary(self) -> Vocabulary:
        if self._vocabulary is None:
            self._vocabulary = self.repository.vocabulary()
        return self._vocabulary

    @property
    def population(self) -> SpeakerPopulation:
        if self._population is None:
            self._population = self.repository.population()
        return self._population

    def _new_asr(self) -> AsrService:
        spec = self.config.simulation.mixture
        return AsrService(self.config.model, self.config.mask, self.vocabulary, spec.feature_dim,
                          frame_hop_seconds=spec.frame_hop_seconds, max_channels=spec.max_overlap)

    @property
    def asr(self) -> AsrService:
        """Сервис ASR; если этап обучения не запускался, модель читается из чекпоинта"""
        if self._asr is None:
            self._asr = self._new_asr()
            self._asr.load(self._path('checkpoints', 'asr'))
        return self._asr

    @property
    def speaker(self) -> SpeakerService:
        if self._speaker is None:
            self._speaker = SpeakerService(self.asr)
            self._speaker.load(self._path('checkpoints', 'speaker'))
        return self._speaker

    def decoded(self, mixture: Mixture) -> DecodedStream:
        """Распознанный поток смеси (из памяти или из decode/<id>.json)"""
        if mixture.sample_id not in self._decoded:
            path = self._path('decode', f"{mixture.sample_id}.json")
            if not os.path.exists(path):
                raise FileNotFoundError(f"Нет результата распознавания: {path}")
            with open(path, 'r', encoding='utf-8') as f:
                self._decoded[mixture.sample_id] = DecodedStream.from_dict(json.load(f))
        return self._decoded[mixture.sample_id]

    # --- Этапы ---

    def simulate(self) -> Dict[str, Any]:
        simulation = self.config.simulation
        service = SimulationService(simulation.mixture, self.repository, self.workers)
        self._corpus = service.generate_corpus(simulation.train_size, simulation.eval_size)
        self._vocabulary = service.vocabulary
        self._population = service.population
        self.report.add_artifact('corpus', self.repository.root)
        return {split: len(mixtures) for split, mixtures in self._corpus.items()}

    def train_asr(self) -> Dict[str, Any]:
        if self.uses_oracle:
            return {'skipped': 'oracle embeddings'}
        self._asr = self._new_asr()
        losses = self._asr.train(self.split('train'), self.config.asr_training)
        self.report.add_artifact('asr_checkpoint', self._asr.save(self._path('checkpoints', 'asr')))
        return {'final_loss': losses[-1] if losses else None}

    def train_speaker(self) -> Dict[str, Any]:
        if self.uses_oracle:
            return {'skipped': 'oracle embeddings'}
        self._speaker = SpeakerService(self.asr)
        losses = self._speaker.train(self.split('train'), self.population, self.config.speaker_training)
        self.report.add_artifact('speaker_checkpoint', self._speaker.save(self._path('checkpoints', 'speaker')))
        return {'final_loss': losses[-1] if losses else None}

    def decode(self) -> Dict[str, Any]:
        """Распознавание тестовых смесей; с оракульными эмбеддингами гипотезой служит эталонный поток"""
        os.makedirs(self._path('decode'), exist_ok=True)
        spec = self.config.simulation.mixture
        for mixture in self.split('eval'):
            if self.uses_oracle:
                decoded = DecodedStream(sample_id=mixture.sample_id, stream=mixture.serialized,
                                        times=reference_times(mixture))
            else:
                decoded = self.asr.decode(mixture.sample_id, mixture.features, self.config.decoding)
            self._decoded[mixture.sample_id] = decoded
            with open(self._path('decode', f"{mixture.sample_id}.json"), 'w', encoding='utf-8') as f:
                json.dump(decoded.to_dict(), f, ensure_ascii=False)
        self.report.add_artifact('decode', self._path('decode'))
        logger.info(f"Распознано {len(self._decoded)} смесей (M={spec.max_overlap})")
        return {'samples': len(self._decoded)}

    def _hypothesis_tvectors(self, mixture: Mixture, decoded: DecodedStream) -> List[TVector]:
        if self.uses_oracle:
            return oracle_tvectors(mixture)
        return self.speaker.extract(mixture.features, decoded.stream.entries, decoded.frames)

    def reference_tvectors(self, mixture: Mixture) -> List[TVector]:
        """t-векторы эталонной транскрипции (оракульные или извлеченные моделью)"""
        if mixture.sample_id not in self._tvectors:
            if self.uses_oracle:
                self._tvectors[mixture.sample_id] = oracle_tvectors(mixture)
            else:
                self._tvectors[mixture.sample_id] = self.speaker.reference_tvectors(mixture)
        return self._tvectors[mixture.sample_id]

    def attribute(self) -> Dict[str, Any]:
        """Атрибуция гипотез и точность атрибуции на эталонных транскрипциях"""
        os.makedirs(self._path('attribute'), exist_ok=True)
        service = AttributionService(self.config.attribution)
        reference_scores = []
        for mixture in self.split('eval'):
            decoded = self.decoded(mixture)
            result = service.attribute(mixture, decoded, self._hypothesis_tvectors(mixture, decoded))
            self._results[mixture.sample_id] = result
            write_records(self._path('attribute', f"{mixture.sample_id}.jsonl"), result.to_records())

            reference = service.attribute_reference(mixture, self.reference_tvectors(mixture))
            reference_scores.append(service.score_reference(mixture, reference))

        summary = summarize_reference_scores(reference_scores)
        self.report.metrics['reference_attribution'] = summary
        self.report.add_artifact('attribute', self._path('attribute'))
        return {'samples': len(self._results), 'reference_accuracy': summary['accuracy']}

    def evaluate(self) -> Dict[str, Any]:
        mixtures = self.split('eval')
        missing = [m.sample_id for m in mixtures if m.sample_id not in self._results]
        if missing:
            raise ValueError(f"Нет результатов атрибуции для {len(missing)} смесей; запустите этап 'attribute'")
        evaluation = EvaluationService(self.config.evaluation.metrics)
        self.report.metrics.update(evaluation.evaluate([(m, self._results[m.sample_id]) for m in mixtures]))

        spec = self.config.simulation.mixture
        durations = [d for m in mixtures for d in m.word_durations]
        encoder_latency = algorithmic_latency(self.config.mask, spec.frame_hop_seconds, self.config.model.subsample)
        delays = [d for r in self._results.values() for d in r.decision_delays]
        self.report.latency = {
            'algorithmic_seconds': None if math.isinf(encoder_latency) else encoder_latency,
            'delay_words': self.config.attribution.delay_words,
            'delay_seconds': delay_latency_seconds(durations, self.config.attribution.delay_words) if durations else 0.0,
            'mean_decision_delay_words': sum(delays) / len(delays) if delays else 0.0,
        }

        if self.config.sweep.enabled:
            sweep = self.config.sweep
            self.report.delay_sweep = run_delay_sweep(
                mixtures, sweep.delays, sweep.mode, self.config.attribution,
                tvectors={m.sample_id: self.reference_tvectors(m) for m in mixtures}, workers=self.workers,
            )
        if self.config.charts:
            self._charts(mixtures)
        return {key: value for key, value in self.report.metrics.items() if isinstance(value, float)}

    def _charts(self, mixtures: List[Mixture]) -> None:
        charts_dir = self._path('charts')
        if self.report.delay_sweep:
            self.report.add_artifact('delay_sweep_chart', DelaySweepChart(charts_dir).generate(
                self.config.sweep.mode, self.report.delay_sweep))
        if mixtures:
            first = mixtures[0]
            self.report.add_artifact('timeline_chart', AttributionTimelineChart(charts_dir).generate(
                first.sample_id, self._results[first.sample_id]))

    # --- Запуск ---

    def run(self) -> RunReport:
        """
        Выполняет настроенные этапы по порядку

        Returns:
            RunReport: Отчет запуска (сохранен в report.json и manifest.json)

        Raises:
            StageFailure: Если этап завершился ошибкой; частичные артефакты и отчет сохраняются
        """
        handlers = {
            'simulate': self.simulate,
            'asr-train': self.train_asr,
            'spk-train': self.train_speaker,
            'decode': self.decode,
            'attribute': self.attribute,
            'eval': self.evaluate,
        }
        os.makedirs(self.work_dir, exist_ok=True)
        logger.info(f"Запуск конвейера в {self.work_dir}: {', '.join(self.config.ordered_stages())}")
        for stage in self.config.ordered_stages():
            try:
                with self.report.stage(stage) as record:
                    record.update(handlers[stage]())
            except (ValueError, OSError, KeyError, RuntimeError) as e:
                logger.error(f"Этап '{stage}' завершился ошибкой: {e}")
                self.report.write(self.work_dir)
                raise StageFailure(stage, str(e), e) from e
        self.report.write(self.work_dir)
        return self.report


def pipeline_run(config: RunConfig, workers: int = 1) -> RunReport:
    """
    Выполняет конвейер по конфигурации запуска

    Args:
        config: Конфигурация запуска
        workers: Число потоков внутри этапов

    Returns:
        RunReport: Манифест и отчет с метриками
    """
    return PipelineService(config, workers).run()
