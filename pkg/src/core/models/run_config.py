from dataclasses import dataclass, field, fields, asdict
from typing import List, Dict, Any, Optional

from src.core.errors import ConfigError
from src.core.models.mask import MaskSpec
from src.core.models.mixture import MixtureSpec

STAGES = ('simulate', 'asr-train', 'spk-train', 'decode', 'attribute', 'eval')
EMBEDDING_SOURCES = ('oracle', 'model')
ATTRIBUTION_MODES = ('sid', 'sd')
DECISION_RULES = ('final', 'majority')
METRICS = ('wer', 'sawer', 'cpwer')


def _build(cls, data: Optional[Dict[str, Any]], section: str):
    """
    Создает dataclass из словаря, запрещая неизвестные ключи

    Args:
        cls: Класс секции
        data: Словарь с данными секции
        section: Имя секции для сообщений об ошибках

    Returns:
        Экземпляр cls
    """
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"Секция '{section}' должна быть объектом")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Неизвестные ключи в секции '{section}': {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Некорректная секция '{section}': {e}") from e


@dataclass(frozen=True)
class ModelConfig:
    """Размеры игрушечной модели"""

    d_model: int = 32
    heads: int = 4
    asr_layers: int = 2
    ff_dim: int = 64
    subsample: int = 4
    conv_kernel: int = 3
    pred_dim: int = 32
    joint_dim: int = 32
    tvector_layers: int = 2
    profile_dim: int = 32
    max_frames: int = 1024

    def __post_init__(self):
        if self.d_model % self.heads != 0:
            raise ValueError(f"d_model={self.d_model} не делится на число голов {self.heads}")
        if self.tvector_layers not in (1, 2):
            raise ValueError("Декодер t-векторов поддерживает 1 или 2 слоя LSTM")
        if self.subsample < 1 or self.conv_kernel < 1:
            raise ValueError("Шаг и ширина свертки должны быть положительными")


@dataclass(frozen=True)
class TrainingConfig:
    """Параметры цикла обучения"""

    steps: int = 300
    learning_rate: float = 3e-3
    warmup_steps: int = 30
    weight_decay: float = 1e-4
    max_candidates: int = 8
    log_every: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.steps < 0 or self.warmup_steps < 0:
            raise ValueError("Число шагов не может быть отрицательным")
        if self.learning_rate <= 0:
            raise ValueError("Скорость обучения должна быть положительной")


@dataclass(frozen=True)
class DecodingConfig:
    """Параметры лучевого поиска"""

    beam_width: int = 4
    max_symbols_per_frame: int = 4
    min_segment_seconds: float = 20.0
    max_segment_seconds: float = 40.0
    vad_threshold: Optional[float] = None

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("Ширина луча должна быть не меньше 1")
        if self.max_segment_seconds < self.min_segment_seconds:
            raise ValueError("Максимальная длина сегмента меньше минимальной")


@dataclass(frozen=True)
class AttributionConfig:
    """Параметры потоковой атрибуции дикторов"""

    mode: str = 'sid'
    delay_words: int = 2
    sd_threshold: float = 0.98
    decision_rule: str = 'final'
    word_boundary_marker: Optional[str] = None
    oracle_num_speakers: bool = True
    max_speakers: int = 8
    max_neighbors: int = 20
    kmeans_restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ATTRIBUTION_MODES:
            raise ValueError(f"Неизвестный режим атрибуции '{self.mode}'")
        if self.decision_rule not in DECISION_RULES:
            raise ValueError(f"Неизвестное правило решения '{self.decision_rule}'")
        if self.delay_words < 0:
            raise ValueError("Задержка решения не может быть отрицательной")


@dataclass(frozen=True)
class SimulationConfig:
    """Размеры синтетического корпуса и параметры смесей"""

    train_size: int = 200
    eval_size: int = 50
    mixture: MixtureSpec = field(default_factory=MixtureSpec)


@dataclass(frozen=True)
class SweepConfig:
    """Перебор задержек решения"""

    enabled: bool = False
    delays: List[int] = field(default_factory=lambda: [0, 1, 2, 4, 8])
    mode: str = 'sid'

    def __post_init__(self):
        object.__setattr__(self, 'delays', list(self.delays))
        if any(d < 0 for d in self.delays):
            raise ValueError("Задержки должны быть неотрицательными")


@dataclass(frozen=True)
class EvaluationConfig:
    metrics: List[str] = field(default_factory=lambda: ['sawer', 'cpwer'])

    def __post_init__(self):
        object.__setattr__(self, 'metrics', list(self.metrics))
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ValueError(f"Неизвестные метрики: {sorted(unknown)}")


@dataclass(frozen=True)
class RunConfig:
    """Полная конфигурация запуска конвейера"""

    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    mask: MaskSpec = field(default_factory=MaskSpec)
    model: ModelConfig = field(default_factory=ModelConfig)
    asr_training: TrainingConfig = field(default_factory=TrainingConfig)
    speaker_training: TrainingConfig = field(default_factory=TrainingConfig)
    decoding: DecodingConfig = field(default_factory=DecodingConfig)
    attribution: AttributionConfig = field(default_factory=AttributionConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    embedding_source: str = 'oracle'
    stages: List[str] = field(default_factory=lambda: list(STAGES))
    seed: int = 0
    work_dir: str = 'runs/default'
    charts: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'stages', list(self.stages))
        if self.embedding_source not in EMBEDDING_SOURCES:
            raise ConfigError(f"Неизвестный источник эмбеддингов '{self.embedding_source}'")
        unknown = set(self.stages) - set(STAGES)
        if unknown:
            raise ConfigError(f"Неизвестные этапы: {sorted(unknown)}")

    def ordered_stages(self) -> List[str]:
        """Этапы в каноническом порядке конвейера"""
        return [stage for stage in STAGES if stage in self.stages]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        """
        Создает конфигурацию из словаря (например, из JSON-файла запуска)

        Args:
            data: Словарь с секциями конфигурации

        Returns:
            RunConfig: Конфигурация запуска

        Raises:
            ConfigError: Если встречены неизвестные ключи или недопустимые значения
        """
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Неизвестные ключи конфигурации: {sorted(unknown)}")

        simulation = dict(data.pop('simulation', None) or {})
        mixture = _build(MixtureSpec, simulation.pop('mixture', None), 'simulation.mixture')
        sections = {
            'simulation': SimulationConfig(mixture=mixture, **_section_kwargs(SimulationConfig, simulation)),
            'mask': _build(MaskSpec, data.pop('mask', None), 'mask'),
            'model': _build(ModelConfig, data.pop('model', None), 'model'),
            'asr_training': _build(TrainingConfig, data.pop('asr_training', None), 'asr_training'),
            'speaker_training': _build(TrainingConfig, data.pop('speaker_training', None), 'speaker_training'),
            'decoding': _build(DecodingConfig, data.pop('decoding', None), 'decoding'),
            'attribution': _build(AttributionConfig, data.pop('attribution', None), 'attribution'),
            'evaluation': _build(EvaluationConfig, data.pop('evaluation', None), 'evaluation'),
            'sweep': _build(SweepConfig, data.pop('sweep', None), 'sweep'),
        }
        return cls(**sections, **data)


def _section_kwargs(cls, data: Dict[str, Any]) -> Dict[str, Any]:
    known = {f.name for f in fields(cls)} - {'mixture'}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Неизвестные ключи в секции 'simulation': {sorted(unknown)}")
    return data


def replace_section(config: RunConfig, section: str, **changes) -> RunConfig:
    """
    Возвращает копию конфигурации с измененными полями одной секции

    Args:
        config: Исходная конфигурация
        section: Имя секции ('attribution', 'decoding', ...)
        **changes: Новые значения полей

    Returns:
        RunConfig: Новая конфигурация
    """
    data = config.to_dict()
    if section not in data or not isinstance(data[section], dict):
        raise ConfigError(f"Неизвестная секция '{section}'")
    data[section].update(changes)
    return RunConfig.from_dict(data)
