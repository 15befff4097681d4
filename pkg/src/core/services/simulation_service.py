import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Dict, Any, Optional, Sequence, Tuple

import numpy as np

from src.core.algorithms.latency import delay_latency_seconds
from src.core.algorithms.scoring import mapped_accuracy, speaker_accuracy
from src.core.algorithms.streaming_attribution import attribute_stream, missed_changes
from src.core.algorithms.tsot import chronological_order, check_overlap_budget, serialize
from src.core.errors import InfeasibleSpec, OverlapBudgetExceeded
from src.core.models.mixture import Mixture, MixtureSpec, SpeakerPopulation
from src.core.models.run_config import AttributionConfig
from src.core.models.speaker import SpeakerProfile, TVector, enroll_profile
from src.core.models.token import TokenEvent
from src.core.models.vocabulary import Vocabulary
from src.core.services.attribution_service import reference_times
from src.data.corpus.repository import CorpusRepository

logger = logging.getLogger(__name__)

TAIL_SECONDS = 0.1
POPULATION_STREAM = 1
TEMPLATE_STREAM = 2
SPLIT_STREAM = 3


def _orthogonal_unit(rng: np.random.Generator, anchor: np.ndarray) -> np.ndarray:
    """Случайный единичный вектор, ортогональный anchor"""
    for _ in range(16):
        vector = rng.standard_normal(anchor.shape[0])
        vector -= np.dot(vector, anchor) * anchor
        norm = np.linalg.norm(vector)
        if norm > 1e-8:
            return vector / norm
    raise InfeasibleSpec("Не удалось построить ортогональный вектор")


def mix_with_cosine(rng: np.random.Generator, anchor: np.ndarray, cosine: float) -> np.ndarray:
    """
    Единичный вектор sqrt(c) * anchor + sqrt(1 - c) * n, n ортогонален anchor

    Два таких вектора при одном anchor имеют ожидаемый косинус c.

    Args:
        rng: Генератор случайных чисел
        anchor: Единичный опорный вектор
        cosine: Целевой попарный косинус c в [0, 1]

    Returns:
        np.ndarray: Единичный вектор
    """
    if cosine >= 1.0:
        return anchor.copy()
    vector = math.sqrt(cosine) * anchor + math.sqrt(1.0 - cosine) * _orthogonal_unit(rng, anchor)
    return vector / np.linalg.norm(vector)


def build_population(spec: MixtureSpec) -> SpeakerPopulation:
    """
    Строит популяцию дикторов с заданной геометрией d-векторов

    d_i = sqrt(rho) * c + sqrt(1 - rho) * n_i, где c - общий единичный вектор,
    n_i - случайные единичные векторы, ортогональные c; ожидаемый косинус
    между дикторами равен rho = inter_cosine.

    Args:
        spec: Параметры генерации

    Returns:
        SpeakerPopulation: Идентификаторы, d-векторы и голосовая матрица

    Raises:
        InfeasibleSpec: Если целевой косинус отрицателен
    """
    if spec.inter_cosine < 0:
        raise InfeasibleSpec(f"Отрицательный косинус между дикторами ({spec.inter_cosine}) не поддерживается")
    rng = np.random.default_rng([spec.seed, POPULATION_STREAM])
    center = rng.standard_normal(spec.profile_dim)
    center /= np.linalg.norm(center)
    dvectors = np.stack([mix_with_cosine(rng, center, spec.inter_cosine) for _ in range(spec.population_size)])
    width = max(3, len(str(spec.population_size - 1)))
    speaker_ids = tuple(f"spk{i:0{width}d}" for i in range(spec.population_size))
    voice_matrix = rng.standard_normal((spec.feature_dim, spec.profile_dim)) / math.sqrt(spec.profile_dim)
    return SpeakerPopulation(speaker_ids=speaker_ids, dvectors=dvectors, voice_matrix=voice_matrix)


def word_templates(spec: MixtureSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Шаблоны начала и продолжения слова: два массива [vocab_size, feature_dim]"""
    rng = np.random.default_rng([spec.seed, TEMPLATE_STREAM])
    return (rng.standard_normal((spec.vocab_size, spec.feature_dim)),
            rng.standard_normal((spec.vocab_size, spec.feature_dim)))


@dataclass
class _Utterance:
    speaker_id: str
    words: List[int]
    durations: List[float]
    gaps: List[float]

    @property
    def length(self) -> float:
        return sum(self.durations) + sum(self.gaps)


def _draw_utterances(rng: np.random.Generator, spec: MixtureSpec,
                     speakers: Sequence[str]) -> List[_Utterance]:
    order = [speaker for speaker in speakers for _ in range(spec.utterances_per_speaker)]
    rng.shuffle(order)
    utterances = []
    for speaker_id in order:
        count = int(rng.integers(spec.min_tokens, spec.max_tokens + 1))
        utterances.append(_Utterance(
            speaker_id=speaker_id,
            words=[int(w) for w in rng.integers(0, spec.vocab_size, size=count)],
            durations=[float(d) for d in rng.uniform(spec.min_word_seconds, spec.max_word_seconds, size=count)],
            gaps=[float(g) for g in rng.uniform(0.0, spec.max_gap_seconds, size=count - 1)],
        ))
    return utterances


def _place(utterances: Sequence[_Utterance], starts: Sequence[float], vocabulary: Vocabulary,
           sample_id: str) -> Dict[str, List[TokenEvent]]:
    streams: Dict[str, List[TokenEvent]] = {}
    for index, (utterance, start) in enumerate(zip(utterances, starts)):
        time = start
        for position, (word, duration) in enumerate(zip(utterance.words, utterance.durations)):
            streams.setdefault(utterance.speaker_id, []).append(TokenEvent(
                token=vocabulary.words[word],
                speaker_id=utterance.speaker_id,
                start_time=round(time, 6),
                duration=round(duration, 6),
                utterance_id=f"{sample_id}-u{index}",
            ))
            time += duration + (utterance.gaps[position] if position < len(utterance.gaps) else 0.0)
    return streams


def _self_overlap(utterances: Sequence[_Utterance], starts: Sequence[float]) -> bool:
    last_end: Dict[str, float] = {}
    for utterance, start in zip(utterances, starts):
        if start < last_end.get(utterance.speaker_id, -math.inf):
            return True
        last_end[utterance.speaker_id] = start + utterance.length
    return False


def generate_mixture(spec: MixtureSpec, seed: int, sample_id: str = 'sample',
                     population: Optional[SpeakerPopulation] = None,
                     vocabulary: Optional[Vocabulary] = None,
                     templates: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> Mixture:
    """
    Генерирует одну синтетическую смесь

    Высказывания начинаются через равномерно распределенные задержки; если
    бюджет перекрытия M нарушен, задержки перевыбираются. Признаки - сумма
    шаблонов слов, голосовых векторов дикторов и гауссова шума.

    Args:
        spec: Параметры генерации
        seed: Зерно образца
        sample_id: Идентификатор образца
        population: Популяция дикторов (по умолчанию строится по spec)
        vocabulary: Словарь (по умолчанию синтетический размера vocab_size)
        templates: Шаблоны слов (по умолчанию строятся по spec)

    Returns:
        Mixture: Признаки, эталонные токены, сериализованный эталон, метки и пул профилей

    Raises:
        InfeasibleSpec: Если бюджет перекрытия не выполнен за max_attempts попыток
    """
    population = population or build_population(spec)
    vocabulary = vocabulary or Vocabulary.synthetic(spec.vocab_size)
    onset, sustain = templates or word_templates(spec)
    rng = np.random.default_rng(seed)

    num_speakers = int(rng.integers(spec.min_speakers, spec.max_speakers + 1))
    speakers = [population.speaker_ids[i] for i in
                rng.choice(len(population.speaker_ids), size=num_speakers, replace=False)]
    utterances = _draw_utterances(rng, spec, speakers)

    streams = None
    for attempt in range(spec.max_attempts):
        delays = rng.uniform(spec.min_delay_seconds, spec.max_delay_seconds, size=len(utterances) - 1)
        starts = np.concatenate([[0.0], np.cumsum(delays)]).tolist()
        if _self_overlap(utterances, starts):
            continue
        candidate = _place(utterances, starts, vocabulary, sample_id)
        try:
            check_overlap_budget(list(candidate.values()), spec.max_overlap)
        except OverlapBudgetExceeded:
            logger.debug(f"{sample_id}: попытка {attempt + 1} нарушает бюджет перекрытия")
            continue
        streams = candidate
        break
    if streams is None:
        raise InfeasibleSpec(
            f"{sample_id}: бюджет перекрытия M={spec.max_overlap} не выполнен за {spec.max_attempts} попыток"
        )

    ordered_streams = list(streams.values())
    policy = 'speaker' if num_speakers <= spec.max_overlap else 'virtual'
    serialized = serialize(ordered_streams, max_overlap=spec.max_overlap, channel_policy=policy)
    tokens = [event for _, event in chronological_order(ordered_streams)]

    hop = spec.frame_hop_seconds
    num_frames = int(math.ceil((max(e.end_time for e in tokens) + TAIL_SECONDS) / hop))
    features = spec.noise_level * rng.standard_normal((num_frames, spec.feature_dim))
    for event in tokens:
        word = vocabulary.index(event.token) - 2
        first = int(round(event.start_time / hop))
        last = max(first + 1, int(round(event.end_time / hop)))
        voice = spec.voice_gain * population.voice(event.speaker_id)
        features[first] += onset[word] + voice
        features[first + 1:last] += sustain[word] + voice

    others = [s for s in population.speaker_ids if s not in speakers]
    distractors = [others[i] for i in rng.choice(len(others), size=spec.num_profiles - num_speakers, replace=False)]
    profiles = []
    for speaker_id in sorted(speakers + distractors):
        anchor = population.vector(speaker_id)
        enrollments = [mix_with_cosine(rng, anchor, spec.intra_cosine) for _ in range(spec.profile_utterances)]
        profiles.append(enroll_profile(speaker_id, enrollments))

    oracle = np.stack([mix_with_cosine(rng, population.vector(e.speaker_id), spec.intra_cosine) for e in tokens])

    return Mixture(
        sample_id=sample_id,
        features=features,
        tokens=tokens,
        serialized=serialized,
        speaker_labels=[event.speaker_id for event in tokens],
        profiles=profiles,
        seed=seed,
        word_durations=[event.duration for event in tokens],
        oracle_embeddings=oracle,
    )


def sample_seeds(spec: MixtureSpec, split_index: int, count: int) -> List[int]:
    """Независимые зерна образцов, выведенные из зерна спецификации"""
    children = np.random.SeedSequence([spec.seed, SPLIT_STREAM, split_index]).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


def oracle_tvectors(mixture: Mixture) -> List[TVector]:
    """Оракульные t-векторы смеси в порядке обычных токенов потока"""
    if mixture.oracle_embeddings is None:
        raise ValueError(f"У смеси {mixture.sample_id} нет оракульных эмбеддингов")
    return [
        TVector(embedding=vector, token_index=u, emission_frame=0, token=event.token)
        for u, (vector, event) in enumerate(zip(mixture.oracle_embeddings, mixture.tokens))
    ]


def reference_change_points(channels: Sequence[int], labels: Sequence[str]) -> Dict[int, List[int]]:
    """
    Истинные точки смены диктора по каналам

    Args:
        channels: Канал каждого обычного токена
        labels: Эталонный диктор каждого токена

    Returns:
        dict: Для каждого канала индексы слов канала, с которых начинается новый диктор
    """
    points: Dict[int, List[int]] = {}
    previous: Dict[int, str] = {}
    counts: Dict[int, int] = {}
    for channel, label in zip(channels, labels):
        index = counts.get(channel, 0)
        if index > 0 and previous[channel] != label:
            points.setdefault(channel, []).append(index)
        previous[channel] = label
        counts[channel] = index + 1
    return points


class SimulationService:
    """Сервис генерации синтетического корпуса и перебора задержек решения"""

    def __init__(self, spec: MixtureSpec, repository: Optional[CorpusRepository] = None, workers: int = 1):
        """
        Инициализирует сервис симуляции

        Args:
            spec: Параметры генерации
            repository: Репозиторий для сохранения корпуса (опционально)
            workers: Число потоков генерации
        """
        self.spec = spec
        self.repository = repository
        self.workers = max(1, workers)
        self.population = build_population(spec)
        self.vocabulary = Vocabulary.synthetic(spec.vocab_size)
        self.templates = word_templates(spec)

    def generate_split(self, split: str, split_index: int, size: int) -> List[Mixture]:
        """
        Генерирует часть корпуса

        Args:
            split: Имя части
            split_index: Номер части (входит в зерно)
            size: Число смесей

        Returns:
            List[Mixture]: Смеси в порядке идентификаторов
        """
        seeds = sample_seeds(self.spec, split_index, size)
        width = max(4, len(str(size)))
        ids = [f"{split}-{i:0{width}d}" for i in range(size)]

        def build(index: int) -> Mixture:
            return generate_mixture(self.spec, seeds[index], ids[index], self.population,
                                    self.vocabulary, self.templates)

        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            mixtures = list(executor.map(build, range(size)))
        logger.info(f"Сгенерировано {len(mixtures)} смесей части '{split}'")
        return mixtures

    def generate_corpus(self, train_size: int, eval_size: int) -> Dict[str, List[Mixture]]:
        """
        Генерирует корпус и сохраняет его, если задан репозиторий

        Args:
            train_size: Число обучающих смесей
            eval_size: Число тестовых смесей

        Returns:
            dict: Смеси по частям 'train' и 'eval'
        """
        corpus = {
            'train': self.generate_split('train', 0, train_size),
            'eval': self.generate_split('eval', 1, eval_size),
        }
        if self.repository is not None:
            for split, mixtures in corpus.items():
                for mixture in mixtures:
                    self.repository.save_mixture(split, mixture)
            self.repository.save_manifest(self.spec, self.vocabulary, self.population,
                                          {split: [m.sample_id for m in mixtures] for split, mixtures in corpus.items()})
        return corpus


def evaluate_attribution(mixture: Mixture, tvectors: Sequence[TVector], mode: str,
                         config: AttributionConfig,
                         profiles: Optional[Sequence[SpeakerProfile]] = None) -> Dict[str, Any]:
    """
    Атрибуция одной смеси с эталонной транскрипцией и подсчет ошибок

    Args:
        mixture: Смесь
        tvectors: t-векторы обычных токенов
        mode: 'sid' или 'sd'
        config: Параметры атрибуции
        profiles: Пул профилей (по умолчанию пул смеси)

    Returns:
        dict: errors, tokens, missed_changes, true_changes, decision_delay_sum
    """
    result = attribute_stream(mixture.serialized, tvectors, mode=mode, config=config,
                              profiles=profiles or mixture.profiles,
                              num_speakers=len(mixture.speakers), times=reference_times(mixture))
    reference = mixture.speaker_labels
    if mode == 'sid':
        accuracy = speaker_accuracy(reference, result.labels)
    else:
        accuracy = mapped_accuracy(reference, result.labels)

    channels = [event.channel for event in result.tokens]
    truth = reference_change_points(channels, reference)
    missed = sum(missed_changes(points, result.change_points.get(channel, [])) for channel, points in truth.items())
    return {
        'errors': len(reference) - int(round(accuracy * len(reference))),
        'tokens': len(reference),
        'missed_changes': missed,
        'true_changes': sum(len(points) for points in truth.values()),
        'decision_delay_sum': float(sum(result.decision_delays)),
    }


def run_delay_sweep(mixtures: Sequence[Mixture], delays: Sequence[int], mode: str = 'sid',
                    config: Optional[AttributionConfig] = None,
                    tvectors: Optional[Dict[str, List[TVector]]] = None,
                    workers: int = 1) -> List[Dict[str, Any]]:
    """
    Перебор задержек решения D

    Args:
        mixtures: Тестовые смеси
        delays: Значения D
        mode: 'sid' или 'sd'
        config: Базовые параметры атрибуции (delay_words и mode заменяются)
        tvectors: t-векторы по идентификатору смеси (по умолчанию оракульные)
        workers: Число потоков (по одному значению D на поток)

    Returns:
        List[dict]: По строке на D: delay, attribution_error, missed_changes, true_changes,
        mean_decision_delay, latency_seconds
    """
    base = config or AttributionConfig()
    durations = [d for mixture in mixtures for d in mixture.word_durations]
    embeddings = {m.sample_id: (tvectors or {}).get(m.sample_id) or oracle_tvectors(m) for m in mixtures}

    def run(delay: int) -> Dict[str, Any]:
        params = replace(base, mode=mode, delay_words=int(delay))
        totals = {'errors': 0, 'tokens': 0, 'missed_changes': 0, 'true_changes': 0, 'decision_delay_sum': 0.0}
        for mixture in mixtures:
            for key, value in evaluate_attribution(mixture, embeddings[mixture.sample_id], mode, params).items():
                totals[key] += value
        tokens = max(1, totals['tokens'])
        row = {
            'delay': int(delay),
            'attribution_error': totals['errors'] / tokens,
            'missed_changes': totals['missed_changes'],
            'true_changes': totals['true_changes'],
            'mean_decision_delay': totals['decision_delay_sum'] / tokens,
            'latency_seconds': delay_latency_seconds(durations, int(delay)) if durations else 0.0,
        }
        logger.info(f"D={delay}: ошибка атрибуции {row['attribution_error']:.4f}, пропущено смен {row['missed_changes']}")
        return row

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        return list(executor.map(run, delays))
