"""Оракулы и заглушки, общие для тестов"""

import functools
import itertools
from typing import Dict, Hashable, List, Sequence, Tuple

import numpy as np
from scipy.special import log_softmax, logsumexp

from src.core.models.speaker import SpeakerProfile, TVector
from src.core.models.token import TokenEvent


class TableScorer:
    """Детерминированные распределения y_{t,u}, зависящие от кадра и префикса"""

    def __init__(self, num_frames: int, vocab_size: int, seed: int = 0, scale: float = 2.0):
        self.num_frames = num_frames
        self.vocab_size = vocab_size
        self.seed = seed
        self.scale = scale
        self._cache: Dict[Tuple[int, Tuple[int, ...]], np.ndarray] = {}

    def initial_state(self) -> Tuple[int, ...]:
        return ()

    def log_probs(self, t: int, state: Tuple[int, ...]) -> np.ndarray:
        key = (t, state)
        if key not in self._cache:
            rng = np.random.default_rng([self.seed, t, len(state), *state])
            self._cache[key] = log_softmax(self.scale * rng.standard_normal(self.vocab_size))
        return self._cache[key]

    def advance(self, state: Tuple[int, ...], token: int) -> Tuple[int, ...]:
        return state + (int(token),)


def random_lattice(rng: np.random.Generator, num_frames: int, num_targets: int, vocab_size: int) -> np.ndarray:
    """Случайная решетка log y [T, U+1, V]"""
    return log_softmax(rng.standard_normal((num_frames, num_targets + 1, vocab_size)), axis=-1)


def enumerate_alignments(log_probs: np.ndarray, targets: Sequence[int], blank: int = 0) -> List[Tuple[float, List[int]]]:
    """Все монотонные выравнивания: (логарифм вероятности пути, кадры выдачи токенов)"""
    num_frames = log_probs.shape[0]
    num_targets = len(targets)
    slots = num_frames - 1 + num_targets
    paths = []
    for emit_slots in itertools.combinations(range(slots), num_targets):
        emits = set(emit_slots)
        t = u = 0
        score = 0.0
        frames = []
        for slot in range(slots):
            if slot in emits:
                score += log_probs[t, u, targets[u]]
                frames.append(t)
                u += 1
            else:
                score += log_probs[t, u, blank]
                t += 1
        score += log_probs[num_frames - 1, num_targets, blank]
        paths.append((score, frames))
    return paths


def enumerated_loglike(log_probs: np.ndarray, targets: Sequence[int]) -> float:
    return float(logsumexp([score for score, _ in enumerate_alignments(log_probs, targets)]))


def exhaustive_prefix_scores(scorer: TableScorer, blank: int = 0) -> Dict[Tuple[int, ...], float]:
    """Полная вероятность каждой выходной последовательности при не более одном токене на кадр"""
    current = {(): 0.0}
    for t in range(scorer.num_frames):
        following: Dict[Tuple[int, ...], float] = {}

        def add(prefix, score):
            following[prefix] = np.logaddexp(following[prefix], score) if prefix in following else score

        for prefix, score in current.items():
            log_probs = scorer.log_probs(t, prefix)
            add(prefix, score + log_probs[blank])
            for token in range(scorer.vocab_size):
                if token == blank:
                    continue
                extended = prefix + (token,)
                add(extended, score + log_probs[token] + scorer.log_probs(t, extended)[blank])
        current = following
    return current


def basis(dim: int, index: int) -> np.ndarray:
    vector = np.zeros(dim)
    vector[index] = 1.0
    return vector


def orthogonal_profiles(names: Sequence[str], dim: int = 8) -> List[SpeakerProfile]:
    """Профили с попарно ортогональными d-векторами e_0, e_1, ..."""
    return [SpeakerProfile(speaker_id=name, dvector=basis(dim, i)) for i, name in enumerate(names)]


def tvectors_for(vectors: Sequence[np.ndarray]) -> List[TVector]:
    return [TVector(embedding=vector, token_index=u, emission_frame=u) for u, vector in enumerate(vectors)]


def brute_force_edit_distance(reference: Sequence[Hashable], hypothesis: Sequence[Hashable]) -> int:
    """Расстояние Левенштейна прямой рекурсией по префиксам"""

    @functools.lru_cache(maxsize=None)
    def distance(i: int, j: int) -> int:
        if i == 0 or j == 0:
            return i + j
        return min(distance(i - 1, j - 1) + int(reference[i - 1] != hypothesis[j - 1]),
                   distance(i - 1, j) + 1,
                   distance(i, j - 1) + 1)

    return distance(len(reference), len(hypothesis))


def enumerate_joint_alignments(reference: Sequence[Tuple[str, str]],
                               hypothesis: Sequence[Tuple[str, str]]) -> List[Tuple[int, int]]:
    """Все выравнивания пар (слово, диктор): (ошибки по парам, число пар с совпавшим словом)"""
    results: List[Tuple[int, int]] = []

    def walk(i: int, j: int, errors: int, matches: int) -> None:
        if i == len(reference) and j == len(hypothesis):
            results.append((errors, matches))
            return
        if i < len(reference) and j < len(hypothesis):
            walk(i + 1, j + 1, errors + int(reference[i] != hypothesis[j]),
                 matches + int(reference[i][0] == hypothesis[j][0]))
        if i < len(reference):
            walk(i + 1, j, errors + 1, matches)
        if j < len(hypothesis):
            walk(i, j + 1, errors + 1, matches)

    walk(0, 0, 0, 0)
    return results


def permutation_cpwer_errors(references: Dict[str, Sequence[str]], hypotheses: Dict[str, Sequence[str]]) -> int:
    """Минимум суммарных ошибок по всем перестановкам дикторов (недостающие - пустые транскрипции)"""
    refs = [list(words) for words in references.values()]
    hyps = [list(words) for words in hypotheses.values()]
    size = max(len(refs), len(hyps))
    refs += [[] for _ in range(size - len(refs))]
    hyps += [[] for _ in range(size - len(hyps))]
    return min(
        sum(brute_force_edit_distance(ref, hyps[column]) for ref, column in zip(refs, perm))
        for perm in itertools.permutations(range(size))
    )


def random_words(rng: np.random.Generator, max_length: int, alphabet: str = 'abc') -> List[str]:
    return [alphabet[i] for i in rng.integers(len(alphabet), size=int(rng.integers(0, max_length + 1)))]


def random_speaker_streams(rng: np.random.Generator, num_speakers: int, max_utterances: int = 4,
                           max_words: int = 3) -> List[List[TokenEvent]]:
    """
    Случайные потоки дикторов, в которых одновременно звучат не больше двух высказываний

    Каждое высказывание начинается не раньше конца всех высказываний, кроме
    последнего, и не раньше конца предыдущего высказывания своего диктора.
    Времена кратны 0.1 с, поэтому совпадения моментов начала часты.
    """
    streams: List[List[TokenEvent]] = [[] for _ in range(num_speakers)]
    speaker_end = [0.0] * num_speakers
    ends: List[float] = []
    start = 0.0
    counter = 0
    for index in range(int(rng.integers(1, max_utterances + 1))):
        speaker = int(rng.integers(num_speakers))
        start = max(start, speaker_end[speaker], max(ends[:-1], default=0.0)) + 0.1 * int(rng.integers(0, 4))
        moment = start
        for _ in range(int(rng.integers(1, max_words + 1))):
            duration = 0.1 * int(rng.integers(1, 4))
            streams[speaker].append(TokenEvent(token=f"w{counter}", speaker_id=f"S{speaker}", start_time=moment,
                                               duration=duration, utterance_id=f"u{index}"))
            counter += 1
            moment += duration + 0.1 * int(rng.integers(0, 2))
        speaker_end[speaker] = streams[speaker][-1].end_time
        ends.append(speaker_end[speaker])
    return streams
