"""Генерация синтетических смесей и перебор задержек решения"""

import itertools
from dataclasses import replace

import numpy as np
import pytest

from src.core.algorithms.scoring import speaker_accuracy
from src.core.algorithms.streaming_attribution import identify_speaker
from src.core.algorithms.tsot import check_overlap_budget, deserialize
from src.core.errors import InfeasibleSpec
from src.core.models.mixture import Mixture, MixtureSpec
from src.core.models.token import SerializedStream, TokenEvent
from src.core.services.simulation_service import (
    SimulationService, build_population, generate_mixture, mix_with_cosine, oracle_tvectors,
    reference_change_points, run_delay_sweep, sample_seeds,
)
from src.data.corpus.repository import CorpusRepository
from tests.helpers import basis, orthogonal_profiles


def test_fixed_seed_is_deterministic(tiny_spec):
    first = generate_mixture(tiny_spec, seed=11, sample_id='s')
    second = generate_mixture(tiny_spec, seed=11, sample_id='s')

    assert np.array_equal(first.features, second.features)
    assert first.tokens == second.tokens
    assert first.serialized == second.serialized
    assert first.profiles == second.profiles
    assert np.array_equal(first.oracle_embeddings, second.oracle_embeddings)


def test_single_speaker_target_has_no_channel_change(tiny_spec):
    spec = replace(tiny_spec, min_speakers=1, max_speakers=1, utterances_per_speaker=2)
    for seed in range(5):
        assert generate_mixture(spec, seed).serialized.cc_count == 0


def test_mixture_contents(tiny_spec):
    mixture = generate_mixture(tiny_spec, seed=3)

    starts = [e.start_time for e in mixture.tokens]
    assert starts == sorted(starts)
    assert mixture.serialized.tokens == [e.token for e in mixture.tokens]
    assert mixture.speaker_labels == [e.speaker_id for e in mixture.tokens]
    assert mixture.features.shape[1] == tiny_spec.feature_dim
    assert mixture.oracle_embeddings.shape == (len(mixture.tokens), tiny_spec.profile_dim)
    assert len(mixture.profiles) == tiny_spec.num_profiles
    ids = [p.speaker_id for p in mixture.profiles]
    assert ids == sorted(ids)
    assert set(mixture.speakers) <= set(ids)
    assert 2 <= len(mixture.tokens) <= 6


def test_two_speaker_channels_hold_one_speaker_each(tiny_spec):
    for seed in range(4):
        mixture = generate_mixture(tiny_spec, seed)
        by_speaker = mixture.tokens_by_speaker()

        channels = deserialize(mixture.serialized)

        expected = [[e.token for e in by_speaker[s]] for s in mixture.speakers]
        assert [c.words for c in channels] == expected
        assert check_overlap_budget(list(by_speaker.values()), tiny_spec.max_overlap) <= 2


def test_more_speakers_than_channels_use_virtual_channels(tiny_spec):
    spec = replace(tiny_spec, min_speakers=3, max_speakers=3, min_delay_seconds=1.0, max_delay_seconds=2.0)

    mixture = generate_mixture(spec, seed=2)

    assert len(mixture.speakers) == 3
    channels = deserialize(mixture.serialized)
    assert sum(len(c.tokens) for c in channels) == len(mixture.tokens)


def test_population_inter_cosine_matches_target():
    spec = MixtureSpec(population_size=60, num_profiles=8, profile_dim=32, inter_cosine=0.2, seed=4)
    vectors = build_population(spec).dvectors

    cosines = [float(vectors[i] @ vectors[j]) for i, j in itertools.combinations(range(len(vectors)), 2)]

    assert np.allclose(np.linalg.norm(vectors, axis=1), 1.0)
    assert np.mean(cosines) == pytest.approx(0.2, abs=0.05)


def test_mix_with_cosine_pairwise_mean(rng):
    anchor = basis(32, 0)
    cosines = [float(mix_with_cosine(rng, anchor, 0.7) @ mix_with_cosine(rng, anchor, 0.7)) for _ in range(1000)]

    assert np.mean(cosines) == pytest.approx(0.7, abs=0.05)
    np.testing.assert_array_equal(mix_with_cosine(rng, anchor, 1.0), anchor)


def test_negative_inter_cosine_is_infeasible(tiny_spec):
    with pytest.raises(InfeasibleSpec):
        build_population(replace(tiny_spec, inter_cosine=-0.3))


def test_spec_validation():
    with pytest.raises(ValueError):
        MixtureSpec(min_speakers=0)
    with pytest.raises(ValueError):
        MixtureSpec(min_speakers=3, max_speakers=2)
    with pytest.raises(ValueError):
        MixtureSpec(population_size=4, num_profiles=8)
    with pytest.raises(ValueError):
        MixtureSpec.from_dict({'speakers': 2})


def test_sample_seeds_depend_on_split(tiny_spec):
    assert sample_seeds(tiny_spec, 0, 3) == sample_seeds(tiny_spec, 0, 3)
    assert sample_seeds(tiny_spec, 0, 3) != sample_seeds(tiny_spec, 1, 3)


def test_corpus_generation_is_independent_of_workers(tmp_path, tiny_spec):
    repository = CorpusRepository(str(tmp_path / 'corpus'))
    parallel = SimulationService(tiny_spec, repository, workers=3).generate_corpus(4, 2)
    serial = SimulationService(tiny_spec).generate_corpus(4, 2)

    assert [m.sample_id for m in parallel['eval']] == ['eval-0000', 'eval-0001']
    for left, right in zip(parallel['train'], serial['train']):
        assert np.array_equal(left.features, right.features)
    assert repository.sample_ids('train') == [m.sample_id for m in parallel['train']]


def test_oracle_tvectors_follow_token_order(tiny_spec):
    mixture = generate_mixture(tiny_spec, seed=1)

    tvectors = oracle_tvectors(mixture)

    assert [t.token for t in tvectors] == [e.token for e in mixture.tokens]
    with pytest.raises(ValueError):
        oracle_tvectors(replace(mixture, oracle_embeddings=None))


def test_reference_change_points_per_channel():
    points = reference_change_points([0, 0, 1, 0, 1], ['A', 'B', 'C', 'B', 'D'])
    assert points == {0: [1], 1: [1]}


def turn_taking_mixture(turn=6, turns=4):
    """Один канал, дикторы A и B чередуются каждые turn слов, эмбеддинги без шума"""
    labels = [('A', 'B')[(i // turn) % 2] for i in range(turn * turns)]
    tokens = [TokenEvent(token=f"w{i}", speaker_id=label, start_time=0.3 * i, duration=0.2)
              for i, label in enumerate(labels)]
    vectors = {'A': basis(8, 0), 'B': basis(8, 1)}
    return Mixture(
        sample_id='turns',
        features=np.zeros((1, 1)),
        tokens=tokens,
        serialized=SerializedStream(entries=tuple(e.token for e in tokens), max_channels=1),
        speaker_labels=labels,
        profiles=orthogonal_profiles(['A', 'B']),
        word_durations=[0.2] * len(tokens),
        oracle_embeddings=np.stack([vectors[label] for label in labels]),
    )


def test_delay_sweep_misses_changes_only_for_long_delays():
    rows = run_delay_sweep([turn_taking_mixture()], [0, 1, 2, 4, 8], mode='sid', workers=2)

    by_delay = {row['delay']: row for row in rows}
    for delay in (0, 1, 2, 4):
        assert by_delay[delay]['missed_changes'] == 0
        assert by_delay[delay]['attribution_error'] == 0.0
    assert by_delay[8]['missed_changes'] > 0
    assert by_delay[8]['attribution_error'] > 0.0
    assert by_delay[8]['true_changes'] == 3
    assert by_delay[2]['latency_seconds'] == pytest.approx(0.4)


def test_zero_delay_sweep_equals_argmax_error(tiny_spec):
    mixtures = [generate_mixture(tiny_spec, seed) for seed in range(3)]

    rows = run_delay_sweep(mixtures, [0], mode='sid')

    errors = tokens = 0
    for mixture in mixtures:
        argmax = [identify_speaker(t, mixture.profiles) for t in oracle_tvectors(mixture)]
        tokens += len(argmax)
        errors += len(argmax) - round(speaker_accuracy(mixture.speaker_labels, argmax) * len(argmax))
    assert len(rows) == 1
    assert rows[0]['attribution_error'] == pytest.approx(errors / tokens)
