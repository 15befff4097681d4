"""Потоковая идентификация (SID) и диаризация (SD) по t-векторам"""

import numpy as np
import pytest

from src.core.algorithms.scoring import mapped_accuracy
from src.core.algorithms.streaming_attribution import (
    adjacent_cosine, attribute_stream, flush_channel, group_words, identify_speaker, missed_changes, sd_step, sid_step,
)
from src.core.algorithms.tsot import deserialize, merge_channels
from src.core.errors import NoProfiles, TVectorCountMismatch
from src.core.models.attribution import AttributionState
from src.core.models.run_config import AttributionConfig
from src.core.models.speaker import TVector
from src.core.models.token import SerializedStream
from tests.helpers import basis, orthogonal_profiles, tvectors_for

PROFILES = orthogonal_profiles(['A', 'B', 'C'])
VECTOR = {name: basis(8, i) for i, name in enumerate('ABC')}


def single_channel(labels):
    """Поток одного канала с t-векторами, совпадающими с профилями указанных дикторов"""
    stream = SerializedStream(entries=tuple(f"w{i}" for i in range(len(labels))))
    return stream, tvectors_for([VECTOR[label] for label in labels])


def sid(labels, delay=2, rule='final'):
    stream, tvectors = single_channel(labels)
    config = AttributionConfig(mode='sid', delay_words=delay, decision_rule=rule)
    return attribute_stream(stream, tvectors, mode='sid', config=config, profiles=PROFILES)


def test_identify_speaker_picks_highest_cosine():
    tvector = TVector(embedding=np.array([0.2, 0.9, 0.1, 0, 0, 0, 0, 0]), token_index=0, emission_frame=0)
    assert identify_speaker(tvector, PROFILES) == 'B'
    with pytest.raises(NoProfiles):
        identify_speaker(tvector, [])


def test_short_flip_inside_lockout_is_absorbed():
    result = sid(list('AAABABB'))

    assert result.labels == list('AAABBBB')
    assert result.change_points == {0: [3]}


def test_decision_rules_differ_on_pending_window():
    final = sid(list('AAABBA'), rule='final')
    majority = sid(list('AAABBA'), rule='majority')

    assert final.labels == list('AAAAAA')
    assert majority.labels == list('AAABBB')


def test_zero_delay_equals_per_token_argmax(rng):
    vectors = rng.standard_normal((15, 8))
    tvectors = tvectors_for(vectors)
    stream = SerializedStream(entries=tuple(f"w{i}" for i in range(15)))

    result = attribute_stream(stream, tvectors, mode='sid', config=AttributionConfig(delay_words=0),
                              profiles=PROFILES)

    assert result.labels == [identify_speaker(t, PROFILES) for t in tvectors]
    assert all(delay == 0 for delay in result.decision_delays)


def test_single_switch_produces_two_segments():
    result = sid(['A'] * 10 + ['B'] * 10)

    assert result.labels == ['A'] * 10 + ['B'] * 10
    assert [(s.start, s.end, s.label, s.final_at) for s in result.segments] == [(0, 9, 'A', 2), (10, None, 'B', 12)]
    assert result.final_at[10] == 12
    assert result.final_at[15] == 15
    assert result.decision_delays[0] == 2
    assert result.decision_delays[12] == 0


def test_labels_are_final_once_emitted():
    result = sid(['A'] * 10 + ['B'] * 10)

    assert result.history == []
    assert all(final >= index for index, final in enumerate(result.final_at))


def test_single_speaker_has_no_changes():
    result = sid(['C'] * 7)

    assert result.labels == ['C'] * 7
    assert result.num_changes == 0


def test_channels_are_tracked_independently():
    stream = SerializedStream.from_text("a b <cc> c d <cc> e f")
    tvectors = tvectors_for([VECTOR[s] for s in 'AABBAA'])

    result = attribute_stream(stream, tvectors, mode='sid', config=AttributionConfig(delay_words=2),
                              profiles=PROFILES)

    assert result.labels == list('AABBAA')
    assert [e.channel for e in result.tokens] == [0, 0, 1, 1, 0, 0]
    assert result.num_changes == 0
    # слова a и b канала 0 решаются на третьем слове канала (e)
    assert result.final_at[:2] == [4, 4]
    # канал 1 не набрал D слов и финализирован в конце потока
    assert result.final_at[2:4] == [5, 5]


def test_sid_step_reports_finalized_segment():
    state = AttributionState(delay_words=1)
    first = TVector(embedding=VECTOR['A'], token_index=0, emission_frame=0)

    state, finalized = sid_step(state, 0, first, PROFILES)
    assert finalized is None
    state, finalized = sid_step(state, 0, first, PROFILES)
    assert finalized.label == 'A'
    assert finalized.final_at == 1


def test_flush_channel_uses_last_raw_label():
    state = AttributionState(delay_words=5)
    for label in 'AB':
        sid_step(state, 0, TVector(embedding=VECTOR[label], token_index=0, emission_frame=0), PROFILES)

    segment = flush_channel(state, 0)

    assert segment.label == 'B'
    assert segment.final_at == 1
    assert flush_channel(state, 0) is None


def test_sid_requires_profiles_and_matching_tvectors():
    stream, tvectors = single_channel('AB')
    with pytest.raises(NoProfiles):
        attribute_stream(stream, tvectors, mode='sid', profiles=[])
    with pytest.raises(TVectorCountMismatch):
        attribute_stream(stream, tvectors[:1], mode='sid', profiles=PROFILES)
    with pytest.raises(ValueError):
        attribute_stream(stream, tvectors, mode='asr', profiles=PROFILES)


def test_records_expose_final_token_index():
    records = sid(list('AAA')).to_records()
    assert records[0] == {'token': 'w0', 'channel': 0, 'speaker': 'A', 'final_at_token_index': 2}


def test_adjacent_cosine_bounds():
    assert adjacent_cosine(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert adjacent_cosine(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == pytest.approx(-1.0)


def sd(vectors, delay, num_speakers):
    stream = SerializedStream(entries=tuple(f"w{i}" for i in range(len(vectors))), max_channels=1)
    config = AttributionConfig(mode='sd', delay_words=delay)
    return attribute_stream(stream, tvectors_for(vectors), mode='sd', config=config, num_speakers=num_speakers)


def test_sd_orthogonal_vectors_change_at_every_unlocked_position():
    vectors = [basis(8, i) for i in range(7)]

    assert sd(vectors, 0, 7).change_points == {0: [1, 2, 3, 4, 5, 6]}
    assert sd(vectors, 1, 7).change_points == {0: [2, 4, 6]}


def test_sd_constant_vector_is_one_segment():
    result = sd([basis(8, 0)] * 6, 2, 1)

    assert len(set(result.labels)) == 1
    assert len(result.segments) == 1
    assert result.segments[0].final_at == 2
    np.testing.assert_array_equal(result.segments[0].embedding, basis(8, 0))


def test_sd_step_detects_change_below_threshold():
    state = AttributionState(delay_words=0)
    sd_step(state, 0, TVector(embedding=basis(4, 0), token_index=0, emission_frame=0))
    _, finalized = sd_step(state, 0, TVector(embedding=np.array([0.99, 0.14, 0, 0]), token_index=1,
                                             emission_frame=1), threshold=0.98)
    assert finalized is None
    _, finalized = sd_step(state, 0, TVector(embedding=basis(4, 1), token_index=2, emission_frame=2))
    assert finalized is not None
    assert state.channel(0).change_points == [2]


def three_speaker_turns(order, turn=6):
    """t-векторы с косинусом 0.99 внутри диктора и 0.198 между дикторами"""
    gram = np.full((3, 3), 0.2) + 0.8 * np.eye(3)
    speakers = np.linalg.cholesky(gram)
    dim = 3 + len(order) * turn
    vectors, labels = [], []
    for position in range(len(order) * turn):
        speaker = order[position // turn]
        vector = np.zeros(dim)
        vector[:3] = np.sqrt(0.99) * speakers[speaker]
        vector[3 + position] = 0.1
        vectors.append(vector)
        labels.append(speaker)
    return vectors, labels


def test_sd_three_speakers_recovers_boundaries():
    vectors, labels = three_speaker_turns([0, 1, 2])

    result = sd(vectors, 2, 3)

    assert result.change_points == {0: [6, 12]}
    assert mapped_accuracy(labels, result.labels) == 1.0


def test_sd_returning_speakers_are_reclustered():
    vectors, labels = three_speaker_turns([0, 1, 2, 0, 1, 2])

    result = sd(vectors, 2, 3)

    assert result.change_points == {0: [6, 12, 18, 24, 30]}
    assert mapped_accuracy(labels, result.labels) == 1.0
    assert len(set(result.labels)) == 3


def test_group_words_with_marker():
    stream = SerializedStream.from_text("▁he llo <cc> ▁hi ▁wor ld")
    events = merge_channels(deserialize(stream))

    assert group_words(events, None) == [[0], [1], [2], [3], [4]]
    assert group_words(events, '▁') == [[0, 1], [2], [3, 4]]


def test_missed_changes_counts_exact_positions():
    assert missed_changes([6, 12], [6, 13]) == 1
    assert missed_changes([], [3]) == 0
