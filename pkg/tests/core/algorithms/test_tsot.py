"""Сериализация t-SOT и обратное восстановление каналов"""

import numpy as np
import pytest

from src.core.algorithms.tsot import (
    assign_virtual_channels, check_overlap_budget, chronological_order, deserialize,
    merge_channels, reserialize, serialize,
)
from src.core.errors import EmptyInput, MalformedStream, OverlapBudgetExceeded
from src.core.models.token import CC_SYMBOL, SerializedStream, TokenEvent
from tests.helpers import random_speaker_streams


def events(speaker, *items, utterance=None):
    return [TokenEvent(token=word, speaker_id=speaker, start_time=start, duration=duration,
                       utterance_id=utterance) for word, start, duration in items]


def test_two_speakers_interleave_with_channel_changes():
    first = events('A', ('hello', 0.0, 0.2), ('world', 0.5, 0.2))
    second = events('B', ('hi', 0.3, 0.2))

    stream = serialize([first, second])

    assert list(stream.entries) == ['hello', CC_SYMBOL, 'hi', CC_SYMBOL, 'world']
    assert stream.cc_count == 2


def test_single_speaker_has_no_channel_change():
    stream = serialize([events('A', ('a', 0.0, 0.5), ('b', 1.0, 0.5))])
    assert list(stream.entries) == ['a', 'b']


def test_stream_invariants_hold_after_serialize():
    first = events('A', ('a', 0.0, 0.1), ('b', 0.2, 0.1), ('c', 0.4, 0.1))
    second = events('B', ('x', 0.1, 0.1), ('y', 0.3, 0.1))

    stream = serialize([first, second])
    stream.validate()

    assert stream.tokens == ['a', 'x', 'b', 'y', 'c']
    assert len(stream.tokens) == 5


def test_equal_start_times_ordered_by_stream_index():
    first = events('A', ('a', 0.5, 0.1))
    second = events('B', ('b', 0.5, 0.1))

    pairs = chronological_order([second, first])

    assert [event.token for _, event in pairs] == ['b', 'a']


def test_unsorted_stream_rejected():
    with pytest.raises(ValueError):
        chronological_order([events('A', ('a', 1.0, 0.1), ('b', 0.5, 0.1))])


def test_all_empty_streams_rejected():
    with pytest.raises(EmptyInput):
        serialize([[], []])


def test_unknown_channel_policy_rejected():
    with pytest.raises(ValueError):
        serialize([events('A', ('a', 0.0, 0.1))], channel_policy='round')


def test_three_overlapping_utterances_exceed_two_channels():
    streams = [events(name, ('w', 0.1 * i, 1.0)) for i, name in enumerate('ABC')]

    with pytest.raises(OverlapBudgetExceeded):
        serialize(streams, max_overlap=2)
    assert check_overlap_budget(streams, 3) == 3


def test_touching_utterances_do_not_overlap():
    first = events('A', ('a', 0.0, 1.0))
    second = events('B', ('b', 1.0, 1.0))
    assert check_overlap_budget([first, second], 1) == 1


def test_virtual_channels_reuse_lowest_free_channel():
    streams = [
        events('A', ('a', 0.0, 1.0)),
        events('B', ('b', 0.5, 1.0)),
        events('C', ('c', 1.2, 0.5)),
    ]

    assigned = assign_virtual_channels(streams, 2)

    assert [(e.token, e.channel) for e in assigned] == [('a', 0), ('b', 1), ('c', 0)]


def test_virtual_policy_serializes_non_overlapping_speakers_on_one_channel():
    streams = [
        events('A', ('a', 0.0, 0.4), utterance='u1'),
        events('B', ('b', 0.5, 0.4), utterance='u2'),
        events('C', ('c', 1.0, 0.4), utterance='u3'),
    ]

    stream = serialize(streams, max_overlap=2, channel_policy='virtual')

    assert list(stream.entries) == ['a', 'b', 'c']


def test_deserialize_two_channels():
    stream = SerializedStream(entries=('hello', CC_SYMBOL, 'hi', CC_SYMBOL, 'world'))

    channels = deserialize(stream)

    assert [c.words for c in channels] == [['hello', 'world'], ['hi']]


def test_deserialize_without_changes_leaves_second_channel_empty():
    channels = deserialize(SerializedStream(entries=('a', 'b', 'c')))
    assert [c.words for c in channels] == [['a', 'b', 'c'], []]


def test_deserialize_more_than_two_channels_round_robin():
    stream = SerializedStream(entries=('a', CC_SYMBOL, 'b', CC_SYMBOL, 'c', CC_SYMBOL, 'd'), max_channels=3)

    channels = deserialize(stream)

    assert [c.words for c in channels] == [['a', 'd'], ['b'], ['c']]


def test_deserialize_single_channel_ignores_changes():
    stream = SerializedStream(entries=('a', CC_SYMBOL, 'b'), max_channels=1)

    channels = deserialize(stream)

    assert len(channels) == 1
    assert channels[0].words == ['a', 'b']


def test_deserialize_carries_times_and_positions():
    stream = SerializedStream(entries=('a', CC_SYMBOL, 'b'))

    channels = deserialize(stream, times=[0.1, 0.1, 0.7])

    assert channels[1].tokens[0].start_time == pytest.approx(0.7)
    assert channels[1].tokens[0].position == 2
    with pytest.raises(ValueError):
        deserialize(stream, times=[0.1])


@pytest.mark.parametrize('entries', [
    (CC_SYMBOL, 'a'),
    ('a', CC_SYMBOL, CC_SYMBOL, 'b'),
    ('a', '<blank>'),
])
def test_malformed_streams_rejected(entries):
    with pytest.raises(MalformedStream):
        deserialize(SerializedStream(entries=entries))


def test_reserialize_inverts_deserialize():
    stream = SerializedStream(entries=('a', 'b', CC_SYMBOL, 'c', CC_SYMBOL, 'd', 'e', CC_SYMBOL, 'f'))

    channels = deserialize(stream)

    assert reserialize(channels) == stream
    assert [e.token for e in merge_channels(channels)] == stream.tokens


def test_serialize_deserialize_recovers_speaker_streams_for_two_speakers():
    first = events('A', ('a', 0.0, 0.1), ('b', 0.3, 0.1), ('c', 0.6, 0.1))
    second = events('B', ('x', 0.2, 0.1), ('y', 0.4, 0.1))

    channels = deserialize(serialize([first, second]))

    assert channels[0].words == ['a', 'b', 'c']
    assert channels[1].words == ['x', 'y']


def test_random_mixtures_round_trip_through_two_channels():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        streams = random_speaker_streams(rng, num_speakers=int(rng.integers(1, 4)))
        policy = 'speaker' if len(streams) <= 2 else 'virtual'
        ordered = [event for _, event in chronological_order(streams)]
        if policy == 'virtual':
            keys = [event.channel for event in assign_virtual_channels(streams, 2)]
        else:
            keys = [event.speaker_id for event in ordered]

        stream = serialize(streams, max_overlap=2, channel_policy=policy)
        channels = deserialize(stream)

        assert stream.cc_count == sum(a != b for a, b in zip(keys, keys[1:]))
        assert stream.tokens == [event.token for event in ordered]
        lanes = [0 if key == keys[0] else 1 for key in keys]
        for channel in channels:
            assert channel.words == [e.token for e, lane in zip(ordered, lanes) if lane == channel.channel]
        assert reserialize(channels, max_channels=2) == stream


def test_chronological_order_is_stable_sort_of_concatenated_streams():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        streams = []
        for index in range(int(rng.integers(1, 5))):
            moments = np.sort(rng.integers(0, 4, size=int(rng.integers(0, 5))))
            streams.append([TokenEvent(token=f"s{index}t{k}", start_time=float(moment))
                            for k, moment in enumerate(moments)])
        expected = sorted((event for stream in streams for event in stream), key=lambda event: event.start_time)

        assert [event.token for _, event in chronological_order(streams)] == [event.token for event in expected]


def test_three_channel_restoration_keeps_change_structure_not_channel_numbers():
    streams = [
        events('A', ('a', 0.0, 1.0), utterance='u1'),
        events('B', ('b', 0.5, 1.5), utterance='u2'),
        events('C', ('c', 1.2, 0.3), utterance='u3'),
    ]

    assigned = assign_virtual_channels(streams, 3)
    stream = serialize(streams, max_overlap=3, channel_policy='virtual')
    channels = deserialize(stream)

    # 'c' занимает освободившийся канал 0, а восстановление по кругу переходит на канал 2
    assert [event.channel for event in assigned] == [0, 1, 0]
    assert list(stream.entries) == ['a', CC_SYMBOL, 'b', CC_SYMBOL, 'c']
    assert [c.words for c in channels] == [['a'], ['b'], ['c']]
    assert reserialize(channels, max_channels=3) == stream


def test_token_event_rejects_reserved_and_negative_values():
    with pytest.raises(ValueError):
        TokenEvent(token=CC_SYMBOL)
    with pytest.raises(ValueError):
        TokenEvent(token='a', start_time=-0.1)
    with pytest.raises(ValueError):
        TokenEvent(token='a', duration=-1.0)


def test_stream_text_round_trip():
    stream = SerializedStream.from_text("a <cc> b c")
    assert stream.to_text() == "a <cc> b c"
    assert SerializedStream.from_dict(stream.to_dict()) == stream
