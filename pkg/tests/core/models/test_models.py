import numpy as np
import pytest

from src.core.errors import ConfigError, MalformedStream, TsotError
from src.core.models.attribution import AttributionResult, ClusterResult
from src.core.models.hypothesis import DecodedStream, build_decoded_stream, clean_symbols
from src.core.models.mask import MaskSpec
from src.core.models.mixture import MixtureSpec
from src.core.models.run_config import AttributionConfig, RunConfig, SweepConfig, replace_section
from src.core.models.speaker import SpeakerProfile, TVector, enroll_profile
from src.core.models.token import SerializedStream, TokenEvent
from src.core.models.vocabulary import Vocabulary
from tests.helpers import basis


class TestMaskSpec:
    def test_chunk_window(self):
        mask = MaskSpec(chunk_size=4, left_context=4)

        assert mask.window(0, 10) == (0, 4)
        assert mask.window(5, 10) == (0, 8)
        assert mask.window(9, 10) == (4, 10)

    def test_unbounded(self):
        assert MaskSpec(chunk_size=None).window(3, 10) == (0, 10)
        assert MaskSpec(chunk_size=1, left_context=0).window(3, 10) == (3, 4)
        assert MaskSpec(chunk_size=None).is_unbounded

    def test_validation(self):
        with pytest.raises(ValueError):
            MaskSpec(chunk_size=0)
        with pytest.raises(ValueError):
            MaskSpec(left_context=-1)
        with pytest.raises(IndexError):
            MaskSpec().window(10, 10)


class TestSpeakerModels:
    def test_profile_requires_unit_norm(self):
        with pytest.raises(ValueError):
            SpeakerProfile('A', np.array([2.0, 0.0]))
        with pytest.raises(ValueError):
            SpeakerProfile.from_vector('A', [0.0, 0.0])
        assert SpeakerProfile.from_vector('A', [3.0, 4.0]).dvector.tolist() == pytest.approx([0.6, 0.8])

    def test_profile_is_immutable(self):
        profile = SpeakerProfile('A', basis(4, 0))
        with pytest.raises(ValueError):
            profile.dvector[0] = 0.5

    def test_enrollment_averages_normalized_embeddings(self):
        profile = enroll_profile('A', [[10.0, 0.0], [0.0, 0.1]])

        np.testing.assert_allclose(profile.dvector, [np.sqrt(0.5), np.sqrt(0.5)])
        with pytest.raises(ValueError):
            enroll_profile('A', [])

    def test_tvector(self):
        tvector = TVector(embedding=[3.0, 4.0], token_index=2, emission_frame=5, token='hi')

        np.testing.assert_allclose(tvector.normalized(), [0.6, 0.8])
        assert TVector.from_dict(tvector.to_dict()) == tvector
        with pytest.raises(ValueError):
            TVector(embedding=[np.nan], token_index=0, emission_frame=0)


class TestVocabulary:
    def test_reserved_prefix(self):
        vocabulary = Vocabulary.synthetic(12)

        assert vocabulary.symbols[:3] == ('<blank>', '<cc>', 'w00')
        assert len(vocabulary) == 14
        assert vocabulary.encode(['<cc>', 'w11']) == [1, 13]
        assert vocabulary.decode([0, 2]) == ['<blank>', 'w00']
        assert Vocabulary.from_dict(vocabulary.to_dict()) == vocabulary

    def test_validation(self):
        with pytest.raises(ValueError):
            Vocabulary(('a', '<cc>'))
        with pytest.raises(ValueError):
            Vocabulary.from_words(['a', 'a'])
        with pytest.raises(ValueError):
            Vocabulary.synthetic(3).index('zzz')


class TestTokens:
    def test_reserved_symbols_are_not_events(self):
        with pytest.raises(ValueError):
            TokenEvent('<cc>')
        with pytest.raises(ValueError):
            TokenEvent('a', start_time=-1.0)

    def test_stream_validation(self):
        SerializedStream(('a', '<cc>', 'b')).validate()
        for entries in (('<cc>', 'a'), ('a', '<cc>', '<cc>', 'b'), ('a', '<blank>')):
            with pytest.raises(MalformedStream):
                SerializedStream(entries).validate()
        with pytest.raises(ValueError):
            SerializedStream(('a',), max_channels=0)

    def test_stream_text(self):
        stream = SerializedStream.from_text("hello world <cc> hi")

        assert stream.cc_count == 1
        assert stream.tokens == ['hello', 'world', 'hi']
        assert stream.to_text() == "hello world <cc> hi"


class TestHypothesis:
    def test_clean_symbols(self):
        symbols = [('<cc>', 0), ('a', 1), ('<cc>', 2), ('<cc>', 2), ('b', 3)]

        assert clean_symbols(symbols) == [('a', 1), ('<cc>', 2), ('b', 3)]

    def test_build_decoded_stream(self):
        decoded = build_decoded_stream('s', [('a', 1), ('<cc>', 2), ('b', 3)], frame_seconds=0.04, commits=[2])

        assert decoded.stream.entries == ('a', '<cc>', 'b')
        assert decoded.token_frames == [1, 3]
        assert decoded.times == [0.04, 0.08, 0.12]
        assert DecodedStream.from_dict(decoded.to_dict()) == decoded


class TestMixtureSpec:
    def test_round_trip(self, tiny_spec):
        assert MixtureSpec.from_dict(tiny_spec.to_dict()) == tiny_spec

    @pytest.mark.parametrize('kwargs', [
        {'min_speakers': 0},
        {'min_speakers': 2, 'max_speakers': 6},
        {'min_delay_seconds': 2.0, 'max_delay_seconds': 1.0},
        {'min_tokens': 0},
        {'intra_cosine': 0.0},
        {'num_profiles': 1},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            MixtureSpec(**kwargs)


class TestRunConfig:
    def test_round_trip(self):
        config = RunConfig(attribution=AttributionConfig(mode='sd', delay_words=4), stages=['simulate'])

        assert RunConfig.from_dict(config.to_dict()) == config

    def test_nested_sections(self):
        config = RunConfig.from_dict({
            'simulation': {'train_size': 3, 'mixture': {'vocab_size': 10}},
            'mask': {'chunk_size': None},
            'sweep': {'enabled': True, 'delays': [0, 2]},
        })

        assert config.simulation.train_size == 3
        assert config.simulation.mixture.vocab_size == 10
        assert config.mask.is_unbounded
        assert config.sweep == SweepConfig(enabled=True, delays=[0, 2])

    @pytest.mark.parametrize('data', [
        {'unknown': 1},
        {'attribution': {'delay': 2}},
        {'attribution': {'mode': 'speaker'}},
        {'model': {'d_model': 10, 'heads': 4}},
        {'simulation': {'mixture': {'min_speakers': 0}}},
        {'simulation': {'size': 3}},
        {'mask': [4]},
        {'embedding_source': 'learned'},
        {'stages': ['train']},
    ])
    def test_errors(self, data):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(data)

    def test_errors_are_value_errors(self):
        assert issubclass(ConfigError, TsotError)
        assert issubclass(TsotError, ValueError)

    def test_ordered_stages(self):
        config = RunConfig(stages=['eval', 'simulate', 'decode'])

        assert config.ordered_stages() == ['simulate', 'decode', 'eval']

    def test_replace_section(self):
        config = replace_section(RunConfig(), 'attribution', delay_words=5, decision_rule='majority')

        assert config.attribution.delay_words == 5
        assert config.attribution.decision_rule == 'majority'
        with pytest.raises(ConfigError):
            replace_section(config, 'seed', value=1)
        with pytest.raises(ConfigError):
            replace_section(config, 'attribution', delay_words=-1)


def test_cluster_result_bounds():
    assert ClusterResult(labels=(0, 1, 1), num_clusters=2).labels == (0, 1, 1)
    with pytest.raises(ValueError):
        ClusterResult(labels=(0, 2), num_clusters=2)


def test_attribution_result_records():
    result = AttributionResult(
        tokens=[TokenEvent('a', 'A', channel=0), TokenEvent('b', 'B', channel=1)],
        final_at=[2, 1], decision_delays=[2, 0], segments=[], change_points={0: [], 1: [3, 5]},
    )

    assert result.labels == ['A', 'B']
    assert result.mean_decision_delay == 1.0
    assert result.num_changes == 2
    assert result.to_records()[1] == {'token': 'b', 'channel': 1, 'speaker': 'B', 'final_at_token_index': 1}
