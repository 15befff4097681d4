import json
import os

import numpy as np
import pytest

from src.core.models.vocabulary import Vocabulary
from src.core.services.simulation_service import build_population, generate_mixture
from src.data.corpus.repository import CorpusRepository, read_array, write_array


@pytest.fixture
def corpus(tmp_path, tiny_spec):
    repository = CorpusRepository(str(tmp_path / 'corpus'))
    mixtures = [generate_mixture(tiny_spec, seed, f"eval-{seed:04d}") for seed in range(3)]
    for mixture in mixtures:
        repository.save_mixture('eval', mixture)
    repository.save_manifest(tiny_spec, Vocabulary.synthetic(tiny_spec.vocab_size), build_population(tiny_spec),
                             {'eval': [m.sample_id for m in mixtures]})
    return repository, mixtures


def test_mixture_round_trip(corpus):
    repository, mixtures = corpus
    reopened = CorpusRepository(repository.root)

    loaded = reopened.load_split('eval')

    assert [m.sample_id for m in loaded] == [m.sample_id for m in mixtures]
    for original, restored in zip(mixtures, loaded):
        assert np.array_equal(original.features, restored.features)
        assert np.array_equal(original.oracle_embeddings, restored.oracle_embeddings)
        assert restored.tokens == original.tokens
        assert restored.serialized == original.serialized
        assert restored.speaker_labels == original.speaker_labels
        assert restored.word_durations == original.word_durations
        assert restored.seed == original.seed
        assert [p.speaker_id for p in restored.profiles] == [p.speaker_id for p in original.profiles]
        for left, right in zip(original.profiles, restored.profiles):
            np.testing.assert_allclose(left.dvector, right.dvector, atol=1e-12)


def test_manifest_contents(corpus, tiny_spec):
    repository, _ = corpus
    reopened = CorpusRepository(repository.root)

    assert reopened.exists()
    assert reopened.spec() == tiny_spec
    assert reopened.vocabulary() == Vocabulary.synthetic(tiny_spec.vocab_size)
    assert reopened.population() == build_population(tiny_spec)
    assert reopened.sample_ids('eval') == ['eval-0000', 'eval-0001', 'eval-0002']
    with pytest.raises(ValueError):
        reopened.sample_ids('train')


def test_sample_files(corpus):
    repository, mixtures = corpus
    sample_id = mixtures[0].sample_id
    for suffix in ('tokens.jsonl', 'profiles.jsonl', 'features.bin', 'meta.json', 'oracle.bin'):
        assert os.path.exists(os.path.join(repository.root, 'eval', f"{sample_id}.{suffix}"))
    size = os.path.getsize(os.path.join(repository.root, 'eval', f"{sample_id}.features.bin"))
    assert size == 8 * mixtures[0].features.size


def test_missing_corpus_and_sample(tmp_path, corpus):
    with pytest.raises(ValueError):
        CorpusRepository(str(tmp_path / 'absent')).manifest()
    with pytest.raises(ValueError):
        corpus[0].load_mixture('eval', 'eval-9999')


def test_unknown_format(tmp_path):
    root = tmp_path / 'corpus'
    root.mkdir()
    (root / 'manifest.json').write_text(json.dumps({'format': 'other'}), encoding='utf-8')

    with pytest.raises(ValueError):
        CorpusRepository(str(root)).manifest()


def test_array_size_is_checked(tmp_path):
    path = str(tmp_path / 'a.bin')
    write_array(path, np.arange(6, dtype=np.float64))

    np.testing.assert_array_equal(read_array(path, (2, 3)), np.arange(6).reshape(2, 3))
    with pytest.raises(ValueError):
        read_array(path, (4, 2))
