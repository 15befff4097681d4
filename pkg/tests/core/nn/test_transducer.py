"""Потоковый энкодер, сеть предсказания и совместная сеть"""

import numpy as np
import pytest
import torch

from src.core.errors import EmptyInput
from src.core.models.mask import MaskSpec
from src.core.nn.kernel import DTYPE
from src.core.nn.losses import transducer_loss
from src.core.nn.transducer import ModelScorer, TransducerModel

FEATURE_DIM = 8
VOCAB_SIZE = 6


@pytest.fixture
def model(tiny_model_config):
    return TransducerModel(tiny_model_config, FEATURE_DIM, VOCAB_SIZE)


def features(num_frames=9):
    return torch.randn(num_frames, FEATURE_DIM, dtype=DTYPE)


def test_encoder_subsamples_frames(model):
    state = model.encode(features(9), MaskSpec(chunk_size=2))

    assert state.num_frames == 5
    assert state.num_layers == 2
    assert state.output.shape == (5, 8)


def test_encoder_outputs_ignore_frames_after_chunk(model):
    inputs = features(12)
    changed = inputs.clone()
    # кадры энкодера 0 и 1 образуют первый блок и видят входные кадры 0..3
    changed[4:] += 5.0
    mask = MaskSpec(chunk_size=2)

    with torch.no_grad():
        before, after = model.encode(inputs, mask), model.encode(changed, mask)

    for original, perturbed in zip(before.layers, after.layers):
        torch.testing.assert_close(original[:2], perturbed[:2], rtol=0, atol=1e-12)
    assert not torch.allclose(before.output[2:], after.output[2:])


def test_full_attention_sees_future(model):
    inputs = features(12)
    changed = inputs.clone()
    changed[-1] += 5.0

    with torch.no_grad():
        before = model.encode(inputs, MaskSpec(chunk_size=None)).output
        after = model.encode(changed, MaskSpec(chunk_size=None)).output

    assert not torch.allclose(before[0], after[0])


def test_encoder_input_validation(model, tiny_model_config):
    with pytest.raises(EmptyInput):
        model.encode(torch.zeros(0, FEATURE_DIM, dtype=DTYPE), MaskSpec())
    with pytest.raises(ValueError):
        model.encode(features(2 * tiny_model_config.max_frames + 2), MaskSpec())


def test_joint_produces_normalized_lattice(model):
    with torch.no_grad():
        lattice = model.lattice(features(9), [2, 3, 4], MaskSpec(chunk_size=2))

    assert lattice.shape == (5, 4, VOCAB_SIZE)
    torch.testing.assert_close(lattice.logsumexp(dim=-1), torch.zeros(5, 4, dtype=DTYPE))
    assert model.predict([2, 3]).shape == (3, 8)


def test_scorer_agrees_with_full_lattice(model):
    inputs = features(9)
    mask = MaskSpec(chunk_size=2)
    with torch.no_grad():
        encoder_out = model.encoder_output(model.encode(inputs, mask))
        lattice = model.lattice(inputs, [2, 5], mask).numpy()
    scorer = ModelScorer(model, encoder_out)

    assert scorer.num_frames == 5
    np.testing.assert_allclose(scorer.log_probs(3, ()), lattice[3, 0], atol=1e-12)
    np.testing.assert_allclose(scorer.log_probs(1, scorer.advance((2,), 5)), lattice[1, 2], atol=1e-12)


def test_scorer_handles_prefixes_longer_than_recursion_limit(model):
    with torch.no_grad():
        encoder_out = model.encoder_output(model.encode(features(9), MaskSpec(chunk_size=2)))
        prefix = tuple(int(token) for token in torch.randint(1, VOCAB_SIZE, (1200,)))
        expected = model.joint(encoder_out, model.predict(prefix)[-1:])[2, 0].numpy()
    scorer = ModelScorer(model, encoder_out)

    np.testing.assert_allclose(scorer.log_probs(2, prefix), expected, atol=1e-10)


def test_scorer_release_keeps_only_later_frames_and_committed_continuations(model):
    inputs = features(9)
    mask = MaskSpec(chunk_size=2)
    with torch.no_grad():
        encoder_out = model.encoder_output(model.encode(inputs, mask))
        lattice = model.lattice(inputs, [2, 5], mask).numpy()
    scorer = ModelScorer(model, encoder_out)
    for t in range(5):
        for prefix in [(), (2,), (3,), (2, 5)]:
            scorer.log_probs(t, prefix)

    scorer.release(2, (2,))

    assert {t for t, _ in scorer._log_probs} == {3, 4}
    assert set(scorer._states) == {(2,), (2, 5)}
    np.testing.assert_allclose(scorer.log_probs(4, (2, 5)), lattice[4, 2], atol=1e-12)
    np.testing.assert_allclose(scorer.log_probs(3, ()), lattice[3, 0], atol=1e-12)


def test_loss_backpropagates_into_model(model):
    loss = transducer_loss(model.lattice(features(9), [2, 3], MaskSpec(chunk_size=2)), [2, 3])
    loss.backward()

    assert torch.isfinite(loss)
    assert model.joint_output.weight.grad is not None
    assert model.frontend.weight.grad.abs().sum() > 0
