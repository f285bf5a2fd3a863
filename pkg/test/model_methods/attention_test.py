"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Test module: Positional encoding and multi-head attention

Copyright 2026 The specterra developers

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

   http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""
import numpy as np
import pytest

from specterra.errors import ShapeError
from specterra.seq_prep import MASK_VALUE
from specterra.tensor_autodiff import Tensor
from specterra.transformer_model import multi_head_attention, positional_encoding
from test.models import tiny_state


def softmax(x):
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def weights(state, tag):
    return [state[tag + '.' + w].values for w in ('wq', 'wk', 'wv', 'wo')]


def test_positional_encoding_values():
    pe = positional_encoding(3, 4)
    assert pe.shape == (3, 4)
    assert pe[0].tolist() == [0.0, 1.0, 0.0, 1.0]
    assert pe[1, 0] == pytest.approx(np.sin(1.0))
    assert pe[1, 1] == pytest.approx(np.cos(1.0))
    assert pe[2, 2] == pytest.approx(np.sin(2.0 / 100.0))
    assert pe[2, 3] == pytest.approx(np.cos(2.0 / 100.0))
    with pytest.raises(ShapeError):
        positional_encoding(3, 5)


def test_single_key_position():
    state = tiny_state(1)
    rng = np.random.default_rng(0)
    q = Tensor(rng.standard_normal((1, 3, 8)))
    kv = Tensor(rng.standard_normal((1, 1, 8)))
    out = multi_head_attention(q, kv, kv, None, state, 'enc.0.self').values
    _, _, wv, wo = weights(state, 'enc.0.self')
    expected = kv.values[0, 0] @ wv @ wo
    for row in out[0]:
        assert np.allclose(row, expected, atol=1e-12)


def test_all_but_one_key_masked():
    state = tiny_state(2)
    rng = np.random.default_rng(1)
    q = Tensor(rng.standard_normal((1, 4, 8)))
    kv = Tensor(rng.standard_normal((1, 5, 8)))
    bias = np.full((1, 1, 1, 5), MASK_VALUE)
    bias[..., 2] = 0.0
    out = multi_head_attention(q, kv, kv, bias, state, 'dec.0.cross').values
    _, _, wv, wo = weights(state, 'dec.0.cross')
    assert np.allclose(out[0], np.tile(kv.values[0, 2] @ wv @ wo, (4, 1)), atol=1e-12)


def test_single_head_oracle():
    state = tiny_state(3, d_model=2, n_heads=1, d_ff=4)
    state['enc.0.self.wo'].values[:] = np.eye(2)
    wq, wk, wv, _ = weights(state, 'enc.0.self')
    rng = np.random.default_rng(2)
    x = rng.standard_normal((4, 2))
    out = multi_head_attention(Tensor(x[None]), Tensor(x[None]), Tensor(x[None]), None,
                               state, 'enc.0.self').values[0]
    for i in range(4):
        scores = np.array([(x[i] @ wq) @ (x[j] @ wk) for j in range(4)]) / np.sqrt(2.0)
        expected = sum(w * (x[j] @ wv) for j, w in enumerate(softmax(scores)))
        assert np.allclose(out[i], expected, atol=1e-12)


def test_heads_attend_separately():
    state = tiny_state(4)
    wq, wk, wv, wo = weights(state, 'enc.0.self')
    rng = np.random.default_rng(3)
    x = rng.standard_normal((5, 8))
    out = multi_head_attention(Tensor(x[None]), Tensor(x[None]), Tensor(x[None]), None,
                               state, 'enc.0.self').values[0]
    heads = []
    for h in range(2):
        cols = slice(4 * h, 4 * h + 4)
        q, k, v = (x @ wq)[:, cols], (x @ wk)[:, cols], (x @ wv)[:, cols]
        heads.append(softmax(q @ k.T / 2.0) @ v)
    assert np.allclose(out, np.concatenate(heads, axis=1) @ wo, atol=1e-12)


def test_shape_checks():
    state = tiny_state(5)
    with pytest.raises(ShapeError):
        multi_head_attention(Tensor(np.ones((1, 2, 6))), Tensor(np.ones((1, 2, 6))),
                             Tensor(np.ones((1, 2, 6))), None, state, 'enc.0.self')
    with pytest.raises(ShapeError):
        multi_head_attention(Tensor(np.ones((1, 2, 8))), Tensor(np.ones((1, 3, 8))),
                             Tensor(np.ones((1, 2, 8))), None, state, 'enc.0.self')


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
