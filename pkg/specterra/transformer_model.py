#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

The conversion network: sinusoidal position encoding added straight to
magnitude frames, post-norm encoder and decoder stacks of multi-head
attention and ReLU feed-forward blocks, and no embedding, output
projection or softmax head. The decoder output is the predicted
magnitude.

Parameters live in ModelState.params, a SortedDict keyed by name, so
iteration (initialization draws excepted) and checkpoint order are the
sorted names.

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
import io
import logging
import struct
import zlib

import numpy as np
from sortedcontainers import SortedDict

from . import tensor_autodiff as ad
from .config import ModelConfig, _coerce, sub_rng
from .errors import CheckpointError, ShapeError
from .seq_prep import SpecialTokens, attention_bias, causal_bias
from .tensor_autodiff import Tensor

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b'VFVC'
CHECKPOINT_VERSION = 1
_U32 = struct.Struct('<I')


def positional_encoding(length, d_model):
    """
    PE[t, 2i] = sin(t / 10000**(2i/d)), PE[t, 2i+1] = cos(same).
    :rtype: numpy.ndarray of shape (length, d_model)
    """
    if d_model % 2:
        raise ShapeError("positional_encoding: d_model must be even, got {0}".format(d_model))
    t = np.arange(length, dtype=np.float64)[:, None]
    rates = 10000.0 ** (np.arange(0, d_model, 2, dtype=np.float64) / d_model)
    pe = np.empty((length, d_model))
    pe[:, 0::2] = np.sin(t / rates)
    pe[:, 1::2] = np.cos(t / rates)
    return pe


def _attention_shapes(prefix, d):
    return [(prefix + '.' + w, (d, d)) for w in ('wq', 'wk', 'wv', 'wo')]


def _ffn_shapes(prefix, d, d_ff):
    return [(prefix + '.w1', (d, d_ff)), (prefix + '.b1', (d_ff,)),
            (prefix + '.w2', (d_ff, d)), (prefix + '.b2', (d,))]


def _norm_shapes(prefix, d):
    return [(prefix + '.gain', (d,)), (prefix + '.bias', (d,))]


def parameter_shapes(cfg):
    """
    (name, shape) for every parameter, in construction order.
    :rtype: list of tuple
    """
    d = cfg.d_model
    shapes = []
    for i in range(cfg.n_layers_enc):
        p = 'enc.{0}'.format(i)
        shapes += _attention_shapes(p + '.self', d) + _norm_shapes(p + '.norm1', d)
        shapes += _ffn_shapes(p + '.ffn', d, cfg.d_ff) + _norm_shapes(p + '.norm2', d)
    for i in range(cfg.n_layers_dec):
        p = 'dec.{0}'.format(i)
        shapes += _attention_shapes(p + '.self', d) + _norm_shapes(p + '.norm1', d)
        shapes += _attention_shapes(p + '.cross', d) + _norm_shapes(p + '.norm2', d)
        shapes += _ffn_shapes(p + '.ffn', d, cfg.d_ff) + _norm_shapes(p + '.norm3', d)
    return shapes


class ModelState(object):
    """
    Everything a checkpoint holds: parameters, special tokens, Adam
    moments, the step counter and corpus statistics used at inference.
    """

    def __init__(self, config, params, tokens, step=0, moments_m=None, moments_v=None,
                 max_target_len=0, eos_tau=None, mean_frame=None):
        self.config = config
        self.params = SortedDict(params)
        self.tokens = tokens
        self.step = int(step)
        self.moments_m = SortedDict(moments_m if moments_m is not None else
                                    ((k, np.zeros_like(v.values)) for k, v in self.params.items()))
        self.moments_v = SortedDict(moments_v if moments_v is not None else
                                    ((k, np.zeros_like(v.values)) for k, v in self.params.items()))
        self.max_target_len = int(max_target_len)
        self.eos_tau = eos_tau
        self.mean_frame = mean_frame

    def __getitem__(self, name):
        return self.params[name]

    def __iter__(self):
        return iter(self.params.items())

    def __len__(self):
        return len(self.params)

    @property
    def dtype(self):
        return self.config.np_dtype

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def grads(self):
        """
        Current gradients by name; zeros for parameters the loss did not
        reach.
        :rtype: SortedDict
        """
        return SortedDict((k, p.grad if p.grad is not None else np.zeros_like(p.values))
                          for k, p in self.params.items())

    def parameter_count(self):
        return sum(p.values.size for p in self.params.values())

    def __repr__(self):
        return "ModelState({0} tensors, {1} values, step {2})".format(
            len(self.params), self.parameter_count(), self.step)


def init_state(cfg, tokens, seed):
    """
    Fresh parameters: attention and feed-forward weights uniform in
    +-init_scale*sqrt(6/(fan_in+fan_out)), biases 0, norm gains 1.
    :rtype: ModelState
    """
    if tokens.dim != cfg.d_model:
        raise ShapeError("init_state: tokens have dimension {0}, d_model is {1}".format(
            tokens.dim, cfg.d_model))
    rng = sub_rng(seed, 'init')
    dtype = cfg.np_dtype
    params = {}
    for name, shape in parameter_shapes(cfg):
        if name.endswith('.gain'):
            values = np.ones(shape)
        elif len(shape) == 1:
            values = np.zeros(shape)
        else:
            bound = cfg.init_scale * np.sqrt(6.0 / (shape[0] + shape[1]))
            values = rng.uniform(-bound, bound, size=shape)
        params[name] = Tensor(values.astype(dtype), requires_grad=True)
    return ModelState(cfg, params, tokens)


def multi_head_attention(q, k, v, bias, state, layer_tag, training=False, rng=None):
    """
    softmax((q Wq)(k Wk)^T / sqrt(d_head) + bias)(v Wv), heads
    concatenated, then Wo. q is (B, T, d); k and v are (B, S, d); bias is
    a constant broadcastable to (B, heads, T, S), or None.
    :rtype: Tensor
    """
    cfg = state.config
    h, dh = cfg.n_heads, cfg.head_dim
    b, t, d = q.shape
    s = k.shape[1]
    if d != cfg.d_model or k.shape[2] != d or v.shape != k.shape or k.shape[0] != b:
        raise ShapeError("multi_head_attention: q {0}, k {1}, v {2} with d_model {3}".format(
            q.shape, k.shape, v.shape, cfg.d_model))
    p = state.params
    qh = ad.transpose(ad.reshape(ad.linear(q, p[layer_tag + '.wq']), (b, t, h, dh)), (0, 2, 1, 3))
    kt = ad.transpose(ad.reshape(ad.linear(k, p[layer_tag + '.wk']), (b, s, h, dh)), (0, 2, 3, 1))
    vh = ad.transpose(ad.reshape(ad.linear(v, p[layer_tag + '.wv']), (b, s, h, dh)), (0, 2, 1, 3))
    scores = ad.mul_scalar(ad.matmul(qh, kt), 1.0 / np.sqrt(dh))
    if bias is not None:
        scores = ad.add_const(scores, bias)
    weights = ad.dropout(ad.softmax_lastdim(scores), cfg.dropout, training, rng)
    context = ad.reshape(ad.transpose(ad.matmul(weights, vh), (0, 2, 1, 3)), (b, t, d))
    return ad.linear(context, p[layer_tag + '.wo'])


def _feed_forward(x, state, prefix, training, rng):
    p = state.params
    inner = ad.relu(ad.linear(x, p[prefix + '.w1'], p[prefix + '.b1']))
    inner = ad.dropout(inner, state.config.dropout, training, rng)
    return ad.linear(inner, p[prefix + '.w2'], p[prefix + '.b2'])


def _add_norm(x, sub, state, prefix):
    p = state.params
    return ad.layer_norm(ad.add(x, sub), p[prefix + '.gain'], p[prefix + '.bias'],
                         state.config.ln_eps)


def _embed(frames, state, training, rng):
    values = frames.values if isinstance(frames, Tensor) else np.asarray(frames)
    if values.ndim != 3 or values.shape[2] != state.config.d_model:
        raise ShapeError("expected (B, T, {0}) frames, got {1}".format(
            state.config.d_model, values.shape))
    x = Tensor(values, dtype=state.dtype)
    x = ad.add_const(x, positional_encoding(values.shape[1], values.shape[2])[None])
    return ad.dropout(x, state.config.dropout, training, rng)


def encoder_forward(src, src_bias, state, training=False, rng=None):
    """
    Encode (B, T, d) source frames into memory of the same shape.
    :rtype: Tensor
    """
    x = _embed(src, state, training, rng)
    for i in range(state.config.n_layers_enc):
        p = 'enc.{0}'.format(i)
        x = _add_norm(x, multi_head_attention(x, x, x, src_bias, state, p + '.self',
                                              training, rng), state, p + '.norm1')
        x = _add_norm(x, _feed_forward(x, state, p + '.ffn', training, rng), state, p + '.norm2')
    return x


def decoder_forward(tgt_in, memory, self_bias, cross_bias, state, training=False, rng=None):
    """
    Decode (B, T', d) frames (SOS first) against encoder memory. The
    output is the predicted magnitude, (B, T', d).
    :rtype: Tensor
    """
    y = _embed(tgt_in, state, training, rng)
    for i in range(state.config.n_layers_dec):
        p = 'dec.{0}'.format(i)
        y = _add_norm(y, multi_head_attention(y, y, y, self_bias, state, p + '.self',
                                              training, rng), state, p + '.norm1')
        y = _add_norm(y, multi_head_attention(y, memory, memory, cross_bias, state, p + '.cross',
                                              training, rng), state, p + '.norm2')
        y = _add_norm(y, _feed_forward(y, state, p + '.ffn', training, rng), state, p + '.norm3')
    return y


def decoder_self_bias(tgt_pad_mask):
    """Causal bias plus target key padding, (B, 1, T, T)."""
    return causal_bias(tgt_pad_mask.shape[1])[None, None] + attention_bias(tgt_pad_mask)


def forward_batch(state, batch, training=False, rng=None):
    """
    Teacher-forced prediction for a PaddedBatch: encoder on the source,
    decoder on SOS + target.
    :rtype: Tensor of shape (B, T+1, d)
    """
    src_bias = attention_bias(batch.src_pad_mask)
    memory = encoder_forward(batch.encoder_input, src_bias, state, training, rng)
    return decoder_forward(batch.decoder_input, memory, decoder_self_bias(batch.tgt_pad_mask),
                           src_bias, state, training, rng)


# Checkpoints

def _config_block(state):
    cfg = state.config
    lines = ['{0}={1}'.format(name, getattr(cfg, name))
             for name in ModelConfig.__dataclass_fields__]
    lines += [
        'step={0}'.format(state.step),
        'tokens_seed={0}'.format(state.tokens.rng_seed),
        'max_target_len={0}'.format(state.max_target_len),
        'eos_tau={0}'.format('' if state.eos_tau is None else repr(float(state.eos_tau))),
    ]
    return '\n'.join(lines).encode('utf-8')


def _checkpoint_tensors(state):
    tensors = [('param/' + k, p.values) for k, p in state.params.items()]
    tensors += [('adam.m/' + k, m) for k, m in state.moments_m.items()]
    tensors += [('adam.v/' + k, v) for k, v in state.moments_v.items()]
    tensors += [('tokens/sos', state.tokens.sos), ('tokens/eos', state.tokens.eos)]
    if state.mean_frame is not None:
        tensors.append(('stats/mean_frame', state.mean_frame))
    return tensors


def checkpoint_bytes(state):
    """
    Serialize state: magic 'VFVC', u32 version, u32-length-prefixed UTF-8
    config block, u32 tensor count, then per tensor a u32-length-prefixed
    name, u32 rank, u32 dims and little-endian float32 data, then a CRC32
    of everything before it.
    :rtype: bytes
    """
    out = io.BytesIO()
    out.write(CHECKPOINT_MAGIC)
    out.write(_U32.pack(CHECKPOINT_VERSION))
    block = _config_block(state)
    out.write(_U32.pack(len(block)))
    out.write(block)
    tensors = _checkpoint_tensors(state)
    out.write(_U32.pack(len(tensors)))
    for name, values in tensors:
        encoded = name.encode('utf-8')
        values = np.asarray(values)
        out.write(_U32.pack(len(encoded)))
        out.write(encoded)
        out.write(_U32.pack(values.ndim))
        for dim in values.shape:
            out.write(_U32.pack(dim))
        out.write(np.ascontiguousarray(values, dtype='<f4').tobytes())
    body = out.getvalue()
    return body + _U32.pack(zlib.crc32(body) & 0xffffffff)


def save_checkpoint(state, path):
    data = checkpoint_bytes(state)
    with io.open(path, 'wb') as fh:
        fh.write(data)
    logger.info("checkpoint at step %d written to %s", state.step, path)


class _Reader(object):
    def __init__(self, data, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CheckpointError("{0}: truncated checkpoint".format(self.path))
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self):
        return _U32.unpack(self.take(4))[0]


def _parse_config_block(text, path):
    fields = {}
    for line in text.splitlines():
        key, sep, value = line.partition('=')
        if not sep:
            raise CheckpointError("{0}: malformed config line {1!r}".format(path, line))
        fields[key] = value
    hints = {name: f.type for name, f in ModelConfig.__dataclass_fields__.items()}
    try:
        cfg = ModelConfig(**{name: _coerce(hint, fields[name], name)
                             for name, hint in hints.items()})
        extra = {
            'step': int(fields['step']),
            'tokens_seed': int(fields['tokens_seed']),
            'max_target_len': int(fields['max_target_len']),
            'eos_tau': float(fields['eos_tau']) if fields['eos_tau'] else None,
        }
    except (KeyError, ValueError) as e:
        raise CheckpointError("{0}: bad config block ({1})".format(path, e))
    return cfg, extra


def load_checkpoint(path):
    """
    Read a checkpoint written by save_checkpoint().
    :raises CheckpointError: bad magic, version, CRC, or layout
    :rtype: ModelState
    """
    with io.open(path, 'rb') as fh:
        data = fh.read()
    if len(data) < 8 or data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError("{0}: not a specterra checkpoint (bad magic)".format(path))
    body, crc = data[:-4], data[-4:]
    if _U32.unpack(crc)[0] != zlib.crc32(body) & 0xffffffff:
        raise CheckpointError("{0}: CRC mismatch".format(path))
    reader = _Reader(body, path)
    reader.take(4)
    version = reader.u32()
    if version != CHECKPOINT_VERSION:
        raise CheckpointError("{0}: unsupported version {1}".format(path, version))
    try:
        text = reader.take(reader.u32()).decode('utf-8')
    except UnicodeDecodeError:
        raise CheckpointError("{0}: config block is not UTF-8".format(path))
    cfg, extra = _parse_config_block(text, path)

    tensors = {}
    for _ in range(reader.u32()):
        name = reader.take(reader.u32()).decode('utf-8')
        shape = tuple(reader.u32() for _ in range(reader.u32()))
        count = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(reader.take(4 * count), dtype='<f4').reshape(shape)
        if name in tensors:
            raise CheckpointError("{0}: duplicate tensor {1}".format(path, name))
        tensors[name] = values.copy()
    if reader.pos != len(body):
        raise CheckpointError("{0}: trailing bytes after tensors".format(path))

    expected = dict(parameter_shapes(cfg))
    try:
        params = {k: Tensor(tensors['param/' + k].astype(cfg.np_dtype), requires_grad=True)
                  for k in expected}
        m = {k: tensors['adam.m/' + k].astype(cfg.np_dtype) for k in expected}
        v = {k: tensors['adam.v/' + k].astype(cfg.np_dtype) for k in expected}
        tokens = SpecialTokens(tensors['tokens/sos'], tensors['tokens/eos'], extra['tokens_seed'])
    except KeyError as e:
        raise CheckpointError("{0}: missing tensor {1}".format(path, e))
    for k, shape in expected.items():
        if params[k].shape != shape:
            raise CheckpointError("{0}: {1} has shape {2}, expected {3}".format(
                path, k, params[k].shape, shape))
    return ModelState(cfg, params, tokens, step=extra['step'], moments_m=m, moments_v=v,
                      max_target_len=extra['max_target_len'], eos_tau=extra['eos_tau'],
                      mean_frame=tensors.get('stats/mean_frame'))
