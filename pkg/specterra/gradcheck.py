#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Gradient checks: central finite differences against the reverse-mode
gradients of every autodiff op, plus the full training loss of a tiny
model. Checks run at float64.

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
import logging
from collections import namedtuple

import numpy as np

from . import tensor_autodiff as ad
from .config import ModelConfig, sub_rng
from .seq_prep import UtterancePair, build_batch, make_special_tokens
from .tensor_autodiff import Tensor
from .train import loss_final
from .transformer_model import forward_batch, init_state

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-5
OP_TOLERANCE = 1e-4
MODEL_TOLERANCE = 1e-3
_REL_FLOOR = 1e-6

GradCheckCase = namedtuple('GradCheckCase', ['name', 'fn', 'inputs', 'tolerance'])
GradCheckCase.__new__.__defaults__ = (None,)
GradCheckResult = namedtuple('GradCheckResult', ['name', 'max_rel_error', 'tolerance', 'passed'])


class GradCheckReport(object):
    """Results in check order."""

    def __init__(self, results):
        self.results = list(results)

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def failures(self):
        return [r for r in self.results if not r.passed]

    def names(self):
        return [r.name for r in self.results]

    def lines(self):
        return ['{0:<14} {1:.3e} <= {2:.0e}  {3}'.format(
            r.name, r.max_rel_error, r.tolerance, 'ok' if r.passed else 'FAIL')
            for r in self.results]

    def __len__(self):
        return len(self.results)

    def __iter__(self):
        return iter(self.results)


def relative_error(analytic, numeric):
    """
    Elementwise |a - n| / max(1e-6, |a| + |n|).

        >>> float(relative_error(np.array([1.0]), np.array([1.0])))
        0.0
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(_REL_FLOOR, np.abs(analytic) + np.abs(numeric))
    return np.abs(analytic - numeric) / scale


def numerical_gradient(fn, arrays, index, eps=DEFAULT_EPS):
    """
    Central-difference gradient of the scalar fn(*arrays) with respect to
    arrays[index]. arrays[index] is perturbed in place and restored.
    :rtype: numpy.ndarray
    """
    x = arrays[index]
    grad = np.zeros_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for j in range(flat.size):
        saved = flat[j]
        flat[j] = saved + eps
        fplus = fn(*arrays)
        flat[j] = saved - eps
        fminus = fn(*arrays)
        flat[j] = saved
        gflat[j] = (fplus - fminus) / (2 * eps)
    return grad


def _projected(fn, weights):
    """Scalar sum(fn(...) * weights), as a function of Tensors."""
    def loss(*tensors):
        out = fn(*tensors)
        return ad.sum_all(ad.mul_const(out, weights))
    return loss


def check_op(case, eps=DEFAULT_EPS, tolerance=OP_TOLERANCE):
    """
    Compare reverse-mode and finite-difference gradients for every input
    of case.
    :rtype: GradCheckResult
    """
    tolerance = case.tolerance or tolerance
    arrays = [np.array(a, dtype=np.float64) for a in case.inputs]
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    out = case.fn(*tensors)
    ad.backward(out)

    def value(*xs):
        with ad.no_grad():
            return float(case.fn(*[Tensor(x) for x in xs]).values)

    worst = 0.0
    for i, t in enumerate(tensors):
        analytic = t.grad if t.grad is not None else np.zeros_like(arrays[i])
        numeric = numerical_gradient(value, arrays, i, eps)
        if analytic.size:
            worst = max(worst, float(relative_error(analytic, numeric).max()))
    result = GradCheckResult(case.name, worst, tolerance, worst <= tolerance)
    logger.info("gradcheck %s: max relative error %.3e (%s)",
                case.name, worst, 'ok' if result.passed else 'FAIL')
    return result


def _away_from_zero(rng, shape, margin=0.1):
    x = rng.uniform(margin, 1.0, size=shape)
    return x * rng.choice([-1.0, 1.0], size=shape)


def op_cases(seed=0):
    """
    One case per autodiff op. Each fn output is reduced to a scalar by a
    fixed random projection. Inputs to relu and abs stay clear of 0.
    :rtype: list of GradCheckCase
    """
    rng = sub_rng(seed, 'gradcheck')

    def n(*shape):
        return rng.standard_normal(shape)

    def case(name, fn, inputs, out_shape):
        return GradCheckCase(name, _projected(fn, n(*out_shape)), inputs)

    keep = (rng.random((3, 4)) >= 0.5).astype(np.float64)
    return [
        case('add', lambda a, b: ad.add(a, b), [n(3, 4), n(3, 4)], (3, 4)),
        case('sub', lambda a, b: ad.sub(a, b), [n(3, 4), n(3, 4)], (3, 4)),
        case('mul', lambda a, b: ad.mul(a, b), [n(3, 4), n(3, 4)], (3, 4)),
        case('mul_scalar', lambda a: ad.mul_scalar(a, -1.7), [n(3, 4)], (3, 4)),
        case('add_bias', lambda x, b: ad.add_bias(x, b), [n(2, 3, 4), n(4)], (2, 3, 4)),
        case('add_const', lambda x: ad.add_const(x, np.full((1, 4), 0.3)), [n(3, 4)], (3, 4)),
        case('mul_const', lambda x: ad.mul_const(x, keep), [n(3, 4)], (3, 4)),
        case('relu', lambda x: ad.relu(x), [_away_from_zero(rng, (3, 4))], (3, 4)),
        case('abs', lambda x: ad.abs_(x), [_away_from_zero(rng, (3, 4))], (3, 4)),
        case('square', lambda x: ad.square(x), [n(3, 4)], (3, 4)),
        GradCheckCase('sum_all', lambda x: ad.mul_scalar(ad.sum_all(x), 0.7), [n(3, 4)]),
        case('reshape', lambda x: ad.reshape(x, (4, 3)), [n(3, 4)], (4, 3)),
        case('transpose', lambda x: ad.transpose(x, (2, 0, 1)), [n(2, 3, 4)], (4, 2, 3)),
        case('matmul', lambda a, b: ad.matmul(a, b), [n(2, 3, 4), n(2, 4, 5)], (2, 3, 5)),
        case('linear', lambda x, w, b: ad.linear(x, w, b), [n(2, 3, 4), n(4, 5), n(5)],
             (2, 3, 5)),
        case('softmax', lambda x: ad.softmax_lastdim(x), [n(3, 5)], (3, 5)),
        case('layer_norm', lambda x, g, b: ad.layer_norm(x, g, b, 1e-6),
             [n(3, 6), n(6), n(6)], (3, 6)),
        case('dropout', lambda x: ad.dropout(x, 0.25, True, np.random.default_rng(seed)),
             [n(3, 4)], (3, 4)),
    ]


def tiny_model_case(seed=0):
    """
    The training loss of a d_model=8, one-layer, two-head model on a
    two-pair batch of T=4 frames, as a function of every parameter.
    :rtype: GradCheckCase
    """
    cfg = ModelConfig(d_model=8, n_layers_enc=1, n_layers_dec=1, n_heads=2, d_ff=16,
                      dropout=0.0, dtype='float64')
    state = init_state(cfg, make_special_tokens(seed, cfg.d_model), seed)
    rng = sub_rng(seed, 'gradcheck/model')
    pairs = [UtterancePair('a', 'b', 'x', rng.random((4, 8)), rng.random((3, 8))),
             UtterancePair('a', 'b', 'y', rng.random((3, 8)), rng.random((2, 8)))]
    batch = build_batch(pairs, state.tokens)
    names = list(state.params.keys())

    def fn(*tensors):
        state.params.update(zip(names, tensors))
        pred = forward_batch(state, batch)
        return loss_final(batch.decoder_target, pred, batch.tgt_pad_mask)
    return GradCheckCase('tiny_model', fn, [state.params[k].values for k in names],
                         MODEL_TOLERANCE)


def run_gradcheck(cases=None, seed=0, eps=DEFAULT_EPS, tolerance=OP_TOLERANCE):
    """
    Check every op case and the tiny model (or the given cases).
    :rtype: GradCheckReport
    """
    if cases is None:
        cases = op_cases(seed) + [tiny_model_case(seed)]
    report = GradCheckReport(check_op(c, eps, tolerance) for c in cases)
    if report.passed:
        logger.info("gradcheck: all %d checks passed", len(report))
    else:
        logger.error("gradcheck: %d of %d checks failed: %s", len(report.failures()),
                     len(report), ', '.join(r.name for r in report.failures()))
    return report
