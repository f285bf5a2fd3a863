#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Teacher-forced training: the composite L1/MSE magnitude loss, the
exponentially decayed learning rate, Adam, checkpointing and the metrics
log.

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
import csv
import io
import logging
import math
import os
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sortedcontainers import SortedDict

from . import tensor_autodiff as ad
from .config import TrainConfig, sub_rng
from .errors import ConfigError, NumericError, ShapeError
from .seq_prep import build_batch, corpus_stats, iter_batches, make_special_tokens
from .tensor_autodiff import Tensor, no_grad
from .transformer_model import forward_batch, init_state, save_checkpoint

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ('step', 'lr', 'loss_final', 'loss_l1', 'loss_mse')

LossTerms = namedtuple('LossTerms', ['final', 'l1', 'mse'])
StepMetrics = namedtuple('StepMetrics', METRICS_COLUMNS)
TrainResult = namedtuple('TrainResult', ['state', 'metrics'])


# Losses

def _loss_weights(y_true, y_pred, mask):
    """
    0/1 weights over y_pred's elements: 0 where mask (a pad mask over
    y's leading axes, or over every axis) is True.
    """
    y_true = np.asarray(y_true)
    if y_true.shape != y_pred.shape:
        raise ShapeError("loss: target shape {0} differs from prediction {1}".format(
            y_true.shape, y_pred.shape))
    if mask is None:
        return y_true, np.ones(y_true.shape, dtype=y_pred.dtype)
    keep = ~np.asarray(mask, dtype=bool)
    if keep.shape == y_true.shape[:-1]:
        keep = keep[..., None]
    try:
        keep = np.broadcast_to(keep, y_true.shape)
    except ValueError:
        raise ShapeError("loss: mask {0} does not fit {1}".format(np.shape(mask), y_true.shape))
    return y_true, keep.astype(y_pred.dtype)


def _row_weights(weights, shape):
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape == shape[:-1]:
        weights = weights[..., None]
    try:
        return np.broadcast_to(weights, shape)
    except ValueError:
        raise ShapeError("loss: weights {0} do not fit {1}".format(np.shape(weights), shape))


def stop_weights(batch, eos_weight=None):
    """
    Per-row loss weights shaped like tgt_pad_mask: 1 on every frame row and
    eos_weight on each sequence's EOS row (index tgt_lengths[b]). None
    weighs the EOS row like the batch's mean target length, so stopping
    counts as much as the frames before it.
    :rtype: numpy.ndarray
    """
    lengths = np.asarray(batch.tgt_lengths)
    if eos_weight is None:
        eos_weight = max(float(lengths.mean()), 1.0)
    weights = np.ones(np.shape(batch.tgt_pad_mask))
    weights[np.arange(len(lengths)), lengths] = eos_weight
    return weights


def _masked_sum(values, weights, count, normalize):
    total = ad.sum_all(ad.mul_const(values, weights))
    if normalize:
        total = ad.mul_scalar(total, 1.0 / max(count, 1.0))
    return total


def loss_terms(y_true, y_pred, mask=None, normalize=True, weights=None):
    """
    L1 = sum |y_true - y_pred| and MSE = 1/2 sum (y_true - y_pred)**2 over
    unmasked elements, and final = 0.5 * L1 + 0.5 * MSE. With normalize,
    each sum is divided by the number of unmasked elements.

    weights, shaped like the mask, scales each row's contribution; the
    normalizing count then becomes the weighted count.

        >>> terms = loss_terms([1.0, 2.0], Tensor([0.0, 0.0]), normalize=False)
        >>> [float(t.values) for t in terms]
        [2.75, 3.0, 2.5]

    :rtype: LossTerms of scalar Tensors
    """
    y_true, keep = _loss_weights(y_true, y_pred, mask)
    if weights is not None:
        keep = keep * _row_weights(weights, keep.shape).astype(keep.dtype)
    count = float(keep.sum())
    diff = ad.add_const(y_pred, -y_true.astype(y_pred.dtype))
    l1 = _masked_sum(ad.abs_(diff), keep, count, normalize)
    mse = ad.mul_scalar(_masked_sum(ad.square(diff), keep, count, normalize), 0.5)
    final = ad.add(ad.mul_scalar(l1, 0.5), ad.mul_scalar(mse, 0.5))
    return LossTerms(final, l1, mse)


def loss_l1(y_true, y_pred, mask=None, normalize=True):
    return loss_terms(y_true, y_pred, mask, normalize).l1


def loss_mse(y_true, y_pred, mask=None, normalize=True):
    return loss_terms(y_true, y_pred, mask, normalize).mse


def loss_final(y_true, y_pred, mask=None, normalize=True):
    return loss_terms(y_true, y_pred, mask, normalize).final


# Schedule and optimizer

def lr_at(step, cfg):
    """
    lr0 * decay_rate ** (step / decay_step); the exponent is floored when
    cfg.staircase is set.

        >>> lr_at(0, TrainConfig())
        0.0001
    """
    exponent = step / float(cfg.decay_step)
    if cfg.staircase:
        exponent = math.floor(exponent)
    return cfg.lr0 * cfg.decay_rate ** exponent


def adam_step(state, grads, lr, cfg):
    """
    One bias-corrected Adam update of every parameter in state, in
    place, and step += 1. grads maps parameter names to arrays; missing
    names count as zero gradients.
    :raises NumericError: a gradient is not finite; state is untouched
    """
    for name, g in grads.items():
        if name not in state.params:
            raise ShapeError("adam_step: unknown parameter {0!r}".format(name))
        if not np.all(np.isfinite(g)):
            raise NumericError("adam_step: non-finite gradient for {0}".format(name))

    state.step += 1
    t = state.step
    b1, b2 = cfg.beta1, cfg.beta2
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t
    for name, param in state.params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(param.values)
        m = state.moments_m[name] = b1 * state.moments_m[name] + (1.0 - b1) * g
        v = state.moments_v[name] = b2 * state.moments_v[name] + (1.0 - b2) * g * g
        update = lr * (m / correction1) / (np.sqrt(v / correction2) + cfg.epsilon)
        param.values = (param.values - update).astype(param.dtype)


# Metrics

class MetricsLog(object):
    """
    Per-step metrics kept in step order, optionally mirrored to a UTF-8
    CSV file (one row appended per record()).
    """

    def __init__(self, path=None):
        self.rows = SortedDict()
        self.path = path
        if path is not None:
            with io.open(path, 'w', encoding='utf-8', newline='') as fh:
                csv.writer(fh, lineterminator='\n').writerow(METRICS_COLUMNS)

    def record(self, metrics):
        if metrics.step in self.rows:
            raise ValueError("metrics for step {0} already recorded".format(metrics.step))
        self.rows[metrics.step] = metrics
        if self.path is not None:
            with io.open(self.path, 'a', encoding='utf-8', newline='') as fh:
                csv.writer(fh, lineterminator='\n').writerow(
                    [metrics.step] + [repr(float(x)) for x in metrics[1:]])

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows.values())

    def losses(self):
        return [m.loss_final for m in self]

    @classmethod
    def read_csv(cls, path):
        """
        Rows of a metrics file, as StepMetrics.
        :rtype: list of StepMetrics
        """
        with io.open(path, 'r', encoding='utf-8', newline='') as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != METRICS_COLUMNS:
                raise ValueError("{0}: unexpected header {1}".format(path, header))
            return [StepMetrics(int(r[0]), *map(float, r[1:])) for r in reader]


# Training

def train_step(state, batch, lr, cfg, rng):
    """
    Teacher-forced forward, loss, backward and Adam update for one
    PaddedBatch. The returned metrics carry the step count before the
    update.
    :rtype: StepMetrics
    """
    step = state.step
    state.zero_grad()
    pred = forward_batch(state, batch, training=True, rng=rng)
    terms = loss_terms(batch.decoder_target, pred, batch.tgt_pad_mask, cfg.normalize_loss,
                       stop_weights(batch, cfg.eos_weight))
    ad.backward(terms.final)
    adam_step(state, state.grads(), lr, cfg)
    return StepMetrics(step, lr, float(terms.final.values), float(terms.l1.values),
                       float(terms.mse.values))


def evaluate(state, pairs, normalize=True, batch_size=8):
    """
    Teacher-forced loss over pairs in eval mode, averaged over batches.
    :rtype: LossTerms of floats
    """
    totals = np.zeros(3)
    batches = 0
    with no_grad():
        for start in range(0, len(pairs), batch_size):
            batch = build_batch(pairs[start:start + batch_size], state.tokens, state.dtype)
            pred = forward_batch(state, batch)
            terms = loss_terms(batch.decoder_target, pred, batch.tgt_pad_mask, normalize)
            totals += [float(t.values) for t in terms]
            batches += 1
    return LossTerms(*(totals / max(batches, 1)))


def checkpoint_path(directory, step):
    return os.path.join(directory, 'step-{0:06d}.vfvc'.format(step))


def prepare_state(pairs, model_cfg, seed):
    """
    A fresh ModelState for pairs: seeded tokens and parameters, plus the
    corpus statistics inference relies on.
    :rtype: ModelState
    """
    tokens = make_special_tokens(seed, model_cfg.d_model)
    state = init_state(model_cfg, tokens, seed)
    stats = corpus_stats(pairs)
    state.max_target_len = stats.max_tgt_len
    state.mean_frame = stats.mean_target_frame.astype(np.float32)
    state.eos_tau = 0.5 * float(np.linalg.norm(tokens.eos - state.mean_frame))
    return state


def train_loop(pairs, model_cfg, train_cfg, checkpoint_dir=None, metrics_path=None,
               state=None):
    """
    Train on pairs for train_cfg.max_steps steps from a fresh state (or
    continue state). Checkpoints go to checkpoint_dir every
    checkpoint_every steps and once at the end; metrics go to
    metrics_path. The next batch is assembled while the current step
    runs.
    :raises NumericError: after writing a checkpoint of the last good state
    :rtype: TrainResult
    """
    if not pairs:
        raise ConfigError("train_loop: the corpus is empty")
    for p in pairs:
        if p.source_mag.shape[1] != model_cfg.d_model or p.target_mag.shape[1] != model_cfg.d_model:
            raise ShapeError("train_loop: {0!r} has feature width {1}, d_model is {2}".format(
                p, p.source_mag.shape[1], model_cfg.d_model))
    seed = train_cfg.seed
    if state is None:
        state = prepare_state(pairs, model_cfg, seed)
    if checkpoint_dir is not None:
        os.makedirs(checkpoint_dir, exist_ok=True)
    metrics = MetricsLog(metrics_path)
    order = iter_batches(len(pairs), train_cfg.batch_size, sub_rng(seed, 'batches'))
    dropout_rng = sub_rng(seed, 'dropout')

    def assemble(indices):
        return build_batch([pairs[i] for i in indices], state.tokens, state.dtype)

    logger.info("training %r on %d pairs for %d steps", state, len(pairs), train_cfg.max_steps)
    with ThreadPoolExecutor(max_workers=1) as pool:
        pending = pool.submit(assemble, next(order)) if train_cfg.max_steps else None
        for i in range(train_cfg.max_steps):
            batch = pending.result()
            if i + 1 < train_cfg.max_steps:
                pending = pool.submit(assemble, next(order))
            lr = lr_at(state.step, train_cfg)
            try:
                row = train_step(state, batch, lr, train_cfg, dropout_rng)
            except NumericError:
                logger.error("numeric failure at step %d; halting", state.step)
                if checkpoint_dir is not None:
                    save_checkpoint(state, os.path.join(
                        checkpoint_dir, 'halt-{0:06d}.vfvc'.format(state.step)))
                raise
            metrics.record(row)
            if state.step % train_cfg.log_every == 0:
                logger.info("step %d lr %.3g loss %.6f (l1 %.6f, mse %.6f)",
                            state.step, row.lr, row.loss_final, row.loss_l1, row.loss_mse)
            if checkpoint_dir is not None and state.step % train_cfg.checkpoint_every == 0:
                save_checkpoint(state, checkpoint_path(checkpoint_dir, state.step))

    if checkpoint_dir is not None:
        save_checkpoint(state, os.path.join(checkpoint_dir, 'latest.vfvc'))
    return TrainResult(state, metrics)
