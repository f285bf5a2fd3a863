#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Sequence preparation: continuous SOS/EOS tokens, padded and masked
training batches, additive attention biases, source/target utterance
pairs, the synthetic digit corpus and manifest-driven corpus ingestion.

Magnitudes here are frames-major, shaped (T, d_model).

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
import os
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sortedcontainers import SortedDict

from .audio_io import AudioBuffer, read_wav
from .config import WORKING_RATE, StftConfig, VadConfig, resolve_f0, sub_rng, worker_count
from .dsp_spectrum import extract_features
from .errors import ManifestError, ShapeError, SpecterraError

logger = logging.getLogger(__name__)

# Additive attention bias for masked keys.
MASK_VALUE = -1e9

DIGIT_LABELS = ('one', 'two', 'three', 'four', 'five', 'six', 'seven',
                'eight', 'nine', 'oh', 'zero')


class SpecialTokens(namedtuple('SpecialTokensBase', ['sos', 'eos', 'rng_seed'])):
    """Start and end frames, each uniform on [0, 1) per entry."""
    __slots__ = ()

    @property
    def dim(self):
        return len(self.sos)


def make_special_tokens(seed, dim=256):
    """
    SOS and EOS vectors drawn from the 'tokens' sub-stream of seed, held
    as float32 so a checkpoint stores them exactly.
    :rtype: SpecialTokens
    """
    rng = sub_rng(seed, 'tokens')
    sos = rng.random(dim, dtype=np.float32)
    eos = rng.random(dim, dtype=np.float32)
    return SpecialTokens(sos, eos, int(seed))


class UtterancePair(object):
    """
    One source/target recording of the same text.

    source_mag, target_mag: (T, d_model) magnitudes
    source_phase, target_phase: the MagPhase features, when kept
    """
    __slots__ = ('source_id', 'target_id', 'text_label',
                 'source_mag', 'target_mag', 'source_phase', 'target_phase')

    def __init__(self, source_id, target_id, text_label, source_mag, target_mag,
                 source_phase=None, target_phase=None):
        self.source_id = source_id
        self.target_id = target_id
        self.text_label = text_label
        self.source_mag = np.asarray(source_mag, dtype=np.float64)
        self.target_mag = np.asarray(target_mag, dtype=np.float64)
        self.source_phase = source_phase
        self.target_phase = target_phase

    @classmethod
    def from_features(cls, source_id, target_id, text_label, source, target):
        """
        Pair two MagPhase feature sets.
        :rtype: UtterancePair
        """
        return cls(source_id, target_id, text_label,
                   source.magnitude.T.copy(), target.magnitude.T.copy(), source, target)

    def __repr__(self):
        return "UtterancePair({0!r}: {1} -> {2}, {3} -> {4} frames)".format(
            self.text_label, self.source_id, self.target_id,
            len(self.source_mag), len(self.target_mag))


class PaddedBatch(object):
    """
    Model-ready batch.

    encoder_input: (B, S, d) source frames, zero-padded
    decoder_input: (B, T+1, d) SOS then target frames, zero-padded
    decoder_target: (B, T+1, d) target frames then EOS, zero-padded
    src_pad_mask[b, s] is True iff s >= src_lengths[b]
    tgt_pad_mask[b, t] is True iff t >= tgt_lengths[b] + 1
    """
    __slots__ = ('encoder_input', 'decoder_input', 'decoder_target',
                 'src_lengths', 'tgt_lengths', 'src_pad_mask', 'tgt_pad_mask')

    def __init__(self, encoder_input, decoder_input, decoder_target,
                 src_lengths, tgt_lengths, src_pad_mask, tgt_pad_mask):
        self.encoder_input = encoder_input
        self.decoder_input = decoder_input
        self.decoder_target = decoder_target
        self.src_lengths = src_lengths
        self.tgt_lengths = tgt_lengths
        self.src_pad_mask = src_pad_mask
        self.tgt_pad_mask = tgt_pad_mask

    def __len__(self):
        return self.encoder_input.shape[0]


def length_mask(lengths, width):
    """
    Boolean (B, width) mask, True at positions >= lengths[b].

        >>> length_mask([1, 3], 3).tolist()
        [[False, True, True], [False, False, False]]
    """
    lengths = np.asarray(lengths)
    return np.arange(width)[None, :] >= lengths[:, None]


def build_batch(pairs, tokens, dtype=np.float64):
    """
    Pad a list of pairs to the within-batch maxima, prepend SOS to the
    decoder input and append EOS to the decoder target.
    :raises ShapeError: a magnitude's feature width differs from the tokens'
    :rtype: PaddedBatch
    """
    if not pairs:
        raise ShapeError("build_batch: no pairs")
    d = tokens.dim
    for p in pairs:
        for name, mag in (('source', p.source_mag), ('target', p.target_mag)):
            if mag.ndim != 2 or mag.shape[1] != d:
                raise ShapeError("build_batch: {0} magnitude of {1!r} has shape {2}, "
                                 "expected (T, {3})".format(name, p, mag.shape, d))
    src_lengths = np.array([len(p.source_mag) for p in pairs])
    tgt_lengths = np.array([len(p.target_mag) for p in pairs])
    b, s_max, t_max = len(pairs), src_lengths.max(), tgt_lengths.max()

    enc = np.zeros((b, s_max, d), dtype=dtype)
    dec_in = np.zeros((b, t_max + 1, d), dtype=dtype)
    dec_out = np.zeros((b, t_max + 1, d), dtype=dtype)
    for i, p in enumerate(pairs):
        n_src, n_tgt = src_lengths[i], tgt_lengths[i]
        enc[i, :n_src] = p.source_mag
        dec_in[i, 0] = tokens.sos
        dec_in[i, 1:n_tgt + 1] = p.target_mag
        dec_out[i, :n_tgt] = p.target_mag
        dec_out[i, n_tgt] = tokens.eos
    return PaddedBatch(enc, dec_in, dec_out, src_lengths, tgt_lengths,
                       length_mask(src_lengths, s_max), length_mask(tgt_lengths + 1, t_max + 1))


def attention_bias(pad_mask):
    """
    Additive key bias, MASK_VALUE at padded keys and 0 elsewhere, shaped
    (B, 1, 1, S) to broadcast over heads and queries.
    :rtype: numpy.ndarray
    """
    pad_mask = np.asarray(pad_mask, dtype=bool)
    return np.where(pad_mask, MASK_VALUE, 0.0)[:, None, None, :]


def causal_bias(length):
    """
    (T, T) bias hiding later keys from each query.

        >>> causal_bias(3).tolist()
        [[0.0, -1000000000.0, -1000000000.0], [0.0, 0.0, -1000000000.0], [0.0, 0.0, 0.0]]

    :rtype: numpy.ndarray
    """
    if length < 1:
        raise ValueError("causal_bias: length must be >= 1, got {0}".format(length))
    return np.triu(np.full((length, length), MASK_VALUE), k=1)


CorpusStats = namedtuple('CorpusStats', ['max_src_len', 'max_tgt_len', 'mean_target_frame'])


def corpus_stats(pairs):
    """
    Global maxima (the decode cap) and the mean target frame (the default
    EOS distance scale).
    :rtype: CorpusStats
    """
    if not pairs:
        raise ValueError("corpus_stats: empty corpus")
    frames = np.concatenate([p.target_mag for p in pairs], axis=0)
    return CorpusStats(
        max(len(p.source_mag) for p in pairs),
        max(len(p.target_mag) for p in pairs),
        frames.mean(axis=0),
    )


def iter_batches(n_items, batch_size, rng):
    """
    Endless index batches: each epoch is a fresh permutation, cut into
    batch_size pieces; a short tail is topped up from the next epoch.
    """
    buffer = []
    while True:
        while len(buffer) < batch_size:
            buffer.extend(rng.permutation(n_items).tolist())
        batch, buffer = buffer[:batch_size], buffer[batch_size:]
        yield batch


# Synthetic corpus

def _label_pattern(label, seed, harmonics):
    """Harmonic weights and envelope shape fixed per label."""
    rng = sub_rng(seed, 'toy/' + label)
    weights = np.empty(harmonics)
    weights[0] = 1.0
    k = np.arange(2, harmonics + 1)
    weights[1:] = rng.uniform(0.5, 1.0, size=harmonics - 1) / k ** 2
    attack = rng.uniform(0.1, 0.3)
    wobble = rng.uniform(2.0, 6.0)
    return weights, attack, wobble


def render_digit(label, f0, duration, rate, seed, harmonics=6, pad=0.1):
    """
    A pseudo-word: label-specific harmonic mix at pitch f0 under a
    label-specific envelope, peak 0.5, with pad seconds of silence on
    both sides.
    :rtype: AudioBuffer
    """
    weights, attack, wobble = _label_pattern(label, seed, harmonics)
    n = int(round(duration * rate))
    t = np.arange(n) / float(rate)
    phase = 2 * np.pi * f0 * t
    tone = np.zeros(n)
    for k, w in enumerate(weights, start=1):
        if k * f0 < rate / 2.0:
            tone += w * np.sin(k * phase)
    position = t / duration
    envelope = np.minimum(1.0, position / attack) * np.minimum(1.0, (1.0 - position) / 0.2)
    envelope *= 0.75 + 0.25 * np.cos(2 * np.pi * wobble * position)
    voiced = tone * np.clip(envelope, 0.0, None)
    peak = np.max(np.abs(voiced))
    if peak > 0:
        voiced *= 0.5 / peak
    silence = np.zeros(int(round(pad * rate)))
    return AudioBuffer(np.concatenate([silence, voiced, silence]), rate)


def make_toy_corpus(cfg, stft_cfg=None, vad_cfg=None):
    """
    Deterministic desk-scale parallel corpus: pair i speaks
    DIGIT_LABELS[i % 11], rendered at f0_src for the source and f0_tgt
    for the target, then run through the real front end.
    :param cfg: ToyCorpusConfig
    :rtype: list of UtterancePair
    """
    stft_cfg = stft_cfg or StftConfig()
    vad_cfg = vad_cfg or VadConfig()
    f0_src, f0_tgt = resolve_f0(cfg.f0_src), resolve_f0(cfg.f0_tgt)
    durations = sub_rng(cfg.seed, 'toy').uniform(cfg.duration_min, cfg.duration_max,
                                                 size=cfg.n_pairs)
    pairs = []
    for i in range(cfg.n_pairs):
        label = DIGIT_LABELS[i % len(DIGIT_LABELS)]
        src = render_digit(label, f0_src, durations[i], cfg.rate, cfg.seed, cfg.harmonics)
        tgt = render_digit(label, f0_tgt, durations[i], cfg.rate, cfg.seed, cfg.harmonics)
        pairs.append(UtterancePair.from_features(
            'toy-{0:g}Hz'.format(f0_src), 'toy-{0:g}Hz'.format(f0_tgt), label,
            extract_features(src, stft_cfg, vad_cfg, cfg.rate),
            extract_features(tgt, stft_cfg, vad_cfg, cfg.rate)))
    return pairs


# Manifest ingestion

ManifestEntry = namedtuple('ManifestEntry', ['line', 'label', 'source', 'target'])
IngestFailure = namedtuple('IngestFailure', ['line', 'path', 'reason'])


def read_manifest(path):
    """
    Parse a UTF-8 manifest of `label<TAB>source_wav<TAB>target_wav` lines;
    blank lines and `#` comments are skipped.
    :raises ManifestError: malformed line or no entries
    :rtype: list of ManifestEntry
    """
    entries = []
    with io.open(path, 'r', encoding='utf-8') as fh:
        for number, line in enumerate(fh, start=1):
            text = line.rstrip('\r\n')
            if not text.strip() or text.lstrip().startswith('#'):
                continue
            fields = text.split('\t')
            if len(fields) != 3 or not all(f.strip() for f in fields):
                raise ManifestError("{0}:{1}: expected label<TAB>source<TAB>target".format(
                    path, number))
            entries.append(ManifestEntry(number, *[f.strip() for f in fields]))
    if not entries:
        raise ManifestError("{0}: manifest has no entries".format(path))
    return entries


def speaker_of(path):
    """Speaker id: the name of the directory holding the recording."""
    parent = os.path.basename(os.path.dirname(os.path.normpath(path)))
    return parent or os.path.splitext(os.path.basename(path))[0]


def _ingest_one(root, entry, stft_cfg, vad_cfg, rate):
    features = []
    for rel in (entry.source, entry.target):
        path = os.path.join(root, rel)
        if not os.path.isfile(path):
            return IngestFailure(entry.line, path, 'missing file')
        try:
            features.append(extract_features(read_wav(path), stft_cfg, vad_cfg, rate))
        except SpecterraError as e:
            return IngestFailure(entry.line, path, str(e))
    return UtterancePair.from_features(speaker_of(entry.source), speaker_of(entry.target),
                                       entry.label, features[0], features[1])


def ingest_corpus(root, manifest, stft_cfg=None, vad_cfg=None, rate=WORKING_RATE,
                  report=None, workers=None):
    """
    Load every manifest pair: read, resample, trim, pre-emphasize, STFT and
    split. Unreadable or missing files are appended to report (when given)
    and the pair is skipped. Output follows manifest order whatever the
    worker scheduling.
    :raises ManifestError: the manifest has no entries
    :rtype: list of UtterancePair
    """
    stft_cfg = stft_cfg or StftConfig()
    vad_cfg = vad_cfg or VadConfig()
    entries = read_manifest(manifest)
    workers = workers or worker_count()
    results = SortedDict()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(_ingest_one, root, e, stft_cfg, vad_cfg, rate): e.line
                   for e in entries}
        for future, line in futures.items():
            results[line] = future.result()

    pairs = []
    for outcome in results.values():
        if isinstance(outcome, IngestFailure):
            logger.warning("manifest line %d skipped: %s (%s)",
                           outcome.line, outcome.path, outcome.reason)
            if report is not None:
                report.append(outcome)
        else:
            pairs.append(outcome)
    logger.info("ingested %d of %d manifest pairs", len(pairs), len(entries))
    return pairs
