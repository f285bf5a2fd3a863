#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Inference: greedy autoregressive magnitude decoding with a continuous
EOS stopping rule, recombination with the source phase, and the
end-to-end file conversion.

Inference runs under no_grad() and never writes to the ModelState, so
one loaded state may serve several threads.

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
import json
import logging
import os
import time
from collections import namedtuple

import numpy as np

from .audio_io import read_wav, write_wav
from .config import RunConfig, StftConfig
from .dsp_spectrum import MagPhase, deemphasis, extract_features, istft, merge_mag_phase
from .errors import EmptyAudioError, ShapeError, SpecterraError, StageError
from .seq_prep import causal_bias
from .tensor_autodiff import no_grad
from .transformer_model import decoder_forward, encoder_forward, load_checkpoint

logger = logging.getLogger(__name__)

STOP_EOS = 'eos'
STOP_MAX_LEN = 'max_len'

# Summed squared window below which reconstruct() stops dividing: the
# outer half-frames of predicted magnitudes are not a consistent STFT.
RECONSTRUCT_NORM_FLOOR = 0.1

Decoded = namedtuple('Decoded', ['frames', 'stop_reason'])


class ConversionResult(object):
    """
    predicted_mag: (T_hat, d_model) decoder output, EOS frame excluded
    frames_used: min(T_hat, source frames), what reconstruction kept
    audio: the reconstructed AudioBuffer
    stop_reason: 'eos' or 'max_len'
    """
    __slots__ = ('predicted_mag', 'frames_used', 'audio', 'stop_reason', 'seconds_elapsed')

    def __init__(self, predicted_mag, frames_used, audio, stop_reason, seconds_elapsed=0.0):
        self.predicted_mag = predicted_mag
        self.frames_used = frames_used
        self.audio = audio
        self.stop_reason = stop_reason
        self.seconds_elapsed = seconds_elapsed

    @property
    def frames_pred(self):
        return len(self.predicted_mag)

    def log_record(self, input_path):
        return {
            'input': str(input_path),
            'frames_pred': self.frames_pred,
            'frames_used': self.frames_used,
            'stop_reason': self.stop_reason,
            'seconds_elapsed': round(self.seconds_elapsed, 6),
        }

    def __repr__(self):
        return "ConversionResult({0} frames predicted, {1} used, stop={2})".format(
            self.frames_pred, self.frames_used, self.stop_reason)


def decode_limits(state, infer_cfg=None):
    """
    (max_len, eos_tau) for greedy_decode(). Explicit InferConfig values
    win; otherwise max_len is the model's max_decode_len when set, else
    the longest training target plus decode_margin, and eos_tau is the
    one stored at training time, else half the distance from EOS to the
    mean training frame (to the origin when no statistics exist).
    """
    margin = 16 if infer_cfg is None else infer_cfg.decode_margin
    max_len = None if infer_cfg is None else infer_cfg.max_len
    if max_len is None:
        max_len = state.config.max_decode_len or state.max_target_len + margin
    eos_tau = None if infer_cfg is None else infer_cfg.eos_tau
    if eos_tau is None:
        eos_tau = state.eos_tau
    if eos_tau is None:
        reference = state.mean_frame if state.mean_frame is not None else 0.0
        eos_tau = 0.5 * float(np.linalg.norm(state.tokens.eos - reference))
    return int(max_len), float(eos_tau)


def greedy_decode(source_mag, state, max_len, eos_tau):
    """
    Convert (T, d_model) source frames. The source is encoded once; the
    decoder is re-run on the whole prefix [SOS, y_1, ..., y_k] each step
    and its last output row becomes y_{k+1}. Decoding stops when a frame
    lies within eos_tau (Euclidean) of the EOS token, which is not
    emitted, or after max_len frames.
    :rtype: Decoded
    """
    source_mag = np.asarray(source_mag)
    d = state.config.d_model
    if source_mag.ndim != 2 or source_mag.shape[1] != d or len(source_mag) == 0:
        raise ShapeError("greedy_decode: expected (T >= 1, {0}) source, got {1}".format(
            d, source_mag.shape))
    frames = []
    if max_len <= 0:
        return Decoded(np.zeros((0, d)), STOP_MAX_LEN)
    eos = np.asarray(state.tokens.eos, dtype=np.float64)
    with no_grad():
        memory = encoder_forward(source_mag[None].astype(state.dtype), None, state)
        prefix = [np.asarray(state.tokens.sos, dtype=state.dtype)]
        while len(frames) < max_len:
            out = decoder_forward(np.stack(prefix)[None], memory, causal_bias(len(prefix)),
                                  None, state)
            frame = out.values[0, -1]
            if np.linalg.norm(frame.astype(np.float64) - eos) < eos_tau:
                logger.debug("EOS after %d frames", len(frames))
                return Decoded(np.array(frames).reshape(-1, d), STOP_EOS)
            frames.append(frame.copy())
            prefix.append(frame)
    logger.debug("decode cap of %d frames reached", max_len)
    return Decoded(np.array(frames).reshape(-1, d), STOP_MAX_LEN)


def reconstruct(pred_mag, source, cfg=None, preemph_coeff=None):
    """
    Waveform from predicted (T_hat, d_model) magnitudes and the source
    phase: negative magnitudes are clamped to 0, both sides truncated to
    the shorter frame count, merged with the source's dropped top bin,
    inverted by istft() with the norm floored at RECONSTRUCT_NORM_FLOOR,
    and de-emphasized. The floor bounds the edge gain, which the
    de-emphasis filter would otherwise carry into the interior.
    :param source: the source MagPhase
    :param cfg: StftConfig; defaults to the source's
    :param preemph_coeff: defaults to cfg.preemphasis_coeff
    :raises EmptyAudioError: no frame survives the truncation
    :rtype: AudioBuffer
    """
    cfg = cfg or source.config
    coeff = cfg.preemphasis_coeff if preemph_coeff is None else preemph_coeff
    pred_mag = np.clip(np.asarray(pred_mag, dtype=np.float64), 0.0, None)
    frames_used = min(len(pred_mag), source.frames)
    if frames_used == 0:
        raise EmptyAudioError("reconstruct: {0} predicted and {1} source frames".format(
            len(pred_mag), source.frames))
    kept = source.truncate(frames_used)
    spec = merge_mag_phase(MagPhase(pred_mag[:frames_used].T, kept.phase, kept.dropped_bin,
                                    cfg, source.sample_rate))
    return deemphasis(istft(spec, RECONSTRUCT_NORM_FLOOR), coeff)


def run_config_for(state):
    """
    Default settings for a loaded model: a half-overlap STFT whose feature
    width is the model's d_model.

        >>> from specterra.config import ModelConfig
        >>> from specterra.transformer_model import ModelState
        >>> run_config_for(ModelState(ModelConfig(d_model=64, n_heads=4), {}, None)).stft
        StftConfig(nfft=128, hop=64, window='hann', preemphasis_coeff=0.97)

    :rtype: RunConfig
    """
    d_model = state.config.d_model
    return RunConfig(stft=StftConfig(nfft=2 * d_model, hop=d_model), model=state.config)


class _Stage(object):
    """Re-raise a library or I/O failure as StageError(name)."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (SpecterraError, OSError)) and \
                not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def append_log(path, record):
    """Append one JSON object as a UTF-8 line."""
    with io.open(path, 'a', encoding='utf-8') as fh:
        fh.write(json.dumps(record, sort_keys=True) + '\n')


def convert_file(in_wav, out_wav, checkpoint, cfg=None, log_path=None):
    """
    read -> resample -> trim -> pre-emphasize -> stft -> split ->
    greedy_decode -> reconstruct -> write.
    :param checkpoint: a checkpoint path or a loaded ModelState
    :param cfg: RunConfig; defaults to RunConfig() with nfft = 2 * d_model and
    hop = d_model, taken from the checkpoint
    :raises StageError: naming the stage that failed
    :rtype: ConversionResult
    """
    started = time.perf_counter()
    with _Stage('checkpoint'):
        state = load_checkpoint(checkpoint) if isinstance(checkpoint, (str, os.PathLike)) \
            else checkpoint
        cfg = cfg or run_config_for(state)
    with _Stage('read'):
        if not os.path.isfile(in_wav):
            raise FileNotFoundError("{0}: no such input file".format(in_wav))
        audio = read_wav(in_wav)
    with _Stage('features'):
        source = extract_features(audio, cfg.stft, cfg.vad, cfg.sample_rate)
    with _Stage('decode'):
        max_len, eos_tau = decode_limits(state, cfg.infer)
        decoded = greedy_decode(source.magnitude.T, state, max_len, eos_tau)
    with _Stage('reconstruct'):
        out = reconstruct(decoded.frames, source, cfg.stft)
    with _Stage('write'):
        write_wav(out, out_wav)
    result = ConversionResult(decoded.frames, min(len(decoded.frames), source.frames), out,
                              decoded.stop_reason, time.perf_counter() - started)
    logger.info("converted %s -> %s: %r", in_wav, out_wav, result)
    if log_path is not None:
        with _Stage('log'):
            append_log(log_path, result.log_record(in_wav))
    return result
