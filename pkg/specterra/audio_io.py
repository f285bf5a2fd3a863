#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Audio I/O: 16-bit PCM mono WAV files and band-limited resampling of
20 kHz corpus audio to the 16 kHz working rate.

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
from math import gcd

import numpy as np
import soundfile as sf
from scipy.signal import firwin, resample_poly

from .errors import UnsupportedFormatError, WavFormatError, WavWriteError

logger = logging.getLogger(__name__)

PCM_SCALE = 32768.0
PCM_MAX = 1.0 - 2.0 ** -15

# Anti-aliasing filter: Kaiser windowed sinc, cutoff at 0.9 of the lower
# Nyquist rate.
KAISER_BETA = 8.0
CUTOFF_RATIO = 0.9
HALF_TAPS_PER_PHASE = 16


class AudioBuffer(object):
    """
    Mono samples in [-1, 1] with their sample rate.
    """
    __slots__ = ('samples', 'sample_rate')

    def __init__(self, samples, sample_rate):
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(
                "AudioBuffer: samples must be one-dimensional, got shape {0}".format(samples.shape))
        if int(sample_rate) <= 0:
            raise ValueError("AudioBuffer: sample_rate must be positive, got {0}".format(sample_rate))
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioBuffer: samples must be finite")
        self.samples = samples
        self.sample_rate = int(sample_rate)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self):
        """Length in seconds."""
        return len(self.samples) / float(self.sample_rate)

    def with_samples(self, samples):
        """
        A new buffer at the same rate.
        :rtype: AudioBuffer
        """
        return AudioBuffer(samples, self.sample_rate)

    def __eq__(self, other):
        return (
            isinstance(other, AudioBuffer) and
            self.sample_rate == other.sample_rate and
            np.array_equal(self.samples, other.samples)
        )

    def __repr__(self):
        return "AudioBuffer({0} samples, {1} Hz)".format(len(self.samples), self.sample_rate)


def read_wav(path):
    """
    Read a 16-bit PCM mono WAV file. Samples are scaled by 1/32768.
    :raises WavFormatError: malformed or unreadable RIFF/WAVE header
    :raises UnsupportedFormatError: not PCM 16-bit, or not mono
    :rtype: AudioBuffer
    """
    try:
        info = sf.info(str(path))
    except RuntimeError as e:
        # soundfile's LibsndfileError derives from RuntimeError
        raise WavFormatError("{0}: not a readable WAV file ({1})".format(path, e))
    if info.format != 'WAV':
        raise WavFormatError("{0}: container is {1}, expected WAV".format(path, info.format))
    if info.subtype != 'PCM_16':
        raise UnsupportedFormatError(
            "{0}: sample format {1} is unsupported, expected PCM_16".format(path, info.subtype))
    if info.channels != 1:
        raise UnsupportedFormatError(
            "{0}: {1} channels, only mono is supported".format(path, info.channels))
    try:
        data, rate = sf.read(str(path), dtype='int16', always_2d=False)
    except RuntimeError as e:
        raise WavFormatError("{0}: cannot decode samples ({1})".format(path, e))
    return AudioBuffer(data.astype(np.float64) / PCM_SCALE, rate)


def quantize(samples):
    """
    Clamp to [-1, 1 - 2**-15] and quantize to int16.
    :rtype: numpy.ndarray
    """
    clamped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, PCM_MAX)
    return np.round(clamped * PCM_SCALE).astype(np.int16)


def write_wav(buf, path):
    """
    Write buf as a 16-bit PCM mono WAV file.
    :raises WavWriteError: on any I/O failure
    """
    pcm = quantize(buf.samples)
    try:
        sf.write(str(path), pcm, buf.sample_rate, format='WAV', subtype='PCM_16')
    except (RuntimeError, OSError) as e:
        raise WavWriteError("{0}: cannot write WAV ({1})".format(path, e))
    logger.debug("wrote %d samples at %d Hz to %s", len(pcm), buf.sample_rate, path)


def resampled_length(n, source_rate, target_rate):
    """
    round(n * target / source), with halves rounded up.

        >>> resampled_length(20000, 20000, 16000)
        16000
        >>> resampled_length(3, 20000, 16000)
        2
    """
    return (2 * n * target_rate + source_rate) // (2 * source_rate)


def _antialias_taps(up, down):
    max_rate = max(up, down)
    half_len = HALF_TAPS_PER_PHASE * max_rate
    return firwin(2 * half_len + 1, CUTOFF_RATIO / max_rate, window=('kaiser', KAISER_BETA))


def resample(buf, target_rate):
    """
    Polyphase windowed-sinc resampling to target_rate. The output has
    round(len * target / source) samples; equal rates return a copy.
    :raises ValueError: target_rate not positive
    :rtype: AudioBuffer
    """
    target_rate = int(target_rate)
    if target_rate <= 0:
        raise ValueError("resample: target_rate must be positive, got {0}".format(target_rate))
    if target_rate == buf.sample_rate:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate)
    g = gcd(buf.sample_rate, target_rate)
    up, down = target_rate // g, buf.sample_rate // g
    n_out = resampled_length(len(buf), buf.sample_rate, target_rate)
    if len(buf) == 0:
        return AudioBuffer(np.zeros(0), target_rate)
    out = resample_poly(buf.samples, up, down, window=_antialias_taps(up, down))
    if len(out) < n_out:
        out = np.pad(out, (0, n_out - len(out)))
    return AudioBuffer(out[:n_out], target_rate)
