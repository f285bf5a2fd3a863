#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Spectral front end: pre-emphasis, framing, windowing, STFT, the
magnitude/phase factorization D = S * P, inverse STFT by weighted
overlap-add, and the feature-cache file format.

Frames are not centered: frame t covers samples [t*hop, t*hop + nfft).
The top onesided bin (index nfft/2) is split off into dropped_bin so the
magnitude has exactly nfft/2 rows; it is restored on merge.

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

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window, lfilter

from .audio_io import AudioBuffer, resample
from .config import WORKING_RATE, StftConfig
from .errors import (AlignmentError, ConfigError, FeatureCacheError,
                     InputTooShortError)
from .interval import Interval
from .vad import trim_silence

logger = logging.getLogger(__name__)

CACHE_MAGIC = b'VFSP'
CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct('<4sIII')

# Overlap-add denominators below this count as zero.
_OLA_FLOOR = 1e-10


class ComplexSpectrum(object):
    """
    Onesided STFT, bins shaped (nfft/2 + 1, frames).
    """
    __slots__ = ('bins', 'config', 'sample_rate')

    def __init__(self, bins, config, sample_rate=WORKING_RATE):
        bins = np.asarray(bins, dtype=np.complex128)
        if bins.ndim != 2 or bins.shape[0] != config.freq_bins:
            raise ValueError(
                "ComplexSpectrum: expected ({0}, frames) bins, got {1}".format(
                    config.freq_bins, bins.shape))
        if not np.all(np.isfinite(bins)):
            raise ValueError("ComplexSpectrum: bins must be finite")
        self.bins = bins
        self.config = config
        self.sample_rate = int(sample_rate)

    @property
    def frames(self):
        return self.bins.shape[1]

    def __repr__(self):
        return "ComplexSpectrum({0} bins x {1} frames)".format(*self.bins.shape)


class MagPhase(object):
    """
    D = S * P with the top bin held aside.

    magnitude: (nfft/2, frames), non-negative
    phase: (nfft/2 + 1, frames), unit modulus (1+0j where the bin is 0)
    dropped_bin: (frames,) complex, or None
    """
    __slots__ = ('magnitude', 'phase', 'dropped_bin', 'config', 'sample_rate')

    def __init__(self, magnitude, phase, dropped_bin, config, sample_rate=WORKING_RATE):
        self.magnitude = magnitude
        self.phase = phase
        self.dropped_bin = dropped_bin
        self.config = config
        self.sample_rate = int(sample_rate)

    @property
    def frames(self):
        return self.phase.shape[1]

    def truncate(self, frames):
        """
        Keep the first frames columns of magnitude, phase and dropped_bin.
        :rtype: MagPhase
        """
        dropped = None if self.dropped_bin is None else self.dropped_bin[:frames]
        return MagPhase(self.magnitude[:, :frames], self.phase[:, :frames], dropped,
                        self.config, self.sample_rate)

    def __repr__(self):
        return "MagPhase({0} bins x {1} frames)".format(self.magnitude.shape[0], self.frames)


def preemphasis(buf, coeff):
    """
    First-order high-pass: y[0] = x[0], y[n] = x[n] - coeff * x[n-1].
    :rtype: AudioBuffer
    """
    if coeff == 0:
        return buf.with_samples(buf.samples.copy())
    return buf.with_samples(lfilter([1.0, -coeff], [1.0], buf.samples))


def deemphasis(buf, coeff):
    """
    Inverse of preemphasis(): y[n] = x[n] + coeff * y[n-1].
    :rtype: AudioBuffer
    """
    if coeff == 0:
        return buf.with_samples(buf.samples.copy())
    return buf.with_samples(lfilter([1.0], [1.0, -coeff], buf.samples))


def analysis_window(cfg):
    """Periodic (DFT-even) window of length nfft."""
    return get_window(cfg.window, cfg.nfft, fftbins=True)


def frame_count(n_samples, cfg):
    if n_samples < cfg.nfft:
        return 0
    return 1 + (n_samples - cfg.nfft) // cfg.hop


def frame_spans(n_samples, cfg):
    """
    The sample span of every full analysis frame.

        >>> frame_spans(1024, StftConfig())
        [Interval(0, 512), Interval(256, 768), Interval(512, 1024)]

    :rtype: list of Interval
    """
    return [Interval(t * cfg.hop, t * cfg.hop + cfg.nfft)
            for t in range(frame_count(n_samples, cfg))]


def interior_span(n_samples, cfg):
    """
    Samples at least nfft/2 away from both ends: where overlap-add
    reconstruction is fully weighted.

        >>> interior_span(1280, StftConfig())
        Interval(256, 1024)

    :rtype: Interval
    """
    half = cfg.nfft // 2
    return Interval(half, max(half, n_samples - half))


def stft(buf, cfg):
    """
    Short-time Fourier transform of buf. Frame t is the window times
    samples [t*hop, t*hop + nfft), transformed by a onesided DFT.
    :raises InputTooShortError: fewer than nfft samples
    :rtype: ComplexSpectrum
    """
    n = len(buf)
    if n < cfg.nfft:
        raise InputTooShortError(
            "stft: need at least {0} samples for one frame, got {1}".format(cfg.nfft, n))
    frames = sliding_window_view(buf.samples, cfg.nfft)[::cfg.hop]
    columns = np.fft.rfft(frames * analysis_window(cfg), axis=-1)
    return ComplexSpectrum(columns.T, cfg, buf.sample_rate)


def istft(spec, norm_floor=None):
    """
    Inverse STFT by overlap-add of inverse DFTs weighted by the synthesis
    window, normalized by the summed squared window. Output length is
    (frames - 1) * hop + nfft.

    At the two outer half-frames the summed squared window falls towards
    zero, so a spectrum that is not the STFT of any signal is amplified
    there. ``norm_floor`` caps that gain by dividing by
    ``max(norm, norm_floor)``; a floor below 0.5 leaves the interior exact.
    :param norm_floor: None for exact division wherever the norm is nonzero
    :raises ConfigError: the configuration is not 50% overlap, the floor is
    outside [0, 0.5), or the normalization vanishes inside the interior span
    :rtype: AudioBuffer
    """
    cfg = spec.config
    if not cfg.half_overlap:
        raise ConfigError(
            "istft: reconstruction requires hop = nfft/2, got nfft={0} hop={1}".format(
                cfg.nfft, cfg.hop))
    if norm_floor is not None and not 0.0 <= norm_floor < 0.5:
        raise ConfigError("istft: norm_floor must lie in [0, 0.5), got {0}".format(norm_floor))
    frames = spec.frames
    if frames == 0:
        return AudioBuffer(np.zeros(0), spec.sample_rate)
    n = (frames - 1) * cfg.hop + cfg.nfft
    window = analysis_window(cfg)
    pieces = np.fft.irfft(spec.bins.T, n=cfg.nfft, axis=-1) * window
    out = np.zeros(n)
    norm = np.zeros(n)
    wsq = window ** 2
    for piece, span in zip(pieces, frame_spans(n, cfg)):
        out[span.begin:span.end] += piece
        norm[span.begin:span.end] += wsq
    interior = interior_span(n, cfg)
    if np.any(interior.take(norm) < _OLA_FLOOR):
        raise ConfigError("istft: window overlap leaves a zero normalization in the interior")
    if norm_floor:
        norm = np.maximum(norm, norm_floor)
    nonzero = norm > _OLA_FLOOR
    out[nonzero] /= norm[nonzero]
    out[~nonzero] = 0.0
    return AudioBuffer(out, spec.sample_rate)


def split_mag_phase(spec):
    """
    Factor D into magnitude S (top bin removed) and unit phase P.
    :rtype: MagPhase
    """
    bins = spec.bins
    mag = np.abs(bins)
    phase = np.ones_like(bins)
    nonzero = mag > 0
    phase[nonzero] = bins[nonzero] / mag[nonzero]
    top = spec.config.feature_bins
    return MagPhase(mag[:top].copy(), phase, bins[top].copy(), spec.config, spec.sample_rate)


def merge_mag_phase(mp):
    """
    Rebuild D: magnitude times phase on the kept rows, dropped_bin (or
    zeros) on the top row.
    :raises AlignmentError: magnitude and phase frame counts differ
    :rtype: ComplexSpectrum
    """
    mag = np.asarray(mp.magnitude)
    if mag.shape[1] != mp.phase.shape[1]:
        raise AlignmentError(
            "merge_mag_phase: magnitude has {0} frames, phase has {1}".format(
                mag.shape[1], mp.phase.shape[1]))
    top = mp.config.feature_bins
    if mag.shape[0] != top:
        raise AlignmentError(
            "merge_mag_phase: magnitude has {0} rows, expected {1}".format(mag.shape[0], top))
    bins = np.zeros(mp.phase.shape, dtype=np.complex128)
    bins[:top] = mag * mp.phase[:top]
    if mp.dropped_bin is not None:
        if len(mp.dropped_bin) != mag.shape[1]:
            raise AlignmentError(
                "merge_mag_phase: dropped_bin has {0} frames, expected {1}".format(
                    len(mp.dropped_bin), mag.shape[1]))
        bins[top] = mp.dropped_bin
    return ComplexSpectrum(bins, mp.config, mp.sample_rate)


def snr_db(reference, estimate):
    """
    Signal-to-noise ratio of estimate against reference, in dB. An exact
    match gives inf, as does an all-zero reference with a zero error.
    :rtype: float
    """
    reference = np.asarray(reference, dtype=np.float64)
    error = np.asarray(estimate, dtype=np.float64) - reference
    noise = float(np.sum(error ** 2))
    signal = float(np.sum(reference ** 2))
    if noise == 0.0:
        return float('inf')
    if signal == 0.0:
        return float('-inf')
    return 10.0 * np.log10(signal / noise)


def extract_features(buf, stft_cfg, vad_cfg=None, rate=16000):
    """
    The shared front end: resample to rate, trim silence (when vad_cfg is
    given), pre-emphasize, STFT and split.
    :rtype: MagPhase
    """
    audio = resample(buf, rate)
    if vad_cfg is not None:
        audio = trim_silence(audio, vad_cfg)
    audio = preemphasis(audio, stft_cfg.preemphasis_coeff)
    return split_mag_phase(stft(audio, stft_cfg))


def save_spectrum(spec, path):
    """
    Write spec in the feature-cache format: magic 'VFSP', u32 version,
    u32 freq_bins, u32 frames, then interleaved little-endian float32
    (real, imag), one frame after another.
    """
    freq_bins, frames = spec.bins.shape
    payload = np.ascontiguousarray(spec.bins.T).astype('<c8').tobytes()
    with io.open(path, 'wb') as fh:
        fh.write(_CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, freq_bins, frames))
        fh.write(payload)


def load_spectrum(path, cfg, sample_rate=WORKING_RATE):
    """
    Read a feature-cache file written by save_spectrum().
    :raises FeatureCacheError: bad magic, version, bin count or size
    :rtype: ComplexSpectrum
    """
    with io.open(path, 'rb') as fh:
        raw = fh.read()
    if len(raw) < _CACHE_HEADER.size:
        raise FeatureCacheError("{0}: truncated header".format(path))
    magic, version, freq_bins, frames = _CACHE_HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC:
        raise FeatureCacheError("{0}: bad magic {1!r}".format(path, magic))
    if version != CACHE_VERSION:
        raise FeatureCacheError("{0}: unsupported version {1}".format(path, version))
    if freq_bins != cfg.freq_bins:
        raise FeatureCacheError("{0}: {1} bins, configuration expects {2}".format(
            path, freq_bins, cfg.freq_bins))
    expected = _CACHE_HEADER.size + freq_bins * frames * 8
    if len(raw) != expected:
        raise FeatureCacheError("{0}: size {1}, expected {2}".format(path, len(raw), expected))
    data = np.frombuffer(raw, dtype='<c8', offset=_CACHE_HEADER.size)
    return ComplexSpectrum(data.reshape(frames, freq_bins).T, cfg, sample_rate)
