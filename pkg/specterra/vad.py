#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Voice activity: energy-threshold trimming of leading and trailing
silence. A frame is voiced when its RMS, in dB relative to the loudest
frame, reaches the threshold. Interior pauses are kept.

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

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .interval import Interval

logger = logging.getLogger(__name__)


def frame_rms(samples, frame, hop):
    """
    RMS of each frame of length frame, taken every hop samples. A signal
    shorter than one frame is a single (short) frame.
    :rtype: numpy.ndarray
    """
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) <= frame:
        return np.array([np.sqrt(np.mean(samples ** 2))])
    frames = sliding_window_view(samples, frame)[::hop]
    return np.sqrt(np.mean(frames ** 2, axis=-1))


def frame_levels_db(samples, frame, hop):
    """
    Per-frame RMS in dB relative to the loudest frame (0 dB). Silent
    frames are -inf; an all-silent signal is all -inf.
    :rtype: numpy.ndarray
    """
    rms = frame_rms(samples, frame, hop)
    peak = rms.max()
    levels = np.full(rms.shape, -np.inf)
    if peak <= 0:
        return levels
    voiced = rms > 0
    levels[voiced] = 20.0 * np.log10(rms[voiced] / peak)
    return levels


def voiced_span(buf, cfg):
    """
    The span trim_silence() keeps: from the start of the first voiced
    frame to the end of the last, widened by hangover_frames hops on each
    side. None when no frame is voiced.
    :rtype: Interval or None
    """
    n = len(buf)
    if n == 0:
        return None
    frame = cfg.frame_samples(buf.sample_rate)
    hop = cfg.hop_samples(buf.sample_rate)
    levels = frame_levels_db(buf.samples, frame, hop)
    voiced = np.flatnonzero(levels >= cfg.threshold_db)
    if len(voiced) == 0:
        return None
    first, last = int(voiced[0]), int(voiced[-1])
    span = Interval(first * hop, min(n, last * hop + frame), 'voiced')
    return span.widen(cfg.hangover_frames * hop, 0, n)


def trim_silence(buf, cfg):
    """
    Drop leading and trailing silence. Returns buf unchanged when no frame
    passes the threshold.
    :rtype: AudioBuffer
    """
    span = voiced_span(buf, cfg)
    if span is None:
        logger.debug("no voiced frame in %r; left untrimmed", buf)
        return buf
    logger.debug("voiced span %r of %d samples", span, len(buf))
    return buf.with_samples(span.take(buf.samples))
