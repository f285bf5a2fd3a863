#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Frequency analysis of magnitudes: the time-averaged level of each
frequency bin, and how a converted utterance's profile sits between
its source and target.

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
from collections import namedtuple

import numpy as np

from .errors import ShapeError

FrequencyProfile = namedtuple('FrequencyProfile', ['mean_per_bin', 'peak_bin', 'peak_value'])


def frequency_profile(mag):
    """
    Mean magnitude of every bin over time, for (T, bins) frames-major
    magnitudes.

        >>> frequency_profile(np.array([[0.0, 2.0], [0.0, 4.0]])).peak_bin
        1

    :rtype: FrequencyProfile
    """
    mag = np.asarray(mag, dtype=np.float64)
    if mag.ndim != 2 or mag.shape[0] == 0:
        raise ShapeError("frequency_profile: expected (T >= 1, bins), got {0}".format(mag.shape))
    mean = mag.mean(axis=0)
    peak = int(np.argmax(mean))
    return FrequencyProfile(mean, peak, float(mean[peak]))


def dominant_bin(mag):
    return frequency_profile(mag).peak_bin


def bin_of_frequency(hz, nfft, rate):
    """
    Nearest STFT bin to hz.

        >>> bin_of_frequency(300.0, 512, 16000)
        10
    """
    return int(round(hz * nfft / float(rate)))


def _normalized(profile):
    total = profile.mean_per_bin.sum()
    return profile.mean_per_bin / total if total > 0 else profile.mean_per_bin


def compare_profiles(source, converted, target=None):
    """
    Peak bins and levels of each magnitude, and, with a target, the L1
    distance between sum-normalized profiles (converted to target, and
    source to target as the baseline).
    :rtype: dict
    """
    profiles = {'source': frequency_profile(source), 'converted': frequency_profile(converted)}
    if target is not None:
        profiles['target'] = frequency_profile(target)
    widths = {len(p.mean_per_bin) for p in profiles.values()}
    if len(widths) != 1:
        raise ShapeError("compare_profiles: bin counts differ: {0}".format(sorted(widths)))
    report = {}
    for name, p in profiles.items():
        report[name + '_peak_bin'] = p.peak_bin
        report[name + '_peak_value'] = p.peak_value
    if target is not None:
        t = _normalized(profiles['target'])
        report['converted_to_target_l1'] = float(np.abs(_normalized(profiles['converted']) - t).sum())
        report['source_to_target_l1'] = float(np.abs(_normalized(profiles['source']) - t).sum())
    return report
