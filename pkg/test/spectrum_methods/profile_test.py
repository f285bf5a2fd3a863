"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Test module: Frequency profiles

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

from specterra import StftConfig, extract_features
from specterra.analysis import bin_of_frequency, compare_profiles, dominant_bin, frequency_profile
from specterra.errors import ShapeError
from test.signals import tone


def test_profile_of_known_frames():
    profile = frequency_profile(np.array([[1.0, 0.0, 3.0], [3.0, 0.0, 1.0]]))
    assert profile.mean_per_bin.tolist() == [2.0, 0.0, 2.0]
    assert profile.peak_bin == 0
    assert profile.peak_value == 2.0


def test_tone_peaks_at_its_bin():
    for freq in (150.0, 300.0, 1000.0):
        mag = extract_features(tone(freq, 0.3), StftConfig(), None).magnitude.T
        assert abs(dominant_bin(mag) - bin_of_frequency(freq, 512, 16000)) <= 1


def test_bin_of_frequency():
    assert bin_of_frequency(150.0, 512, 16000) == 5
    assert bin_of_frequency(1000.0, 512, 16000) == 32
    assert bin_of_frequency(300.0, 128, 16000) == 2


def test_compare_profiles():
    low = np.zeros((3, 4))
    low[:, 1] = 1.0
    high = np.zeros((5, 4))
    high[:, 3] = 2.0
    report = compare_profiles(low, high, high)
    assert report['source_peak_bin'] == 1
    assert report['converted_peak_bin'] == 3
    assert report['converted_peak_value'] == 2.0
    assert report['converted_to_target_l1'] == 0.0
    assert report['source_to_target_l1'] == 2.0
    assert 'target_peak_bin' not in compare_profiles(low, high)


def test_profile_errors():
    with pytest.raises(ShapeError):
        frequency_profile(np.zeros((0, 4)))
    with pytest.raises(ShapeError):
        frequency_profile(np.zeros(4))
    with pytest.raises(ShapeError):
        compare_profiles(np.ones((2, 4)), np.ones((2, 5)))


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
