"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Test module: Resampling

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

from specterra import AudioBuffer, resample
from specterra.audio_io import resampled_length
from test.signals import peak_frequency, tone


def test_same_rate_is_a_copy():
    buf = tone(440.0, 0.1)
    out = resample(buf, 16000)
    assert out == buf
    assert out.samples is not buf.samples


def test_output_length():
    buf = AudioBuffer(np.zeros(8000), 22050)
    assert resampled_length(8000, 22050, 16000) == 5805
    assert len(resample(buf, 16000)) == 5805
    assert len(resample(AudioBuffer(np.zeros(16000), 16000), 8000)) == 8000


def test_empty_buffer():
    out = resample(AudioBuffer(np.zeros(0), 44100), 16000)
    assert len(out) == 0
    assert out.sample_rate == 16000


def test_bad_rate():
    with pytest.raises(ValueError):
        resample(tone(440.0, 0.1), 0)


def test_tone_keeps_its_frequency():
    out = resample(tone(1000.0, 1.0, rate=20000), 16000)
    assert out.sample_rate == 16000
    assert len(out) == 16000
    assert abs(peak_frequency(out.samples, 16000) - 1000.0) <= 1.0


def test_upsampling_keeps_frequency():
    out = resample(tone(1000.0, 1.0, rate=8000), 16000)
    assert abs(peak_frequency(out.samples, 16000) - 1000.0) <= 1.0


def test_dc_level_preserved():
    out = resample(AudioBuffer(np.full(20000, 0.5), 20000), 16000)
    interior = out.samples[100:-100]
    assert np.max(np.abs(interior - 0.5)) < 1e-3


def test_content_above_new_nyquist_is_removed():
    # 7.5 kHz lies above the 5 kHz Nyquist of the output
    out = resample(tone(7500.0, 1.0, rate=20000), 10000)
    assert np.sqrt(np.mean(out.samples[100:-100] ** 2)) < 0.01


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
