"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Test module: Feature cache files and the shared front end

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

from specterra import StftConfig, VadConfig, extract_features, preemphasis, split_mag_phase, stft
from specterra.dsp_spectrum import CACHE_MAGIC, load_spectrum, save_spectrum
from specterra.errors import FeatureCacheError
from specterra.vad import trim_silence
from test.signals import noise, padded, tone

cfg = StftConfig(nfft=16, hop=8)


def test_save_load(tmp_path):
    spec = stft(noise(1, 200), cfg)
    save_spectrum(spec, tmp_path / 'a.vfsp')
    back = load_spectrum(tmp_path / 'a.vfsp', cfg)
    assert back.bins.shape == spec.bins.shape
    assert np.array_equal(back.bins, spec.bins.astype(np.complex64))


def test_file_layout(tmp_path):
    spec = stft(noise(2, 40), cfg)
    save_spectrum(spec, tmp_path / 'b.vfsp')
    raw = (tmp_path / 'b.vfsp').read_bytes()
    assert raw[:4] == CACHE_MAGIC
    assert len(raw) == 16 + 9 * 4 * 8


def test_bad_magic(tmp_path):
    save_spectrum(stft(noise(3, 40), cfg), tmp_path / 'c.vfsp')
    raw = bytearray((tmp_path / 'c.vfsp').read_bytes())
    raw[:4] = b'RIFF'
    (tmp_path / 'c.vfsp').write_bytes(bytes(raw))
    with pytest.raises(FeatureCacheError):
        load_spectrum(tmp_path / 'c.vfsp', cfg)


def test_truncated(tmp_path):
    save_spectrum(stft(noise(4, 40), cfg), tmp_path / 'd.vfsp')
    raw = (tmp_path / 'd.vfsp').read_bytes()
    (tmp_path / 'd.vfsp').write_bytes(raw[:-3])
    with pytest.raises(FeatureCacheError):
        load_spectrum(tmp_path / 'd.vfsp', cfg)
    (tmp_path / 'd.vfsp').write_bytes(raw[:10])
    with pytest.raises(FeatureCacheError):
        load_spectrum(tmp_path / 'd.vfsp', cfg)


def test_wrong_bin_count(tmp_path):
    save_spectrum(stft(noise(5, 40), cfg), tmp_path / 'e.vfsp')
    with pytest.raises(FeatureCacheError):
        load_spectrum(tmp_path / 'e.vfsp', StftConfig(nfft=32, hop=16))


def test_extract_features_is_the_manual_chain():
    buf = padded(tone(440.0, 0.3), 0.1)
    vad = VadConfig()
    manual = split_mag_phase(stft(preemphasis(trim_silence(buf, vad), 0.97), StftConfig()))
    features = extract_features(buf, StftConfig(), vad)
    assert np.array_equal(features.magnitude, manual.magnitude)
    assert np.array_equal(features.phase, manual.phase)
    assert features.frames < split_mag_phase(stft(buf, StftConfig())).frames


def test_extract_features_resamples():
    buf = tone(440.0, 0.5, rate=8000)
    features = extract_features(buf, StftConfig(), None, 16000)
    assert features.sample_rate == 16000
    assert features.frames == 1 + (8000 - 512) // 256


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
