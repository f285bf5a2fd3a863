"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Test module: Waveform reconstruction from predicted magnitudes

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

from specterra import StftConfig, extract_features, reconstruct
from specterra.dsp_spectrum import MagPhase, interior_span, istft, merge_mag_phase, snr_db
from specterra.errors import EmptyAudioError
from specterra.infer_convert import RECONSTRUCT_NORM_FLOOR
from test.signals import noise, tone

cfg = StftConfig()


def features(buf):
    return extract_features(buf, cfg, None)


def without_top_bin(mp):
    return MagPhase(mp.magnitude, mp.phase, None, mp.config, mp.sample_rate)


def test_identity_conversion():
    buf = tone(440.0, 0.5)
    source = features(buf)
    out = reconstruct(source.magnitude.T, source)
    span = interior_span(len(out), cfg)
    assert snr_db(span.take(buf.samples), span.take(out.samples)) >= 40.0


def test_zero_magnitudes_are_silence():
    source = without_top_bin(features(noise(0, 4000)))
    out = reconstruct(np.zeros((source.frames, 256)), source)
    assert len(out) > 0
    assert not np.any(out.samples)


def test_linear_in_magnitude():
    source = without_top_bin(features(noise(1, 4000)))
    rng = np.random.default_rng(2)
    a, b = rng.random((source.frames, 256)), rng.random((source.frames, 256))
    mixed = reconstruct(2.0 * a + 0.5 * b, source).samples
    expected = 2.0 * reconstruct(a, source).samples + 0.5 * reconstruct(b, source).samples
    assert np.allclose(mixed, expected, atol=1e-9)


def test_negative_magnitudes_clamped():
    source = without_top_bin(features(noise(3, 4000)))
    negative = -np.random.default_rng(4).random((source.frames, 256))
    out = reconstruct(negative, source)
    assert not np.any(out.samples)


def test_shorter_side_wins():
    source = features(tone(300.0, 0.5))
    n = source.frames
    assert len(reconstruct(source.magnitude.T[:5], source)) == 4 * 256 + 512
    longer = np.vstack([source.magnitude.T, np.ones((7, 256))])
    assert len(reconstruct(longer, source)) == (n - 1) * 256 + 512


def test_nothing_to_reconstruct():
    source = features(tone(300.0, 0.2))
    with pytest.raises(EmptyAudioError):
        reconstruct(np.zeros((0, 256)), source)


def test_inconsistent_magnitudes_stay_bounded():
    source = features(noise(5, 4000))
    ones = np.ones((source.frames, 256))
    merged = merge_mag_phase(MagPhase(ones.T, source.phase, source.dropped_bin, cfg))
    peak = np.max(np.abs(np.fft.irfft(merged.bins.T, n=512, axis=-1)))
    out = reconstruct(ones, source).samples
    # Floored overlap-add gains at most 1/sqrt(0.1); de-emphasis at most 1/0.03.
    assert np.max(np.abs(out)) <= peak / np.sqrt(RECONSTRUCT_NORM_FLOOR) / 0.03
    exact = istft(merged).samples
    assert np.max(np.abs(exact)) > np.max(np.abs(istft(merged, RECONSTRUCT_NORM_FLOOR).samples))


def test_rate_follows_source():
    source = features(tone(300.0, 0.2))
    assert reconstruct(source.magnitude.T, source).sample_rate == 16000


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
