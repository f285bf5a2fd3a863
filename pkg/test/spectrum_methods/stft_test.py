"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Test module: Pre-emphasis, STFT and inverse STFT

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

from specterra import (AudioBuffer, StftConfig, deemphasis, istft, merge_mag_phase,
                       preemphasis, split_mag_phase, stft)
from specterra.dsp_spectrum import ComplexSpectrum, frame_count, interior_span, snr_db
from specterra.errors import ConfigError, InputTooShortError
from test.signals import noise, tone

small = StftConfig(nfft=16, hop=8)


def test_preemphasis_of_constant():
    y = preemphasis(AudioBuffer(np.full(6, 0.5), 16000), 0.97).samples
    assert y[0] == pytest.approx(0.5)
    assert np.allclose(y[1:], 0.5 * (1 - 0.97))


def test_preemphasis_impulse_response():
    impulse = np.zeros(5)
    impulse[0] = 1.0
    y = preemphasis(AudioBuffer(impulse, 16000), 0.9).samples
    assert np.allclose(y, [1.0, -0.9, 0.0, 0.0, 0.0])


def test_deemphasis_impulse_is_geometric():
    impulse = np.zeros(6)
    impulse[0] = 1.0
    y = deemphasis(AudioBuffer(impulse, 16000), 0.5).samples
    assert np.allclose(y, 0.5 ** np.arange(6))


def test_emphasis_round_trip():
    buf = noise(5, 3000)
    back = deemphasis(preemphasis(buf, 0.97), 0.97)
    assert np.max(np.abs(back.samples - buf.samples)) <= 1e-6


def test_zero_coefficient_copies():
    buf = noise(6, 100)
    out = preemphasis(buf, 0.0)
    assert out == buf
    assert out.samples is not buf.samples


def test_stft_of_silence():
    spec = stft(AudioBuffer(np.zeros(1024), 16000), StftConfig())
    assert spec.bins.shape == (257, 3)
    assert not np.any(spec.bins)


def test_stft_matches_direct_dft():
    x = noise(7, 40).samples
    spec = stft(AudioBuffer(x, 16000), small)
    n = np.arange(16)
    window = 0.5 - 0.5 * np.cos(2 * np.pi * n / 16)
    assert spec.frames == frame_count(40, small) == 4
    for t in range(spec.frames):
        segment = x[t * 8:t * 8 + 16] * window
        for k in range(9):
            expected = np.sum(segment * np.exp(-2j * np.pi * k * n / 16))
            assert spec.bins[k, t] == pytest.approx(expected, abs=1e-12)


def test_stft_tone_peak_bin():
    spec = stft(tone(1000.0, 0.25), StftConfig())
    middle = np.abs(spec.bins[:, spec.frames // 2])
    assert np.argmax(middle) == 32


def test_stft_too_short():
    with pytest.raises(InputTooShortError):
        stft(AudioBuffer(np.zeros(511), 16000), StftConfig())
    assert stft(AudioBuffer(np.zeros(512), 16000), StftConfig()).frames == 1


def test_istft_length():
    spec = stft(noise(1, 2000), StftConfig())
    assert len(istft(spec)) == (spec.frames - 1) * 256 + 512


def test_istft_reconstructs_interior():
    buf = noise(2, 8000)
    rebuilt = istft(stft(buf, StftConfig()))
    span = interior_span(len(rebuilt), StftConfig())
    assert snr_db(span.take(buf.samples), span.take(rebuilt.samples)) >= 40.0


def test_istft_of_zeros():
    spec = ComplexSpectrum(np.zeros((9, 5)), small)
    out = istft(spec)
    assert len(out) == 48
    assert not np.any(out.samples)


def test_istft_is_linear():
    a = stft(noise(3, 200), small)
    b = stft(noise(4, 200), small)
    mixed = istft(ComplexSpectrum(2.0 * a.bins - 0.5 * b.bins, small))
    expected = 2.0 * istft(a).samples - 0.5 * istft(b).samples
    assert np.allclose(mixed.samples, expected, atol=1e-12)


def test_istft_needs_half_overlap():
    with pytest.raises(ConfigError):
        istft(ComplexSpectrum(np.zeros((9, 3)), StftConfig(nfft=16, hop=4)))


def constant_pieces(frames, cfg):
    """A spectrum whose every frame inverts to ones before windowing."""
    bins = np.zeros((cfg.freq_bins, frames), dtype=np.complex128)
    bins[0] = cfg.nfft
    return ComplexSpectrum(bins, cfg)


def test_istft_exact_by_default():
    buf = noise(5, 2000)
    spec = stft(buf, StftConfig())
    assert np.array_equal(istft(spec).samples, istft(spec, None).samples)
    floored = istft(spec, 0.1).samples
    span = interior_span(len(floored), StftConfig())
    assert np.allclose(span.take(floored), span.take(istft(spec).samples), rtol=0, atol=1e-12)


def test_istft_norm_floor_bounds_the_edges():
    cfg = StftConfig()
    spec = constant_pieces(6, cfg)
    exact = istft(spec).samples
    floored = istft(spec, 0.1).samples
    # One window per edge sample: w / w**2 exactly, w / max(w**2, 0.1) floored.
    assert np.max(np.abs(exact)) > 1000.0
    assert np.max(np.abs(floored)) <= 1.0 / np.sqrt(0.1) + 1e-9
    span = interior_span(len(exact), cfg)
    assert np.allclose(span.take(floored), span.take(exact), rtol=0, atol=1e-12)


def test_istft_norm_floor_range():
    spec = constant_pieces(3, small)
    for bad in (-0.1, 0.5, 1.0):
        with pytest.raises(ConfigError):
            istft(spec, bad)


def test_full_chain_keeps_the_signal():
    cfg = StftConfig()
    buf = tone(440.0, 0.5)
    mp = split_mag_phase(stft(preemphasis(buf, 0.97), cfg))
    assert mp.magnitude.shape == (256, mp.frames)
    rebuilt = deemphasis(istft(merge_mag_phase(mp)), 0.97)
    span = interior_span(len(rebuilt), cfg)
    assert snr_db(span.take(buf.samples), span.take(rebuilt.samples)) >= 40.0


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
