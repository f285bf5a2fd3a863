"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Test module: AudioBuffer and WAV reading and writing

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
import soundfile as sf

from specterra import AudioBuffer, read_wav, write_wav
from specterra.audio_io import PCM_MAX, quantize
from specterra.errors import UnsupportedFormatError, WavFormatError, WavWriteError
from test.signals import noise, write_pcm


def test_buffer_invariants():
    with pytest.raises(ValueError):
        AudioBuffer(np.zeros((2, 3)), 16000)
    with pytest.raises(ValueError):
        AudioBuffer([0.0, np.nan], 16000)
    with pytest.raises(ValueError):
        AudioBuffer([0.0], 0)
    buf = AudioBuffer(np.zeros(8000), 16000)
    assert buf.duration == 0.5
    assert len(buf) == 8000


def test_read_full_scale_sample(tmp_path):
    path = write_pcm(tmp_path / 'one.wav', np.array([32767], dtype=np.int16))
    buf = read_wav(path)
    assert buf.sample_rate == 16000
    assert buf.samples.tolist() == [32767 / 32768.0]


def test_read_negative_full_scale(tmp_path):
    path = write_pcm(tmp_path / 'min.wav', np.array([-32768, 0], dtype=np.int16))
    assert read_wav(path).samples.tolist() == [-1.0, 0.0]


def test_read_silence(tmp_path):
    path = write_pcm(tmp_path / 'zeros.wav', np.zeros(160, dtype=np.int16), rate=8000)
    buf = read_wav(path)
    assert buf.sample_rate == 8000
    assert np.array_equal(buf.samples, np.zeros(160))


def test_read_write_read_identical(tmp_path):
    rng = np.random.default_rng(3)
    pcm = rng.integers(-32768, 32768, size=1000).astype(np.int16)
    first = read_wav(write_pcm(tmp_path / 'a.wav', pcm, rate=22050))
    write_wav(first, tmp_path / 'b.wav')
    second = read_wav(tmp_path / 'b.wav')
    assert second == first
    assert np.array_equal(sf.read(str(tmp_path / 'b.wav'), dtype='int16')[0], pcm)


def test_write_zeros(tmp_path):
    write_wav(AudioBuffer([0.0, 0.0], 16000), tmp_path / 'z.wav')
    data, rate = sf.read(str(tmp_path / 'z.wav'), dtype='int16')
    assert rate == 16000
    assert data.tolist() == [0, 0]
    assert sf.info(str(tmp_path / 'z.wav')).subtype == 'PCM_16'


def test_write_clamps(tmp_path):
    write_wav(AudioBuffer([2.0, -2.0, 1.0], 16000), tmp_path / 'c.wav')
    data, _ = sf.read(str(tmp_path / 'c.wav'), dtype='int16')
    assert data.tolist() == [32767, -32768, 32767]


def test_quantization_error_bound():
    buf = noise(11, 4000, amp=1.0)
    clamped = np.clip(buf.samples, -1.0, PCM_MAX)
    error = np.abs(quantize(buf.samples) / 32768.0 - clamped)
    assert error.max() <= 2.0 ** -15


def test_stereo_unsupported(tmp_path):
    path = write_pcm(tmp_path / 'stereo.wav', np.zeros((100, 2), dtype=np.int16))
    with pytest.raises(UnsupportedFormatError):
        read_wav(path)


def test_24_bit_unsupported(tmp_path):
    path = write_pcm(tmp_path / 'deep.wav', np.zeros(100), subtype='PCM_24')
    with pytest.raises(UnsupportedFormatError):
        read_wav(path)


def test_garbage_is_not_wav(tmp_path):
    path = tmp_path / 'junk.wav'
    path.write_bytes(b'this is not a RIFF file at all' * 4)
    with pytest.raises(WavFormatError):
        read_wav(path)


def test_write_to_missing_directory(tmp_path):
    with pytest.raises(WavWriteError):
        write_wav(AudioBuffer([0.1], 16000), tmp_path / 'nowhere' / 'x.wav')


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
