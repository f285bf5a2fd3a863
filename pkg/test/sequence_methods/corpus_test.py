"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Test module: Synthetic corpus and manifest ingestion

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
import os

import numpy as np
import pytest

from specterra import StftConfig, VadConfig, extract_features, read_wav
from specterra.analysis import dominant_bin
from specterra.config import ToyCorpusConfig
from specterra.errors import ManifestError
from specterra.seq_prep import (DIGIT_LABELS, ingest_corpus, make_toy_corpus, read_manifest,
                                render_digit, speaker_of)
from test.signals import write_pcm, write_tone

toy = ToyCorpusConfig(n_pairs=3)


def test_toy_corpus_deterministic():
    a = make_toy_corpus(toy)
    b = make_toy_corpus(toy)
    assert len(a) == 3
    for p, q in zip(a, b):
        assert np.array_equal(p.source_mag, q.source_mag)
        assert np.array_equal(p.target_mag, q.target_mag)


def test_toy_corpus_labels():
    pairs = make_toy_corpus(ToyCorpusConfig(n_pairs=12, duration_min=0.1, duration_max=0.1))
    assert [p.text_label for p in pairs] == list(DIGIT_LABELS) + [DIGIT_LABELS[0]]
    assert pairs[0].source_id == 'toy-150Hz'
    assert pairs[0].target_id == 'toy-300Hz'


def test_toy_corpus_pitch():
    for pair in make_toy_corpus(toy):
        assert abs(dominant_bin(pair.source_mag) - 5) <= 1
        assert abs(dominant_bin(pair.target_mag) - 10) <= 1
        assert pair.source_mag.shape[1] == 256


def test_toy_corpus_presets():
    pairs = make_toy_corpus(ToyCorpusConfig(n_pairs=1, f0_src='man', f0_tgt='girl'))
    assert pairs[0].source_id == 'toy-120Hz'
    assert pairs[0].target_id == 'toy-290Hz'


def test_render_digit():
    buf = render_digit('one', 150.0, 0.3, 16000, seed=0, pad=0.1)
    assert len(buf) == 8000
    assert np.max(np.abs(buf.samples)) == pytest.approx(0.5)
    assert not np.any(buf.samples[:1600])
    assert not np.any(buf.samples[-1600:])
    other = render_digit('two', 150.0, 0.3, 16000, seed=0, pad=0.1)
    assert not np.array_equal(buf.samples, other.samples)


def make_corpus(root, entries):
    """entries: (label, source relpath, target relpath); every file is a padded tone"""
    for label, src, tgt in entries:
        for rel, freq in ((src, 150.0), (tgt, 300.0)):
            path = os.path.join(str(root), rel)
            if not os.path.exists(path):
                os.makedirs(os.path.dirname(path), exist_ok=True)
                write_tone(path, freq, duration=0.2, pad=0.05)
    manifest = root / 'manifest.tsv'
    manifest.write_text('# label\tsource\ttarget\n\n' + ''.join(
        '{0}\t{1}\t{2}\n'.format(*e) for e in entries), encoding='utf-8')
    return str(manifest)


def test_ingest(tmp_path):
    manifest = make_corpus(tmp_path, [('one', 'man/one.wav', 'girl/one.wav'),
                                      ('two', 'man/two.wav', 'girl/two.wav')])
    report = []
    pairs = ingest_corpus(str(tmp_path), manifest, report=report, workers=2)
    assert report == []
    assert [p.text_label for p in pairs] == ['one', 'two']
    assert pairs[0].source_id == 'man'
    assert pairs[0].target_id == 'girl'

    expected = extract_features(read_wav(tmp_path / 'man' / 'one.wav'), StftConfig(), VadConfig())
    assert np.array_equal(pairs[0].source_mag, expected.magnitude.T)
    assert pairs[0].source_phase.frames == expected.frames


def test_ingest_skips_missing(tmp_path):
    manifest = make_corpus(tmp_path, [('one', 'man/one.wav', 'girl/one.wav')])
    with open(manifest, 'a') as fh:
        fh.write('two\tman/two.wav\tgirl/two.wav\n')
    report = []
    pairs = ingest_corpus(str(tmp_path), manifest, report=report)
    assert len(pairs) == 1
    assert len(report) == 1
    assert report[0].line == 4
    assert report[0].reason == 'missing file'
    assert report[0].path.endswith('two.wav')


def test_ingest_skips_unsupported(tmp_path):
    manifest = make_corpus(tmp_path, [('one', 'man/one.wav', 'girl/one.wav')])
    write_pcm(tmp_path / 'man' / 'stereo.wav', np.zeros((3200, 2), dtype=np.int16))
    with open(manifest, 'a') as fh:
        fh.write('two\tman/stereo.wav\tgirl/one.wav\n')
    report = []
    pairs = ingest_corpus(str(tmp_path), manifest, report=report)
    assert len(pairs) == 1
    assert 'mono' in report[0].reason


def test_empty_manifest(tmp_path):
    path = tmp_path / 'empty.tsv'
    path.write_text('# nothing here\n\n', encoding='utf-8')
    with pytest.raises(ManifestError):
        read_manifest(str(path))
    with pytest.raises(ManifestError):
        ingest_corpus(str(tmp_path), str(path))


def test_malformed_manifest(tmp_path):
    path = tmp_path / 'bad.tsv'
    path.write_text('one\tman/one.wav\n', encoding='utf-8')
    with pytest.raises(ManifestError):
        read_manifest(str(path))


def test_speaker_of():
    assert speaker_of('speakers/woman/one.wav') == 'woman'
    assert speaker_of('one.wav') == 'one'


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
