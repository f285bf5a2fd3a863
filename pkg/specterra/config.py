#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Configuration: typed, validated config sections, the INI file layer,
named random sub-streams and the worker-count cap.

Precedence is defaults < config file < CLI flags. The run seed lives in
[run] and is the only source of randomness; every consumer draws from a
named sub-stream of it (see sub_rng()).

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
import configparser
import dataclasses
import io
import os
import typing
import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError

THREADS_ENV = 'SPECTERRA_THREADS'
WORKING_RATE = 16000

# Pitch presets (Hz) for the synthetic corpus: typical f0 of adult and
# child speaker groups.
SPEAKER_F0 = {
    'man': 120.0,
    'woman': 210.0,
    'boy': 260.0,
    'girl': 290.0,
}


def _require(cond, message, *args):
    if not cond:
        raise ConfigError(message.format(*args))


@dataclass(frozen=True)
class StftConfig:
    nfft: int = 512
    hop: int = 256
    window: str = 'hann'
    preemphasis_coeff: float = 0.97

    def __post_init__(self):
        _require(self.nfft >= 2 and self.nfft & (self.nfft - 1) == 0,
                 "nfft must be a power of two, got {0}", self.nfft)
        _require(0 < self.hop <= self.nfft,
                 "hop must lie in (0, nfft], got {0}", self.hop)
        _require(self.window in ('hann', 'hamming'),
                 "window must be 'hann' or 'hamming', got {0!r}", self.window)
        _require(0.0 <= self.preemphasis_coeff < 1.0,
                 "preemphasis_coeff must lie in [0, 1), got {0}", self.preemphasis_coeff)

    @property
    def freq_bins(self):
        """Onesided DFT size, nfft/2 + 1."""
        return self.nfft // 2 + 1

    @property
    def feature_bins(self):
        """Magnitude rows kept after dropping the top bin."""
        return self.nfft // 2

    @property
    def half_overlap(self):
        return 2 * self.hop == self.nfft


@dataclass(frozen=True)
class VadConfig:
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    threshold_db: float = -40.0
    hangover_frames: int = 3

    def __post_init__(self):
        _require(self.hop_ms > 0, "hop_ms must be positive, got {0}", self.hop_ms)
        _require(self.frame_ms >= self.hop_ms,
                 "frame_ms ({0}) must be >= hop_ms ({1})", self.frame_ms, self.hop_ms)
        _require(self.threshold_db < 0, "threshold_db must be negative, got {0}",
                 self.threshold_db)
        _require(self.hangover_frames >= 0, "hangover_frames must be >= 0, got {0}",
                 self.hangover_frames)

    def frame_samples(self, rate):
        return max(1, int(round(rate * self.frame_ms / 1000.0)))

    def hop_samples(self, rate):
        return max(1, int(round(rate * self.hop_ms / 1000.0)))


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 256
    n_layers_enc: int = 6
    n_layers_dec: int = 6
    n_heads: int = 8
    d_ff: int = 1024
    dropout: float = 0.1
    max_decode_len: int = 0
    dtype: str = 'float32'
    init_scale: float = 1.0
    ln_eps: float = 1e-6

    def __post_init__(self):
        _require(self.d_model > 0 and self.d_model % 2 == 0,
                 "d_model must be positive and even, got {0}", self.d_model)
        _require(self.n_heads > 0 and self.d_model % self.n_heads == 0,
                 "d_model ({0}) must be divisible by n_heads ({1})", self.d_model, self.n_heads)
        _require(self.n_layers_enc >= 1 and self.n_layers_dec >= 1,
                 "need at least one encoder and one decoder layer")
        _require(self.d_ff > 0, "d_ff must be positive, got {0}", self.d_ff)
        _require(0.0 <= self.dropout < 1.0, "dropout must lie in [0, 1), got {0}", self.dropout)
        _require(self.max_decode_len >= 0, "max_decode_len must be >= 0")
        _require(self.dtype in ('float32', 'float64'),
                 "dtype must be float32 or float64, got {0!r}", self.dtype)
        _require(self.init_scale > 0, "init_scale must be positive")

    @property
    def head_dim(self):
        return self.d_model // self.n_heads

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 1e-4
    decay_step: int = 4000
    decay_rate: float = 0.96
    beta1: float = 0.9
    beta2: float = 0.98
    epsilon: float = 1e-9
    batch_size: int = 8
    max_steps: int = 20000
    seed: int = 0
    checkpoint_every: int = 1000
    normalize_loss: bool = True
    staircase: bool = False
    log_every: int = 100
    eos_weight: Optional[float] = None

    def __post_init__(self):
        _require(self.lr0 > 0, "lr0 must be positive")
        _require(self.decay_step > 0, "decay_step must be positive")
        _require(0.0 < self.decay_rate <= 1.0, "decay_rate must lie in (0, 1], got {0}",
                 self.decay_rate)
        _require(0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0,
                 "betas must lie in [0, 1)")
        _require(self.epsilon > 0, "epsilon must be positive")
        _require(self.batch_size >= 1, "batch_size must be >= 1")
        _require(self.max_steps >= 0, "max_steps must be >= 0")
        _require(self.checkpoint_every >= 1, "checkpoint_every must be >= 1")
        _require(self.log_every >= 1, "log_every must be >= 1")
        _require(self.eos_weight is None or self.eos_weight > 0,
                 "eos_weight must be positive, got {0}", self.eos_weight)


@dataclass(frozen=True)
class InferConfig:
    eos_tau: Optional[float] = None
    max_len: Optional[int] = None
    decode_margin: int = 16

    def __post_init__(self):
        _require(self.eos_tau is None or self.eos_tau >= 0, "eos_tau must be >= 0")
        _require(self.max_len is None or self.max_len >= 0, "max_len must be >= 0")
        _require(self.decode_margin >= 0, "decode_margin must be >= 0")


def resolve_f0(value):
    """
    Pitch in Hz from a number or a speaker preset name.

        >>> resolve_f0('boy')
        260.0
        >>> resolve_f0('150')
        150.0
    """
    if isinstance(value, str):
        key = value.strip().lower()
        if key in SPEAKER_F0:
            return SPEAKER_F0[key]
        try:
            return float(key)
        except ValueError:
            raise ConfigError("unknown pitch preset {0!r}".format(value))
    return float(value)


@dataclass(frozen=True)
class ToyCorpusConfig:
    n_pairs: int = 4
    rate: int = WORKING_RATE
    duration_min: float = 0.25
    duration_max: float = 0.4
    f0_src: str = '150'
    f0_tgt: str = '300'
    seed: int = 0
    harmonics: int = 6

    def __post_init__(self):
        _require(self.n_pairs >= 1, "n_pairs must be >= 1")
        _require(self.rate > 0, "rate must be positive")
        _require(0 < self.duration_min <= self.duration_max,
                 "duration range must satisfy 0 < min <= max")
        _require(self.harmonics >= 1, "harmonics must be >= 1")
        nyquist = self.rate / 2.0
        for name in ('f0_src', 'f0_tgt'):
            f0 = resolve_f0(getattr(self, name))
            _require(0 < f0 < nyquist, "{0} must lie below Nyquist ({1} Hz), got {2}",
                     name, nyquist, f0)


@dataclass(frozen=True)
class PathsConfig:
    corpus_root: str = '.'
    manifest: Optional[str] = None
    cache_dir: str = 'cache'
    checkpoint_dir: str = 'checkpoints'
    checkpoint: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    """The merged view of every section, plus the run seed."""
    seed: int = 0
    sample_rate: int = WORKING_RATE
    stft: StftConfig = field(default_factory=StftConfig)
    vad: VadConfig = field(default_factory=VadConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    infer: InferConfig = field(default_factory=InferConfig)
    toy: ToyCorpusConfig = field(default_factory=ToyCorpusConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def __post_init__(self):
        _require(self.seed >= 0, "seed must be non-negative, got {0}", self.seed)
        _require(self.sample_rate > 0, "sample_rate must be positive")
        _require(self.model.d_model == self.stft.feature_bins,
                 "model.d_model ({0}) must equal stft.nfft / 2 ({1})",
                 self.model.d_model, self.stft.feature_bins)
        # The run seed drives every sub-stream.
        object.__setattr__(self, 'train', dataclasses.replace(self.train, seed=self.seed))
        object.__setattr__(self, 'toy', dataclasses.replace(self.toy, seed=self.seed))

    def to_ini(self):
        """
        The effective configuration as INI text.
        :rtype: str
        """
        parser = _new_parser()
        parser['run'] = {'seed': str(self.seed), 'sample_rate': str(self.sample_rate)}
        for section in SECTIONS:
            values = getattr(self, section)
            parser[section] = {
                f.name: _render(getattr(values, f.name))
                for f in dataclasses.fields(values)
                if f.name not in _RUN_OWNED
            }
        out = io.StringIO()
        parser.write(out)
        return out.getvalue()

    def replace(self, **sections):
        """
        Copy with whole sections or section fields replaced. Section
        updates may be given as dicts of field values.
        :rtype: RunConfig
        """
        changes = {}
        for name, value in sections.items():
            if name in SECTIONS and isinstance(value, dict):
                changes[name] = dataclasses.replace(getattr(self, name), **value)
            else:
                changes[name] = value
        return dataclasses.replace(self, **changes)


SECTIONS = ('stft', 'vad', 'model', 'train', 'infer', 'toy', 'paths')
_RUN_OWNED = frozenset(['seed'])


def _new_parser():
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    return parser


def _render(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    return repr(value) if isinstance(value, float) else str(value)


def _coerce(hint, raw, where):
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        inner = [a for a in typing.get_args(hint) if a is not type(None)][0]
        if raw.strip() == '':
            return None
        return _coerce(inner, raw, where)
    raw = raw.strip()
    try:
        if hint is bool:
            lowered = raw.lower()
            if lowered in ('1', 'true', 'yes', 'on'):
                return True
            if lowered in ('0', 'false', 'no', 'off'):
                return False
            raise ValueError(raw)
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
    except ValueError:
        raise ConfigError("{0}: cannot read {1!r} as {2}".format(where, raw, hint.__name__))
    return raw


def _section_values(cls, items, section):
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)} - _RUN_OWNED
    values = {}
    for key, raw in items.items():
        if key not in known:
            raise ConfigError("unknown key [{0}] {1}".format(section, key))
        values[key] = _coerce(hints[key], raw, '[{0}] {1}'.format(section, key))
    return values


_SECTION_TYPES = {
    'stft': StftConfig,
    'vad': VadConfig,
    'model': ModelConfig,
    'train': TrainConfig,
    'infer': InferConfig,
    'toy': ToyCorpusConfig,
    'paths': PathsConfig,
}


def parse_ini(text):
    """
    Nested {section: {key: value}} from INI text, values typed.
    :raises ConfigError: on unknown sections or keys, or bad values
    """
    parser = _new_parser()
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError("malformed config: {0}".format(e))
    result = {}
    for section in parser.sections():
        items = dict(parser.items(section))
        if section == 'run':
            run_hints = {'seed': int, 'sample_rate': int}
            for key, raw in items.items():
                if key not in run_hints:
                    raise ConfigError("unknown key [run] {0}".format(key))
                result.setdefault('run', {})[key] = _coerce(
                    run_hints[key], raw, '[run] {0}'.format(key))
        elif section in _SECTION_TYPES:
            result[section] = _section_values(_SECTION_TYPES[section], items, section)
        else:
            raise ConfigError("unknown config section [{0}]".format(section))
    return result


def load_config(path=None, overrides=None):
    """
    Build the effective RunConfig: defaults, then the INI file at path
    (if given), then overrides, a nested {section: {key: value}} dict
    where section 'run' holds seed and sample_rate.
    :rtype: RunConfig
    """
    layers = []
    if path is not None:
        try:
            with io.open(path, 'r', encoding='utf-8') as fh:
                layers.append(parse_ini(fh.read()))
        except OSError as e:
            raise ConfigError("cannot read config file {0}: {1}".format(path, e))
    if overrides:
        layers.append(overrides)

    merged = {}
    for layer in layers:
        for section, values in layer.items():
            merged.setdefault(section, {}).update(
                {k: v for k, v in values.items() if v is not None})

    run = merged.pop('run', {})
    sections = {
        name: _SECTION_TYPES[name](**merged.get(name, {}))
        for name in SECTIONS
    }
    return RunConfig(seed=run.get('seed', 0),
                     sample_rate=run.get('sample_rate', WORKING_RATE),
                     **sections)


def sub_rng(seed, name):
    """
    An independent numpy Generator for the named consumer of a run seed.

        >>> a = sub_rng(7, 'init').random()
        >>> b = sub_rng(7, 'init').random()
        >>> a == b, a == sub_rng(7, 'dropout').random()
        (True, False)
    """
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), zlib.crc32(name.encode('utf-8'))]))


def worker_count(default=4):
    """
    Worker cap from SPECTERRA_THREADS, else min(default, cpu count).
    :rtype: int
    """
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError("{0} must be an integer, got {1!r}".format(THREADS_ENV, raw))
        return max(1, value)
    return max(1, min(default, os.cpu_count() or 1))
