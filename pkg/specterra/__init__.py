#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.
A transformer maps source magnitudes to target magnitudes; the source
phase turns them back into a waveform.

Root package.

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
from .audio_io import AudioBuffer, read_wav, resample, write_wav
from .config import (InferConfig, ModelConfig, RunConfig, StftConfig, TrainConfig,
                     VadConfig, load_config)
from .dsp_spectrum import (ComplexSpectrum, MagPhase, deemphasis, extract_features, istft,
                           merge_mag_phase, preemphasis, split_mag_phase, stft)
from .errors import SpecterraError
from .infer_convert import ConversionResult, convert_file, greedy_decode, reconstruct
from .interval import Interval
from .seq_prep import (PaddedBatch, SpecialTokens, UtterancePair, build_batch,
                       make_special_tokens)
from .train import loss_final, loss_l1, loss_mse, lr_at, train_loop
from .transformer_model import ModelState, load_checkpoint, save_checkpoint
from .vad import trim_silence
