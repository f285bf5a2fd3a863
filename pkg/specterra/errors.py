#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Exception hierarchy. Every error raised on purpose by specterra derives
from SpecterraError and from the builtin it refines, so callers may
catch either.

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


class SpecterraError(Exception):
    """Root of all specterra errors."""


class WavFormatError(SpecterraError, ValueError):
    """The file is not a readable RIFF/WAVE file."""


class UnsupportedFormatError(WavFormatError):
    """Readable WAV, but not 16-bit PCM mono."""


class WavWriteError(SpecterraError, OSError):
    """Writing a WAV file failed."""


class InputTooShortError(SpecterraError, ValueError):
    """Fewer samples than one analysis frame."""


class ConfigError(SpecterraError, ValueError):
    """A configuration value violates its invariants."""


class AlignmentError(SpecterraError, ValueError):
    """Magnitude and phase frame counts disagree."""


class ShapeError(SpecterraError, ValueError):
    """Array or tensor shapes are incompatible."""


class NumericError(SpecterraError, ArithmeticError):
    """A NaN or infinity appeared in values or gradients."""


class CheckpointError(SpecterraError, ValueError):
    """A checkpoint file is malformed or corrupt."""


class FeatureCacheError(SpecterraError, ValueError):
    """A feature-cache file is malformed."""


class ManifestError(SpecterraError, ValueError):
    """A corpus manifest is empty or malformed."""


class EmptyAudioError(SpecterraError, ValueError):
    """Nothing is left to reconstruct."""


class StageError(SpecterraError):
    """
    A stage of an end-to-end conversion failed. The original exception
    is chained as __cause__.
    """
    def __init__(self, stage, cause):
        super(StageError, self).__init__(
            "conversion failed at stage '{0}': {1}".format(stage, cause))
        self.stage = stage
        self.cause = cause
