#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Command-line interface: prep, train, convert, gradcheck, roundtrip and
analyze. Every command logs its effective configuration first and exits
0 only when its postcondition holds.

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
import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from .analysis import compare_profiles
from .audio_io import read_wav, resample
from .config import load_config
from .dsp_spectrum import (deemphasis, extract_features, interior_span, istft, load_spectrum,
                           merge_mag_phase, preemphasis, save_spectrum, snr_db,
                           split_mag_phase, stft)
from .errors import ConfigError, SpecterraError
from .gradcheck import run_gradcheck
from .infer_convert import convert_file
from .seq_prep import UtterancePair, corpus_stats, ingest_corpus, make_toy_corpus
from .train import train_loop
from .transformer_model import load_checkpoint

logger = logging.getLogger(__name__)

INDEX_FILE = 'index.tsv'
SUMMARY_FILE = 'summary.json'
METRICS_FILE = 'metrics.csv'
ROUNDTRIP_SNR_DB = 40.0
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def _overrides(args):
    """CLI flags as a nested config layer; unset flags are None."""
    def get(name):
        return getattr(args, name, None)
    return {
        'run': {'seed': get('seed')},
        'train': {'max_steps': get('max_steps')},
        'paths': {
            'manifest': get('manifest'),
            'cache_dir': get('cache_dir'),
            'checkpoint': get('checkpoint'),
            'corpus_root': get('corpus_root'),
        },
    }


def _require_file(path, what):
    if not path:
        raise ConfigError("no {0} given".format(what))
    if not os.path.isfile(path):
        raise ConfigError("{0} {1} does not exist".format(what, path))


# prep

def _cache_names(index):
    return '{0:05d}.src.vfsp'.format(index), '{0:05d}.tgt.vfsp'.format(index)


def write_cache(pairs, cache_dir, skipped=()):
    """
    Feature caches for pairs plus index.tsv and summary.json.
    :rtype: dict (the summary)
    """
    os.makedirs(cache_dir, exist_ok=True)
    with io.open(os.path.join(cache_dir, INDEX_FILE), 'w', encoding='utf-8', newline='') as fh:
        writer = csv.writer(fh, delimiter='\t', lineterminator='\n')
        for i, pair in enumerate(pairs):
            src_name, tgt_name = _cache_names(i)
            save_spectrum(merge_mag_phase(pair.source_phase), os.path.join(cache_dir, src_name))
            save_spectrum(merge_mag_phase(pair.target_phase), os.path.join(cache_dir, tgt_name))
            writer.writerow([pair.text_label, pair.source_id, pair.target_id, src_name, tgt_name])
    stats = corpus_stats(pairs)
    summary = {
        'pairs_processed': len(pairs),
        'pairs_skipped': len(skipped),
        'max_src_len': stats.max_src_len,
        'max_tgt_len': stats.max_tgt_len,
        'skipped': [{'line': s.line, 'path': s.path, 'reason': s.reason} for s in skipped],
    }
    with io.open(os.path.join(cache_dir, SUMMARY_FILE), 'w', encoding='utf-8') as fh:
        fh.write(json.dumps(summary, indent=2, sort_keys=True) + '\n')
    return summary


def read_cache(cache_dir, cfg):
    """
    Pairs back from a cache written by write_cache().
    :rtype: list of UtterancePair
    """
    index = os.path.join(cache_dir, INDEX_FILE)
    _require_file(index, 'cache index')
    pairs = []
    with io.open(index, 'r', encoding='utf-8', newline='') as fh:
        for row in csv.reader(fh, delimiter='\t'):
            if len(row) != 5:
                raise ConfigError("{0}: malformed row {1!r}".format(index, row))
            label, source_id, target_id, src_name, tgt_name = row
            source = split_mag_phase(load_spectrum(os.path.join(cache_dir, src_name), cfg.stft,
                                                   cfg.sample_rate))
            target = split_mag_phase(load_spectrum(os.path.join(cache_dir, tgt_name), cfg.stft,
                                                   cfg.sample_rate))
            pairs.append(UtterancePair.from_features(source_id, target_id, label, source, target))
    return pairs


def cmd_prep(args, cfg):
    skipped = []
    if args.toy:
        pairs = make_toy_corpus(cfg.toy, cfg.stft, cfg.vad)
    else:
        _require_file(cfg.paths.manifest, 'manifest')
        pairs = ingest_corpus(cfg.paths.corpus_root, cfg.paths.manifest, cfg.stft, cfg.vad,
                              cfg.sample_rate, report=skipped)
    if not pairs:
        raise ConfigError("no usable pairs; nothing cached")
    summary = write_cache(pairs, cfg.paths.cache_dir, skipped)
    logger.info("cached %d pairs (%d skipped) in %s", summary['pairs_processed'],
                summary['pairs_skipped'], cfg.paths.cache_dir)
    return 0


def cmd_train(args, cfg):
    pairs = read_cache(cfg.paths.cache_dir, cfg)
    out = args.out or cfg.paths.checkpoint_dir
    state = None
    if cfg.paths.checkpoint:
        _require_file(cfg.paths.checkpoint, 'checkpoint')
        state = load_checkpoint(cfg.paths.checkpoint)
        logger.info("resuming from %s at step %d", cfg.paths.checkpoint, state.step)
    os.makedirs(out, exist_ok=True)
    train_loop(pairs, cfg.model, cfg.train, checkpoint_dir=out,
               metrics_path=os.path.join(out, METRICS_FILE), state=state)
    return 0


def cmd_convert(args, cfg):
    _require_file(cfg.paths.checkpoint, 'checkpoint')
    _require_file(args.input, 'input WAV')
    if not args.out:
        raise ConfigError("convert needs --out")
    state = load_checkpoint(cfg.paths.checkpoint)
    if state.config.d_model != cfg.stft.feature_bins:
        raise ConfigError("checkpoint d_model {0} does not fit stft.nfft {1}".format(
            state.config.d_model, cfg.stft.nfft))
    log_path = args.log or os.path.splitext(args.out)[0] + '.jsonl'
    result = convert_file(args.input, args.out, state, cfg, log_path)
    print(json.dumps(result.log_record(args.input), sort_keys=True))
    return 0


def cmd_gradcheck(args, cfg):
    report = run_gradcheck(seed=cfg.seed)
    for line in report.lines():
        print(line)
    return 0 if report.passed else 1


def roundtrip_report(buf, cfg):
    """
    Pre-emphasis, STFT, split, merge, inverse STFT and de-emphasis of buf
    at the working rate, scored on the interior span.
    :rtype: dict
    """
    audio = resample(buf, cfg.sample_rate)
    mp = split_mag_phase(stft(preemphasis(audio, cfg.stft.preemphasis_coeff), cfg.stft))
    rebuilt = deemphasis(istft(merge_mag_phase(mp)), cfg.stft.preemphasis_coeff)
    span = interior_span(len(rebuilt), cfg.stft)
    snr = snr_db(span.take(audio.samples), span.take(rebuilt.samples))
    return {
        'samples': len(audio),
        'frames': mp.frames,
        'interior_samples': span.length(),
        'snr_db': snr if np.isfinite(snr) else str(snr),
        'passed': bool(snr >= ROUNDTRIP_SNR_DB),
    }


def cmd_roundtrip(args, cfg):
    _require_file(args.input, 'input WAV')
    report = roundtrip_report(read_wav(args.input), cfg)
    report['input'] = args.input
    print(json.dumps(report, sort_keys=True))
    return 0 if report['passed'] else 1


def cmd_analyze(args, cfg):
    paths = [args.source, args.converted] + ([args.target] if args.target else [])
    for path in paths:
        _require_file(path, 'input WAV')
    mags = [extract_features(read_wav(p), cfg.stft, cfg.vad, cfg.sample_rate).magnitude.T
            for p in paths]
    print(json.dumps(compare_profiles(*mags), indent=2, sort_keys=True))
    return 0


COMMANDS = {
    'prep': cmd_prep,
    'train': cmd_train,
    'convert': cmd_convert,
    'gradcheck': cmd_gradcheck,
    'roundtrip': cmd_roundtrip,
    'analyze': cmd_analyze,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', metavar='PATH', help='INI config file')
    common.add_argument('--seed', type=int, metavar='N', help='run seed')
    noise = common.add_mutually_exclusive_group()
    noise.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    noise.add_argument('--quiet', action='store_true', help='warnings and errors only')

    parser = argparse.ArgumentParser(
        prog='specterra', description='Vocoder-free voice conversion on STFT magnitudes.')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('prep', parents=[common], help='extract and cache corpus features')
    p.add_argument('--manifest', metavar='PATH')
    p.add_argument('--corpus-root', metavar='PATH')
    p.add_argument('--cache-dir', metavar='PATH')
    p.add_argument('--toy', action='store_true', help='cache the synthetic corpus instead')

    p = sub.add_parser('train', parents=[common], help='train on a feature cache')
    p.add_argument('--cache-dir', metavar='PATH')
    p.add_argument('--checkpoint', metavar='PATH', help='resume from this checkpoint')
    p.add_argument('--max-steps', type=int, metavar='N')
    p.add_argument('--out', metavar='PATH', help='checkpoint and metrics directory')

    p = sub.add_parser('convert', parents=[common], help='convert one WAV file')
    p.add_argument('--checkpoint', metavar='PATH')
    p.add_argument('--in', dest='input', metavar='PATH')
    p.add_argument('--out', metavar='PATH')
    p.add_argument('--log', metavar='PATH', help='JSON-lines log (default: beside --out)')

    sub.add_parser('gradcheck', parents=[common], help='finite-difference gradient checks')

    p = sub.add_parser('roundtrip', parents=[common], help='STFT round-trip SNR of a WAV')
    p.add_argument('--in', dest='input', metavar='PATH')

    p = sub.add_parser('analyze', parents=[common], help='compare frequency profiles')
    p.add_argument('--source', metavar='PATH', required=True)
    p.add_argument('--converted', metavar='PATH', required=True)
    p.add_argument('--target', metavar='PATH')
    return parser


def configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args)
    try:
        cfg = load_config(args.config, _overrides(args))
        logger.info("effective configuration:\n%s", cfg.to_ini())
        return COMMANDS[args.command](args, cfg)
    except (SpecterraError, OSError) as e:
        sys.stderr.write("specterra {0}: error: {1}\n".format(args.command, e))
        return 1


if __name__ == '__main__':
    sys.exit(main())
