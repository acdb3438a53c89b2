# Copyright 2026 The SceneGrammar Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Command line pipeline: corpus -> graph -> grammar -> sequences -> model.

Usage: scenegrammar <command> [--flags]

Commands: discover, induce, parse, train, sample, interpolate, eval, render,
synthesize. Exit codes are 0 on success, 2 on invalid input or model errors
and 3 on I/O errors.
"""

import os
import sys
from typing import Dict, List, Optional, Sequence

from absl import app
from absl import flags
from absl import logging
from clu import metric_writers
import numpy as onp
import tensorflow as tf
from tensorflow.io import gfile

from scenegrammar.discovery import graph as graph_lib
from scenegrammar.discovery import structure
from scenegrammar.evaluation import metrics
from scenegrammar.grammar import base as grammar_lib
from scenegrammar.grammar import codec
from scenegrammar.grammar import induction
from scenegrammar.io import json as json_io
from scenegrammar.io import model as model_io
from scenegrammar.io import svg
from scenegrammar.scene import base as scene_lib
from scenegrammar.scene import corpus as corpus_lib
from scenegrammar.scene import synthetic
from scenegrammar.training import vae

FLAGS = flags.FLAGS

COMMANDS = ('discover', 'induce', 'parse', 'train', 'sample', 'interpolate',
            'eval', 'render', 'synthesize')
STAGES = {'discover': 0, 'induce': 1, 'parse': 2, 'train': 3, 'sample': 4,
          'interpolate': 5, 'synthesize': 6}
SINGLE_THREAD_XLA_FLAG = '--xla_cpu_multi_thread_eigen=false'

flags.DEFINE_string('config', None,
                    'File of `key = value` lines overriding flag defaults.')
flags.DEFINE_integer('seed', 0, 'Random seed, split per pipeline stage.')
flags.DEFINE_integer('threads', 0,
                     'CPUs the process may run on; 1 also turns off Eigen '
                     'threading in XLA; 0 leaves the default.')
flags.DEFINE_string('output', None, 'Output file.')
flags.DEFINE_string('logdir', None,
                    'Directory for training metrics; logs only when unset.')
flags.DEFINE_string('report', None, 'Optional JSON report file.')
# Inputs.
flags.DEFINE_string('corpus', None, 'Scene corpus (JSON lines).')
flags.DEFINE_string('graph', None, 'Causal graph file.')
flags.DEFINE_string('prior_graph', None, 'Prior directed edges to apply first.')
flags.DEFINE_string('grammar', None, 'Grammar file.')
flags.DEFINE_string('sequences', None, 'Rule sequence dump.')
flags.DEFINE_string('checkpoint', None, 'Model checkpoint.')
flags.DEFINE_string('pred', None, 'Predicted scenes for eval.')
flags.DEFINE_string('gt', None, 'Ground-truth scenes for eval.')
flags.DEFINE_string('synonyms', None, 'Category synonym file.')
flags.DEFINE_string('vocabulary', None,
                    'Where to write the category vocabulary of the loaded '
                    'corpus.')
flags.DEFINE_integer('min_count', corpus_lib.DEFAULT_MIN_COUNT,
                     'Categories with fewer instances are dropped.')
flags.DEFINE_integer('max_objects', scene_lib.DEFAULT_MAX_OBJECTS,
                     'Scenes with more objects are skipped.')
# Discovery.
flags.DEFINE_float('tau', structure.DEFAULT_TAU,
                   'Independence-test significance level.')
flags.DEFINE_float('support_tol', structure.DEFAULT_SUPPORT_TOL,
                   'Support contact tolerance in meters.')
flags.DEFINE_float('enclose_margin', structure.DEFAULT_ENCLOSE_MARGIN,
                   'Enclosure margin in meters.')
flags.DEFINE_float('geometric_ratio', structure.DEFAULT_RATIO,
                   'Least co-occurrence fraction for geometric edges.')
flags.DEFINE_bool('yates', False, 'Apply the Yates continuity correction.')
# Induction.
flags.DEFINE_float('p', induction.DEFAULT_P, 'Coverage target.')
flags.DEFINE_float('eps', induction.DEFAULT_EPS,
                   'Degree-ratio smoothing of anchor candidates.')
flags.DEFINE_enum('coverage_mode', 'scenes', list(induction.COVERAGE_MODES),
                  'How coverage is measured.')
# Parsing.
flags.DEFINE_integer('max_length', codec.DEFAULT_MAX_LENGTH,
                     'Rule sequence length.')
# Training.
flags.DEFINE_integer('latent_dim', 50, 'Latent code size.')
flags.DEFINE_integer('epochs', 100, 'Training epochs.')
flags.DEFINE_integer('batch_size', 32, 'Batch size.')
flags.DEFINE_float('learning_rate', 1e-3, 'Learning rate.')
flags.DEFINE_float('pose_weight', 10., 'Weight of the attribute loss.')
flags.DEFINE_float('shape_weight', 1., 'Weight of shape relative to pose.')
flags.DEFINE_float('kl_weight', 1., 'Weight of the KL term.')
flags.DEFINE_integer('kl_anneal_epochs', 0,
                     'Epochs over which the KL weight ramps up.')
flags.DEFINE_float('validation_fraction', 0.1, 'Held-out share.')
flags.DEFINE_integer('decoder_width', 128, 'Recurrent layer width.')
flags.DEFINE_integer('decoder_depth', 2, 'Recurrent layers.')
# Generation.
flags.DEFINE_integer('num_samples', 10, 'Scenes to sample or synthesize.')
flags.DEFINE_integer('index', 0, 'Scene index within the corpus to render.')
flags.DEFINE_integer('index_a', 0, 'First scene to interpolate from.')
flags.DEFINE_integer('index_b', 1, 'Second scene to interpolate from.')
flags.DEFINE_list('alphas', ['0', '0.25', '0.5', '0.75', '1'],
                  'Interpolation weights of the first scene.')
# Evaluation.
flags.DEFINE_float('iou_threshold', metrics.DEFAULT_IOU_THRESHOLD,
                   'IoU above which boxes match.')
flags.DEFINE_enum('matcher', 'greedy', list(metrics.MATCHERS),
                  'Box matching strategy.')
flags.DEFINE_float('resolution', metrics.DEFAULT_RESOLUTION,
                   'Voxel size of the layout IoU in meters.')


def stage_seed(seed: int, stage: str) -> int:
  """Derives the seed of a pipeline stage from the global seed."""
  state = onp.random.SeedSequence([seed, STAGES[stage]]).generate_state(1)
  return int(state[0])


def read_config(path: str) -> Dict[str, str]:
  """Reads `key = value` lines; `#` starts a comment."""
  out = {}
  with gfile.GFile(path, 'r') as f:
    for lineno, line in enumerate(f, start=1):
      line = line.split('#', 1)[0].strip()
      if not line:
        continue
      key, sep, value = line.partition('=')
      if not sep or not key.strip():
        raise ValueError(f'{path}:{lineno}: expected "key = value"')
      out[key.strip()] = value.strip().strip('"\'')
  return out


def apply_config(values: Dict[str, str]):
  """Sets flags not given on the command line from config values."""
  for key, value in values.items():
    if key not in FLAGS:
      raise ValueError(f'unknown config key {key!r}')
    if not FLAGS[key].present:
      FLAGS[key].parse(value)


def _require(*names: str):
  missing = [f'--{n}' for n in names if not FLAGS[n].value]
  if missing:
    raise ValueError(f'missing required flags: {", ".join(missing)}')


def _load_corpus() -> List[scene_lib.Scene]:
  synonyms = None
  if FLAGS.synonyms:
    synonyms = corpus_lib.load_synonyms(FLAGS.synonyms)
  vocab, scenes = corpus_lib.load_corpus(FLAGS.corpus, FLAGS.min_count,
                                         FLAGS.max_objects, synonyms)
  if FLAGS.vocabulary:
    corpus_lib.save_vocabulary(FLAGS.vocabulary, vocab)
  return scenes


def model_config() -> vae.ModelConfig:
  return vae.ModelConfig(
      latent_dim=FLAGS.latent_dim,
      decoder_width=FLAGS.decoder_width,
      decoder_depth=FLAGS.decoder_depth,
      pose_weight=FLAGS.pose_weight,
      shape_weight=FLAGS.shape_weight,
      kl_weight=FLAGS.kl_weight,
      kl_anneal_epochs=FLAGS.kl_anneal_epochs,
      learning_rate=FLAGS.learning_rate,
      batch_size=FLAGS.batch_size,
      epochs=FLAGS.epochs,
      validation_fraction=FLAGS.validation_fraction,
      seed=stage_seed(FLAGS.seed, 'train'))


def cmd_discover():
  _require('corpus', 'output')
  prior = graph_lib.load_graph(FLAGS.prior_graph) if FLAGS.prior_graph else None
  graph = structure.discover(
      _load_corpus(),
      tau=FLAGS.tau,
      support_tol=FLAGS.support_tol,
      enclose_margin=FLAGS.enclose_margin,
      ratio=FLAGS.geometric_ratio,
      yates=FLAGS.yates,
      prior=prior)
  graph_lib.save_graph(FLAGS.output, graph)
  logging.info('wrote a graph of %d categories to %s', len(graph.nodes),
               FLAGS.output)


def cmd_induce():
  _require('corpus', 'graph', 'output')
  result = induction.p_cover(_load_corpus(), graph_lib.load_graph(FLAGS.graph),
                             p=FLAGS.p, eps=FLAGS.eps,
                             coverage_mode=FLAGS.coverage_mode)
  grammar_lib.save_grammar(FLAGS.output, result.grammar)
  if FLAGS.report:
    json_io.save_report(FLAGS.report, induction.summarize(result))


def cmd_parse():
  _require('corpus', 'grammar', 'output')
  grammar = grammar_lib.load_grammar(FLAGS.grammar)
  sequences = codec.parse_corpus(_load_corpus(), grammar, FLAGS.max_length)
  json_io.save_sequences(FLAGS.output, sequences, grammar.fingerprint)
  logging.info('wrote %d sequences to %s', len(sequences), FLAGS.output)


def cmd_train():
  _require('sequences', 'grammar', 'output')
  grammar = grammar_lib.load_grammar(FLAGS.grammar)
  _, sequences = json_io.load_sequences(FLAGS.sequences, grammar.fingerprint)
  config = model_config()
  writer = metric_writers.create_default_writer(
      FLAGS.logdir, just_logging=not FLAGS.logdir)
  writer.write_hparams(
      {k: v for k, v in config.to_dict().items() if not isinstance(v, list)})
  with metric_writers.ensure_flushes(writer):
    model, report = vae.train(sequences, grammar, config,
                              progress_fn=writer.write_scalars)
  model_io.save(FLAGS.output, model)
  if FLAGS.report:
    reconstructions = model.reconstruct(sequences)
    json_io.save_report(FLAGS.report, {
        'config': config.to_dict(),
        'epochs': report.epochs,
        'exact_match': vae.exact_match_rate(sequences, reconstructions),
        'pose_rmse': vae.pose_rmse(sequences, reconstructions, grammar),
    })


def _load_model():
  _require('checkpoint', 'grammar')
  return model_io.load(FLAGS.checkpoint,
                       grammar_lib.load_grammar(FLAGS.grammar))


def cmd_sample():
  _require('output')
  model = _load_model()
  scenes = model.sample(FLAGS.num_samples, stage_seed(FLAGS.seed, 'sample'))
  corpus_lib.save_corpus(FLAGS.output, scenes)


def cmd_interpolate():
  _require('corpus', 'output')
  model = _load_model()
  scenes = corpus_lib.load_scenes(FLAGS.corpus)
  for index in (FLAGS.index_a, FLAGS.index_b):
    if not 0 <= index < len(scenes):
      raise ValueError(f'scene index {index} out of range for '
                       f'{len(scenes)} scenes')
  alphas = [float(a) for a in FLAGS.alphas]
  out = model.interpolate(scenes[FLAGS.index_a], scenes[FLAGS.index_b], alphas)
  corpus_lib.save_corpus(FLAGS.output, out)


def cmd_eval():
  _require('pred', 'gt')
  report = metrics.evaluate_corpus(corpus_lib.load_scenes(FLAGS.pred),
                                   corpus_lib.load_scenes(FLAGS.gt),
                                   FLAGS.iou_threshold, FLAGS.matcher,
                                   FLAGS.resolution)
  sys.stdout.write(metrics.format_table(report))
  if FLAGS.output:
    json_io.save_report(FLAGS.output, report.to_dict())


def cmd_render():
  _require('corpus', 'output')
  try:
    scenes = corpus_lib.load_scenes(FLAGS.corpus)
  except corpus_lib.CorpusParseError as e:
    raise OSError(f'malformed scene file: {e}') from e
  if not 0 <= FLAGS.index < len(scenes):
    raise OSError(f'scene index {FLAGS.index} out of range for '
                  f'{len(scenes)} scenes in {FLAGS.corpus}')
  svg.save_svg(FLAGS.output, scenes[FLAGS.index])


def cmd_synthesize():
  _require('output')
  if FLAGS.grammar:
    grammar = grammar_lib.load_grammar(FLAGS.grammar)
  else:
    grammar = synthetic.demo_grammar()
  scenes = synthetic.generate_synthetic_corpus(
      grammar, None, FLAGS.num_samples, stage_seed(FLAGS.seed, 'synthesize'),
      FLAGS.max_objects, FLAGS.max_length)
  corpus_lib.save_corpus(FLAGS.output, scenes)


def xla_flags(threads: int, existing: str = '') -> str:
  """Returns XLA_FLAGS with Eigen threading turned off for one thread."""
  tokens = existing.split()
  if threads == 1 and SINGLE_THREAD_XLA_FLAG not in tokens:
    tokens.append(SINGLE_THREAD_XLA_FLAG)
  return ' '.join(tokens)


def _set_threads(threads: int):
  """Bounds the CPUs this process runs on; XLA sizes its pool from them."""
  if threads <= 0:
    return
  os.environ['XLA_FLAGS'] = xla_flags(threads,
                                      os.environ.get('XLA_FLAGS', ''))
  if not hasattr(os, 'sched_setaffinity'):
    logging.warning('cannot bound threads to %d on this platform', threads)
    return
  cpus = sorted(os.sched_getaffinity(0))[:threads]
  os.sched_setaffinity(0, cpus)
  logging.info('running on cpus %s', cpus)


def run(command: str) -> int:
  """Runs one command and maps failures to exit codes."""
  handlers = {name: globals()[f'cmd_{name}'] for name in COMMANDS}
  try:
    if FLAGS.config:
      apply_config(read_config(FLAGS.config))
    _set_threads(FLAGS.threads)
    handlers[command]()
  except (OSError, tf.errors.OpError) as e:
    logging.error('%s: %s', command, e)
    return 3
  except (ValueError, flags.Error) as e:
    logging.error('%s: %s', command, e)
    return 2
  return 0


def main(argv: Sequence[str]) -> Optional[int]:
  if len(argv) != 2 or argv[1] not in COMMANDS:
    raise app.UsageError(f'expected one command out of {", ".join(COMMANDS)}')
  return run(argv[1])


if __name__ == '__main__':
  app.run(main)
