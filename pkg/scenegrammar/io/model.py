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

"""Loading/saving of trained autoencoders.

A checkpoint is a single msgpack map with the keys

  format          'scenegrammar-checkpoint'
  format_version  integer, currently 1
  config          ModelConfig fields
  fingerprint     fingerprint of the grammar
  grammar         the grammar in its text form
  max_length      sequence length T
  normalizer      attribute statistics: count, mean, m2
  params          {'encoder': ..., 'decoder': ...} flax parameter trees

Arrays are stored with their dtype, so reloading is bit-exact.
"""

from typing import Optional

from absl import logging
from flax import serialization
from tensorflow.io import gfile

from scenegrammar.grammar import codec
from scenegrammar.grammar.base import Grammar, parse_rules
from scenegrammar.training import normalization
from scenegrammar.training import vae

FORMAT = 'scenegrammar-checkpoint'
FORMAT_VERSION = 1


class CheckpointError(ValueError):
  """A checkpoint file is malformed or of an unknown version."""


def save(path: str, model: vae.SceneVAE):
  state = {
      'format': FORMAT,
      'format_version': FORMAT_VERSION,
      'config': model.config.to_dict(),
      'fingerprint': model.fingerprint,
      'grammar': model.grammar.to_text(),
      'max_length': model.max_length,
      'normalizer': normalization.to_dict(model.normalizer),
      'params': serialization.to_state_dict(model.params),
  }
  with gfile.GFile(path, 'wb') as fout:
    fout.write(serialization.msgpack_serialize(state))
  logging.info('saved checkpoint to %s', path)


def load(path: str, grammar: Optional[Grammar] = None) -> vae.SceneVAE:
  """Restores a model.

  Args:
    path: checkpoint file
    grammar: if given, the checkpoint must have been trained on it; otherwise
      the grammar stored in the checkpoint is used

  Returns:
    The model.

  Raises:
    CheckpointError: if the file is not a checkpoint of a known version.
    FingerprintMismatchError: if grammar differs from the checkpoint's.
  """
  with gfile.GFile(path, 'rb') as fin:
    data = fin.read()
  try:
    state = serialization.msgpack_restore(data)
  except Exception as e:  # pylint:disable=broad-except
    raise CheckpointError(f'{path}: not a msgpack checkpoint: {e}') from e
  if not isinstance(state, dict) or state.get('format') != FORMAT:
    raise CheckpointError(f'{path}: not a {FORMAT} file')
  if state.get('format_version') != FORMAT_VERSION:
    raise CheckpointError(f'{path}: unsupported format version '
                          f'{state.get("format_version")}')
  try:
    stored = Grammar(parse_rules(state['grammar'], path))
    if grammar is None:
      grammar = stored
    codec.check_fingerprint(grammar.fingerprint, state['fingerprint'], path)
    config = vae.ModelConfig.from_dict(state['config'])
    model = vae.SceneVAE(grammar, config, int(state['max_length']),
                         normalizer=normalization.from_dict(
                             state['normalizer']))
    model.params = serialization.from_state_dict(model.params, state['params'])
  except KeyError as e:
    raise CheckpointError(f'{path}: missing checkpoint field {e}') from e
  return model
