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

"""Saves rule sequence dumps and reports as json."""

import json
from typing import Any, List, Optional, Sequence, Tuple

import jax.numpy as jnp
import numpy as onp
from tensorflow.io import gfile

from scenegrammar.grammar import codec


class JaxEncoder(json.JSONEncoder):

  def default(self, obj):
    if isinstance(obj, (onp.ndarray, jnp.ndarray)):
      return onp.asarray(obj).tolist()
    if isinstance(obj, onp.generic):
      return obj.item()
    return json.JSONEncoder.default(self, obj)


def save_sequences(path: str, sequences: Sequence[codec.RuleSequence],
                   fingerprint: str):
  """Writes a sequence dump tagged with the grammar fingerprint."""
  for seq in sequences:
    codec.check_fingerprint(fingerprint, seq.fingerprint, 'rule sequence')
  max_length = sequences[0].max_length if sequences else 0
  d = {'fingerprint': fingerprint,
       'max_length': max_length,
       'sequences': [{'rule_ids': s.rule_ids, 'attributes': s.attributes}
                     for s in sequences]}
  with gfile.GFile(path, 'w') as fout:
    json.dump(d, fout, cls=JaxEncoder)


def load_sequences(
    path: str,
    fingerprint: Optional[str] = None) -> Tuple[str, List[codec.RuleSequence]]:
  """Reads a sequence dump.

  Args:
    path: dump file
    fingerprint: if given, the dump must carry this grammar fingerprint

  Returns:
    The dump's fingerprint and its sequences.

  Raises:
    FingerprintMismatchError: if fingerprint is given and differs.
  """
  with gfile.GFile(path, 'r') as fin:
    try:
      d = json.load(fin)
    except json.JSONDecodeError as e:
      raise ValueError(f'{path}: not a sequence dump: {e}') from e
  try:
    found = d['fingerprint']
    raw = d['sequences']
  except (KeyError, TypeError) as e:
    raise ValueError(f'{path}: not a sequence dump, missing {e}') from e
  if fingerprint is not None:
    codec.check_fingerprint(fingerprint, found, path)
  sequences = []
  for s in raw:
    rule_ids = onp.asarray(s['rule_ids'], dtype=onp.int32)
    attributes = onp.asarray(s['attributes'], dtype=onp.float64).reshape(
        len(rule_ids), codec.ATTRIBUTE_DIM)
    sequences.append(codec.RuleSequence(rule_ids, attributes, found))
  return found, sequences


def save_report(path: str, report: Any):
  with gfile.GFile(path, 'w') as fout:
    json.dump(report, fout, cls=JaxEncoder, indent=2, sort_keys=True)
    fout.write('\n')


def load_report(path: str) -> Any:
  with gfile.GFile(path, 'r') as fin:
    return json.load(fin)
