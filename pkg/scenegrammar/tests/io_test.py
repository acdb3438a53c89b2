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

"""Tests for sequence dumps, checkpoints and svg export."""

import os

from absl.testing import absltest
from flax import serialization
import jax
import numpy as onp
from scenegrammar.grammar import base as grammar_lib
from scenegrammar.grammar import codec
from scenegrammar.io import json as json_io
from scenegrammar.io import model as model_io
from scenegrammar.io import svg
from scenegrammar.scene import synthetic
from scenegrammar.training import normalization
from scenegrammar.training import vae

MAX_LENGTH = 16
SMALL = vae.ModelConfig(latent_dim=3, branch_features=(4,), trunk_features=(4,),
                        decoder_width=8, decoder_depth=1)


def _sequences(grammar, n=6):
  scenes = synthetic.generate_synthetic_corpus(
      grammar, None, n, seed=2, max_objects=3, max_length=MAX_LENGTH)
  return codec.parse_corpus(scenes, grammar, MAX_LENGTH)


class SequenceDumpTest(absltest.TestCase):

  def setUp(self):
    super().setUp()
    self.grammar = synthetic.demo_grammar()
    self.path = os.path.join(self.create_tempdir().full_path, 'seq.json')

  def test_round_trip(self):
    sequences = _sequences(self.grammar)
    json_io.save_sequences(self.path, sequences, self.grammar.fingerprint)
    fingerprint, loaded = json_io.load_sequences(self.path,
                                                 self.grammar.fingerprint)
    self.assertEqual(fingerprint, self.grammar.fingerprint)
    self.assertLen(loaded, len(sequences))
    for a, b in zip(sequences, loaded):
      onp.testing.assert_array_equal(a.rule_ids, b.rule_ids)
      onp.testing.assert_array_equal(a.attributes, b.attributes)
      codec.validate_sequence(b, self.grammar)

  def test_fingerprint_checked(self):
    sequences = _sequences(self.grammar)
    with self.assertRaises(codec.FingerprintMismatchError):
      json_io.save_sequences(self.path, sequences, '0' * 64)
    json_io.save_sequences(self.path, sequences, self.grammar.fingerprint)
    with self.assertRaises(codec.FingerprintMismatchError):
      json_io.load_sequences(self.path, '0' * 64)

  def test_malformed(self):
    with open(self.path, 'w') as f:
      f.write('{"sequences": [}')
    with self.assertRaises(ValueError):
      json_io.load_sequences(self.path)
    with open(self.path, 'w') as f:
      f.write('{"sequences": []}')
    with self.assertRaisesRegex(ValueError, 'fingerprint'):
      json_io.load_sequences(self.path)

  def test_report(self):
    json_io.save_report(self.path, {'rate': onp.float32(0.5),
                                    'counts': onp.arange(3)})
    self.assertEqual(json_io.load_report(self.path),
                     {'rate': 0.5, 'counts': [0, 1, 2]})


class CheckpointTest(absltest.TestCase):

  def setUp(self):
    super().setUp()
    self.grammar = synthetic.demo_grammar()
    self.path = os.path.join(self.create_tempdir().full_path, 'model.ckpt')
    sequences = _sequences(self.grammar)
    emits = onp.stack([codec.attribute_rows(s, self.grammar)
                       for s in sequences])
    attributes = onp.stack([s.attributes for s in sequences])
    normalizer = normalization.update(normalization.create_normalizer(),
                                      attributes, emits)
    self.model = vae.SceneVAE(self.grammar, SMALL, MAX_LENGTH,
                              normalizer=normalizer)

  def test_round_trip(self):
    model_io.save(self.path, self.model)
    loaded = model_io.load(self.path, self.grammar)
    self.assertEqual(loaded.config, SMALL)
    self.assertEqual(loaded.max_length, MAX_LENGTH)
    for a, b in zip(jax.tree_util.tree_leaves(self.model.params),
                    jax.tree_util.tree_leaves(loaded.params)):
      onp.testing.assert_array_equal(a, b)
    onp.testing.assert_array_equal(loaded.normalizer.mean,
                                   self.model.normalizer.mean)
    z = onp.ones((1, SMALL.latent_dim), onp.float32)
    onp.testing.assert_array_equal(
        loaded.generate(z)[0].rule_ids, self.model.generate(z)[0].rule_ids)

  def test_grammar_comes_from_checkpoint(self):
    model_io.save(self.path, self.model)
    self.assertEqual(model_io.load(self.path).grammar, self.grammar)

  def test_other_grammar_rejected(self):
    model_io.save(self.path, self.model)
    other = grammar_lib.Grammar(
        grammar_lib.parse_rules('S -> scene SCENE ; SCENE -> None ;'))
    with self.assertRaises(codec.FingerprintMismatchError):
      model_io.load(self.path, other)

  def test_not_a_checkpoint(self):
    with open(self.path, 'wb') as f:
      f.write(b'not a checkpoint')
    with self.assertRaises(model_io.CheckpointError):
      model_io.load(self.path)

  def test_unknown_version(self):
    with open(self.path, 'wb') as f:
      f.write(serialization.msgpack_serialize(
          {'format': model_io.FORMAT, 'format_version': 99}))
    with self.assertRaisesRegex(model_io.CheckpointError, 'version'):
      model_io.load(self.path)

  def test_missing_field(self):
    with open(self.path, 'wb') as f:
      f.write(serialization.msgpack_serialize(
          {'format': model_io.FORMAT,
           'format_version': model_io.FORMAT_VERSION}))
    with self.assertRaisesRegex(model_io.CheckpointError, 'grammar'):
      model_io.load(self.path)


class SvgTest(absltest.TestCase):

  def test_one_rect_per_box(self):
    grammar = synthetic.demo_grammar()
    scene = synthetic.generate_synthetic_corpus(grammar, None, 1, seed=4,
                                                max_objects=5)[0]
    text = svg.render(scene)
    self.assertEqual(text.count('<rect'), len(scene.objects) + 1)
    self.assertEqual(text.count('<text'), len(scene.objects))
    self.assertEqual(text, svg.render(scene))

  def test_save(self):
    grammar = synthetic.demo_grammar()
    scene = synthetic.generate_synthetic_corpus(grammar, None, 1, seed=4)[0]
    path = os.path.join(self.create_tempdir().full_path, 'scene.svg')
    svg.save_svg(path, scene)
    with open(path) as f:
      self.assertTrue(f.read().startswith('<svg'))


if __name__ == '__main__':
  absltest.main()
