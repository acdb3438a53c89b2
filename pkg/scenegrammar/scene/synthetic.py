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

# pylint:disable=g-multiple-import
"""Synthetic scene corpora sampled from a known grammar."""

import dataclasses
from typing import List, Optional, Sequence

import numpy as onp

from scenegrammar.grammar import codec
from scenegrammar.grammar.base import Grammar, R1, R4, parse_rules
from scenegrammar.scene.base import DEFAULT_MAX_OBJECTS, Scene

# Five anchors laid out the way induction orders its rules.
DEMO_GRAMMAR = """
S -> scene SCENE ;
SCENE -> bed BED SCENE ;
BED -> bed BED ;
BED -> nightstand BED ;
BED -> pillow BED ;
BED -> None ;
SCENE -> cabinet CABINET SCENE ;
CABINET -> cabinet CABINET ;
CABINET -> box CABINET ;
CABINET -> None ;
SCENE -> desk DESK SCENE ;
DESK -> desk DESK ;
DESK -> chair DESK ;
DESK -> lamp DESK ;
DESK -> monitor DESK ;
DESK -> None ;
SCENE -> sofa SOFA SCENE ;
SOFA -> sofa SOFA ;
SOFA -> pillow SOFA ;
SOFA -> table TABLE SOFA ;
SOFA -> None ;
SCENE -> table TABLE SCENE ;
TABLE -> table TABLE ;
TABLE -> chair TABLE ;
TABLE -> cup TABLE ;
TABLE -> lamp TABLE ;
TABLE -> None ;
SCENE -> None ;
"""


def demo_grammar() -> Grammar:
  return Grammar(parse_rules(DEMO_GRAMMAR, '<demo>'))


@dataclasses.dataclass(frozen=True)
class AttributeModel:
  """Per-rule Gaussians over relative poses and log box sizes.

  Attributes:
    offset_mean: (R, 3) mean translation relative to the reference pose
    offset_std: (R, 3)
    yaw_mean: (R,) mean relative yaw
    yaw_std: (R,)
    log_size_mean: (R, 3) mean of log(width, depth, height)
    log_size_std: (R, 3)
    weights: (R,) unnormalized probability of picking each rule among the
      rules that may expand the current non-terminal
  """
  offset_mean: onp.ndarray
  offset_std: onp.ndarray
  yaw_mean: onp.ndarray
  yaw_std: onp.ndarray
  log_size_mean: onp.ndarray
  log_size_std: onp.ndarray
  weights: onp.ndarray

  @classmethod
  def random(cls, grammar: Grammar, seed: int = 0) -> 'AttributeModel':
    """Draws a plausible indoor attribute model for every rule."""
    rng = onp.random.default_rng(seed)
    n = grammar.num_rules
    offset_mean = rng.uniform(-1.5, 1.5, size=(n, 3))
    offset_mean[:, 2] = rng.uniform(0., 0.3, size=n)
    log_size_mean = onp.log(rng.uniform(0.3, 1.8, size=(n, 3)))
    weights = onp.ones(n)
    for i, rule in enumerate(grammar.rules):
      if rule.kind == R1:
        offset_mean[i] = 0.
        log_size_mean[i] = onp.log([6., 5., 3.])
      elif rule.is_self_repeat:
        weights[i] = 0.3
      elif rule.kind == R4:
        weights[i] = 1.5
    return cls(offset_mean=offset_mean,
               offset_std=onp.full((n, 3), 0.1),
               yaw_mean=rng.choice([0., onp.pi / 2, onp.pi, -onp.pi / 2],
                                   size=n),
               yaw_std=onp.full(n, 0.05),
               log_size_mean=log_size_mean,
               log_size_std=onp.full((n, 3), 0.05),
               weights=weights)

  @classmethod
  def fit(cls, sequences: Sequence[codec.RuleSequence],
          grammar: Grammar) -> 'AttributeModel':
    """Estimates the model from parsed sequences.

    Rules never observed keep a unit-sized, zero-offset default and the
    smallest observed weight.
    """
    n = grammar.num_rules
    counts = onp.zeros(n)
    rows = [[] for _ in range(n)]
    for seq in sequences:
      for rule_index, row in zip(seq.rule_ids, seq.attributes):
        if rule_index < n:
          counts[rule_index] += 1
          rows[rule_index].append(row)
    offset_mean = onp.zeros((n, 3))
    offset_std = onp.full((n, 3), 0.1)
    yaw_mean = onp.zeros(n)
    yaw_std = onp.full(n, 0.05)
    log_size_mean = onp.zeros((n, 3))
    log_size_std = onp.full((n, 3), 0.05)
    for i, r in enumerate(rows):
      if not r or grammar.rules[i].terminal is None:
        continue
      r = onp.asarray(r)
      offset_mean[i] = r[:, codec.TRANSLATION].mean(0)
      offset_std[i] = r[:, codec.TRANSLATION].std(0) + 1e-3
      yaws = onp.arctan2(r[:, codec.SIN], r[:, codec.COS])
      yaw_mean[i] = onp.arctan2(onp.sin(yaws).mean(), onp.cos(yaws).mean())
      yaw_std[i] = onp.std(yaws - yaw_mean[i]) + 1e-3
      log_sizes = onp.log(onp.maximum(r[:, codec.SIZE], codec.MIN_SIZE))
      log_size_mean[i] = log_sizes.mean(0)
      log_size_std[i] = log_sizes.std(0) + 1e-3
    floor = counts[counts > 0].min() if onp.any(counts > 0) else 1.
    return cls(offset_mean, offset_std, yaw_mean, yaw_std, log_size_mean,
               log_size_std, onp.maximum(counts, floor))

  def sample_row(self, rule_index: int, rng: onp.random.Generator):
    offset = rng.normal(self.offset_mean[rule_index],
                        self.offset_std[rule_index])
    yaw = rng.normal(self.yaw_mean[rule_index], self.yaw_std[rule_index])
    size = onp.exp(rng.normal(self.log_size_mean[rule_index],
                              self.log_size_std[rule_index]))
    return onp.concatenate([offset, [onp.sin(yaw), onp.cos(yaw)], size])


def sample_sequence(grammar: Grammar, attribute_model: AttributeModel,
                    rng: onp.random.Generator,
                    max_objects: int = DEFAULT_MAX_OBJECTS,
                    max_length: int = codec.DEFAULT_MAX_LENGTH
                   ) -> codec.RuleSequence:
  """Samples one derivation, picking among valid rules by weight.

  Once max_objects objects have been emitted only None rules are allowed.
  """
  state = codec.MaskState.initial(grammar)
  rule_ids = onp.full(max_length, codec.pad_index(grammar), dtype=onp.int32)
  attributes = onp.zeros((max_length, codec.ATTRIBUTE_DIM))
  emitted = 0
  t = 0
  while not state.done:
    mask = codec.valid_mask(state, grammar, max_length)[:-1]
    if emitted >= max_objects:
      mask &= onp.array([r.kind in (R1, R4) for r in grammar.rules])
    weights = onp.where(mask, attribute_model.weights, 0.)
    rule_index = int(rng.choice(len(weights), p=weights / weights.sum()))
    rule = grammar.rules[rule_index]
    rule_ids[t] = rule_index
    if rule.terminal is not None:
      attributes[t] = attribute_model.sample_row(rule_index, rng)
      if rule.kind != R1:
        emitted += 1
    state = state.step(rule_index, grammar)
    t += 1
  return codec.RuleSequence(rule_ids, attributes, grammar.fingerprint)


def generate_synthetic_corpus(
    grammar: Grammar,
    attribute_model: Optional[AttributeModel],
    n: int,
    seed: int,
    max_objects: int = DEFAULT_MAX_OBJECTS,
    max_length: int = codec.DEFAULT_MAX_LENGTH,
) -> List[Scene]:
  """Samples n scenes from a grammar.

  Args:
    grammar: a valid grammar
    attribute_model: per-rule attribute distributions; a random model seeded
      by seed is used when None
    n: number of scenes
    seed: random seed; equal seeds give identical corpora
    max_objects: objects per scene are capped at this count
    max_length: derivations always finish within this many rules

  Returns:
    The scenes, each parseable by the grammar.
  """
  if attribute_model is None:
    attribute_model = AttributeModel.random(grammar, seed)
  rng = onp.random.default_rng(seed)
  return [
      codec.unparse(
          sample_sequence(grammar, attribute_model, rng, max_objects,
                          max_length), grammar) for _ in range(n)
  ]
