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

"""Tests for scene grammars and their induction."""

import os

from absl.testing import absltest
from absl.testing import parameterized
from scenegrammar.discovery.graph import CausalGraph
from scenegrammar.grammar import base
from scenegrammar.grammar import induction
from scenegrammar.scene import synthetic
from scenegrammar.scene.base import ObjectInstance
from scenegrammar.scene.base import ROOM
from scenegrammar.scene.base import Scene


def _scene(*categories):
  room = ObjectInstance.create(ROOM, [0., 0., 1.5], 0., [6., 5., 3.])
  return Scene.create(room, [
      ObjectInstance.create(c, [float(i), 0., 0.5], 0., [.5, .5, .5])
      for i, c in enumerate(categories)
  ])


def graph_of(grammar: base.Grammar) -> CausalGraph:
  """Anchor -> emitted category for every non-repeating object rule."""
  g = CausalGraph(grammar.categories)
  for rule in grammar.rules:
    if rule.kind == base.R3 and not rule.is_self_repeat:
      g.add_directed(base.category_of(rule.lhs), rule.terminal)
  return g


class RuleTest(parameterized.TestCase):

  @parameterized.parameters(
      ('S', ('scene', 'SCENE'), base.R1),
      ('SCENE', ('bed', 'BED', 'SCENE'), base.R2),
      ('BED', ('bed', 'BED'), base.R3),
      ('BED', ('sofa', 'SOFA', 'BED'), base.R3),
      ('BED', ('None',), base.R4),
      ('SCENE', ('None',), base.R4))
  def test_kind_is_inferred(self, lhs, rhs, kind):
    self.assertEqual(base.make_rule(lhs, rhs).kind, kind)

  @parameterized.parameters(
      ('S', ('None',)),
      ('S', ('bed', 'SCENE')),
      ('SCENE', ('bed', 'SCENE')),
      ('SCENE', ('bed', 'SOFA', 'SCENE')),
      ('BED', ('sofa', 'SOFA')),
      ('BED', ('sofa', 'None', 'BED')),
      ('bed', ('bed', 'BED')),
      ('BED', ()))
  def test_malformed_rules(self, lhs, rhs):
    with self.assertRaises(base.InvalidGrammarError):
      base.make_rule(lhs, rhs)

  def test_opens(self):
    self.assertEqual(base.make_rule('S', ('scene', 'SCENE')).opens, 'SCENE')
    self.assertEqual(
        base.make_rule('SOFA', ('table', 'TABLE', 'SOFA')).opens, 'TABLE')
    self.assertIsNone(base.make_rule('BED', ('pillow', 'BED')).opens)
    self.assertTrue(base.make_rule('BED', ('bed', 'BED')).is_self_repeat)


class GrammarTest(absltest.TestCase):

  def test_demo_grammar(self):
    grammar = synthetic.demo_grammar()
    self.assertEqual(grammar.num_rules, 28)
    self.assertEqual(grammar.anchors,
                     ('bed', 'cabinet', 'desk', 'sofa', 'table'))
    self.assertIn('pillow', grammar.categories)
    self.assertNotIn(ROOM, grammar.categories)
    self.assertEqual(grammar.precedence()['chair'], 12)

  def test_text_round_trip(self):
    grammar = synthetic.demo_grammar()
    again = base.Grammar(base.parse_rules(grammar.to_text()))
    self.assertEqual(again, grammar)
    self.assertEqual(again.fingerprint, grammar.fingerprint)

  def test_file_round_trip(self):
    path = os.path.join(self.create_tempdir().full_path, 'grammar.txt')
    grammar = synthetic.demo_grammar()
    base.save_grammar(path, grammar)
    self.assertEqual(base.load_grammar(path), grammar)

  def test_fingerprint_depends_on_order(self):
    rules = base.parse_rules(
        'S -> scene SCENE; SCENE -> bed BED SCENE; SCENE -> desk DESK SCENE;'
        'BED -> None; DESK -> None; SCENE -> None')
    swapped = [rules[0], rules[2], rules[1]] + rules[3:]
    self.assertNotEqual(base.Grammar(rules).fingerprint,
                        base.Grammar(swapped).fingerprint)

  def test_unicode_arrow(self):
    rules = base.parse_rules('S → scene SCENE ; SCENE → None ;')
    self.assertLen(base.Grammar(rules), 2)

  def test_parse_error_names_line(self):
    with self.assertRaisesRegex(base.GrammarParseError, 'g.txt:2'):
      base.parse_rules('S -> scene SCENE ;\nSCENE -> bed ;\n', 'g.txt')
    with self.assertRaisesRegex(base.GrammarParseError, 'g.txt:1'):
      base.parse_rules('S scene SCENE', 'g.txt')

  def test_missing_none_rule(self):
    rules = base.parse_rules(
        'S -> scene SCENE; SCENE -> bed BED SCENE; BED -> bed BED; BED -> None')
    with self.assertRaisesRegex(base.InvalidGrammarError, 'SCENE'):
      base.Grammar(rules)

  def test_undefined_nonterminal(self):
    rules = base.parse_rules(
        'S -> scene SCENE; SCENE -> bed BED SCENE; SCENE -> None')
    with self.assertRaisesRegex(base.InvalidGrammarError, 'BED'):
      base.Grammar(rules)

  def test_unreachable_nonterminal(self):
    rules = base.parse_rules(
        'S -> scene SCENE; SCENE -> None; BED -> bed BED; BED -> None')
    with self.assertRaisesRegex(base.InvalidGrammarError, 'unreachable'):
      base.Grammar(rules)

  def test_duplicate_rules(self):
    rules = base.parse_rules('S -> scene SCENE; SCENE -> None; SCENE -> None')
    with self.assertRaises(base.InvalidGrammarError):
      base.Grammar(rules)


class InductionTest(absltest.TestCase):

  def test_candidates(self):
    g = CausalGraph.from_edges(directed=[('a', 'b'), ('a', 'c'), ('b', 'c')])
    self.assertEqual(induction.candidate_nonterminals(g), ['a'])
    with self.assertRaises(ValueError):
      induction.candidate_nonterminals(g, eps=0.)

  def test_rules_for_block(self):
    g = CausalGraph.from_edges(
        directed=[('sofa', 'table'), ('sofa', 'pillow')])
    block = induction.rules_for('sofa', g, {'sofa', 'table'})
    self.assertEqual([str(r) for r in block], [
        'SCENE -> sofa SOFA SCENE ;',
        'SOFA -> sofa SOFA ;',
        'SOFA -> pillow SOFA ;',
        'SOFA -> table TABLE SOFA ;',
        'SOFA -> None ;',
    ])

  def test_derivable_terminals(self):
    rules = synthetic.demo_grammar().rules
    self.assertEqual(
        induction.derivable_terminals({ROOM, 'desk', 'chair'}, rules),
        {ROOM, 'desk', 'chair'})
    self.assertEqual(
        induction.derivable_terminals({ROOM, 'chair'}, rules), {ROOM})
    self.assertEqual(
        induction.derivable_terminals({ROOM, 'sofa', 'cup'}, rules),
        {ROOM, 'sofa'})
    self.assertEqual(
        induction.derivable_terminals({ROOM, 'sofa', 'table', 'cup'}, rules),
        {ROOM, 'sofa', 'table', 'cup'})

  def test_coverage(self):
    ratios = [0.5, 0.9, 1.]
    self.assertAlmostEqual(induction.coverage(ratios, 0.8), 2. / 3.)
    self.assertAlmostEqual(
        induction.coverage(ratios, 0.8, 'mean_ratio'), 0.8)
    self.assertEqual(induction.coverage([], 0.8), 1.)
    with self.assertRaises(ValueError):
      induction.coverage(ratios, 0.8, 'instances')

  def test_coverage_ratio_counts_room(self):
    ratios = induction.coverage_ratios(
        [_scene('chair')], [induction.start_rule()])
    self.assertEqual(ratios, [0.5])

  def test_coverage_gain(self):
    g = CausalGraph.from_edges(directed=[('desk', 'chair')])
    scenes = [_scene('desk', 'chair'), _scene('bed')]
    current = [induction.start_rule(), base.make_rule('SCENE', ('None',))]
    block = induction.rules_for('desk', g)
    # (3 / 3 + 1 / 2) over a block of four rules.
    self.assertAlmostEqual(
        induction.coverage_gain(block, current, scenes), 0.375)

  def test_empty_graph(self):
    with self.assertRaises(induction.EmptyGraphError):
      induction.p_cover([_scene('bed')], CausalGraph())

  def test_explicit_candidates(self):
    g = CausalGraph.from_edges(directed=[('desk', 'chair'), ('bed', 'lamp')])
    scenes = [_scene('desk', 'chair')] * 3 + [_scene('bed', 'lamp')]
    result = induction.p_cover(scenes, g, p=0.7, candidates=['desk', 'bed'])
    self.assertEqual(result.anchors, ('desk',))
    self.assertAlmostEqual(result.coverage, 0.75)
    self.assertEqual(str(result.grammar.rules[-1]), 'SCENE -> None ;')

  def test_recovers_generating_grammar(self):
    truth = synthetic.demo_grammar()
    scenes = synthetic.generate_synthetic_corpus(truth, None, 300, seed=0)
    steps = []
    result = induction.p_cover(
        scenes, graph_of(truth), p=1.,
        progress_fn=lambda step, metrics: steps.append(step))
    recovered = set(result.grammar.rules) & set(truth.rules)
    self.assertGreaterEqual(len(recovered), 0.9 * truth.num_rules)
    self.assertCountEqual(result.anchors, truth.anchors)
    self.assertEqual(steps, [1, 2, 3, 4, 5])

  def test_recovers_generating_grammar_at_default_target(self):
    truth = synthetic.demo_grammar()
    # One child per anchor that no other anchor can emit.
    children = {'bed': 'nightstand', 'cabinet': 'box', 'desk': 'monitor',
                'sofa': 'sofa', 'table': 'cup'}
    anchors = sorted(children)
    scenes = []
    for k in range(30):
      for i, a in enumerate(anchors):
        for b in anchors[i + 1:]:
          scenes.append(_scene(a, *[children[a]] * (1 + k % 2),
                               b, *[children[b]] * (1 + k // 2 % 2)))
    self.assertLen(scenes, 300)
    result = induction.p_cover(scenes, graph_of(truth), p=0.8)
    self.assertCountEqual(result.anchors, truth.anchors)
    self.assertGreaterEqual(result.coverage, 0.8)
    recovered = set(result.grammar.rules) & set(truth.rules)
    self.assertGreaterEqual(len(recovered), 0.9 * truth.num_rules)

  def test_reaches_target_coverage(self):
    truth = synthetic.demo_grammar()
    scenes = synthetic.generate_synthetic_corpus(truth, None, 300, seed=1)
    result = induction.p_cover(scenes, graph_of(truth), p=0.8)
    self.assertGreaterEqual(result.coverage, 0.8)
    summary = induction.summarize(result)
    self.assertEqual(summary['fingerprint'], result.grammar.fingerprint)


if __name__ == '__main__':
  absltest.main()
