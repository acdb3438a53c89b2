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

"""Tests for scenegrammar.discovery."""

import os

from absl.testing import absltest
from absl.testing import parameterized
import numpy as onp
from scenegrammar.discovery import graph as graph_lib
from scenegrammar.discovery import structure
from scenegrammar.discovery import tables as tables_lib
from scenegrammar.scene.base import ObjectInstance
from scenegrammar.scene.base import ROOM
from scenegrammar.scene.base import Scene

CATEGORIES = ('chair', 'desk', 'lamp')


def presence_from_strata(strata):
  """Builds a (chair, desk, lamp) presence matrix.

  Args:
    strata: {desk present: (both, chair only, lamp only, neither)}

  Returns:
    The (N, 3) presence matrix.
  """
  rows = []
  for desk, counts in strata.items():
    for (chair, lamp), n in zip(((1, 1), (1, 0), (0, 1), (0, 0)), counts):
      rows.extend([(chair, desk, lamp)] * n)
  return onp.array(rows, dtype=bool)


def scenes_from_presence(presence, categories=CATEGORIES):
  room = ObjectInstance.create(ROOM, [0., 0., 1.5], 0., [6., 5., 3.])
  scenes = []
  for row in presence:
    objects = [
        ObjectInstance.create(c, [2. * i, 0., 0.25], 0., [.5, .5, .5])
        for i, c in enumerate(categories) if row[i]
    ]
    scenes.append(Scene.create(room, objects))
  return scenes


# Chair and lamp are independent given the desk, both depend on it.
CHAIN = {1: (256, 64, 64, 16), 0: (6, 54, 54, 486)}
# Chair and lamp stay coupled in both strata.
COUPLED = {1: (40, 10, 10, 40), 0: (40, 10, 10, 40)}


class Chi2Test(parameterized.TestCase):

  def test_stratified_statistic(self):
    cells = onp.stack([[[20, 5], [5, 20]], [[5, 20], [20, 5]]], axis=-1)
    self.assertAlmostEqual(tables_lib.stratified_chi2(cells), 36., places=9)

  def test_strong_coupling_has_tiny_p(self):
    tables = tables_lib.tables_from_presence(presence_from_strata(COUPLED),
                                             CATEGORIES)
    _, p = tables_lib.chi2_statistic(tables, 'chair', 'lamp', 'desk')
    self.assertLess(p, 1e-6)

  def test_survival_at_critical_value(self):
    # Every expected count is 267 with deviations of 20 when the desk is
    # present; the other stratum is exactly independent.
    strata = {1: (287, 247, 247, 287), 0: (10, 10, 10, 10)}
    tables = tables_lib.tables_from_presence(presence_from_strata(strata),
                                             CATEGORIES)
    statistic, p = tables_lib.chi2_statistic(tables, 'chair', 'lamp', 'desk')
    self.assertAlmostEqual(statistic, 1600. / 267., delta=1e-9)
    self.assertAlmostEqual(statistic, 5.991, delta=2e-3)
    self.assertAlmostEqual(p, onp.exp(-800. / 267.), delta=1e-12)
    self.assertAlmostEqual(p, 0.05, delta=1e-3)

  def test_matches_direct_summation(self):
    rng = onp.random.default_rng(0)
    for _ in range(200):
      cells = rng.integers(1, 30, size=(2, 2, 2))
      rows = []
      for a in range(2):
        for b in range(2):
          for c in range(2):
            rows.extend([(a, b, c)] * cells[a, b, c])
      tables = tables_lib.tables_from_presence(
          onp.array(rows), ('j', 'jp', 'k'))
      statistic, p = tables_lib.chi2_statistic(tables, 'j', 'jp', 'k')
      expected = 0.
      for c in range(2):
        o = cells[:, :, c].astype(float)
        n = o.sum()
        for a in range(2):
          for b in range(2):
            e = o[a].sum() * o[:, b].sum() / n
            expected += (o[a, b] - e)**2 / e
      self.assertAlmostEqual(statistic, expected, delta=1e-9)
      # The chi-squared survival function with two dof is exp(-x / 2).
      self.assertAlmostEqual(p, onp.exp(-expected / 2.), delta=1e-6)

  def test_contingency_cells_recover_counts(self):
    presence = presence_from_strata(CHAIN)
    tables = tables_lib.tables_from_presence(presence, CATEGORIES)
    cells = tables_lib.contingency_cells(tables, 0, 2, 1)
    self.assertEqual(cells[1, 1, 1], 256)
    self.assertEqual(cells[0, 0, 0], 486)
    self.assertEqual(cells.sum(), len(presence))

  def test_degenerate_stratum(self):
    presence = presence_from_strata({1: (10, 10, 10, 10)})
    tables = tables_lib.tables_from_presence(presence, CATEGORIES)
    with self.assertRaises(tables_lib.DegenerateStratumError):
      tables_lib.chi2_statistic(tables, 'chair', 'lamp', 'desk')

  def test_repeated_categories_rejected(self):
    tables = tables_lib.tables_from_presence(presence_from_strata(CHAIN),
                                             CATEGORIES)
    with self.assertRaises(ValueError):
      tables_lib.chi2_statistic(tables, 'chair', 'chair', 'desk')

  def test_empty_corpus(self):
    with self.assertRaises(tables_lib.EmptyCorpusError):
      tables_lib.build_tables([])

  def test_instances_counted_once(self):
    scenes = scenes_from_presence(presence_from_strata(CHAIN))
    doubled = [s.with_objects(s.objects + s.objects) for s in scenes]
    a = tables_lib.build_tables(scenes)
    b = tables_lib.build_tables(doubled)
    onp.testing.assert_array_equal(a.triple, b.triple)


class SkeletonTest(absltest.TestCase):

  def test_conditionally_independent_pair_has_no_edge(self):
    tables = tables_lib.build_tables(
        scenes_from_presence(presence_from_strata(CHAIN)))
    skeleton = structure.dependence_skeleton(tables)
    self.assertFalse(skeleton.adjacent('chair', 'lamp'))
    self.assertTrue(skeleton.has_undirected('chair', 'desk'))
    self.assertTrue(skeleton.has_undirected('desk', 'lamp'))

  def test_coupled_pair_has_edge(self):
    tables = tables_lib.tables_from_presence(presence_from_strata(COUPLED),
                                             CATEGORIES)
    skeleton = structure.dependence_skeleton(tables)
    self.assertTrue(skeleton.has_undirected('chair', 'lamp'))

  def test_never_cooccurring_pair_has_no_edge(self):
    presence = onp.array([[1, 0], [0, 1]] * 20, dtype=bool)
    tables = tables_lib.tables_from_presence(presence, ('bed', 'crib'))
    self.assertEmpty(structure.dependence_skeleton(tables).undirected_edges)

  def test_two_categories_use_marginal_test(self):
    presence = onp.array([[1, 1]] * 30 + [[0, 0]] * 30 + [[1, 0]] * 2,
                         dtype=bool)
    tables = tables_lib.tables_from_presence(presence, ('bed', 'nightstand'))
    skeleton = structure.dependence_skeleton(tables)
    self.assertTrue(skeleton.has_undirected('bed', 'nightstand'))

  def test_tau_out_of_range(self):
    tables = tables_lib.tables_from_presence(presence_from_strata(CHAIN),
                                             CATEGORIES)
    with self.assertRaises(ValueError):
      structure.dependence_skeleton(tables, tau=1.5)

  def test_common_parent_recovery(self):
    recovered = 0
    for seed in range(100):
      rng = onp.random.default_rng(seed)
      desk = rng.random(2000) < 0.5
      chair = rng.random(2000) < onp.where(desk, 0.8, 0.1)
      lamp = rng.random(2000) < onp.where(desk, 0.8, 0.1)
      tables = tables_lib.tables_from_presence(
          onp.stack([chair, desk, lamp], axis=1), CATEGORIES)
      g = structure.ic_orient(structure.dependence_skeleton(tables, tau=0.01))
      if (g.directed_edges == [('desk', 'chair'), ('desk', 'lamp')] and
          not g.undirected_edges):
        recovered += 1
    self.assertGreaterEqual(recovered, 95)


class OrientTest(absltest.TestCase):

  def test_common_parent(self):
    skeleton = graph_lib.CausalGraph.from_edges(
        undirected=[('chair', 'desk'), ('desk', 'lamp')])
    g = structure.ic_orient(skeleton)
    self.assertEqual(g.directed_edges, [('desk', 'chair'), ('desk', 'lamp')])

  def test_result_is_acyclic_and_fully_directed(self):
    skeleton = graph_lib.CausalGraph.from_edges(
        undirected=[('a', 'b'), ('b', 'c'), ('c', 'a'), ('c', 'd')])
    g = structure.ic_orient(skeleton)
    self.assertEmpty(g.undirected_edges)
    self.assertLen(g.directed_edges, 4)
    self.assertTrue(g.is_acyclic())

  def test_prior_edges_are_kept(self):
    skeleton = graph_lib.CausalGraph.from_edges(undirected=[('bed', 'lamp')])
    prior = graph_lib.CausalGraph.from_edges(directed=[('lamp', 'bed')])
    g = structure.ic_orient(skeleton, prior)
    self.assertEqual(g.directed_edges, [('lamp', 'bed')])


class GeometryTest(absltest.TestCase):

  def _scene(self, cup_z):
    room = ObjectInstance.create(ROOM, [0., 0., 1.5], 0., [6., 5., 3.])
    table = ObjectInstance.create('table', [0., 0., 0.4], 0., [1., 1., 0.8])
    cup = ObjectInstance.create('cup', [0.1, 0., cup_z], 0., [.1, .1, .1])
    return Scene.create(room, [table, cup])

  def test_support_edge(self):
    g = structure.geometric_edges([self._scene(0.85)] * 4)
    self.assertEqual(g.directed_edges, [('table', 'cup')])

  def test_ratio_threshold(self):
    scenes = [self._scene(0.85)] + [self._scene(2.)] * 4
    self.assertEmpty(structure.geometric_edges(scenes).directed_edges)
    g = structure.geometric_edges(scenes, ratio=0.2)
    self.assertEqual(g.directed_edges, [('table', 'cup')])

  def test_enclosure(self):
    room = ObjectInstance.create(ROOM, [0., 0., 1.5], 0., [6., 5., 3.])
    shelf = ObjectInstance.create('shelf', [0., 0., 1.], 0., [1., .5, 2.])
    book = ObjectInstance.create('book', [0., 0., 1.], 0.3, [.2, .15, .25])
    self.assertTrue(structure.encloses(shelf, book))
    self.assertFalse(structure.encloses(book, shelf))
    g = structure.geometric_edges([Scene.create(room, [shelf, book])])
    self.assertEqual(g.directed_edges, [('shelf', 'book')])


class GraphTest(absltest.TestCase):

  def test_cycle_rejected(self):
    g = graph_lib.CausalGraph.from_edges(directed=[('a', 'b'), ('b', 'c')])
    with self.assertRaises(ValueError):
      g.add_directed('c', 'a')

  def test_text_round_trip(self):
    g = graph_lib.CausalGraph.from_edges(
        directed=[('bed', 'nightstand')], undirected=[('chair', 'table')],
        nodes=['lamp'])
    text = g.to_text()
    self.assertEqual(text, 'bed -> nightstand\nchair -- table\nlamp\n')
    self.assertEqual(graph_lib.parse_graph(text), g)

  def test_file_round_trip(self):
    path = os.path.join(self.create_tempdir().full_path, 'graph.txt')
    g = graph_lib.CausalGraph.from_edges(directed=[('desk', 'chair')])
    graph_lib.save_graph(path, g)
    self.assertEqual(graph_lib.load_graph(path), g)

  def test_parse_error_names_line(self):
    with self.assertRaisesRegex(graph_lib.GraphParseError, 'g.txt:2'):
      graph_lib.parse_graph('a -> b\na => b\n', 'g.txt')

  def test_union_skips_cycles(self):
    g1 = graph_lib.CausalGraph.from_edges(directed=[('a', 'b'), ('b', 'c')])
    g2 = graph_lib.CausalGraph.from_edges(directed=[('c', 'a'), ('c', 'd')])
    g = structure.union_acyclic(g1, g2)
    self.assertEqual(g.directed_edges, [('a', 'b'), ('b', 'c'), ('c', 'd')])
    self.assertTrue(g.is_acyclic())

  def test_union_orients_undirected(self):
    g1 = graph_lib.CausalGraph.from_edges(undirected=[('table', 'cup')])
    g2 = graph_lib.CausalGraph.from_edges(directed=[('table', 'cup')])
    g = structure.union_acyclic(g1, g2)
    self.assertEqual(g.directed_edges, [('table', 'cup')])
    self.assertEmpty(g.undirected_edges)


class DiscoverTest(absltest.TestCase):

  def test_deterministic(self):
    scenes = scenes_from_presence(presence_from_strata(CHAIN))
    self.assertEqual(structure.discover(scenes).to_text(),
                     structure.discover(scenes).to_text())

  def test_chain_corpus(self):
    scenes = scenes_from_presence(presence_from_strata(CHAIN))
    g = structure.discover(scenes)
    self.assertEqual(g.directed_edges, [('desk', 'chair'), ('desk', 'lamp')])


if __name__ == '__main__':
  absltest.main()
