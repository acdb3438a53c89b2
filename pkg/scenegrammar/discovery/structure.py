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

"""Causal structure over object categories.

Edges come from two sources: conditional dependence between category
presences (oriented into common-parent structures, then propagated without
cycles) and geometric relations between boxes (support and enclosure). The two
graphs are merged without ever closing a directed cycle.
"""

import collections
import itertools
from typing import Optional, Sequence

from absl import logging
import numpy as onp

from scenegrammar.discovery import tables as tables_lib
from scenegrammar.discovery.graph import CausalGraph
from scenegrammar.scene import math
from scenegrammar.scene.base import ObjectInstance, Scene

DEFAULT_TAU = 0.05
DEFAULT_SUPPORT_TOL = 0.05
DEFAULT_ENCLOSE_MARGIN = 0.05
DEFAULT_RATIO = 0.3


def dependence_skeleton(tables: tables_lib.CooccurrenceTables,
                        tau: float = DEFAULT_TAU,
                        yates: bool = False) -> CausalGraph:
  """Joins every pair whose dependence survives all conditioning categories.

  Pairs that never co-occur are left apart. Conditioning categories that are
  constant over the corpus are skipped; if every one is skipped the pair is
  judged by an unconditional test.

  Args:
    tables: co-occurrence tables
    tau: significance level; p < tau rejects independence
    yates: apply the continuity correction

  Returns:
    A graph with undirected edges only.
  """
  if not 0. < tau < 1.:
    raise ValueError(f'tau must lie in (0, 1), got {tau}')
  g = CausalGraph(tables.categories)
  cats = tables.categories
  for j, jp in itertools.combinations(cats, 2):
    if tables.pair[tables.index(j), tables.index(jp)] == 0:
      continue
    tested, dependent = 0, True
    for k in cats:
      if k in (j, jp):
        continue
      try:
        _, p = tables_lib.chi2_statistic(tables, j, jp, k, yates)
      except tables_lib.DegenerateStratumError:
        continue
      tested += 1
      if p >= tau:
        dependent = False
        break
    if not tested:
      _, p = tables_lib.marginal_chi2(tables, j, jp, yates)
      dependent = p < tau
    if dependent:
      g.add_undirected(j, jp)
  logging.info('dependence skeleton: %d categories, %d edges', len(cats),
               len(g.undirected_edges))
  return g


def _mark(g: CausalGraph, k: str, x: str) -> str:
  if g.has_directed(k, x):
    return 'out'
  if g.has_directed(x, k):
    return 'in'
  return 'none'


def _new_common_parent(g: CausalGraph, u: str, v: str) -> bool:
  """Whether u -> v would give u two children that are not adjacent."""
  return any(w != v and not g.adjacent(v, w) for w in g.successors(u))


def ic_orient(skeleton: CausalGraph,
              prior: Optional[CausalGraph] = None) -> CausalGraph:
  """Orients a skeleton's edges.

  Prior directed edges are applied first. Every non-adjacent pair x, y with a
  common neighbour k becomes x <- k -> y unless one of its edges already
  points into k. The remaining undirected edges are then oriented smallest
  first, preferring the lexicographic direction, never closing a cycle and
  avoiding new common-parent structures where possible.

  Args:
    skeleton: the graph to orient
    prior: optional directed edges to impose before orienting

  Returns:
    A new graph with every edge directed and no directed cycle.
  """
  g = skeleton.copy()
  if prior is not None:
    for a, b in prior.directed_edges:
      if g.has_undirected(a, b) and not g.creates_cycle(a, b):
        g.orient(a, b)

  for x, y in itertools.combinations(g.nodes, 2):
    if g.adjacent(x, y):
      continue
    for k in sorted(g.neighbors(x) & g.neighbors(y)):
      marks = (_mark(g, k, x), _mark(g, k, y))
      if 'in' in marks:
        continue
      for child in (x, y):
        if g.has_undirected(k, child) and not g.creates_cycle(k, child):
          g.orient(k, child)

  while g.undirected_edges:
    a, b = g.undirected_edges[0]
    acyclic = [(u, v) for u, v in ((a, b), (b, a))
               if not g.creates_cycle(u, v)]
    faithful = [(u, v) for u, v in acyclic if not _new_common_parent(g, u, v)]
    u, v = (faithful or acyclic)[0]
    g.orient(u, v)
  return g


def supports(lower: ObjectInstance, upper: ObjectInstance,
             tol: float = DEFAULT_SUPPORT_TOL) -> bool:
  """Whether upper rests on lower: touching faces and overlapping footprints."""
  _, top = math.z_range(lower)
  bottom, _ = math.z_range(upper)
  return abs(bottom - top) <= tol and math.footprint_overlap(lower, upper) > 0.


def encloses(outer: ObjectInstance, inner: ObjectInstance,
             margin: float = DEFAULT_ENCLOSE_MARGIN) -> bool:
  """Whether inner lies inside the larger box outer grown by margin."""
  if outer.shape.volume <= inner.shape.volume:
    return False
  return bool(onp.all(math.contains_points(outer, math.corners(inner), margin)))


def geometric_edges(scenes: Sequence[Scene],
                    support_tol: float = DEFAULT_SUPPORT_TOL,
                    enclose_margin: float = DEFAULT_ENCLOSE_MARGIN,
                    ratio: float = DEFAULT_RATIO) -> CausalGraph:
  """Adds A -> B where B rests on or inside A often enough.

  Args:
    scenes: the corpus
    support_tol: largest gap between A's top and B's bottom
    enclose_margin: growth of A before testing containment
    ratio: least fraction of the scenes holding both categories in which the
      relation must hold

  Returns:
    A graph with directed edges only, added in lexicographic order and
    skipping any that would close a cycle.
  """
  if support_tol <= 0. or enclose_margin <= 0.:
    raise ValueError('geometric tolerances must be positive')
  both = collections.Counter()
  related = collections.Counter()
  for scene in scenes:
    cats = sorted(scene.category_set())
    for a, b in itertools.permutations(cats, 2):
      both[(a, b)] += 1
    found = set()
    for x, y in itertools.permutations(scene.objects, 2):
      if x.category == y.category or (x.category, y.category) in found:
        continue
      if supports(x, y, support_tol) or encloses(x, y, enclose_margin):
        found.add((x.category, y.category))
    related.update(found)
  g = CausalGraph(c for s in scenes for c in s.categories)
  for (a, b), n in sorted(related.items()):
    if n / both[(a, b)] < ratio:
      continue
    if g.has_directed(b, a) or g.creates_cycle(a, b):
      logging.info('skipping geometric edge %s -> %s: would close a cycle',
                   a, b)
      continue
    g.add_directed(a, b)
  return g


def union_acyclic(g1: CausalGraph, g2: CausalGraph) -> CausalGraph:
  """Merges g2 into g1 without closing a directed cycle.

  g2's directed edges are added in lexicographic order; an edge that would
  close a cycle is skipped, and one matching an undirected edge of g1 orients
  it. g2's undirected edges are added where g1 has no edge.
  """
  g = g1.copy()
  for node in g2.nodes:
    g.add_node(node)
  for a, b in g2.directed_edges:
    if g.has_directed(a, b):
      continue
    if g.has_directed(b, a) or g.creates_cycle(a, b):
      logging.info('skipping edge %s -> %s: would close a cycle', a, b)
      continue
    g.add_directed(a, b)
  for a, b in g2.undirected_edges:
    g.add_undirected(a, b)
  return g


def discover(scenes: Sequence[Scene],
             tau: float = DEFAULT_TAU,
             support_tol: float = DEFAULT_SUPPORT_TOL,
             enclose_margin: float = DEFAULT_ENCLOSE_MARGIN,
             ratio: float = DEFAULT_RATIO,
             yates: bool = False,
             prior: Optional[CausalGraph] = None,
             categories: Optional[Sequence[str]] = None) -> CausalGraph:
  """Runs the full discovery pipeline over a corpus."""
  tables = tables_lib.build_tables(scenes, categories)
  oriented = ic_orient(dependence_skeleton(tables, tau, yates), prior)
  geometric = geometric_edges(scenes, support_tol, enclose_margin, ratio)
  g = union_acyclic(oriented, geometric)
  assert g.is_acyclic()
  logging.info('causal graph: %d directed, %d undirected edges',
               len(g.directed_edges), len(g.undirected_edges))
  return g
