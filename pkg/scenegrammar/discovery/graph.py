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

"""Mixed causal graphs over object categories.

Text format, one entry per line, lines sorted:

  bed -> nightstand
  chair -- table
  lamp
"""

from typing import FrozenSet, Iterable, List, Set, Tuple

import networkx as nx
from tensorflow.io import gfile

DIRECTED = '->'
UNDIRECTED = '--'


class GraphParseError(ValueError):
  """A graph file could not be parsed; message starts with path:line."""


class CausalGraph:
  """Categories joined by directed (a -> b) or undirected (a -- b) edges.

  The directed part never contains a cycle and there are no self loops.
  """

  def __init__(self, nodes: Iterable[str] = ()):
    self._nodes: Set[str] = set(nodes)
    self._directed: Set[Tuple[str, str]] = set()
    self._undirected: Set[FrozenSet[str]] = set()

  @classmethod
  def from_edges(cls, directed: Iterable[Tuple[str, str]] = (),
                 undirected: Iterable[Tuple[str, str]] = (),
                 nodes: Iterable[str] = ()) -> 'CausalGraph':
    g = cls(nodes)
    for a, b in undirected:
      g.add_undirected(a, b)
    for a, b in directed:
      g.add_directed(a, b)
    return g

  def copy(self) -> 'CausalGraph':
    g = CausalGraph(self._nodes)
    g._directed = set(self._directed)  # pylint:disable=protected-access
    g._undirected = set(self._undirected)  # pylint:disable=protected-access
    return g

  @property
  def nodes(self) -> Tuple[str, ...]:
    return tuple(sorted(self._nodes))

  @property
  def directed_edges(self) -> List[Tuple[str, str]]:
    return sorted(self._directed)

  @property
  def undirected_edges(self) -> List[Tuple[str, str]]:
    return sorted(tuple(sorted(e)) for e in self._undirected)

  def add_node(self, node: str):
    self._nodes.add(node)

  def add_undirected(self, a: str, b: str):
    if a == b:
      raise ValueError(f'self loop on {a}')
    if self.adjacent(a, b):
      return
    self._nodes.update((a, b))
    self._undirected.add(frozenset((a, b)))

  def add_directed(self, a: str, b: str):
    """Adds a -> b, replacing an undirected a -- b.

    Raises:
      ValueError: on self loops, if b -> a exists, or if the edge closes a
        directed cycle.
    """
    if a == b:
      raise ValueError(f'self loop on {a}')
    if (b, a) in self._directed:
      raise ValueError(f'{b} -> {a} already present')
    if self.creates_cycle(a, b):
      raise ValueError(f'{a} -> {b} closes a directed cycle')
    self._nodes.update((a, b))
    self._undirected.discard(frozenset((a, b)))
    self._directed.add((a, b))

  def orient(self, a: str, b: str):
    """Turns the undirected edge a -- b into a -> b."""
    if frozenset((a, b)) not in self._undirected:
      raise ValueError(f'no undirected edge {a} -- {b}')
    self.add_directed(a, b)

  def has_directed(self, a: str, b: str) -> bool:
    return (a, b) in self._directed

  def has_undirected(self, a: str, b: str) -> bool:
    return frozenset((a, b)) in self._undirected

  def adjacent(self, a: str, b: str) -> bool:
    return (self.has_undirected(a, b) or self.has_directed(a, b) or
            self.has_directed(b, a))

  def neighbors(self, a: str) -> Set[str]:
    out = {y for x, y in self._directed if x == a}
    out |= {x for x, y in self._directed if y == a}
    out |= {y for e in self._undirected if a in e for y in e if y != a}
    return out

  def successors(self, a: str) -> List[str]:
    return sorted(y for x, y in self._directed if x == a)

  def out_degree(self, a: str) -> int:
    return sum(1 for x, _ in self._directed if x == a)

  def in_degree(self, a: str) -> int:
    return sum(1 for _, y in self._directed if y == a)

  def to_networkx(self) -> nx.DiGraph:
    """Returns the directed part as a networkx DiGraph over all nodes."""
    g = nx.DiGraph()
    g.add_nodes_from(sorted(self._nodes))
    g.add_edges_from(sorted(self._directed))
    return g

  def creates_cycle(self, a: str, b: str) -> bool:
    """Whether adding a -> b would close a directed cycle."""
    if a not in self._nodes or b not in self._nodes:
      return False
    return nx.has_path(self.to_networkx(), b, a)

  def is_acyclic(self) -> bool:
    return nx.is_directed_acyclic_graph(self.to_networkx())

  def to_text(self) -> str:
    lines = [f'{a} {DIRECTED} {b}' for a, b in self._directed]
    lines += [f'{a} {UNDIRECTED} {b}' for a, b in self.undirected_edges]
    touched = {n for e in self._directed for n in e}
    touched |= {n for e in self._undirected for n in e}
    lines += [n for n in self._nodes if n not in touched]
    return ''.join(line + '\n' for line in sorted(lines))

  def __eq__(self, other) -> bool:
    # pylint:disable=protected-access
    return (isinstance(other, CausalGraph) and self._nodes == other._nodes and
            self._directed == other._directed and
            self._undirected == other._undirected)

  def __repr__(self) -> str:
    return (f'CausalGraph({len(self._nodes)} nodes, {len(self._directed)} '
            f'directed, {len(self._undirected)} undirected)')


def parse_graph(text: str, path: str = '<string>') -> CausalGraph:
  g = CausalGraph()
  for lineno, line in enumerate(text.splitlines(), start=1):
    line = line.split('#', 1)[0].strip()
    if not line:
      continue
    tokens = line.split()
    try:
      if len(tokens) == 1:
        g.add_node(tokens[0])
      elif len(tokens) == 3 and tokens[1] == DIRECTED:
        g.add_directed(tokens[0], tokens[2])
      elif len(tokens) == 3 and tokens[1] == UNDIRECTED:
        g.add_undirected(tokens[0], tokens[2])
      else:
        raise ValueError(f'expected "a -> b", "a -- b" or a node, got {line!r}')
    except ValueError as e:
      raise GraphParseError(f'{path}:{lineno}: {e}') from e
  return g


def save_graph(path: str, graph: CausalGraph):
  with gfile.GFile(path, 'w') as f:
    f.write(graph.to_text())


def load_graph(path: str) -> CausalGraph:
  with gfile.GFile(path, 'r') as f:
    return parse_graph(f.read(), path)
