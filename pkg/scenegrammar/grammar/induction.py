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
"""Greedy grammar induction from a causal graph.

Categories that mostly cause others become anchors. Each anchor contributes a
block of rules; anchors are added one at a time, picking the block with the
largest coverage gain, until enough of the corpus is derivable.
"""

import collections
import dataclasses
from typing import AbstractSet, Dict, Iterable, List, Optional, Sequence, Tuple

from absl import logging

from scenegrammar.discovery.graph import CausalGraph
from scenegrammar.grammar.base import Grammar, InvalidGrammarError, Rule, SCENE
from scenegrammar.grammar.base import is_terminal, make_rule, nonterminal_for
from scenegrammar.scene.base import ROOM, Scene

DEFAULT_P = 0.8
DEFAULT_EPS = 0.5
COVERAGE_MODES = ('scenes', 'mean_ratio')


class EmptyGraphError(ValueError):
  """Induction was asked to run on a graph without categories."""


def candidate_nonterminals(graph: CausalGraph,
                           eps: float = DEFAULT_EPS) -> List[str]:
  """Returns categories with out_degree / (in_degree + eps) > 1, sorted."""
  if not 0. < eps < 1.:
    raise ValueError(f'eps must lie in (0, 1), got {eps}')
  out = []
  for node in graph.nodes:
    if graph.out_degree(node) / (graph.in_degree(node) + eps) <= 1.:
      continue
    try:
      nonterminal_for(node)
    except InvalidGrammarError:
      logging.warning('category %r cannot become a non-terminal', node)
      continue
    out.append(node)
  return out


def start_rule() -> Rule:
  return make_rule('S', (ROOM, SCENE))


def rules_for(anchor: str, graph: CausalGraph,
              anchors: Optional[AbstractSet[str]] = None) -> List[Rule]:
  """Returns the block of rules an anchor contributes.

  The block holds, in order: SCENE -> a A SCENE, the self repeat A -> a A, one
  rule per out-neighbour b in sorted order (A -> b B A when b is itself an
  anchor, A -> b A otherwise) and A -> None.

  Args:
    anchor: the anchor category
    graph: the causal graph
    anchors: the anchor set; defaults to {anchor}

  Returns:
    The rules.
  """
  anchors = {anchor} if anchors is None else anchors
  nt = nonterminal_for(anchor)
  rules = [make_rule(SCENE, (anchor, nt, SCENE)), make_rule(nt, (anchor, nt))]
  for b in graph.successors(anchor):
    if not is_terminal(b):
      logging.warning('skipping neighbour %r of %s: not a lower-case name', b,
                      anchor)
      continue
    if b in anchors:
      rules.append(make_rule(nt, (b, nonterminal_for(b), nt)))
    else:
      rules.append(make_rule(nt, (b, nt)))
  rules.append(make_rule(nt, ('None',)))
  return rules


def derivable_terminals(present: AbstractSet[str],
                         rules: Iterable[Rule]) -> AbstractSet[str]:
  """Returns the present categories some derivation can emit.

  A non-terminal opens once a present instance of its category is emitted by
  a rule that opens it; SCENE is open from the start.
  """
  rules = list(rules)
  opened = {SCENE}
  derivable = {ROOM}
  changed = True
  while changed:
    changed = False
    for rule in rules:
      t = rule.terminal
      if rule.lhs not in opened or t is None or t not in present:
        continue
      if t not in derivable:
        derivable.add(t)
        changed = True
      if rule.opens and rule.opens not in opened:
        opened.add(rule.opens)
        changed = True
  return derivable


class _Corpus:
  """Per-scene category counts, the only thing coverage depends on."""

  def __init__(self, scenes: Sequence[Scene]):
    self.counts = [collections.Counter(s.categories) for s in scenes]
    self.sizes = [len(s.objects) + 1 for s in scenes]

  def ratios(self, rules: Sequence[Rule]) -> List[float]:
    out = []
    for counts, size in zip(self.counts, self.sizes):
      present = set(counts) | {ROOM}
      derivable = derivable_terminals(present, rules)
      covered = 1 + sum(n for c, n in counts.items() if c in derivable)
      out.append(covered / size)
    return out


def coverage_ratios(scenes: Sequence[Scene],
                    rules: Sequence[Rule]) -> List[float]:
  """Returns |Y_i| / |I_i| per scene, counting the room as an instance."""
  return _Corpus(scenes).ratios(rules)


def coverage(ratios: Sequence[float], p: float, mode: str = 'scenes') -> float:
  """Summarizes per-scene ratios.

  Args:
    ratios: per-scene covered fractions
    p: threshold above which a scene counts as covered
    mode: 'scenes' gives the fraction of scenes with ratio > p, 'mean_ratio'
      the mean ratio

  Returns:
    The coverage; 1 for an empty corpus.
  """
  if mode not in COVERAGE_MODES:
    raise ValueError(f'unknown coverage mode {mode!r}')
  if not ratios:
    return 1.
  if mode == 'scenes':
    return sum(1 for r in ratios if r > p) / len(ratios)
  return sum(ratios) / len(ratios)


def _gain(candidate_rules, all_rules, current_ratios, corpus: _Corpus,
          p: float) -> float:
  uncovered = [i for i, r in enumerate(current_ratios) if not r > p]
  if not uncovered:
    return 0.
  ratios = corpus.ratios(all_rules)
  return sum(ratios[i] for i in uncovered) / len(candidate_rules)


def coverage_gain(candidate_rules: Sequence[Rule],
                  current_rules: Sequence[Rule],
                  scenes: Sequence[Scene],
                  p: float = DEFAULT_P) -> float:
  """Coverage gain of adding a block of rules.

  Sums, over scenes not yet covered above p by current_rules, the fraction of
  each scene derivable with both rule sets, divided by the block size.
  """
  corpus = _Corpus(scenes)
  current = list(current_rules)
  return _gain(candidate_rules, current + list(candidate_rules),
               corpus.ratios(current), corpus, p)


def _assemble(anchors: Sequence[str], graph: CausalGraph) -> List[Rule]:
  rules = [start_rule()]
  for a in anchors:
    rules.extend(rules_for(a, graph, set(anchors)))
  rules.append(make_rule(SCENE, ('None',)))
  return rules


@dataclasses.dataclass(frozen=True)
class InductionResult:
  """Outcome of p_cover.

  Attributes:
    grammar: the induced grammar
    anchors: anchor categories in selection order
    coverage: final coverage under the chosen mode
    gains: gain of each selected anchor
  """
  grammar: Grammar
  anchors: Tuple[str, ...]
  coverage: float
  gains: Tuple[float, ...]


def p_cover(scenes: Sequence[Scene],
            graph: CausalGraph,
            p: float = DEFAULT_P,
            eps: float = DEFAULT_EPS,
            coverage_mode: str = 'scenes',
            candidates: Optional[Sequence[str]] = None,
            progress_fn=None) -> InductionResult:
  """Greedily selects anchors until the corpus is p-covered.

  Args:
    scenes: the corpus
    graph: causal graph over its categories
    p: coverage target
    eps: degree-ratio smoothing for candidate selection
    coverage_mode: 'scenes' or 'mean_ratio', see coverage()
    candidates: anchor candidates to use instead of the degree-ratio test
    progress_fn: optional callable(step, metrics) invoked after each selection

  Returns:
    The induction result. The grammar holds S -> scene SCENE, then each
    anchor's block in selection order, then SCENE -> None.

  Raises:
    EmptyGraphError: if the graph has no nodes.
  """
  if not graph.nodes:
    raise EmptyGraphError('cannot induce a grammar from an empty graph')
  if not 0. <= p <= 1.:
    raise ValueError(f'p must lie in [0, 1], got {p}')
  corpus = _Corpus(scenes)
  if candidates is None:
    remaining = candidate_nonterminals(graph, eps)
  else:
    remaining = sorted(set(candidates))
  if not remaining:
    logging.warning('no candidate anchors in a graph of %d categories',
                    len(graph.nodes))
  selected: List[str] = []
  gains: List[float] = []
  current = _assemble(selected, graph)
  ratios = corpus.ratios(current)
  cov = coverage(ratios, p, coverage_mode)
  while cov < p and remaining:
    best: Optional[Tuple[float, str]] = None
    for a in remaining:
      block = rules_for(a, graph, set(selected) | {a})
      g = _gain(block, _assemble(selected + [a], graph), ratios, corpus, p)
      if best is None or g > best[0]:
        best = (g, a)
    if best is None or best[0] <= 0.:
      break
    gain, anchor = best
    selected.append(anchor)
    remaining.remove(anchor)
    gains.append(gain)
    current = _assemble(selected, graph)
    ratios = corpus.ratios(current)
    cov = coverage(ratios, p, coverage_mode)
    logging.info('anchor %d: %s, gain %.4f, coverage %.4f', len(selected),
                 anchor, gain, cov)
    if progress_fn:
      progress_fn(len(selected), {'gain': gain, 'coverage': cov})
  grammar = Grammar(_assemble(selected, graph))
  return InductionResult(grammar, tuple(selected), cov, tuple(gains))


def summarize(result: InductionResult) -> Dict[str, object]:
  return {'anchors': list(result.anchors),
          'coverage': result.coverage,
          'gains': list(result.gains),
          'num_rules': result.grammar.num_rules,
          'fingerprint': result.grammar.fingerprint}
