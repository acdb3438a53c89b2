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
"""Conversion between scenes and attributed rule sequences.

A scene is parsed into the unique leftmost derivation of a scene grammar. Each
rule that emits a terminal carries an 8-vector of attributes: the emitted
object's pose relative to the reference pose of the non-terminal being
expanded (dx, dy, dz, sin yaw, cos yaw) and its box size (w, d, h). The
reference pose of a non-terminal is the most recently emitted terminal of its
own category; for SCENE it is the room.

Decoding runs the same non-terminal stack: at every step only rules whose
left-hand side is the stack top (and that still leave room to finish the
derivation) are allowed, so any logits decode to a valid scene.
"""

import dataclasses
import functools
from typing import Dict, List, Optional, Sequence, Tuple

from absl import logging
import numpy as onp

from scenegrammar.grammar.base import Grammar, R1, R4, SCENE, START
from scenegrammar.grammar.base import category_of
from scenegrammar.scene import math
from scenegrammar.scene.base import BoxShape, ObjectInstance, Pose, Scene

ATTRIBUTE_DIM = 8
DEFAULT_MAX_LENGTH = 40
MIN_SIZE = 1e-3

# Attribute columns.
TRANSLATION = slice(0, 3)
SIN, COS = 3, 4
SIZE = slice(5, 8)


class UnrepresentableCategoryError(ValueError):
  """A scene holds categories the grammar cannot derive."""

  def __init__(self, categories):
    self.categories = tuple(sorted(categories))
    super().__init__(f'categories not derivable by the grammar: '
                     f'{list(self.categories)}')


class SequenceOverflowError(ValueError):
  """A derivation is longer than the maximum sequence length."""


class InvalidSequenceError(ValueError):
  """A rule sequence is not a valid leftmost derivation."""


class FingerprintMismatchError(ValueError):
  """An artifact was built under a different grammar."""


def check_fingerprint(expected: str, actual: str, what: str = 'artifact'):
  if expected != actual:
    raise FingerprintMismatchError(
        f'{what} was built for grammar {actual[:12]}, expected {expected[:12]}')


@dataclasses.dataclass(frozen=True)
class RuleSequence:
  """A padded leftmost derivation with per-rule attributes.

  Attributes:
    rule_ids: int array (T,) of rule indices; padding uses index N-1
    attributes: float array (T, 8)
    fingerprint: fingerprint of the grammar the sequence belongs to
  """
  rule_ids: onp.ndarray
  attributes: onp.ndarray
  fingerprint: str

  @property
  def max_length(self) -> int:
    return int(self.rule_ids.shape[0])


class _Tables:
  """Per-grammar lookup tables shared by masking and decoding."""

  def __init__(self, grammar: Grammar):
    rules = grammar.rules
    self.num_symbols = len(rules) + 1
    self.pad = len(rules)
    self.min_length = min_completion_lengths(grammar)
    self.lhs_mask: Dict[str, onp.ndarray] = {}
    for nt in grammar.non_terminals:
      mask = onp.zeros(self.num_symbols, dtype=bool)
      mask[list(grammar.rules_for_lhs(nt))] = True
      self.lhs_mask[nt] = mask
    self.pad_mask = onp.zeros(self.num_symbols, dtype=bool)
    self.pad_mask[self.pad] = True
    self.rule_cost = onp.full(self.num_symbols, onp.inf)
    for i, rule in enumerate(rules):
      self.rule_cost[i] = 1 + sum(self.min_length[s] for s in rule.nonterminals)
    self.emits = onp.array([r.terminal is not None for r in rules] + [False])
    self.none_rule = {r.lhs: i for i, r in enumerate(rules) if r.kind == R4}
    self.self_rule = {r.lhs: i for i, r in enumerate(rules)
                      if r.is_self_repeat}


@functools.lru_cache(maxsize=32)
def _tables(grammar: Grammar) -> _Tables:
  return _Tables(grammar)


def num_symbols(grammar: Grammar) -> int:
  """One-hot width N: every rule plus the padding index N-1."""
  return grammar.num_rules + 1


def pad_index(grammar: Grammar) -> int:
  return grammar.num_rules


def min_completion_lengths(grammar: Grammar) -> Dict[str, float]:
  """Fewest rules needed to fully expand each non-terminal."""
  best = {nt: onp.inf for nt in grammar.non_terminals}
  changed = True
  while changed:
    changed = False
    for rule in grammar.rules:
      cost = 1 + sum(best[s] for s in rule.nonterminals)
      if cost < best[rule.lhs]:
        best[rule.lhs] = cost
        changed = True
  return best


@dataclasses.dataclass(frozen=True)
class MaskState:
  """Pending non-terminals of a partial leftmost derivation.

  Attributes:
    stack: pending non-terminals, top (leftmost) first
    steps: rules applied so far
    cost: fewest rules needed to expand everything on the stack
  """
  stack: Tuple[str, ...]
  steps: int = 0
  cost: float = 0.

  @classmethod
  def initial(cls, grammar: Grammar) -> 'MaskState':
    return cls(stack=(START,), steps=0,
               cost=_tables(grammar).min_length[START])

  @property
  def done(self) -> bool:
    return not self.stack

  def step(self, rule_index: int, grammar: Grammar) -> 'MaskState':
    """Applies a rule, raising InvalidSequenceError if it does not fit."""
    tables = _tables(grammar)
    if rule_index == tables.pad:
      if self.stack:
        raise InvalidSequenceError(
            f'step {self.steps}: padding while {self.stack[0]} is pending')
      return dataclasses.replace(self, steps=self.steps + 1)
    if not 0 <= rule_index < tables.pad:
      raise InvalidSequenceError(
          f'step {self.steps}: rule index {rule_index} out of range')
    rule = grammar.rules[rule_index]
    if not self.stack:
      raise InvalidSequenceError(
          f'step {self.steps}: rule {rule} after the derivation finished')
    if rule.lhs != self.stack[0]:
      raise InvalidSequenceError(
          f'step {self.steps}: rule {rule} cannot expand {self.stack[0]}')
    added = sum(tables.min_length[s] for s in rule.nonterminals)
    return MaskState(stack=rule.nonterminals + self.stack[1:],
                     steps=self.steps + 1,
                     cost=self.cost - tables.min_length[rule.lhs] + added)


def valid_mask(state: MaskState, grammar: Grammar,
               max_length: Optional[int] = None) -> onp.ndarray:
  """Returns the rules that may follow a partial derivation.

  Args:
    state: the derivation so far
    grammar: the grammar
    max_length: if given, rules that cannot finish the derivation within
      max_length total steps are masked too

  Returns:
    A boolean vector of length N. Bit r is set iff rule r's left-hand side is
    the stack top; an empty stack allows only padding.
  """
  tables = _tables(grammar)
  if not state.stack:
    return tables.pad_mask.copy()
  top = state.stack[0]
  mask = tables.lhs_mask[top].copy()
  if max_length is not None:
    remaining = max_length - state.steps
    rest = state.cost - tables.min_length[top]
    mask &= rest + tables.rule_cost <= remaining
  return mask


def rule_masks(seq: RuleSequence, grammar: Grammar,
               near_horizon: bool = True) -> onp.ndarray:
  """Returns the (T, N) valid masks along a sequence's own derivation."""
  state = MaskState.initial(grammar)
  horizon = seq.max_length if near_horizon else None
  masks = []
  for rule_index in seq.rule_ids:
    masks.append(valid_mask(state, grammar, horizon))
    state = state.step(int(rule_index), grammar)
  return onp.stack(masks)


def attribute_rows(seq: RuleSequence, grammar: Grammar) -> onp.ndarray:
  """Returns a (T,) float mask of rows that carry attributes."""
  return _tables(grammar).emits[seq.rule_ids].astype(onp.float64)


def validate_sequence(seq: RuleSequence, grammar: Grammar):
  """Raises InvalidSequenceError naming the first offending step."""
  check_fingerprint(grammar.fingerprint, seq.fingerprint, 'rule sequence')
  tables = _tables(grammar)
  if seq.attributes.shape != (seq.max_length, ATTRIBUTE_DIM):
    raise InvalidSequenceError(
        f'attributes have shape {seq.attributes.shape}, expected '
        f'({seq.max_length}, {ATTRIBUTE_DIM})')
  state = MaskState.initial(grammar)
  for t, rule_index in enumerate(seq.rule_ids):
    state = state.step(int(rule_index), grammar)
    row = seq.attributes[t]
    if not tables.emits[rule_index]:
      if onp.any(row != 0.):
        raise InvalidSequenceError(f'step {t}: attributes of a None or '
                                   'padding rule must be zero')
    elif abs(row[SIN]**2 + row[COS]**2 - 1.) > 1e-6:
      raise InvalidSequenceError(f'step {t}: sin/cos of yaw not unit length')
  if not state.done:
    raise InvalidSequenceError(
        f'derivation unfinished after {seq.max_length} steps, pending '
        f'{list(state.stack)}')


def is_valid_sequence(seq: RuleSequence, grammar: Grammar) -> bool:
  try:
    validate_sequence(seq, grammar)
  except (InvalidSequenceError, FingerprintMismatchError):
    return False
  return True


def _owner_rules(categories, grammar: Grammar):
  """Assigns each present category the rule that emits it.

  Repeatedly picks, over all unassigned categories, the earliest rule whose
  left-hand side is already open. Categories left without an owner are
  returned separately.
  """
  options = {c: [] for c in categories}
  for i, rule in enumerate(grammar.rules):
    if (rule.terminal in options and rule.kind != R4 and
        not rule.is_self_repeat):
      options[rule.terminal].append(i)
  opened = {SCENE}
  owners = {}
  pending = set(categories)
  while pending:
    best = None
    for c in pending:
      for i in options[c]:
        if grammar.rules[i].lhs in opened:
          if best is None or i < best[0]:
            best = (i, c)
          break
    if best is None:
      break
    i, c = best
    owners[c] = i
    pending.discard(c)
    if grammar.rules[i].opens:
      opened.add(grammar.rules[i].opens)
  return owners, pending


def _derive(scene: Scene, grammar: Grammar):
  """Returns the leftmost derivation of a scene.

  Returns:
    A list of (rule index, emitted instance or None, reference pose) triples.
  """
  owners, missing = _owner_rules(set(scene.categories), grammar)
  if missing:
    raise UnrepresentableCategoryError(missing)
  tables = _tables(grammar)
  rules = grammar.rules
  remaining: Dict[str, List[ObjectInstance]] = {}
  for obj in scene.objects:
    remaining.setdefault(obj.category, []).append(obj)
  owned: Dict[str, List[str]] = {}
  for c, i in owners.items():
    owned.setdefault(rules[i].lhs, []).append(c)

  def by_heading(objects, ref: Pose):
    keyed = [(math.heading(ref, o.pose.center),
              float(onp.linalg.norm(o.pose.center - ref.center)), n, o)
             for n, o in enumerate(objects)]
    return [k[-1] for k in sorted(keyed, key=lambda k: k[:3])]

  out = []

  def expand(nt: str, ref: Pose):
    nt_category = category_of(nt)
    groups = [(owners[c], c) for c in owned.get(nt, [])]
    if nt in tables.self_rule:
      groups.append((tables.self_rule[nt], nt_category))
    for rule_index, c in sorted(groups):
      rule = rules[rule_index]
      pool = by_heading(remaining.get(c, []), ref)
      if not pool:
        continue
      if rule.is_self_repeat:
        remaining[c] = []
        for obj in pool:
          out.append((rule_index, obj, ref))
          ref = obj.pose
      elif rule.opens and rule.opens in tables.self_rule:
        remaining[c] = pool[1:]
        out.append((rule_index, pool[0], ref))
        expand(rule.opens, pool[0].pose)
      else:
        remaining[c] = []
        for obj in pool:
          out.append((rule_index, obj, ref))
          if rule.opens:
            expand(rule.opens, obj.pose)
    out.append((tables.none_rule[nt], None, ref))

  r1 = grammar.rules_for_lhs(START)[0]
  out.append((r1, scene.room, Pose.identity()))
  expand(SCENE, scene.room.pose)
  return out


def canonical_order(scene: Scene, grammar: Grammar) -> Scene:
  """Reorders a scene's objects into the grammar's derivation order.

  Categories follow the precedence of the rules that emit them; several
  instances of one category under the same parent are swept anti-clockwise
  from the parent's yaw axis.

  Args:
    scene: the scene
    grammar: the grammar

  Returns:
    The same scene with objects in derivation order.
  """
  derivation = _derive(scene, grammar)
  return scene.with_objects(
      [obj for _, obj, _ in derivation[1:] if obj is not None])


def _attribute_row(obj: ObjectInstance, ref: Pose) -> onp.ndarray:
  rel = math.relative(ref, obj.pose)
  return onp.concatenate([rel.center, [onp.sin(rel.yaw), onp.cos(rel.yaw)],
                          obj.shape.size])


def parse(scene: Scene, grammar: Grammar,
          max_length: int = DEFAULT_MAX_LENGTH) -> RuleSequence:
  """Parses a scene into its padded, attributed leftmost derivation.

  Args:
    scene: the scene; every category must be derivable by the grammar
    grammar: the grammar
    max_length: sequence length T

  Returns:
    The rule sequence.

  Raises:
    UnrepresentableCategoryError: if some category cannot be derived.
    SequenceOverflowError: if the derivation is longer than max_length.
  """
  derivation = _derive(scene, grammar)
  if len(derivation) > max_length:
    raise SequenceOverflowError(
        f'derivation needs {len(derivation)} rules, maximum is {max_length}')
  rule_ids = onp.full(max_length, pad_index(grammar), dtype=onp.int32)
  attributes = onp.zeros((max_length, ATTRIBUTE_DIM))
  for t, (rule_index, obj, ref) in enumerate(derivation):
    rule_ids[t] = rule_index
    if obj is not None:
      attributes[t] = _attribute_row(obj, ref)
  return RuleSequence(rule_ids, attributes, grammar.fingerprint)


def unparse(seq: RuleSequence, grammar: Grammar) -> Scene:
  """Rebuilds a scene by chaining relative poses down the parse tree.

  Args:
    seq: a valid rule sequence
    grammar: the grammar it was built with

  Returns:
    The room plus the objects in derivation order.
  """
  check_fingerprint(grammar.fingerprint, seq.fingerprint, 'rule sequence')
  pad = pad_index(grammar)
  frames: List[Tuple[str, Pose]] = [(START, Pose.identity())]
  room, objects = None, []
  for t, rule_index in enumerate(seq.rule_ids):
    rule_index = int(rule_index)
    if rule_index == pad:
      if frames:
        raise InvalidSequenceError(
            f'step {t}: padding while {frames[0][0]} is pending')
      continue
    if not 0 <= rule_index < pad:
      raise InvalidSequenceError(f'step {t}: rule index {rule_index} '
                                 'out of range')
    rule = grammar.rules[rule_index]
    if not frames or frames[0][0] != rule.lhs:
      pending = frames[0][0] if frames else 'nothing'
      raise InvalidSequenceError(
          f'step {t}: rule {rule} cannot expand {pending}')
    _, ref = frames.pop(0)
    pushed = []
    if rule.terminal is not None:
      row = seq.attributes[t]
      rel = Pose.create(row[TRANSLATION], onp.arctan2(row[SIN], row[COS]))
      pose = math.compose(ref, rel)
      try:
        obj = ObjectInstance(rule.terminal, pose, BoxShape.create(row[SIZE]))
      except ValueError as e:
        raise InvalidSequenceError(f'step {t}: {e}') from e
      if rule.kind == R1:
        room = obj
      else:
        objects.append(obj)
      if rule.is_self_repeat:
        ref = pose
      for symbol in rule.nonterminals:
        pushed.append((symbol, pose if symbol == rule.opens else ref))
    frames[:0] = pushed
  if frames:
    raise InvalidSequenceError(
        f'derivation unfinished, pending {[f[0] for f in frames]}')
  return Scene.create(room, objects)


def select_rule(logits: onp.ndarray, mask: onp.ndarray) -> int:
  """Masked argmax; NaN counts as -inf and ties go to the lowest index."""
  logits = onp.asarray(logits, dtype=onp.float64)
  masked = onp.where(mask & ~onp.isnan(logits), logits, -onp.inf)
  rule_index = int(onp.argmax(masked))
  if not mask[rule_index]:
    rule_index = int(onp.argmax(mask))
  return rule_index


def constrained_decode(logits: onp.ndarray, attributes: onp.ndarray,
                       grammar: Grammar,
                       near_horizon: bool = True) -> RuleSequence:
  """Turns arbitrary decoder outputs into a valid rule sequence.

  At each step the masked argmax over the logits picks the rule (ties go to
  the lowest index). Attribute rows are copied for emitting rules, with the
  yaw sin/cos pair renormalized and sizes kept positive, and zeroed for None
  and padding rules.

  Args:
    logits: (T, N) reals
    attributes: (T, 8) reals
    grammar: the grammar
    near_horizon: also mask rules that could not finish within T steps

  Returns:
    A valid RuleSequence of length T.
  """
  logits = onp.asarray(logits, dtype=onp.float64)
  attributes = onp.clip(
      onp.nan_to_num(onp.asarray(attributes, dtype=onp.float64)), -1e6, 1e6)
  max_length = logits.shape[0]
  tables = _tables(grammar)
  rule_ids = onp.full(max_length, tables.pad, dtype=onp.int32)
  rows = onp.zeros((max_length, ATTRIBUTE_DIM))
  state = MaskState.initial(grammar)
  if max_length < state.cost:
    raise SequenceOverflowError(
        f'the shortest derivation needs {int(state.cost)} rules, sequences '
        f'hold {max_length}')
  for t in range(max_length):
    if state.done:
      break
    mask = valid_mask(state, grammar, max_length if near_horizon else None)
    rule_index = select_rule(logits[t], mask)
    rule_ids[t] = rule_index
    state = state.step(rule_index, grammar)
    if tables.emits[rule_index]:
      rows[t] = _clean_row(attributes[t])
  if not state.done:
    raise SequenceOverflowError(
        f'decoding did not finish within {max_length} rules')
  return RuleSequence(rule_ids, rows, grammar.fingerprint)


def _clean_row(row: onp.ndarray) -> onp.ndarray:
  row = row.copy()
  norm = onp.hypot(row[SIN], row[COS])
  if norm < 1e-12:
    row[SIN], row[COS] = 0., 1.
  else:
    row[SIN], row[COS] = row[SIN] / norm, row[COS] / norm
  row[SIZE] = onp.maximum(row[SIZE], MIN_SIZE)
  return row


def clip_to_grammar(scene: Scene, grammar: Grammar) -> Scene:
  """Drops objects whose categories the grammar cannot derive in this scene."""
  _, missing = _owner_rules(set(scene.categories), grammar)
  if not missing:
    return scene
  return scene.with_objects(o for o in scene.objects
                            if o.category not in missing)


def parse_corpus(scenes: Sequence[Scene], grammar: Grammar,
                 max_length: int = DEFAULT_MAX_LENGTH) -> List[RuleSequence]:
  """Parses a corpus, clipping scenes to the grammar's language.

  Scenes whose derivation overflows max_length are skipped.
  """
  sequences = []
  clipped = skipped = 0
  for scene in scenes:
    kept = clip_to_grammar(scene, grammar)
    if len(kept.objects) != len(scene.objects):
      clipped += 1
    try:
      sequences.append(parse(kept, grammar, max_length))
    except SequenceOverflowError:
      skipped += 1
  if clipped or skipped:
    logging.warning('parsed %d scenes: %d clipped to the grammar, %d skipped '
                    'for overflowing %d rules', len(scenes), clipped, skipped,
                    max_length)
  return sequences
