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

"""Scene grammar rules and their text format.

A scene grammar has four kinds of production:

  R1  S -> scene SCENE                 the room comes first
  R2  SCENE -> bed BED SCENE           an anchor category enters the scene
  R3  BED -> dresser BED               an anchor emits an adjacent category
      BED -> sofa SOFA BED             ... which may itself be an anchor
  R4  BED -> None                      a non-terminal is finished

Non-terminals are upper-case, terminals lower-case. The text format holds one
rule per line (`;` also separates rules), `#` starts a comment.
"""

import dataclasses
import hashlib
from typing import Dict, Iterable, List, Optional, Tuple

from tensorflow.io import gfile

from scenegrammar.scene.base import ROOM

R1, R2, R3, R4 = 'R1', 'R2', 'R3', 'R4'
START = 'S'
SCENE = 'SCENE'
NONE = 'None'

_ARROWS = ('->', '→')


class InvalidGrammarError(ValueError):
  """A rule or rule set violates the grammar invariants."""


class GrammarParseError(InvalidGrammarError):
  """A grammar file could not be parsed; message starts with path:line."""


def is_nonterminal(symbol: str) -> bool:
  return (symbol != NONE and symbol == symbol.upper() and
          symbol != symbol.lower())


def is_terminal(symbol: str) -> bool:
  return symbol == NONE or symbol == symbol.lower()


def nonterminal_for(category: str) -> str:
  """Returns the non-terminal symbol of an anchor category."""
  if category == ROOM:
    return SCENE
  symbol = category.upper()
  if not is_nonterminal(symbol) or symbol in (START, SCENE):
    raise InvalidGrammarError(
        f'category {category!r} cannot name a non-terminal')
  return symbol


def category_of(nonterminal: str) -> str:
  """Returns the category whose instances a non-terminal is anchored on."""
  return ROOM if nonterminal == SCENE else nonterminal.lower()


@dataclasses.dataclass(frozen=True)
class Rule:
  """A production rule.

  Attributes:
    kind: one of R1, R2, R3, R4
    lhs: the non-terminal being expanded
    rhs: the symbols it expands to
  """
  kind: str
  lhs: str
  rhs: Tuple[str, ...]

  @property
  def terminal(self) -> Optional[str]:
    """The emitted category, or None for R4 rules."""
    return None if self.rhs[0] == NONE else self.rhs[0]

  @property
  def nonterminals(self) -> Tuple[str, ...]:
    return tuple(s for s in self.rhs if is_nonterminal(s))

  @property
  def opens(self) -> Optional[str]:
    """The non-terminal this rule opens for its terminal, if any."""
    if len(self.rhs) == 3 or self.kind == R1:
      return self.rhs[1]
    return None

  @property
  def is_self_repeat(self) -> bool:
    return self.kind == R3 and self.terminal == category_of(self.lhs)

  def __str__(self):
    return f'{self.lhs} -> {" ".join(self.rhs)} ;'


def make_rule(lhs: str, rhs: Iterable[str]) -> Rule:
  """Builds a rule, inferring its kind from its shape."""
  rhs = tuple(rhs)
  if not is_nonterminal(lhs):
    raise InvalidGrammarError(
        f'left-hand side {lhs!r} must be an upper-case non-terminal')
  if not rhs:
    raise InvalidGrammarError(f'rule for {lhs} has an empty right-hand side')
  for symbol in rhs:
    if not (is_terminal(symbol) or is_nonterminal(symbol)):
      raise InvalidGrammarError(f'symbol {symbol!r} is neither a terminal '
                                'nor a non-terminal')
  if rhs == (NONE,):
    if lhs == START:
      raise InvalidGrammarError('the start symbol cannot produce None')
    return Rule(R4, lhs, rhs)
  if NONE in rhs:
    raise InvalidGrammarError(f'None must stand alone: {lhs} -> {rhs}')
  if lhs == START:
    if rhs != (ROOM, SCENE):
      raise InvalidGrammarError(f'the start rule must be S -> {ROOM} {SCENE}')
    return Rule(R1, lhs, rhs)
  head = rhs[0]
  if not is_terminal(head) or head == ROOM:
    raise InvalidGrammarError(
        f'rule {lhs} -> {" ".join(rhs)} must begin with an object terminal')
  if lhs == SCENE:
    if len(rhs) != 3 or rhs[2] != SCENE or rhs[1] != nonterminal_for(head):
      raise InvalidGrammarError(
          f'scene rules take the form SCENE -> t T SCENE, got {rhs}')
    return Rule(R2, lhs, rhs)
  if rhs[-1] != lhs:
    raise InvalidGrammarError(f'rule for {lhs} must end with {lhs}: {rhs}')
  if len(rhs) == 2:
    return Rule(R3, lhs, rhs)
  if len(rhs) == 3 and rhs[1] == nonterminal_for(head) and rhs[1] != lhs:
    return Rule(R3, lhs, rhs)
  raise InvalidGrammarError(
      f'object rules take the form {lhs} -> b {lhs} or {lhs} -> b B {lhs}, '
      f'got {rhs}')


class Grammar:
  """A scene grammar: start symbol S and an ordered list of rules.

  The rule order is the one-hot index space of rule sequences and defines the
  precedence the parser uses to order categories.
  """

  start = START

  def __init__(self, rules: Iterable[Rule]):
    self._rules = tuple(rules)
    self.validate()
    self._by_lhs: Dict[str, Tuple[int, ...]] = {}
    for i, rule in enumerate(self._rules):
      self._by_lhs[rule.lhs] = self._by_lhs.get(rule.lhs, ()) + (i,)
    self._fingerprint = hashlib.sha256(self.to_text().encode()).hexdigest()

  def validate(self):
    """Raises InvalidGrammarError unless the grammar invariants hold."""
    r1 = [r for r in self._rules if r.kind == R1]
    if len(r1) != 1:
      raise InvalidGrammarError('a grammar has exactly one start rule')
    if len(set(self._rules)) != len(self._rules):
      raise InvalidGrammarError('duplicate rules')
    lhs = {r.lhs for r in self._rules}
    for rule in self._rules:
      for symbol in rule.nonterminals:
        if symbol not in lhs:
          raise InvalidGrammarError(f'non-terminal {symbol} has no rules')
    for nt in lhs - {START}:
      nones = sum(1 for r in self._rules if r.lhs == nt and r.kind == R4)
      if nones != 1:
        raise InvalidGrammarError(
            f'non-terminal {nt} needs exactly one None rule, has {nones}')
    reached, frontier = {START}, [START]
    while frontier:
      nt = frontier.pop()
      for rule in self._rules:
        if rule.lhs == nt:
          for symbol in rule.nonterminals:
            if symbol not in reached:
              reached.add(symbol)
              frontier.append(symbol)
    unreachable = sorted(lhs - reached)
    if unreachable:
      raise InvalidGrammarError(f'unreachable non-terminals: {unreachable}')

  @property
  def rules(self) -> Tuple[Rule, ...]:
    return self._rules

  @property
  def non_terminals(self) -> Tuple[str, ...]:
    seen = []
    for rule in self._rules:
      if rule.lhs not in seen:
        seen.append(rule.lhs)
    return tuple(seen)

  @property
  def terminals(self) -> Tuple[str, ...]:
    """Categories the grammar can emit, plus `scene` and None."""
    seen = []
    for rule in self._rules:
      if rule.rhs[0] not in seen:
        seen.append(rule.rhs[0])
    return tuple(seen)

  @property
  def categories(self) -> frozenset:
    """Object categories representable by the grammar."""
    return frozenset(t for t in self.terminals if t not in (ROOM, NONE))

  @property
  def anchors(self) -> Tuple[str, ...]:
    return tuple(category_of(nt) for nt in self.non_terminals
                 if nt not in (START, SCENE))

  @property
  def fingerprint(self) -> str:
    return self._fingerprint

  @property
  def num_rules(self) -> int:
    return len(self._rules)

  def rules_for_lhs(self, nonterminal: str) -> Tuple[int, ...]:
    return self._by_lhs.get(nonterminal, ())

  def precedence(self) -> Dict[str, int]:
    """Maps each category to the index of the first rule emitting it."""
    order = {}
    for i, rule in enumerate(self._rules):
      if rule.terminal is not None and rule.terminal not in order:
        order[rule.terminal] = i
    return order

  def to_text(self) -> str:
    return ''.join(str(r) + '\n' for r in self._rules)

  def __len__(self) -> int:
    return len(self._rules)

  def __eq__(self, other) -> bool:
    return isinstance(other, Grammar) and self._rules == other.rules

  def __hash__(self):
    return hash(self._rules)

  def __repr__(self) -> str:
    return f'Grammar({len(self._rules)} rules, {self._fingerprint[:12]})'


def parse_rules(text: str, path: str = '<string>') -> List[Rule]:
  """Parses rules from the grammar text format."""
  rules = []
  for lineno, line in enumerate(text.splitlines(), start=1):
    line = line.split('#', 1)[0]
    for chunk in line.split(';'):
      chunk = chunk.strip()
      if not chunk or chunk == '...':
        continue
      for arrow in _ARROWS:
        if arrow in chunk:
          lhs, _, rhs = chunk.partition(arrow)
          break
      else:
        raise GrammarParseError(f'{path}:{lineno}: missing "->" in {chunk!r}')
      lhs_tokens = lhs.split()
      if len(lhs_tokens) != 1:
        raise GrammarParseError(
            f'{path}:{lineno}: expected one left-hand symbol in {chunk!r}')
      try:
        rules.append(make_rule(lhs_tokens[0], rhs.split()))
      except InvalidGrammarError as e:
        raise GrammarParseError(f'{path}:{lineno}: {e}') from e
  return rules


def save_grammar(path: str, grammar: Grammar):
  with gfile.GFile(path, 'w') as f:
    f.write(grammar.to_text())


def load_grammar(path: str) -> Grammar:
  with gfile.GFile(path, 'r') as f:
    text = f.read()
  rules = parse_rules(text, path)
  try:
    return Grammar(rules)
  except InvalidGrammarError as e:
    raise GrammarParseError(f'{path}: {e}') from e
