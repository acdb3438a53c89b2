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

"""Co-occurrence counts and stratified chi-squared independence tests."""

import dataclasses
from typing import Optional, Sequence, Tuple

import numpy as onp
from scipy import stats

from scenegrammar.scene.base import Scene

CHI2_DOF = 2


class EmptyCorpusError(ValueError):
  """Statistics were requested for a corpus without scenes."""


class DegenerateStratumError(ValueError):
  """The conditioning category is present in no scene or in every scene."""


@dataclasses.dataclass(frozen=True)
class CooccurrenceTables:
  """Binary presence counts over a corpus.

  Attributes:
    categories: category names, in index order
    n_scenes: number of scenes N
    single: (m,) scenes containing category k
    pair: (m, m) scenes containing both j and k
    triple: (m, m, m) scenes containing j, j' and k
  """
  categories: Tuple[str, ...]
  n_scenes: int
  single: onp.ndarray
  pair: onp.ndarray
  triple: onp.ndarray

  def index(self, category: str) -> int:
    return self.categories.index(category)


def presence_matrix(scenes: Sequence[Scene],
                    categories: Sequence[str]) -> onp.ndarray:
  """Returns the (N, m) boolean matrix of category presence per scene."""
  column = {c: i for i, c in enumerate(categories)}
  x = onp.zeros((len(scenes), len(categories)), dtype=bool)
  for n, scene in enumerate(scenes):
    for c in scene.category_set():
      if c in column:
        x[n, column[c]] = True
  return x


def build_tables(scenes: Sequence[Scene],
                 categories: Optional[Sequence[str]] = None
                ) -> CooccurrenceTables:
  """Counts single, pair and triple co-occurrences.

  An object is counted once per scene however many instances it has.

  Args:
    scenes: the corpus
    categories: categories to count; defaults to every object category in
      the corpus, sorted

  Returns:
    The co-occurrence tables.

  Raises:
    EmptyCorpusError: if scenes is empty.
  """
  if not scenes:
    raise EmptyCorpusError('cannot build co-occurrence tables without scenes')
  if categories is None:
    categories = sorted({c for s in scenes for c in s.categories})
  return tables_from_presence(presence_matrix(scenes, categories), categories)


def tables_from_presence(presence, categories: Sequence[str]
                        ) -> CooccurrenceTables:
  """Counts co-occurrences from an (N, m) presence matrix."""
  x = onp.asarray(presence).astype(onp.int64)
  if not len(x):
    raise EmptyCorpusError('cannot build co-occurrence tables without scenes')
  return CooccurrenceTables(
      categories=tuple(categories),
      n_scenes=len(x),
      single=x.sum(axis=0),
      pair=x.T @ x,
      triple=onp.einsum('nj,nk,nl->jkl', x, x, x))


def contingency_cells(tables: CooccurrenceTables, j: int, jp: int,
                      k: int) -> onp.ndarray:
  """Returns the (2, 2, 2) cell counts [j present, j' present, k present]."""
  n = tables.n_scenes
  o_j, o_jp, o_k = tables.single[[j, jp, k]]
  o_jk, o_jpk, o_jjp = tables.pair[j, k], tables.pair[jp, k], tables.pair[j, jp]
  o_jjpk = tables.triple[j, jp, k]
  cells = onp.zeros((2, 2, 2), dtype=onp.int64)
  cells[1, 1, 1] = o_jjpk
  cells[1, 0, 1] = o_jk - o_jjpk
  cells[0, 1, 1] = o_jpk - o_jjpk
  cells[0, 0, 1] = o_k - o_jk - o_jpk + o_jjpk
  cells[1, 1, 0] = o_jjp - o_jjpk
  cells[1, 0, 0] = o_j - o_jk - cells[1, 1, 0]
  cells[0, 1, 0] = o_jp - o_jpk - cells[1, 1, 0]
  cells[0, 0, 0] = (n - o_k) - cells[1, 1, 0] - cells[1, 0, 0] - cells[0, 1, 0]
  return cells


def stratified_chi2(cells: onp.ndarray, yates: bool = False) -> float:
  """Sums the 2x2 chi-squared statistics of every stratum.

  Args:
    cells: (2, 2, S) observed counts, the last axis indexing strata
    yates: apply the continuity correction to every cell

  Returns:
    The statistic; cells with zero expected count contribute nothing.
  """
  cells = onp.asarray(cells, dtype=onp.float64)
  total = 0.
  for s in range(cells.shape[-1]):
    observed = cells[..., s]
    n = observed.sum()
    if n <= 0:
      continue
    expected = onp.outer(observed.sum(axis=1), observed.sum(axis=0)) / n
    diff = onp.abs(observed - expected)
    if yates:
      diff = onp.maximum(diff - 0.5, 0.)
    valid = expected > 0
    total += float(onp.sum(diff[valid]**2 / expected[valid]))
  return total


def chi2_statistic(tables: CooccurrenceTables, j: str, jp: str, k: str,
                   yates: bool = False) -> Tuple[float, float]:
  """Tests whether j and j' are independent given k.

  Args:
    tables: co-occurrence tables
    j: first category
    jp: second category
    k: conditioning category
    yates: apply the continuity correction

  Returns:
    (chi2, p) where p is the chi-squared survival function with two degrees
    of freedom.

  Raises:
    DegenerateStratumError: if k is absent from every scene or present in
      all of them.
  """
  if len({j, jp, k}) != 3:
    raise ValueError(f'categories must be distinct, got {j}, {jp}, {k}')
  ij, ijp, ik = tables.index(j), tables.index(jp), tables.index(k)
  if tables.single[ik] in (0, tables.n_scenes):
    raise DegenerateStratumError(
        f'{k} appears in {tables.single[ik]} of {tables.n_scenes} scenes')
  statistic = stratified_chi2(contingency_cells(tables, ij, ijp, ik), yates)
  return statistic, float(stats.chi2.sf(statistic, CHI2_DOF))


def marginal_chi2(tables: CooccurrenceTables, j: str, jp: str,
                  yates: bool = False) -> Tuple[float, float]:
  """Unconditional 2x2 test of j against j' (one degree of freedom)."""
  ij, ijp = tables.index(j), tables.index(jp)
  n = tables.n_scenes
  both = tables.pair[ij, ijp]
  cells = onp.array([[n - tables.single[ij] - tables.single[ijp] + both,
                      tables.single[ijp] - both],
                     [tables.single[ij] - both, both]])[..., None]
  statistic = stratified_chi2(cells, yates)
  return statistic, float(stats.chi2.sf(statistic, 1))
