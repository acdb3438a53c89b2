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

"""Attribute standardization based on running statistics.

Translations and box sizes are standardized per dimension; the yaw sin/cos
pair is left untouched. Only rows of rules that emit an object take part.
"""

import flax
import jax.numpy as jnp
import numpy as onp

from scenegrammar.grammar import codec

# Columns that are standardized; sin/cos stay as they are.
STANDARDIZED = onp.array([1., 1., 1., 0., 0., 1., 1., 1.])


@flax.struct.dataclass
class NormalizerParams:
  count: jnp.ndarray
  mean: jnp.ndarray
  m2: jnp.ndarray


def create_normalizer() -> NormalizerParams:
  return NormalizerParams(count=jnp.zeros(()),
                          mean=jnp.zeros((codec.ATTRIBUTE_DIM,)),
                          m2=jnp.zeros((codec.ATTRIBUTE_DIM,)))


def update(params: NormalizerParams, rows, weights) -> NormalizerParams:
  """Welford update with the weighted rows.

  Args:
    params: current statistics
    rows: (..., 8) attribute rows
    weights: (...) 1 for rows to include, 0 for rows to skip

  Returns:
    Updated statistics.
  """
  rows = jnp.reshape(rows, (-1, codec.ATTRIBUTE_DIM))
  weights = jnp.reshape(weights, (-1, 1))
  step_increment = jnp.sum(weights)
  total_new_steps = params.count + step_increment

  input_to_old_mean = (rows - params.mean) * weights
  mean_diff = jnp.sum(input_to_old_mean, axis=0) / jnp.maximum(
      total_new_steps, 1.)
  new_mean = params.mean + mean_diff

  input_to_new_mean = (rows - new_mean) * weights
  var_diff = jnp.sum(input_to_new_mean * input_to_old_mean, axis=0)
  return NormalizerParams(count=total_new_steps, mean=new_mean,
                          m2=params.m2 + var_diff)


def _mean_std(params: NormalizerParams, std_min_value=1e-3,
              std_max_value=1e6):
  variance = params.m2 / jnp.maximum(params.count, 1.)
  std = jnp.sqrt(jnp.clip(variance, std_min_value**2, std_max_value**2))
  mean = jnp.where(STANDARDIZED > 0, params.mean, 0.)
  std = jnp.where(STANDARDIZED > 0, std, 1.)
  return mean, std


def standardize(params: NormalizerParams, attributes, weights=None):
  """Maps attribute rows to standardized units; rows with weight 0 stay 0."""
  mean, std = _mean_std(params)
  out = (attributes - mean) / std
  if weights is not None:
    out = out * weights[..., None]
  return out


def unstandardize(params: NormalizerParams, attributes):
  mean, std = _mean_std(params)
  return attributes * std + mean


def to_dict(params: NormalizerParams):
  return {'count': onp.asarray(params.count), 'mean': onp.asarray(params.mean),
          'm2': onp.asarray(params.m2)}


def from_dict(d) -> NormalizerParams:
  return NormalizerParams(count=jnp.asarray(d['count']),
                          mean=jnp.asarray(d['mean']), m2=jnp.asarray(d['m2']))
