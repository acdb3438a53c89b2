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

"""Network definitions."""

import dataclasses
from typing import Any, Callable, Sequence, Tuple

from flax import linen
import jax
import jax.numpy as jnp


@dataclasses.dataclass
class FeedForwardModel:
  init: Any
  apply: Any


@dataclasses.dataclass
class RecurrentModel:
  """A decoder usable both teacher-forced and one step at a time.

  Attributes:
    init: rng -> params
    apply: (params, z, previous) -> (logits, attributes) over the sequence
    initial_carry: (params, z) -> carry
    step: (params, carry, previous, z) -> (carry, logits, attributes)
  """
  init: Any
  apply: Any
  initial_carry: Any
  step: Any


class ConvStack(linen.Module):
  """1D convolutions along the sequence axis."""
  features: Sequence[int]
  kernel_size: int = 3
  activation: Callable[[jnp.ndarray], jnp.ndarray] = linen.swish
  dtype: Any = jnp.float32

  @linen.compact
  def __call__(self, data: jnp.ndarray):
    hidden = data
    for i, width in enumerate(self.features):
      hidden = linen.Conv(
          width, (self.kernel_size,),
          padding='SAME',
          name=f'conv_{i}',
          dtype=self.dtype,
          param_dtype=self.dtype)(
              hidden)
      hidden = self.activation(hidden)
    return hidden


class SequenceEncoder(linen.Module):
  """Encodes rule one-hots and attributes to a diagonal Gaussian.

  Each input gets its own convolution branch; the branches are concatenated,
  convolved again, flattened and mapped to mu and log_var.
  """
  latent_dim: int
  branch_features: Sequence[int] = (64, 64)
  trunk_features: Sequence[int] = (64, 64)
  kernel_size: int = 3
  dtype: Any = jnp.float32

  @linen.compact
  def __call__(self, rules: jnp.ndarray, attributes: jnp.ndarray):
    rules = ConvStack(self.branch_features, self.kernel_size, dtype=self.dtype,
                      name='rule_branch')(rules)
    attributes = ConvStack(self.branch_features, self.kernel_size,
                           dtype=self.dtype, name='attribute_branch')(
                               attributes)
    hidden = jnp.concatenate([rules, attributes], axis=-1)
    hidden = ConvStack(self.trunk_features, self.kernel_size, dtype=self.dtype,
                       name='trunk')(hidden)
    hidden = jnp.reshape(hidden, (hidden.shape[0], -1))
    dense = lambda name: linen.Dense(self.latent_dim, name=name,
                                     dtype=self.dtype, param_dtype=self.dtype)
    return dense('mu')(hidden), dense('log_var')(hidden)


class SequenceDecoder(linen.Module):
  """Stacked GRU decoder emitting rule logits and attribute rows.

  Every step sees the latent code and the one-hot of the previous rule.
  """
  num_symbols: int
  attribute_dim: int
  hidden_size: int = 128
  num_layers: int = 2
  dtype: Any = jnp.float32

  def setup(self):
    self.carry_init = linen.Dense(self.hidden_size * self.num_layers,
                                  dtype=self.dtype, param_dtype=self.dtype)
    self.cells = [
        linen.GRUCell(features=self.hidden_size, dtype=self.dtype,
                      param_dtype=self.dtype) for _ in range(self.num_layers)
    ]
    self.rule_head = linen.Dense(self.num_symbols, dtype=self.dtype,
                                 param_dtype=self.dtype)
    self.attribute_head = linen.Dense(self.attribute_dim, dtype=self.dtype,
                                      param_dtype=self.dtype)

  def initial_carry(self, z: jnp.ndarray) -> Tuple[jnp.ndarray, ...]:
    hidden = jnp.tanh(self.carry_init(z))
    return tuple(jnp.split(hidden, self.num_layers, axis=-1))

  def step(self, carry, previous: jnp.ndarray, z: jnp.ndarray):
    hidden = jnp.concatenate([previous, z], axis=-1)
    new_carry = []
    for cell, c in zip(self.cells, carry):
      c, hidden = cell(c, hidden)
      new_carry.append(c)
    return tuple(new_carry), self.rule_head(hidden), self.attribute_head(hidden)

  def __call__(self, z: jnp.ndarray, previous: jnp.ndarray):
    carry = self.initial_carry(z)
    logits, attributes = [], []
    for t in range(previous.shape[1]):
      carry, l, a = self.step(carry, previous[:, t], z)
      logits.append(l)
      attributes.append(a)
    return jnp.stack(logits, axis=1), jnp.stack(attributes, axis=1)


def shift_right(onehot: jnp.ndarray) -> jnp.ndarray:
  """Previous-rule inputs: zeros at t = 0, then rule t - 1."""
  return jnp.pad(onehot, ((0, 0), (1, 0), (0, 0)))[:, :-1]


def make_encoder(latent_dim: int,
                 num_symbols: int,
                 attribute_dim: int,
                 max_length: int,
                 branch_features: Sequence[int] = (64, 64),
                 trunk_features: Sequence[int] = (64, 64),
                 kernel_size: int = 3,
                 dtype=jnp.float32) -> FeedForwardModel:
  """Creates the encoder model.

  Args:
    latent_dim: size of the latent code
    num_symbols: one-hot width N
    attribute_dim: attribute row width
    max_length: sequence length T
    branch_features: convolution widths of each input branch
    trunk_features: convolution widths after concatenation
    kernel_size: convolution kernel size
    dtype: parameter and computation dtype

  Returns:
    a model
  """
  module = SequenceEncoder(latent_dim=latent_dim,
                           branch_features=tuple(branch_features),
                           trunk_features=tuple(trunk_features),
                           kernel_size=kernel_size, dtype=dtype)
  dummy_rules = jnp.zeros((1, max_length, num_symbols), dtype)
  dummy_attributes = jnp.zeros((1, max_length, attribute_dim), dtype)
  return FeedForwardModel(
      init=lambda rng: module.init(rng, dummy_rules, dummy_attributes),
      apply=module.apply)


def make_decoder(latent_dim: int,
                 num_symbols: int,
                 attribute_dim: int,
                 max_length: int,
                 hidden_size: int = 128,
                 num_layers: int = 2,
                 dtype=jnp.float32) -> RecurrentModel:
  """Creates the recurrent decoder model."""
  module = SequenceDecoder(num_symbols=num_symbols, attribute_dim=attribute_dim,
                           hidden_size=hidden_size, num_layers=num_layers,
                           dtype=dtype)
  dummy_z = jnp.zeros((1, latent_dim), dtype)
  dummy_previous = jnp.zeros((1, max_length, num_symbols), dtype)
  return RecurrentModel(
      init=lambda rng: module.init(rng, dummy_z, dummy_previous),
      apply=module.apply,
      initial_carry=lambda params, z: module.apply(
          params, z, method=SequenceDecoder.initial_carry),
      step=lambda params, carry, previous, z: module.apply(
          params, carry, previous, z, method=SequenceDecoder.step))


def make_models(latent_dim: int, num_symbols: int, attribute_dim: int,
                max_length: int, **kwargs
               ) -> Tuple[FeedForwardModel, RecurrentModel]:
  """Creates encoder and decoder models.

  Args:
    latent_dim: size of the latent code
    num_symbols: one-hot width N
    attribute_dim: attribute row width
    max_length: sequence length T
    **kwargs: branch_features, trunk_features, kernel_size, hidden_size,
      num_layers and dtype

  Returns:
    a model for the encoder and one for the decoder
  """
  dtype = kwargs.get('dtype', jnp.float32)
  encoder = make_encoder(
      latent_dim, num_symbols, attribute_dim, max_length,
      branch_features=kwargs.get('branch_features', (64, 64)),
      trunk_features=kwargs.get('trunk_features', (64, 64)),
      kernel_size=kwargs.get('kernel_size', 3), dtype=dtype)
  decoder = make_decoder(latent_dim, num_symbols, attribute_dim, max_length,
                         hidden_size=kwargs.get('hidden_size', 128),
                         num_layers=kwargs.get('num_layers', 2), dtype=dtype)
  return encoder, decoder


def param_count(params) -> int:
  return sum(x.size for x in jax.tree_util.tree_leaves(params))
