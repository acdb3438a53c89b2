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

"""Diagonal Gaussian latents in JAX."""

import flax
import jax
import jax.numpy as jnp
from tensorflow_probability.substrates import jax as tfp

tfd = tfp.distributions


@flax.struct.dataclass
class LatentGaussian:
  """N(mu, diag(exp(log_var))) over the latent space, batched on axis 0."""
  mu: jnp.ndarray
  log_var: jnp.ndarray

  @property
  def scale(self) -> jnp.ndarray:
    return jnp.exp(0.5 * self.log_var)


def create_dist(latent: LatentGaussian):
  """Creates the tfp distribution of a latent."""
  return tfd.MultivariateNormalDiag(loc=latent.mu, scale_diag=latent.scale)


def standard_normal(latent_dim: int, dtype=jnp.float32):
  return tfd.MultivariateNormalDiag(
      loc=jnp.zeros((latent_dim,), dtype), scale_diag=jnp.ones((latent_dim,),
                                                               dtype))


def sample(latent: LatentGaussian, seed: jnp.ndarray) -> jnp.ndarray:
  """Reparameterized draw z = mu + sigma * eps."""
  eps = jax.random.normal(seed, latent.mu.shape, latent.mu.dtype)
  return latent.mu + latent.scale * eps


def kl_to_standard_normal(latent: LatentGaussian) -> jnp.ndarray:
  """KL(N(mu, Sigma) || N(0, I)), summed over latent dimensions."""
  prior = standard_normal(latent.mu.shape[-1], latent.mu.dtype)
  return tfd.kl_divergence(create_dist(latent), prior)
