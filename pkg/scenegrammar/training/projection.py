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

"""Linear maps from external feature vectors into the latent space.

The map A (D x F) minimizes

  1/2 sum_i (mu_i - A f_i)^T Sigma_i^-1 (mu_i - A f_i) + lam ||A||_F^2

over training pairs (f_i, N(mu_i, Sigma_i)). With diagonal Sigma_i the
problem splits into one ridge system per latent dimension.
"""

from typing import List, Sequence

from absl import logging
import numpy as onp
from scipy import linalg

from scenegrammar.grammar import codec
from scenegrammar.scene.base import Scene
from scenegrammar.training import distribution

DEFAULT_LAMBDA = 100.


class SingularSystemError(ValueError):
  """The normal equations of the projection have no unique solution."""


def _stack(features, latents):
  features = onp.asarray(features, dtype=onp.float64)
  if features.ndim != 2:
    raise ValueError(f'features must be (n, F), got shape {features.shape}')
  mu = onp.stack([onp.asarray(l.mu, dtype=onp.float64) for l in latents])
  log_var = onp.stack(
      [onp.asarray(l.log_var, dtype=onp.float64) for l in latents])
  if len(mu) != len(features):
    raise ValueError(f'{len(features)} feature vectors but {len(mu)} latents')
  return features, mu, onp.exp(-log_var)


def projection_objective(a: onp.ndarray, features,
                         latents: Sequence[distribution.LatentGaussian],
                         lam: float = DEFAULT_LAMBDA) -> float:
  """Evaluates the weighted ridge objective at A."""
  features, mu, weights = _stack(features, latents)
  residual = mu - features @ onp.asarray(a).T
  return float(0.5 * onp.sum(weights * residual**2) + lam * onp.sum(a**2))


def fit_latent_projection(features,
                          latents: Sequence[distribution.LatentGaussian],
                          lam: float = DEFAULT_LAMBDA,
                          force: bool = False) -> onp.ndarray:
  """Solves for the projection A in closed form.

  Args:
    features: (n, F) feature vectors
    latents: n encoder Gaussians with diagonal covariance
    lam: ridge weight, must be positive unless force is set
    force: allow lam <= 0

  Returns:
    A of shape (D, F).

  Raises:
    SingularSystemError: if a forced unregularized system is singular.
  """
  if not latents:
    raise ValueError('need at least one (feature, latent) pair')
  if lam <= 0. and not force:
    raise ValueError(f'lambda must be positive, got {lam}')
  features, mu, weights = _stack(features, latents)
  n, f = features.shape
  rows = []
  for d in range(mu.shape[1]):
    w = weights[:, d]
    gram = (features * w[:, None]).T @ features + 2. * lam * onp.eye(f)
    rhs = features.T @ (w * mu[:, d])
    if lam <= 0. and onp.linalg.matrix_rank(gram) < f:
      raise SingularSystemError(
          f'projection system for latent dimension {d} is singular')
    try:
      rows.append(linalg.solve(gram, rhs, assume_a='sym'))
    except linalg.LinAlgError as e:
      raise SingularSystemError(
          f'projection system for latent dimension {d} is singular') from e
  logging.info('fitted a %dx%d projection on %d pairs', mu.shape[1], f, n)
  return onp.stack(rows)


def project_features(model, a: onp.ndarray, features) -> List[Scene]:
  """Maps feature vectors through A and decodes the codes into scenes.

  Args:
    model: a trained vae.SceneVAE
    a: (D, F) projection
    features: (n, F) feature vectors

  Returns:
    One scene per feature vector.
  """
  z = onp.asarray(features, dtype=onp.float64) @ onp.asarray(a).T
  return [codec.unparse(s, model.grammar) for s in model.generate(z)]
