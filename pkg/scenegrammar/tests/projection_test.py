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

"""Tests for feature-to-latent projections."""

from absl.testing import absltest
import numpy as onp
from scenegrammar.scene import synthetic
from scenegrammar.training import distribution
from scenegrammar.training import projection
from scenegrammar.training import vae


def _latents(mu, log_var):
  return [distribution.LatentGaussian(mu=onp.asarray(m), log_var=onp.asarray(v))
          for m, v in zip(mu, log_var)]


def _problem(n=20, f=3, d=2, seed=0):
  rng = onp.random.default_rng(seed)
  features = rng.normal(size=(n, f))
  mu = rng.normal(size=(n, d))
  log_var = rng.uniform(-0.7, 0.7, size=(n, d))
  return features, _latents(mu, log_var), mu, onp.exp(-log_var)


class ProjectionTest(absltest.TestCase):

  def test_single_pair_without_regularization(self):
    latents = _latents([[1., -3.]], [[0., onp.log(4.)]])
    a = projection.fit_latent_projection([[2.]], latents, lam=1e-10)
    onp.testing.assert_allclose(a, [[0.5], [-1.5]], rtol=1e-6)

  def test_strong_regularization_shrinks_to_zero(self):
    features, latents, _, _ = _problem()
    a = projection.fit_latent_projection(features, latents, lam=1e9)
    self.assertLess(onp.abs(a).max(), 1e-6)

  def test_gradient_vanishes_at_solution(self):
    features, latents, mu, weights = _problem()
    lam = 2.5
    a = projection.fit_latent_projection(features, latents, lam=lam)
    residual = mu - features @ a.T
    grad = -(weights * residual).T @ features + 2. * lam * a
    onp.testing.assert_allclose(grad, 0., atol=1e-9)

  def test_matches_gradient_descent(self):
    features, latents, mu, weights = _problem(seed=1)
    lam = 1.
    a = onp.zeros((2, 3))
    lipschitz = max(
        onp.linalg.eigvalsh((features * w[:, None]).T @ features).max()
        for w in weights.T) + 2. * lam
    for _ in range(5000):
      residual = mu - features @ a.T
      grad = -(weights * residual).T @ features + 2. * lam * a
      a -= grad / lipschitz
    fitted = projection.fit_latent_projection(features, latents, lam=lam)
    onp.testing.assert_allclose(fitted, a, atol=1e-6)
    self.assertLessEqual(
        projection.projection_objective(fitted, features, latents, lam),
        projection.projection_objective(a, features, latents, lam) + 1e-9)

  def test_nonpositive_lambda_needs_force(self):
    features, latents, _, _ = _problem()
    with self.assertRaises(ValueError):
      projection.fit_latent_projection(features, latents, lam=0.)
    a = projection.fit_latent_projection(features, latents, lam=0., force=True)
    self.assertEqual(a.shape, (2, 3))

  def test_forced_singular_system(self):
    features, latents, _, _ = _problem()
    features = onp.concatenate([features, features[:, :1]], axis=1)
    with self.assertRaises(projection.SingularSystemError):
      projection.fit_latent_projection(features, latents, lam=0., force=True)

  def test_malformed_inputs(self):
    features, latents, _, _ = _problem()
    with self.assertRaises(ValueError):
      projection.fit_latent_projection(features, [])
    with self.assertRaises(ValueError):
      projection.fit_latent_projection(features[:5], latents)
    with self.assertRaises(ValueError):
      projection.fit_latent_projection(features[0], latents[:1])

  def test_project_features_decodes_scenes(self):
    config = vae.ModelConfig(latent_dim=2, branch_features=(4,),
                             trunk_features=(4,), decoder_width=8,
                             decoder_depth=1)
    model = vae.SceneVAE(synthetic.demo_grammar(), config, max_length=12)
    features, latents, _, _ = _problem(n=6)
    a = projection.fit_latent_projection(features, latents, lam=1.)
    scenes = projection.project_features(model, a, features[:2])
    self.assertLen(scenes, 2)
    for scene in scenes:
      self.assertTrue(set(scene.categories) <= model.grammar.categories)


if __name__ == '__main__':
  absltest.main()
