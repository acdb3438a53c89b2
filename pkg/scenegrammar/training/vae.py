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

"""Grammar-masked variational autoencoder over attributed rule sequences.

The encoder maps a rule sequence to a diagonal Gaussian; the recurrent decoder
maps a latent code back to per-step rule logits and attribute rows. Rule
probabilities are normalized over the rules the grammar allows at each step,
so decoding always yields a valid derivation.
"""

import collections
import dataclasses
import time
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from absl import logging
import flax
import jax
import jax.numpy as jnp
import numpy as onp
import optax

from scenegrammar.grammar import codec
from scenegrammar.grammar.base import Grammar
from scenegrammar.scene.base import Scene
from scenegrammar.training import distribution
from scenegrammar.training import networks
from scenegrammar.training import normalization

POSE = slice(0, 5)
SHAPE = slice(5, 8)


class DivergenceError(ValueError):
  """The training loss stopped being finite."""


@dataclasses.dataclass(frozen=True)
class ModelConfig:
  """Autoencoder hyper-parameters.

  Attributes:
    latent_dim: size D of the latent code
    branch_features: convolution widths of each encoder input branch
    trunk_features: encoder convolution widths after concatenation
    kernel_size: encoder convolution kernel size
    decoder_width: width of each recurrent layer
    decoder_depth: number of stacked recurrent layers
    pose_weight: weight of the attribute terms in the loss
    shape_weight: weight of the shape term relative to the pose term
    kl_weight: weight of the KL term
    kl_anneal_epochs: if positive, the KL weight ramps up linearly over this
      many epochs
    learning_rate: Adam learning rate
    batch_size: sequences per gradient step
    epochs: passes over the training split
    validation_fraction: share of sequences held out for validation
    seed: seed of initialization, shuffling and latent sampling
    dtype: 'float32', or 'float64' with jax_enable_x64 set
  """
  latent_dim: int = 50
  branch_features: Tuple[int, ...] = (64, 64)
  trunk_features: Tuple[int, ...] = (64, 64)
  kernel_size: int = 3
  decoder_width: int = 128
  decoder_depth: int = 2
  pose_weight: float = 10.
  shape_weight: float = 1.
  kl_weight: float = 1.
  kl_anneal_epochs: int = 0
  learning_rate: float = 1e-3
  batch_size: int = 32
  epochs: int = 100
  validation_fraction: float = 0.1
  seed: int = 0
  dtype: str = 'float32'

  def to_dict(self) -> Dict[str, Any]:
    d = dataclasses.asdict(self)
    d['branch_features'] = list(self.branch_features)
    d['trunk_features'] = list(self.trunk_features)
    return d

  @classmethod
  def from_dict(cls, d: Dict[str, Any]) -> 'ModelConfig':
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(d) - known)
    if unknown:
      raise ValueError(f'unknown model config keys {unknown}')
    d = dict(d)
    for name in ('branch_features', 'trunk_features'):
      if name in d:
        d[name] = tuple(int(v) for v in d[name])
    return cls(**d)


@flax.struct.dataclass
class Batch:
  """Model inputs for a batch of sequences.

  Attributes:
    onehot: (B, T, N) rule one-hots
    masks: (B, T, N) rules allowed at each step of the true derivation
    attributes: (B, T, 8) standardized attribute rows
    emits: (B, T) 1 for rows carrying attributes
  """
  onehot: jnp.ndarray
  masks: jnp.ndarray
  attributes: jnp.ndarray
  emits: jnp.ndarray


def make_batch(sequences: Sequence[codec.RuleSequence], grammar: Grammar,
               normalizer: normalization.NormalizerParams,
               dtype=jnp.float32) -> Batch:
  n = codec.num_symbols(grammar)
  rule_ids = onp.stack([s.rule_ids for s in sequences])
  emits = onp.stack([codec.attribute_rows(s, grammar) for s in sequences])
  attributes = onp.stack([s.attributes for s in sequences])
  return Batch(
      onehot=jnp.asarray(onp.eye(n)[rule_ids], dtype),
      masks=jnp.asarray(
          onp.stack([codec.rule_masks(s, grammar) for s in sequences])),
      attributes=jnp.asarray(
          normalization.standardize(normalizer, attributes, emits), dtype),
      emits=jnp.asarray(emits, dtype))


def loss_terms(logits: jnp.ndarray,
               attributes: jnp.ndarray,
               latent: distribution.LatentGaussian,
               batch: Batch,
               pose_weight: float = 10.,
               shape_weight: float = 1.,
               kl_weight: float = 1.):
  """Computes the autoencoder loss.

  The rule cross-entropy normalizes only over allowed rules and is summed over
  steps; attribute errors count only rows of rules that emit an object. Pose
  and shape errors are averaged over their columns, summed over emitting steps
  and then averaged over the batch, not over emitting rows.

  Args:
    logits: (B, T, N) decoder rule logits
    attributes: (B, T, 8) decoder attribute rows, standardized
    latent: the encoder's Gaussian
    batch: targets
    pose_weight: weight of the attribute terms
    shape_weight: weight of the shape term relative to the pose term
    kl_weight: weight of the KL term

  Returns:
    The total loss and a dict of its parts, each averaged over the batch.
  """
  masked = jnp.where(batch.masks, logits, -jnp.inf)
  log_norm = jax.nn.logsumexp(masked, axis=-1, keepdims=True)
  log_probs = jnp.where(batch.masks, logits - log_norm, 0.)
  cross_entropy = -jnp.mean(jnp.sum(batch.onehot * log_probs, axis=(1, 2)))

  kl = jnp.mean(distribution.kl_to_standard_normal(latent))

  error = (attributes - batch.attributes)**2 * batch.emits[..., None]
  pose_loss = jnp.mean(jnp.sum(jnp.mean(error[..., POSE], axis=-1), axis=-1))
  shape_loss = jnp.mean(jnp.sum(jnp.mean(error[..., SHAPE], axis=-1), axis=-1))

  total = (cross_entropy + kl_weight * kl + pose_weight *
           (pose_loss + shape_weight * shape_loss))
  return total, {
      'total_loss': total,
      'cross_entropy': cross_entropy,
      'kl': kl,
      'pose_loss': pose_loss,
      'shape_loss': shape_loss,
  }


class SceneVAE:
  """A grammar with its autoencoder networks, parameters and statistics."""

  def __init__(self,
               grammar: Grammar,
               config: ModelConfig = ModelConfig(),
               max_length: int = codec.DEFAULT_MAX_LENGTH,
               params: Optional[Any] = None,
               normalizer: Optional[normalization.NormalizerParams] = None):
    self.grammar = grammar
    self.config = config
    self.max_length = max_length
    self.num_symbols = codec.num_symbols(grammar)
    self.encoder, self.decoder = networks.make_models(
        config.latent_dim, self.num_symbols, codec.ATTRIBUTE_DIM, max_length,
        branch_features=config.branch_features,
        trunk_features=config.trunk_features,
        kernel_size=config.kernel_size,
        hidden_size=config.decoder_width,
        num_layers=config.decoder_depth,
        dtype=self.dtype)
    if params is None:
      key_encoder, key_decoder = jax.random.split(
          jax.random.PRNGKey(config.seed))
      params = {'encoder': self.encoder.init(key_encoder),
                'decoder': self.decoder.init(key_decoder)}
    self.params = params
    self.normalizer = normalizer or normalization.create_normalizer()
    self._encode = jax.jit(self.encoder.apply)
    self._initial_carry = jax.jit(self.decoder.initial_carry)
    self._step = jax.jit(self.decoder.step)

  @property
  def dtype(self):
    return jnp.dtype(self.config.dtype)

  @property
  def fingerprint(self) -> str:
    return self.grammar.fingerprint

  def _check(self, sequences: Sequence[codec.RuleSequence]):
    for seq in sequences:
      codec.check_fingerprint(self.fingerprint, seq.fingerprint,
                              'rule sequence')
      if seq.max_length != self.max_length:
        raise ValueError(f'sequence length {seq.max_length} does not match '
                         f'the model length {self.max_length}')

  def loss(self, params, batch: Batch, key, kl_weight=None):
    """Training loss of a batch with one latent draw per sequence.

    Args:
      params: {'encoder': ..., 'decoder': ...} network parameters
      batch: inputs and targets
      key: PRNG key of the latent draw
      kl_weight: defaults to the configured weight

    Returns:
      (total, parts) as returned by loss_terms.
    """
    if kl_weight is None:
      kl_weight = self.config.kl_weight
    mu, log_var = self.encoder.apply(params['encoder'], batch.onehot,
                                     batch.attributes)
    latent = distribution.LatentGaussian(mu=mu, log_var=log_var)
    z = distribution.sample(latent, key)
    logits, predicted = self.decoder.apply(params['decoder'], z,
                                           networks.shift_right(batch.onehot))
    return loss_terms(logits, predicted, latent, batch, self.config.pose_weight,
                      self.config.shape_weight, kl_weight)

  def encode_batch(
      self,
      sequences: Sequence[codec.RuleSequence]) -> distribution.LatentGaussian:
    self._check(sequences)
    batch = make_batch(sequences, self.grammar, self.normalizer, self.dtype)
    mu, log_var = self._encode(self.params['encoder'], batch.onehot,
                               batch.attributes)
    return distribution.LatentGaussian(mu=mu, log_var=log_var)

  def encode(self, seq: codec.RuleSequence) -> distribution.LatentGaussian:
    """Returns the latent Gaussian of one sequence, each field of shape (D,)."""
    latent = self.encode_batch([seq])
    return distribution.LatentGaussian(mu=latent.mu[0],
                                       log_var=latent.log_var[0])

  def decode_batch(self, z) -> Tuple[onp.ndarray, onp.ndarray]:
    """Runs the decoder freely from latent codes.

    Each step is fed the masked greedy choice of the previous step. The raw
    logits are returned unmasked; attributes are returned in scene units.

    Args:
      z: (B, D) latent codes

    Returns:
      (B, T, N) logits and (B, T, 8) attribute rows.
    """
    z = jnp.asarray(z, self.dtype)
    params = self.params['decoder']
    carry = self._initial_carry(params, z)
    previous = jnp.zeros((z.shape[0], self.num_symbols), self.dtype)
    states = [codec.MaskState.initial(self.grammar)] * z.shape[0]
    logits, attributes = [], []
    for _ in range(self.max_length):
      carry, step_logits, step_attributes = self._step(params, carry, previous,
                                                       z)
      step_logits = onp.asarray(step_logits)
      choices = []
      for b, state in enumerate(states):
        mask = codec.valid_mask(state, self.grammar, self.max_length)
        choice = codec.select_rule(step_logits[b], mask)
        states[b] = state.step(choice, self.grammar)
        choices.append(choice)
      previous = jax.nn.one_hot(jnp.asarray(choices), self.num_symbols,
                                dtype=self.dtype)
      logits.append(step_logits)
      attributes.append(onp.asarray(step_attributes))
    attributes = normalization.unstandardize(self.normalizer,
                                             onp.stack(attributes, axis=1))
    return onp.stack(logits, axis=1), onp.asarray(attributes)

  def decode(self, z) -> Tuple[onp.ndarray, onp.ndarray]:
    """Decodes one latent code to (T, N) logits and (T, 8) attributes."""
    logits, attributes = self.decode_batch(jnp.asarray(z)[None])
    return logits[0], attributes[0]

  def generate(self, z) -> List[codec.RuleSequence]:
    """Decodes latent codes (B, D) to valid rule sequences."""
    logits, attributes = self.decode_batch(z)
    return [
        codec.constrained_decode(l, a, self.grammar)
        for l, a in zip(logits, attributes)
    ]

  def sample(self, n: int, seed: int = 0) -> List[Scene]:
    """Decodes n draws from the standard normal prior into scenes."""
    if n <= 0:
      return []
    z = jax.random.normal(jax.random.PRNGKey(seed),
                          (n, self.config.latent_dim), self.dtype)
    return [codec.unparse(s, self.grammar) for s in self.generate(z)]

  def interpolate(self, scene_a: Scene, scene_b: Scene,
                  alphas: Sequence[float]) -> List[Scene]:
    """Decodes alpha * mu_a + (1 - alpha) * mu_b for each alpha."""
    mu_a = self.encode(self._parse(scene_a)).mu
    mu_b = self.encode(self._parse(scene_b)).mu
    scenes = []
    for alpha in alphas:
      z = alpha * mu_a + (1. - alpha) * mu_b
      seq = self.generate(z[None])[0]
      scenes.append(codec.unparse(seq, self.grammar))
    return scenes

  def reconstruct(
      self,
      sequences: Sequence[codec.RuleSequence]) -> List[codec.RuleSequence]:
    """Encodes to the latent means and decodes again."""
    out = []
    for start in range(0, len(sequences), self.config.batch_size):
      chunk = sequences[start:start + self.config.batch_size]
      out.extend(self.generate(self.encode_batch(chunk).mu))
    return out

  def _parse(self, scene: Scene) -> codec.RuleSequence:
    return codec.parse(codec.clip_to_grammar(scene, self.grammar), self.grammar,
                       self.max_length)


def exact_match_rate(sequences: Sequence[codec.RuleSequence],
                     reconstructions: Sequence[codec.RuleSequence]) -> float:
  """Share of sequences whose rules are reconstructed exactly."""
  if not sequences:
    return 0.
  return float(onp.mean([
      onp.array_equal(s.rule_ids, r.rule_ids)
      for s, r in zip(sequences, reconstructions)
  ]))


def pose_rmse(sequences: Sequence[codec.RuleSequence],
              reconstructions: Sequence[codec.RuleSequence],
              grammar: Grammar) -> float:
  """Translation RMSE in meters over exactly reconstructed sequences."""
  errors = []
  for s, r in zip(sequences, reconstructions):
    if not onp.array_equal(s.rule_ids, r.rule_ids):
      continue
    rows = codec.attribute_rows(s, grammar) > 0
    diff = s.attributes[rows, codec.TRANSLATION] - r.attributes[
        rows, codec.TRANSLATION]
    errors.extend(onp.sum(diff**2, axis=-1))
  if not errors:
    return float('nan')
  return float(onp.sqrt(onp.mean(errors)))


@flax.struct.dataclass
class TrainingState:
  """Contains training state for the learner."""
  params: Any
  opt_state: Any
  key: jnp.ndarray


@dataclasses.dataclass
class TrainReport:
  """Per-epoch scalars, in epoch order."""
  epochs: List[Dict[str, float]] = dataclasses.field(default_factory=list)

  @property
  def final(self) -> Dict[str, float]:
    return self.epochs[-1] if self.epochs else {}


def split_indices(n: int, validation_fraction: float,
                  seed: int) -> Tuple[onp.ndarray, onp.ndarray]:
  """Returns shuffled (train, validation) indices; training keeps at least 1."""
  if not 0. <= validation_fraction < 1.:
    raise ValueError('validation_fraction must lie in [0, 1), got '
                     f'{validation_fraction}')
  order = onp.random.default_rng(seed).permutation(n)
  n_val = min(int(n * validation_fraction), max(n - 1, 0))
  return order[n_val:], order[:n_val]


def _take(batch: Batch, idx) -> Batch:
  idx = jnp.asarray(idx)
  return jax.tree_util.tree_map(lambda x: x[idx], batch)


def train(
    sequences: Sequence[codec.RuleSequence],
    grammar: Grammar,
    config: ModelConfig = ModelConfig(),
    progress_fn: Optional[Callable[[int, Dict[str, Any]], None]] = None,
) -> Tuple[SceneVAE, TrainReport]:
  """Trains an autoencoder on parsed sequences.

  Args:
    sequences: training sequences, all of the same length and grammar
    grammar: the grammar they were parsed with
    config: hyper-parameters
    progress_fn: called as progress_fn(epoch, metrics) after every epoch

  Returns:
    The trained model and the per-epoch report.

  Raises:
    DivergenceError: if the loss becomes non-finite.
  """
  if not sequences:
    raise ValueError('cannot train on an empty set of sequences')
  xt = time.time()
  max_length = sequences[0].max_length
  train_idx, val_idx = split_indices(len(sequences), config.validation_fraction,
                                     config.seed)
  logging.info('training on %d sequences, validating on %d', len(train_idx),
               len(val_idx))

  emits = onp.stack([codec.attribute_rows(s, grammar) for s in sequences])
  attributes = onp.stack([s.attributes for s in sequences])
  normalizer = normalization.update(normalization.create_normalizer(),
                                    attributes[train_idx], emits[train_idx])
  model = SceneVAE(grammar, config, max_length, normalizer=normalizer)
  model._check(sequences)  # pylint:disable=protected-access
  data = make_batch(sequences, grammar, normalizer, model.dtype)

  optimizer = optax.adam(config.learning_rate)
  key = jax.random.PRNGKey(config.seed)
  key, key_perm, key_val = jax.random.split(key, 3)
  state = TrainingState(params=model.params,
                        opt_state=optimizer.init(model.params), key=key)

  loss_fn = model.loss
  grad_loss = jax.value_and_grad(loss_fn, has_aux=True)

  @jax.jit
  def update_step(state, batch, kl_weight):
    key, key_loss = jax.random.split(state.key)
    (_, metrics), grads = grad_loss(state.params, batch, key_loss, kl_weight)
    updates, opt_state = optimizer.update(grads, state.opt_state, state.params)
    params = optax.apply_updates(state.params, updates)
    metrics['grad_norm'] = optax.global_norm(grads)
    return TrainingState(params=params, opt_state=opt_state, key=key), metrics

  @jax.jit
  def evaluate(params, batch, kl_weight):
    return loss_fn(params, batch, key_val, kl_weight)[1]

  report = TrainReport()
  for epoch in range(config.epochs):
    t = time.time()
    kl_weight = config.kl_weight
    if config.kl_anneal_epochs > 0:
      kl_weight *= min(1., (epoch + 1) / config.kl_anneal_epochs)
    permutation = onp.asarray(
        jax.random.permutation(jax.random.fold_in(key_perm, epoch),
                               len(train_idx)))
    sums = collections.defaultdict(float)
    for start in range(0, len(train_idx), config.batch_size):
      idx = train_idx[permutation[start:start + config.batch_size]]
      state, metrics = update_step(state, _take(data, idx), kl_weight)
      for name, value in metrics.items():
        sums[name] += float(value) * len(idx)
    metrics = {f'train/{k}': v / len(train_idx) for k, v in sums.items()}
    if not onp.isfinite(metrics['train/total_loss']):
      raise DivergenceError(f'loss became {metrics["train/total_loss"]} at '
                            f'epoch {epoch}')
    if len(val_idx):
      val_metrics = evaluate(state.params, _take(data, val_idx), kl_weight)
      metrics.update(
          {f'validation/{k}': float(v) for k, v in val_metrics.items()})
    metrics['train/kl_weight'] = kl_weight
    metrics['speed/epoch_time'] = time.time() - t
    report.epochs.append(metrics)
    logging.info('epoch %d: loss %.5f (%.1fs)', epoch,
                 metrics['train/total_loss'], time.time() - xt)
    if progress_fn:
      progress_fn(epoch, metrics)

  model.params = state.params
  return model, report
