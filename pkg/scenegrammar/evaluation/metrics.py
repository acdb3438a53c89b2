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

"""Layout metrics between predicted and ground-truth scenes.

Boxes are matched per category at an IoU threshold; matched pairs give the
angular and displacement errors and bound the intersection used by the layout
IoU.
"""

import collections
import dataclasses
from typing import Dict, List, Optional, Sequence, Tuple

from absl import logging
import numpy as onp
from scipy import optimize
from shapely import geometry
from shapely import ops

from scenegrammar.scene import math
from scenegrammar.scene.base import ObjectInstance, Scene

DEFAULT_IOU_THRESHOLD = 0.25
DEFAULT_RESOLUTION = 0.05
MATCHERS = ('greedy', 'hungarian')


def box_iou(a: ObjectInstance, b: ObjectInstance) -> float:
  """Volumetric IoU of two yaw-rotated boxes."""
  if (onp.array_equal(a.pose.center, b.pose.center) and
      a.pose.yaw == b.pose.yaw and
      onp.array_equal(a.shape.size, b.shape.size)):
    return 1.
  bottom_a, top_a = math.z_range(a)
  bottom_b, top_b = math.z_range(b)
  height = max(0., min(top_a, top_b) - max(bottom_a, bottom_b))
  inter = math.footprint_overlap(a, b) * height if height > 0. else 0.
  union = a.shape.volume + b.shape.volume - inter
  return float(onp.clip(inter / union, 0., 1.))


def iou_matrix(pred: Sequence[ObjectInstance],
               gt: Sequence[ObjectInstance]) -> onp.ndarray:
  out = onp.zeros((len(pred), len(gt)))
  for i, p in enumerate(pred):
    for j, g in enumerate(gt):
      out[i, j] = box_iou(p, g)
  return out


def _match_greedy(ious: onp.ndarray,
                  iou_thresh: float) -> List[Tuple[int, int]]:
  pairs = sorted(
      ((-ious[i, j], i, j) for i in range(ious.shape[0])
       for j in range(ious.shape[1]) if ious[i, j] > iou_thresh))
  used_pred, used_gt, out = set(), set(), []
  for _, i, j in pairs:
    if i in used_pred or j in used_gt:
      continue
    used_pred.add(i)
    used_gt.add(j)
    out.append((i, j))
  return out


def _match_hungarian(ious: onp.ndarray,
                     iou_thresh: float) -> List[Tuple[int, int]]:
  if not ious.size:
    return []
  rows, cols = optimize.linear_sum_assignment(-ious)
  return [(int(i), int(j)) for i, j in zip(rows, cols)
          if ious[i, j] > iou_thresh]


@dataclasses.dataclass(frozen=True)
class MatchReport:
  """Detection and pose statistics of one or more scene pairs.

  Attributes:
    true_positives: per category, matched ground-truth boxes
    ground_truth: per category, ground-truth boxes
    angular_errors: yaw errors of true positives in degrees
    displacement_errors: center distances of true positives in meters
    layout_iou: occupied-space IoU, averaged over scenes for corpus reports
    matches: (pred index, ground-truth index) pairs of a single scene pair
  """
  true_positives: Dict[str, int]
  ground_truth: Dict[str, int]
  angular_errors: Tuple[float, ...] = ()
  displacement_errors: Tuple[float, ...] = ()
  layout_iou: float = 0.
  matches: Tuple[Tuple[int, int], ...] = ()

  @property
  def detection_rates(self) -> Dict[str, float]:
    return {c: self.true_positives.get(c, 0) / n
            for c, n in sorted(self.ground_truth.items()) if n}

  @property
  def detection_rate(self) -> float:
    total = sum(self.ground_truth.values())
    return sum(self.true_positives.values()) / total if total else 1.

  @property
  def mean_angular_error(self) -> Optional[float]:
    if not self.angular_errors:
      return None
    return float(onp.mean(self.angular_errors))

  @property
  def mean_displacement_error(self) -> Optional[float]:
    if not self.displacement_errors:
      return None
    return float(onp.mean(self.displacement_errors))

  def to_dict(self) -> Dict[str, object]:
    return {
        'detection_rate': self.detection_rate,
        'detection_rates': self.detection_rates,
        'true_positives': dict(sorted(self.true_positives.items())),
        'ground_truth': dict(sorted(self.ground_truth.items())),
        'mean_angular_error': self.mean_angular_error,
        'mean_displacement_error': self.mean_displacement_error,
        'layout_iou': self.layout_iou,
    }


def _occupancy(boxes: Sequence[ObjectInstance], points: onp.ndarray):
  occupied = onp.zeros(points.shape[:-1], dtype=bool)
  for box in boxes:
    occupied |= math.contains_points(box, points)
  return occupied


def _grid(lo: onp.ndarray, hi: onp.ndarray, resolution: float):
  """Cell centers covering [lo, hi] with at least one cell per axis.

  Returns:
    (points, cell_volume) where points has shape (nx, ny, nz, 3).
  """
  extent = hi - lo
  counts = onp.maximum(onp.ceil(extent / resolution - 1e-6), 1).astype(int)
  steps = extent / counts
  axes = [l + (onp.arange(n) + 0.5) * s for l, n, s in zip(lo, counts, steps)]
  points = onp.stack(onp.meshgrid(*axes, indexing='ij'), axis=-1)
  return points, float(onp.prod(steps))


def _volume_outside(boxes: Sequence[ObjectInstance], lo: onp.ndarray,
                    hi: onp.ndarray) -> float:
  """Exact volume of the union of boxes lying outside the region [lo, hi].

  The union is cut into horizontal slabs at every box bottom and top. A slab
  contributes its thickness times the area of the merged footprints, less the
  region's rectangle where the slab lies within the region's heights.
  """
  if not boxes:
    return 0.
  ranges = [math.z_range(b) for b in boxes]
  levels = sorted({z for r in ranges for z in r} | {lo[2], hi[2]})
  region = geometry.box(lo[0], lo[1], hi[0], hi[1])
  volume = 0.
  for bottom, top in zip(levels[:-1], levels[1:]):
    mid = (bottom + top) / 2.
    active = [math.footprint_polygon(b) for b, (z0, z1) in zip(boxes, ranges)
              if z0 <= mid <= z1]
    if not active:
      continue
    area = ops.unary_union(active)
    if lo[2] <= mid <= hi[2]:
      area = area.difference(region)
    volume += area.area * (top - bottom)
  return volume


def layout_iou(pred: Scene,
               gt: Scene,
               matches: Optional[Sequence[Tuple[int, int]]] = None,
               resolution: float = DEFAULT_RESOLUTION,
               iou_thresh: float = DEFAULT_IOU_THRESHOLD) -> float:
  """IoU of the space occupied by the objects of two scenes.

  The union counts every object; the intersection counts only space covered
  both by matched predicted boxes and by matched ground-truth boxes. Space is
  voxelized over the bounds of the ground-truth and matched predicted boxes,
  with at least one voxel per axis. Unmatched predicted boxes reaching past
  those bounds add their outside volume to the union exactly.

  Args:
    pred: predicted scene
    gt: ground-truth scene
    matches: matched (pred, gt) index pairs; computed with greedy matching
      when omitted
    resolution: largest voxel edge length in meters
    iou_thresh: threshold used when matches are computed here

  Returns:
    The IoU in [0, 1]; 1 when neither scene has objects.
  """
  if resolution <= 0.:
    raise ValueError(f'resolution must be positive, got {resolution}')
  if not pred.objects and not gt.objects:
    return 1.
  if not pred.objects or not gt.objects:
    return 0.
  if matches is None:
    matches = match_scenes(pred, gt, iou_thresh, with_layout=False).matches
  if not matches:
    return 0.
  matched = {i for i, _ in matches}
  bounded = list(gt.objects) + [pred.objects[i] for i in sorted(matched)]
  all_corners = onp.concatenate([math.corners(b) for b in bounded])
  lo, hi = all_corners.min(axis=0), all_corners.max(axis=0)
  points, cell_volume = _grid(lo, hi, resolution)

  occupied = _occupancy(list(pred.objects) + list(gt.objects), points)
  unmatched = [o for i, o in enumerate(pred.objects) if i not in matched]
  union = (onp.count_nonzero(occupied) * cell_volume +
           _volume_outside(unmatched, lo, hi))
  if union <= 0.:
    return 0.
  matched_pred = _occupancy([pred.objects[i] for i, _ in matches], points)
  matched_gt = _occupancy([gt.objects[j] for _, j in matches], points)
  inter = onp.count_nonzero(matched_pred & matched_gt) * cell_volume
  return float(min(inter / union, 1.))


def match_scenes(pred: Scene,
                 gt: Scene,
                 iou_thresh: float = DEFAULT_IOU_THRESHOLD,
                 matcher: str = 'greedy',
                 resolution: float = DEFAULT_RESOLUTION,
                 with_layout: bool = True) -> MatchReport:
  """Matches predicted boxes to ground truth within each category.

  Args:
    pred: predicted scene
    gt: ground-truth scene
    iou_thresh: pairs need IoU strictly above this to match
    matcher: 'greedy' takes pairs by descending IoU, 'hungarian' maximizes
      the total IoU
    resolution: voxel size of the layout IoU
    with_layout: whether to compute the layout IoU

  Returns:
    The report.
  """
  if matcher not in MATCHERS:
    raise ValueError(f'unknown matcher {matcher!r}, expected one of {MATCHERS}')
  match_fn = _match_greedy if matcher == 'greedy' else _match_hungarian
  pred_by_cat = collections.defaultdict(list)
  gt_by_cat = collections.defaultdict(list)
  for i, o in enumerate(pred.objects):
    pred_by_cat[o.category].append(i)
  for j, o in enumerate(gt.objects):
    gt_by_cat[o.category].append(j)

  matches, angular, displacement = [], [], []
  true_positives = {}
  for category in sorted(gt_by_cat):
    p_idx, g_idx = pred_by_cat.get(category, []), gt_by_cat[category]
    ious = iou_matrix([pred.objects[i] for i in p_idx],
                      [gt.objects[j] for j in g_idx])
    pairs = match_fn(ious, iou_thresh)
    true_positives[category] = len(pairs)
    for a, b in pairs:
      p, g = pred.objects[p_idx[a]], gt.objects[g_idx[b]]
      matches.append((p_idx[a], g_idx[b]))
      angular.append(float(onp.degrees(math.yaw_difference(p.pose.yaw,
                                                           g.pose.yaw))))
      displacement.append(float(onp.linalg.norm(p.pose.center -
                                                g.pose.center)))
  layout = 0.
  if with_layout:
    layout = layout_iou(pred, gt, matches, resolution)
  return MatchReport(
      true_positives=true_positives,
      ground_truth={c: len(v) for c, v in gt_by_cat.items()},
      angular_errors=tuple(angular),
      displacement_errors=tuple(displacement),
      layout_iou=layout,
      matches=tuple(sorted(matches)))


def evaluate_corpus(preds: Sequence[Scene],
                    gts: Sequence[Scene],
                    iou_thresh: float = DEFAULT_IOU_THRESHOLD,
                    matcher: str = 'greedy',
                    resolution: float = DEFAULT_RESOLUTION) -> MatchReport:
  """Pools the reports of aligned prediction / ground-truth pairs."""
  if len(preds) != len(gts):
    raise ValueError(f'{len(preds)} predicted scenes for {len(gts)} '
                     'ground-truth scenes')
  true_positives = collections.Counter()
  ground_truth = collections.Counter()
  angular, displacement, layouts = [], [], []
  for pred, gt in zip(preds, gts):
    report = match_scenes(pred, gt, iou_thresh, matcher, resolution)
    true_positives.update(report.true_positives)
    ground_truth.update(report.ground_truth)
    angular.extend(report.angular_errors)
    displacement.extend(report.displacement_errors)
    layouts.append(report.layout_iou)
  logging.info('evaluated %d scene pairs', len(preds))
  return MatchReport(
      true_positives=dict(true_positives),
      ground_truth=dict(ground_truth),
      angular_errors=tuple(angular),
      displacement_errors=tuple(displacement),
      layout_iou=float(onp.mean(layouts)) if layouts else 0.)


def _fmt(value: Optional[float], spec: str) -> str:
  return '-' if value is None else format(value, spec)


def format_table(report: MatchReport) -> str:
  """Renders per-category rates plus pooled errors as aligned columns."""
  lines = [f'{"category":<16}{"rate":>8}{"tp":>6}{"gt":>6}']
  for category, rate in report.detection_rates.items():
    lines.append(f'{category:<16}{rate:>8.4f}'
                 f'{report.true_positives.get(category, 0):>6d}'
                 f'{report.ground_truth[category]:>6d}')
  lines.append(f'{"all":<16}{report.detection_rate:>8.4f}'
               f'{sum(report.true_positives.values()):>6d}'
               f'{sum(report.ground_truth.values()):>6d}')
  lines.append('')
  lines.append(f'angular error (deg)   '
               f'{_fmt(report.mean_angular_error, ".3f")}')
  lines.append(f'displacement error (m) '
               f'{_fmt(report.mean_displacement_error, ".4f")}')
  lines.append(f'layout IoU             {report.layout_iou:.4f}')
  return '\n'.join(lines) + '\n'
