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
"""Yaw-only rigid transforms and box geometry."""

import numpy as onp
from shapely import geometry

from scenegrammar.scene.base import ObjectInstance, Pose, wrap_angle


def yaw_matrix(yaw: float) -> onp.ndarray:
  """Returns the 3x3 rotation about the gravity axis by yaw."""
  c, s = onp.cos(yaw), onp.sin(yaw)
  return onp.array([[c, -s, 0.], [s, c, 0.], [0., 0., 1.]])


def rotate(vec: onp.ndarray, yaw: float) -> onp.ndarray:
  """Rotates vec about the gravity axis.

  Args:
    vec: onp.ndarray (..., 3)
    yaw: angle in radians

  Returns:
    vec rotated by yaw, same shape as vec.
  """
  return onp.asarray(vec, dtype=onp.float64) @ yaw_matrix(yaw).T


def inv_rotate(vec: onp.ndarray, yaw: float) -> onp.ndarray:
  """Rotates vec about the gravity axis by -yaw."""
  return rotate(vec, -yaw)


def compose(a: Pose, b: Pose) -> Pose:
  """Returns the pose a∘b: b expressed in a's frame, mapped to a's parent.

  Args:
    a: outer pose
    b: inner pose, relative to a

  Returns:
    A pose with center a.center + R(a.yaw) b.center and yaw a.yaw + b.yaw.
  """
  return Pose.create(a.center + rotate(b.center, a.yaw), a.yaw + b.yaw)


def inverse(p: Pose) -> Pose:
  """Returns the pose q such that compose(p, q) is the identity."""
  return Pose.create(-inv_rotate(p.center, p.yaw), -p.yaw)


def relative(parent: Pose, child: Pose) -> Pose:
  """Returns child's pose in parent's frame, inverse(parent)∘child."""
  return compose(inverse(parent), child)


def heading(parent: Pose, point: onp.ndarray) -> float:
  """Anti-clockwise angle of point around parent, from parent's yaw axis.

  Args:
    parent: reference pose
    point: world-space point (3,)

  Returns:
    The angle in [0, 2pi) between parent's local x axis and the horizontal
    offset from parent.center to point.
  """
  local = inv_rotate(onp.asarray(point) - parent.center, parent.yaw)
  angle = onp.arctan2(local[1], local[0])
  return float(onp.mod(angle, 2. * onp.pi))


def footprint(obj: ObjectInstance) -> onp.ndarray:
  """Returns the (4, 2) horizontal corners of obj, anti-clockwise."""
  w, d, _ = obj.shape.size / 2.
  local = onp.array([[w, d, 0.], [-w, d, 0.], [-w, -d, 0.], [w, -d, 0.]])
  return (rotate(local, obj.pose.yaw) + obj.pose.center)[:, :2]


def corners(obj: ObjectInstance) -> onp.ndarray:
  """Returns the (8, 3) corners of obj."""
  half = obj.shape.size / 2.
  signs = onp.array([[sx, sy, sz] for sz in (-1., 1.) for sx, sy in
                     ((1., 1.), (-1., 1.), (-1., -1.), (1., -1.))])
  return rotate(signs * half, obj.pose.yaw) + obj.pose.center


def z_range(obj: ObjectInstance):
  """Returns (bottom, top) heights of obj."""
  cz, h = obj.pose.center[2], obj.shape.size[2]
  return cz - h / 2., cz + h / 2.


def contains_points(obj: ObjectInstance, points: onp.ndarray,
                    margin: float = 0.) -> onp.ndarray:
  """Tests which points lie inside obj grown by margin on every side.

  Args:
    obj: the box
    points: onp.ndarray (..., 3) world-space points
    margin: distance the box is grown by before testing

  Returns:
    A boolean array of shape points.shape[:-1].
  """
  local = inv_rotate(onp.asarray(points) - obj.pose.center, obj.pose.yaw)
  return onp.all(onp.abs(local) <= obj.shape.size / 2. + margin, axis=-1)


def footprint_polygon(obj: ObjectInstance) -> geometry.Polygon:
  """Returns obj's horizontal footprint as a shapely polygon."""
  return geometry.Polygon(footprint(obj))


def footprint_overlap(a: ObjectInstance, b: ObjectInstance) -> float:
  """Returns the area shared by the footprints of a and b."""
  return footprint_polygon(a).intersection(footprint_polygon(b)).area


def yaw_difference(a: float, b: float) -> float:
  """Returns |a - b| wrapped to [0, pi]."""
  return abs(float(wrap_angle(a - b)))
