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

"""Core scene structs: poses, boxes, object instances, scenes, vocabularies."""

from typing import Dict, Iterable, Sequence, Tuple

from flax import struct
import numpy as onp

ROOM = 'scene'
DEFAULT_MAX_OBJECTS = 15


def wrap_angle(angle: float) -> float:
  """Wraps an angle into (-pi, pi]."""
  angle = float(angle)
  if -onp.pi < angle <= onp.pi:
    return angle
  wrapped = float(onp.pi - onp.mod(onp.pi - angle, 2. * onp.pi))
  return wrapped + 2. * onp.pi if wrapped <= -onp.pi else wrapped


def _vec3(value) -> onp.ndarray:
  vec = onp.asarray(value, dtype=onp.float64).reshape(3)
  vec.setflags(write=False)
  return vec


@struct.dataclass
class Pose(object):
  """Gravity-aligned rigid placement.

  Attributes:
    center: Box center in meters, shape (3,).
    yaw: Rotation about the gravity (z) axis in radians, in (-pi, pi].
  """
  center: onp.ndarray
  yaw: float

  @classmethod
  def create(cls, center, yaw: float = 0.) -> 'Pose':
    return cls(center=_vec3(center), yaw=wrap_angle(yaw))

  @classmethod
  def identity(cls) -> 'Pose':
    return cls.create(onp.zeros(3), 0.)


@struct.dataclass
class BoxShape(object):
  """Box extents (width, depth, height) in meters, all strictly positive."""
  size: onp.ndarray

  @classmethod
  def create(cls, size) -> 'BoxShape':
    size = _vec3(size)
    if not onp.all(size > 0) or not onp.all(onp.isfinite(size)):
      raise ValueError(f'box sizes must be positive and finite, got {size}')
    return cls(size=size)

  @property
  def volume(self) -> float:
    return float(onp.prod(self.size))


@struct.dataclass
class ObjectInstance(object):
  """A categorized oriented box in a scene."""
  category: str = struct.field(pytree_node=False)
  pose: Pose
  shape: BoxShape

  @classmethod
  def create(cls, category: str, center, yaw: float, size) -> 'ObjectInstance':
    return cls(category=category, pose=Pose.create(center, yaw),
               shape=BoxShape.create(size))


@struct.dataclass
class Scene(object):
  """A room plus an ordered list of objects.

  Attributes:
    room: The room box, category `scene`.
    objects: Object instances in a fixed order.
  """
  room: ObjectInstance
  objects: Tuple[ObjectInstance, ...]

  @classmethod
  def create(cls, room: ObjectInstance,
             objects: Iterable[ObjectInstance] = ()) -> 'Scene':
    if room.category != ROOM:
      raise ValueError(f'room must have category {ROOM!r}, '
                       f'got {room.category!r}')
    objects = tuple(objects)
    for obj in objects:
      if obj.category == ROOM:
        raise ValueError('a scene holds exactly one room object')
    return cls(room=room, objects=objects)

  @property
  def categories(self) -> Tuple[str, ...]:
    return tuple(o.category for o in self.objects)

  def category_set(self) -> frozenset:
    return frozenset(self.categories)

  def with_objects(self, objects: Iterable[ObjectInstance]) -> 'Scene':
    return self.replace(objects=tuple(objects))


class Vocabulary:
  """Ordered category names; index 0 is always the room category."""

  def __init__(self, names: Sequence[str]):
    names = tuple(names)
    if not names or names[0] != ROOM:
      names = (ROOM,) + tuple(n for n in names if n != ROOM)
    if len(set(names)) != len(names):
      raise ValueError(f'duplicate category names in {names}')
    self._names = names
    self._index: Dict[str, int] = {n: i for i, n in enumerate(names)}

  @property
  def names(self) -> Tuple[str, ...]:
    return self._names

  def index(self, name: str) -> int:
    return self._index[name]

  def __contains__(self, name: str) -> bool:
    return name in self._index

  def __len__(self) -> int:
    return len(self._names)

  def __iter__(self):
    return iter(self._names)

  def __eq__(self, other) -> bool:
    return isinstance(other, Vocabulary) and self._names == other.names

  def __repr__(self) -> str:
    return f'Vocabulary({list(self._names)})'
