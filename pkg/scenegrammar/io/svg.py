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

"""Exports a scene as a top-down svg view."""

import numpy as onp
import svgwrite
from tensorflow.io import gfile

from scenegrammar.scene import math
from scenegrammar.scene.base import ObjectInstance, Scene

_PALETTE = ('#8dd3c7', '#ffffb3', '#bebada', '#fb8072', '#80b1d3', '#fdb462',
            '#b3de69', '#fccde5', '#bc80bd', '#ccebc5')
_ROOM_FILL = '#f4f4f4'


def _r(x: float) -> float:
  return round(float(x), 3)


def save_svg(path: str, scene: Scene, scale: float = 100., margin: float = 20.):
  """Saves the top view of scene as a SVG file."""
  with gfile.GFile(path, 'w') as fout:
    fout.write(render(scene, scale, margin))


def render(scene: Scene, scale: float = 100., margin: float = 20.) -> str:
  """Draws one labeled rotated rectangle per box, the room first.

  Args:
    scene: the scene
    scale: pixels per meter
    margin: border around the drawing in pixels

  Returns:
    SVG 1.1 document text.
  """
  boxes = (scene.room,) + scene.objects
  points = onp.concatenate([math.footprint(b) for b in boxes])
  lo, hi = points.min(axis=0), points.max(axis=0)
  width, height = (hi - lo) * scale + 2. * margin

  def to_screen(x, y):
    return _r((x - lo[0]) * scale + margin), _r((hi[1] - y) * scale + margin)

  dwg = svgwrite.Drawing(size=(_r(width), _r(height)), profile='full')
  categories = sorted(scene.category_set())

  def add_box(obj: ObjectInstance, fill: str, label: bool):
    cx, cy = to_screen(*obj.pose.center[:2])
    w, d = obj.shape.size[:2] * scale
    angle = _r(-onp.degrees(obj.pose.yaw))
    dwg.add(dwg.rect(
        insert=(_r(cx - w / 2.), _r(cy - d / 2.)),
        size=(_r(w), _r(d)),
        transform=f'rotate({angle} {cx} {cy})',
        fill=fill,
        stroke='black',
        stroke_width=1))
    if label:
      dwg.add(dwg.text(
          obj.category,
          insert=(cx, cy),
          font_size=10,
          font_family='Arial',
          text_anchor='middle'))

  add_box(scene.room, _ROOM_FILL, label=False)
  for obj in scene.objects:
    fill = _PALETTE[categories.index(obj.category) % len(_PALETTE)]
    add_box(obj, fill, label=True)
  return dwg.tostring()
