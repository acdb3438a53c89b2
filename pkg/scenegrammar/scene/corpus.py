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

"""Reading and writing JSON-lines scene corpora and vocabularies.

One scene per line:

  {"room": {"category": "scene", "center": [x, y, z], "yaw": g,
            "size": [w, d, h]},
   "objects": [{"category": "bed", ...}, ...]}
"""

import collections
import json
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from absl import logging
from scenegrammar.scene.base import DEFAULT_MAX_OBJECTS
from scenegrammar.scene.base import ObjectInstance
from scenegrammar.scene.base import ROOM
from scenegrammar.scene.base import Scene
from scenegrammar.scene.base import Vocabulary
from tensorflow.io import gfile

DEFAULT_MIN_COUNT = 10

_SCENE_KEYS = frozenset(['room', 'objects'])
_OBJECT_KEYS = frozenset(['category', 'center', 'yaw', 'size'])


class CorpusParseError(ValueError):
  """A corpus line could not be parsed; message starts with path:line."""


def object_to_dict(obj: ObjectInstance) -> Dict[str, object]:
  return {'category': obj.category,
          'center': [float(v) for v in obj.pose.center],
          'yaw': float(obj.pose.yaw),
          'size': [float(v) for v in obj.shape.size]}


def scene_to_dict(scene: Scene) -> Dict[str, object]:
  return {'room': object_to_dict(scene.room),
          'objects': [object_to_dict(o) for o in scene.objects]}


def _object_from_dict(d, synonyms: Mapping[str, str], where: str):
  if not isinstance(d, dict):
    raise CorpusParseError(f'{where}: expected an object, got {d!r}')
  unknown = set(d) - _OBJECT_KEYS
  if unknown:
    logging.warning('%s: ignoring unknown fields %s', where, sorted(unknown))
  try:
    category = str(d['category'])
    category = synonyms.get(category, category)
    return ObjectInstance.create(category, d['center'], d.get('yaw', 0.),
                                 d['size'])
  except (KeyError, TypeError, ValueError) as e:
    raise CorpusParseError(f'{where}: {e}') from e


def scene_from_dict(d, synonyms: Optional[Mapping[str, str]] = None,
                    where: str = '<scene>') -> Scene:
  """Builds a Scene from its JSON dictionary form."""
  synonyms = synonyms or {}
  if not isinstance(d, dict) or 'room' not in d:
    raise CorpusParseError(f'{where}: a scene needs a "room" entry')
  unknown = set(d) - _SCENE_KEYS
  if unknown:
    logging.warning('%s: ignoring unknown fields %s', where, sorted(unknown))
  room = _object_from_dict(d['room'], {}, where)
  if room.category != ROOM:
    raise CorpusParseError(f'{where}: room category must be {ROOM!r}')
  objects = d.get('objects', [])
  if not isinstance(objects, list):
    raise CorpusParseError(f'{where}: "objects" must be a list')
  objects = [_object_from_dict(o, synonyms, where) for o in objects]
  if any(o.category == ROOM for o in objects):
    raise CorpusParseError(f'{where}: only the room may use category {ROOM!r}')
  return Scene.create(room, objects)


def load_scenes(path: str,
                synonyms: Optional[Mapping[str, str]] = None) -> List[Scene]:
  """Loads every scene in a corpus file without any filtering."""
  scenes = []
  with gfile.GFile(path, 'r') as f:
    for lineno, line in enumerate(f, start=1):
      line = line.strip()
      if not line:
        continue
      where = f'{path}:{lineno}'
      try:
        d = json.loads(line)
      except json.JSONDecodeError as e:
        raise CorpusParseError(f'{where}: {e.msg}') from e
      scenes.append(scene_from_dict(d, synonyms, where))
  return scenes


def filter_corpus(
    scenes: Sequence[Scene],
    min_count: int = DEFAULT_MIN_COUNT,
    max_objects: int = DEFAULT_MAX_OBJECTS,
) -> Tuple[Vocabulary, List[Scene]]:
  """Drops rare categories and over-long scenes.

  Args:
    scenes: scenes to filter
    min_count: categories with fewer instances across the corpus are removed
      along with their instances
    max_objects: scenes with more objects after filtering are skipped

  Returns:
    The vocabulary of kept categories (room first, then sorted names) and the
    filtered scenes.
  """
  counts = collections.Counter(c for s in scenes for c in s.categories)
  rare = sorted(c for c, n in counts.items() if n < min_count)
  if rare:
    logging.warning('dropping %d categories seen fewer than %d times: %s',
                    len(rare), min_count, rare)
  kept = sorted(c for c, n in counts.items() if n >= min_count)
  vocab = Vocabulary([ROOM] + kept)
  out = []
  for i, scene in enumerate(scenes):
    objects = [o for o in scene.objects if o.category in vocab]
    if len(objects) > max_objects:
      logging.warning('skipping scene %d with %d objects (maximum %d)', i,
                      len(objects), max_objects)
      continue
    out.append(scene.with_objects(objects))
  return vocab, out


def load_corpus(
    path: str,
    min_count: int = DEFAULT_MIN_COUNT,
    max_objects: int = DEFAULT_MAX_OBJECTS,
    synonyms: Optional[Mapping[str, str]] = None,
) -> Tuple[Vocabulary, List[Scene]]:
  """Loads a corpus and filters it as in filter_corpus."""
  scenes = load_scenes(path, synonyms)
  vocab, scenes = filter_corpus(scenes, min_count, max_objects)
  logging.info('loaded %d scenes over %d categories from %s', len(scenes),
               len(vocab) - 1, path)
  return vocab, scenes


def save_corpus(path: str, scenes: Sequence[Scene]):
  with gfile.GFile(path, 'w') as f:
    for scene in scenes:
      f.write(json.dumps(scene_to_dict(scene)) + '\n')


def save_vocabulary(path: str, vocab: Vocabulary):
  with gfile.GFile(path, 'w') as f:
    for name in vocab.names:
      f.write(name + '\n')


def load_vocabulary(path: str) -> Vocabulary:
  """Reads one category per line; line n holds the category with id n - 1."""
  names = []
  with gfile.GFile(path, 'r') as f:
    for lineno, line in enumerate(f, start=1):
      name = line.strip()
      if not name:
        raise CorpusParseError(f'{path}:{lineno}: empty category name')
      if lineno == 1 and name != ROOM:
        raise CorpusParseError(f'{path}:1: first category must be {ROOM!r}')
      names.append(name)
  if not names:
    raise CorpusParseError(f'{path}: empty vocabulary')
  try:
    return Vocabulary(names)
  except ValueError as e:
    raise CorpusParseError(f'{path}: {e}') from e


def load_synonyms(path: str) -> Dict[str, str]:
  """Reads `alias = canonical` lines; `#` starts a comment."""
  synonyms = {}
  with gfile.GFile(path, 'r') as f:
    for lineno, line in enumerate(f, start=1):
      line = line.split('#', 1)[0].strip()
      if not line:
        continue
      alias, sep, canonical = line.partition('=')
      if not sep or not alias.strip() or not canonical.strip():
        raise CorpusParseError(f'{path}:{lineno}: expected "alias = canonical"')
      synonyms[alias.strip()] = canonical.strip()
  return synonyms
