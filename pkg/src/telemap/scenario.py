"""Paired-workspace data model (object pose sets A and B) and error metrics.

Scenario documents are JSON::

    {
      "local":  [{"id": 0, "position": [x, y, z], "quaternion": [w, x, y, z]}, ...],
      "remote": [{"id": 0, "position": [x, y, z], "quaternion": [w, x, y, z]}, ...]
    }

Lengths are meters; quaternions must be unit within 1e-6 (renormalized on
load).  2D scenarios are plain 3D scenarios with z = 0 and rotations about z.
"""

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import NumericalError, ScenarioError, ScenarioFormatError
from . import quat

MIN_OBJECT_SEPARATION = 1e-9


@dataclass
class ObjectPose:
    id: int
    position: np.ndarray
    quaternion: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.quaternion = np.asarray(self.quaternion, dtype=float).reshape(4)


@dataclass
class Correspondence:
    """Ordered one-to-one pairing of local and remote object poses."""

    local: list
    remote: list
    _rel_rotvecs: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.local) != len(self.remote):
            raise ScenarioError(
                f"local has {len(self.local)} objects, remote has {len(self.remote)}"
            )
        if len(self.local) < 2:
            raise ScenarioError("a correspondence needs at least 2 object pairs")
        for obj in list(self.local) + list(self.remote):
            n = np.linalg.norm(obj.quaternion)
            if abs(n - 1.0) > 1e-6:
                raise ScenarioError(f"object {obj.id}: quaternion norm {n:.9f} is not 1")
            obj.quaternion = obj.quaternion / n
        pos = self.local_positions()
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                if np.linalg.norm(pos[i] - pos[j]) <= MIN_OBJECT_SEPARATION:
                    raise ScenarioError(
                        f"local objects {self.local[i].id} and {self.local[j].id} "
                        "have coincident positions"
                    )

    def __len__(self):
        return len(self.local)

    def local_positions(self):
        return np.array([o.position for o in self.local])

    def remote_positions(self):
        return np.array([o.position for o in self.remote])

    def local_quaternions(self):
        return np.array([o.quaternion for o in self.local])

    def remote_quaternions(self):
        return np.array([o.quaternion for o in self.remote])

    def relative_rotvecs(self):
        """Per-object orientation offsets log(q'_i * conj(q_i)), sign-canonicalized.

        Computed on first use and cached; this is the form both the rotation
        fitting targets and the orientation network targets consume.
        """
        if self._rel_rotvecs is None:
            rel = quat.hamilton(self.remote_quaternions(), quat.conj(self.local_quaternions()))
            self._rel_rotvecs = quat.quat_log(quat.canonicalize(quat.normalize(rel)))
        return self._rel_rotvecs

    def bounds(self, side="local", inflate=1.0):
        """Axis-aligned bounding box of object positions, inflated about its center."""
        pos = self.local_positions() if side == "local" else self.remote_positions()
        lo, hi = pos.min(axis=0), pos.max(axis=0)
        center = 0.5 * (lo + hi)
        half = np.maximum(0.5 * (hi - lo), 1e-3) * inflate
        return center - half, center + half


@dataclass
class MappedState:
    """Full output bundle of one mapping evaluation."""

    x: np.ndarray
    q: np.ndarray
    jacobian: np.ndarray
    v: np.ndarray = None
    omega: np.ndarray = None

    def __post_init__(self):
        det = np.linalg.det(self.jacobian)
        if not det > 0.0:
            raise NumericalError(f"mapping Jacobian has non-positive determinant {det}")


def position_error(mapped_positions, remote_positions):
    """Mean Euclidean distance between mapped and remote positions, meters."""
    a = np.atleast_2d(np.asarray(mapped_positions, dtype=float))
    b = np.atleast_2d(np.asarray(remote_positions, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(np.linalg.norm(a - b, axis=-1)))


def orientation_error(mapped_quaternions, remote_quaternions):
    """Mean quaternion distance between mapped and remote orientations, radians."""
    a = np.atleast_2d(np.asarray(mapped_quaternions, dtype=float))
    b = np.atleast_2d(np.asarray(remote_quaternions, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(quat.quat_distance(a, b)))


def _parse_side(doc, key):
    if key not in doc:
        raise ScenarioFormatError(f"scenario document has no '{key}' list")
    objects = []
    for entry in doc[key]:
        try:
            objects.append(
                ObjectPose(
                    id=int(entry["id"]),
                    position=entry["position"],
                    quaternion=entry["quaternion"],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioFormatError(
                f"malformed object entry in '{key}': {entry!r} ({exc})"
            ) from exc
    return objects


def load_scenario(source):
    """Load and validate a Correspondence from a path, file object, or JSON text."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, Path):
        text = source.read_text()
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        text = source
    else:
        text = Path(source).read_text()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"scenario is not valid JSON: {exc}") from exc
    return Correspondence(local=_parse_side(doc, "local"), remote=_parse_side(doc, "remote"))


def save_scenario(corr, path):
    doc = {
        side: [
            {"id": o.id, "position": o.position.tolist(), "quaternion": o.quaternion.tolist()}
            for o in getattr(corr, side)
        ]
        for side in ("local", "remote")
    }
    Path(path).write_text(json.dumps(doc, indent=2))


def bundled_scenario(name):
    """Load one of the scenarios shipped with the package ('toy2d', 'valves3d')."""
    text = resources.files("telemap").joinpath(f"data/{name}.json").read_text()
    return load_scenario(text)
