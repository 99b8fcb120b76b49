"""Versioned JSON scenario documents.

Example::

    {
      "version": 1,
      "seed": 7,
      "room": {"min": [-10, -10, -1], "max": [10, 10, 1]},
      "m_policy": {"mode": "limit"},
      "fov": {"half_width": 0.0025, "half_height": 0.0025},
      "cameras": [
        {"id": "cam000", "center": [10, 0, 0], "look_at": [0, 0, 0], "up": [0, 0, 1],
         "focal": 0.01, "sigma": 2.5e-7},
        {"id": "cam001", "center": [0, 10, 0],
         "rotation": [[1, 0, 0], [0, 0, -1], [0, 1, 0]], "focal": 0.01, "sigma": 2.5e-7}
      ]
    }

``rotation`` is row-major with the camera right, down and optical axes as
columns. ``look_at`` (plus optional ``up``, default +z) is converted to a
rotation on load. ``m_policy`` is ``{"mode": "limit"}``, ``{"mode":
"finite", "M": ...}`` or ``{"mode": "finite"}`` for the default ``M``.
``fov`` is optional.

The canonical form written by :func:`scenario_to_doc` always uses explicit
rotations and a resolved ``M``; its SHA-256 is the scenario hash.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .covariance import MPolicy
from .errors import MocapError, ScenarioFileError
from .geometry import CameraModel, look_at_rotation
from .scenario import FieldOfView, Scenario

VERSION = 1


def _vec(value, name, n=3):
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioFileError(f"{name} must be numeric") from None
    if a.shape != (n,) or not np.all(np.isfinite(a)):
        raise ScenarioFileError(f"{name} must be {n} finite numbers")
    return a


def _camera(doc: dict, k: int) -> CameraModel:
    if not isinstance(doc, dict):
        raise ScenarioFileError(f"camera #{k} must be an object")
    missing = {"id", "center", "focal", "sigma"} - doc.keys()
    if missing:
        raise ScenarioFileError(f"camera #{k} is missing {sorted(missing)}")
    center = _vec(doc["center"], f"camera {doc['id']!r} center")
    if "rotation" in doc:
        R = np.asarray(doc["rotation"], dtype=float)
    elif "look_at" in doc:
        R = look_at_rotation(center, _vec(doc["look_at"], "look_at"), _vec(doc.get("up", [0, 0, 1]), "up"))
    else:
        raise ScenarioFileError(f"camera {doc['id']!r} needs 'rotation' or 'look_at'")
    return CameraModel(doc["id"], center, R, float(doc["focal"]), float(doc["sigma"]))


def parse_scenario(doc: dict) -> Scenario:
    """Build and validate a :class:`Scenario` from a decoded document."""
    if not isinstance(doc, dict):
        raise ScenarioFileError("scenario document must be a JSON object")
    if doc.get("version") != VERSION:
        raise ScenarioFileError(f"unsupported scenario version {doc.get('version')!r}")
    try:
        cameras = [_camera(c, k) for k, c in enumerate(doc.get("cameras") or [])]
        ids = [c.id for c in cameras]
        dup = sorted({str(i) for i in ids if ids.count(i) > 1})
        if dup:
            raise ScenarioFileError(f"duplicate camera ids: {dup}")
        room = doc.get("room") or {}
        lo, hi = _vec(room.get("min"), "room.min"), _vec(room.get("max"), "room.max")
        pol = doc.get("m_policy") or {"mode": "limit"}
        mode = pol.get("mode")
        if mode == "finite" and pol.get("M") is None:
            policy = MPolicy.default_finite(float(np.max(hi - lo)), max(len(cameras), 1))
        else:
            policy = MPolicy(mode, pol.get("M"))
        fov = doc.get("fov")
        if fov is not None:
            fov = FieldOfView(float(fov["half_width"]), float(fov["half_height"]))
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ScenarioFileError("seed must be an integer")
        return Scenario(tuple(cameras), lo, hi, policy, seed, fov)
    except ScenarioFileError:
        raise
    except (MocapError, KeyError, TypeError, ValueError) as exc:
        raise ScenarioFileError(f"invalid scenario: {exc}") from None


def load_scenario(path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioFileError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioFileError(f"{path} is not valid JSON: {exc}") from None
    return parse_scenario(doc)


def scenario_to_doc(scenario: Scenario) -> dict:
    pol = {"mode": scenario.m_policy.mode}
    if not scenario.m_policy.is_limit:
        pol["M"] = scenario.m_policy.M
    doc = {
        "version": VERSION,
        "seed": scenario.seed,
        "room": {"min": scenario.room_min.tolist(), "max": scenario.room_max.tolist()},
        "m_policy": pol,
        "cameras": [
            {
                "id": c.id,
                "center": c.center.tolist(),
                "rotation": c.rotation.tolist(),
                "focal": c.focal,
                "sigma": c.pixel_noise_std,
            }
            for c in scenario.cameras
        ],
    }
    if scenario.fov is not None:
        doc["fov"] = {"half_width": scenario.fov.half_width, "half_height": scenario.fov.half_height}
    return doc


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def scenario_hash(scenario: Scenario) -> str:
    return hashlib.sha256(canonical_json(scenario_to_doc(scenario)).encode()).hexdigest()


def dump_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_doc(scenario), indent=2, sort_keys=True) + "\n"
