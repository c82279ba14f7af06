"""Geometric and material description of a simulated room scene.

Coordinates are in meters. The room occupies the box
``[0, size_x] x [0, size_y] x [0, size_z]`` with the floor at ``z = 0``.
Emission directions are parameterised by azimuth (angle from ``+x`` towards
``+y``) and elevation (angle from the horizontal plane towards ``+z``);
angles are stored in degrees and converted to radians where they are used.

The reference setup places the emitter and camera at ``(0.5, -1, 0.5)``,
i.e. one meter behind the ``y = 0`` wall of a closed room. Such a source
could never receive echoes, so the defaults here move both to ``y = 0.01``
and put the 1 m x 1 m detector right next to the emitter.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .rng import CounterRNG

SPEED_OF_LIGHT = 299_792_458.0

DETECTOR_PLANES = {"YZ": (0, (1, 2)), "XZ": (1, (0, 2)), "XY": (2, (0, 1))}
"""Plane identifier -> (normal axis, (width axis, height axis))."""


class SceneError(ValueError):
    """A scene invariant is violated.

    ``field`` names the offending field using dotted notation, e.g.
    ``"object.center_x"``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


@dataclass(frozen=True)
class Room:
    size_x: float = 4.0
    size_y: float = 7.0
    size_z: float = 7.0
    reflectivity: float = 1.0
    specularity: float = 1.0

    @property
    def size(self) -> np.ndarray:
        return np.array([self.size_x, self.size_y, self.size_z], dtype=float)

    @property
    def diagonal(self) -> float:
        return math.sqrt(self.size_x**2 + self.size_y**2 + self.size_z**2)


@dataclass(frozen=True)
class CuboidObject:
    """Axis-aligned box standing on the floor, centred at ``(center_x, center_y)``."""

    center_x: float = 2.0
    center_y: float = 3.0
    width_x: float = 1.0
    width_y: float = 1.0
    height_z: float = 5.0
    reflectivity: float = 1.0
    specularity: float = 1.0

    @property
    def lower(self) -> np.ndarray:
        return np.array(
            [self.center_x - self.width_x / 2, self.center_y - self.width_y / 2, 0.0]
        )

    @property
    def upper(self) -> np.ndarray:
        return np.array(
            [self.center_x + self.width_x / 2, self.center_y + self.width_y / 2, self.height_z]
        )

    def contains_point(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p > self.lower) and np.all(p < self.upper))


@dataclass(frozen=True)
class Emitter:
    position: tuple[float, float, float] = (0.5, 0.01, 0.5)
    azimuth_range: tuple[float, float] = (-67.5, 67.5)
    elevation_range: tuple[float, float] = (-67.5, 67.5)
    repetition_rate_hz: float = 10e6


@dataclass(frozen=True)
class Detector:
    """Flat rectangular detector in an axis-aligned plane.

    For plane ``"YZ"`` the normal is ``x``, ``width`` runs along ``y`` and
    ``height`` along ``z``; the other planes follow the same letter order.
    A zero width and height gives a point detector.
    """

    center: tuple[float, float, float] = (0.5, 0.51, 0.5)
    width: float = 1.0
    height: float = 1.0
    plane: str = "YZ"


@dataclass(frozen=True)
class SceneConfig:
    room: Room = field(default_factory=Room)
    object: CuboidObject | None = field(default_factory=CuboidObject)
    emitter: Emitter = field(default_factory=Emitter)
    detector: Detector = field(default_factory=Detector)
    wave_speed: float = SPEED_OF_LIGHT
    seed: int = 0

    def with_object(self, obj: CuboidObject | None) -> "SceneConfig":
        return replace(self, object=obj)

    def empty(self) -> "SceneConfig":
        """The same scene without the object (the background room)."""
        return replace(self, object=None)

    # -- JSON -----------------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for key in ("position", "azimuth_range", "elevation_range"):
            d["emitter"][key] = list(d["emitter"][key])
        d["detector"]["center"] = list(d["detector"]["center"])
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SceneConfig":
        _check_keys("scene", data, {f for f in cls.__dataclass_fields__})
        kwargs: dict[str, Any] = {}
        if "room" in data:
            kwargs["room"] = _build(Room, "room", data["room"])
        if "object" in data:
            obj = data["object"]
            kwargs["object"] = None if obj is None else _build(CuboidObject, "object", obj)
        if "emitter" in data:
            em = dict(data["emitter"])
            for key in ("position", "azimuth_range", "elevation_range"):
                if key in em:
                    em[key] = tuple(float(v) for v in em[key])
            kwargs["emitter"] = _build(Emitter, "emitter", em)
        if "detector" in data:
            det = dict(data["detector"])
            if "center" in det:
                det["center"] = tuple(float(v) for v in det["center"])
            kwargs["detector"] = _build(Detector, "detector", det)
        if "wave_speed" in data:
            kwargs["wave_speed"] = float(data["wave_speed"])
        if "seed" in data:
            kwargs["seed"] = int(data["seed"])
        return cls(**kwargs)

    def to_json(self, path=None, indent: int = 2) -> str:
        text = json.dumps(self.to_dict(), indent=indent)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source) -> "SceneConfig":
        """Parse a JSON string, or read a file when given a :class:`~pathlib.Path`."""
        if isinstance(source, Path):
            source = source.read_text()
        return cls.from_dict(json.loads(source))


def _check_keys(name: str, data: dict, allowed: set[str]) -> None:
    if not isinstance(data, dict):
        raise SceneError(name, "expected a JSON object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise SceneError(f"{name}.{unknown[0]}", "unknown key")


def _build(cls, name: str, data: dict):
    _check_keys(name, data, set(cls.__dataclass_fields__))
    return cls(**data)


def default_scene(seed: int = 0) -> SceneConfig:
    """4 x 7 x 7 m mirror room with a 1 x 1 x 5 m cuboid at (2, 3)."""
    return SceneConfig(seed=seed)


# -- validation ----------------------------------------------------------------


def _check_unit_interval(name: str, value: float, label: str) -> None:
    if not (0.0 <= value <= 1.0):
        raise SceneError(name, f"{label} outside [0,1]")


def _inside_box(point, lower, upper, strict: bool) -> bool:
    p = np.asarray(point, dtype=float)
    if strict:
        return bool(np.all(p > lower) and np.all(p < upper))
    return bool(np.all(p >= lower) and np.all(p <= upper))


def validate(config: SceneConfig) -> SceneConfig:
    """Return ``config`` unchanged if every invariant holds.

    Raises
    ------
    SceneError
        For the first violated invariant, naming the field.
    """
    room = config.room
    for axis in ("size_x", "size_y", "size_z"):
        value = getattr(room, axis)
        if not (value > 0 and math.isfinite(value)):
            raise SceneError(f"room.{axis}", "non-positive size")
    _check_unit_interval("room.reflectivity", room.reflectivity, "reflectivity")
    _check_unit_interval("room.specularity", room.specularity, "specularity")

    if not config.wave_speed > 0:
        raise SceneError("wave_speed", "wave speed must be positive")
    if not (0 <= config.seed < 2**64):
        raise SceneError("seed", "seed must be a 64-bit unsigned integer")

    obj = config.object
    if obj is not None:
        for name in ("width_x", "width_y", "height_z"):
            if not getattr(obj, name) > 0:
                raise SceneError(f"object.{name}", "non-positive size")
        _check_unit_interval("object.reflectivity", obj.reflectivity, "reflectivity")
        _check_unit_interval("object.specularity", obj.specularity, "specularity")
        lo, hi = obj.lower, obj.upper
        if lo[0] < 0 or hi[0] > room.size_x:
            raise SceneError("object.center_x", "object outside room")
        if lo[1] < 0 or hi[1] > room.size_y:
            raise SceneError("object.center_y", "object outside room")
        if hi[2] > room.size_z:
            raise SceneError("object.height_z", "object outside room")

    em = config.emitter
    if len(em.position) != 3 or not _inside_box(em.position, 0.0, room.size, strict=True):
        raise SceneError("emitter.position", "emitter outside room")
    for name in ("azimuth_range", "elevation_range"):
        lo_a, hi_a = getattr(em, name)
        if not (-90.0 <= lo_a <= hi_a <= 90.0):
            raise SceneError(f"emitter.{name}", "angle interval outside [-90, 90]")
    if not em.repetition_rate_hz > 0:
        raise SceneError("emitter.repetition_rate_hz", "repetition rate must be positive")

    det = config.detector
    if det.plane not in DETECTOR_PLANES:
        raise SceneError("detector.plane", f"unknown plane {det.plane!r}")
    if det.width < 0 or det.height < 0:
        raise SceneError("detector.width", "negative detector size")
    lo_d, hi_d = detector_bounds(det)
    if not (_inside_box(lo_d, 0.0, room.size, False) and _inside_box(hi_d, 0.0, room.size, False)):
        raise SceneError("detector.center", "detector outside room")
    return config


def detector_bounds(det: Detector) -> tuple[np.ndarray, np.ndarray]:
    _, (wa, ha) = DETECTOR_PLANES[det.plane]
    half = np.zeros(3)
    half[wa] = det.width / 2
    half[ha] = det.height / 2
    c = np.asarray(det.center, dtype=float)
    return c - half, c + half


# -- sampling ------------------------------------------------------------------


def sample_object_position(
    rng: CounterRNG,
    room: Room,
    object_dims: tuple[float, float, float],
    reflectivity: float = 1.0,
    specularity: float = 1.0,
) -> CuboidObject:
    """Draw a uniformly random floor position for a cuboid of ``object_dims``.

    The footprint always lies inside the room floor; with zero slack on an
    axis the centre is fixed on that axis.
    """
    wx, wy, hz = (float(v) for v in object_dims)
    if wx > room.size_x or wy > room.size_y or hz > room.size_z:
        raise SceneError("object", "object dims larger than room")
    cx = wx / 2 + rng.uniform() * (room.size_x - wx)
    cy = wy / 2 + rng.uniform() * (room.size_y - wy)
    return CuboidObject(cx, cy, wx, wy, hz, reflectivity, specularity)
