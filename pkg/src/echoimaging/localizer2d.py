"""Closed-form 2D localisation of a point scatterer in front of a mirror wall.

Emitter and point detector sit at the origin; the wall is the line
``x = wall_x``. The three echoes are

* ``t0``: detector -> scatterer -> detector,
* ``t1``: detector -> scatterer -> wall -> detector,
* ``t2``: detector -> scatterer -> wall -> scatterer -> detector.

``t0`` puts the scatterer on a circle, ``t2 - t0`` fixes its distance to
the wall, and together they give ``(x0, |y0|)``. The sign of ``y0`` cannot
be recovered: the geometry is symmetric about the x axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


ON_AXIS_TOL = 1e-9


class LocalizationError(ValueError):
    pass


@dataclass(frozen=True)
class EchoTimes2D:
    t0: float
    t1: float
    t2: float
    wall_x: float
    c: float

    def __post_init__(self):
        # t1 == t2 exactly when the scatterer sits on the x axis
        if not (0 < self.t0 < self.t1 <= self.t2 * (1 + 1e-12)):
            raise LocalizationError("echo times must satisfy 0 < t0 < t1 <= t2")


@dataclass(frozen=True)
class ScattererEstimate:
    x0: float
    y0_abs: float
    ambiguity_flag: bool = True

    @property
    def candidates(self) -> list[tuple[float, float]]:
        if self.ambiguity_flag and self.y0_abs > 0:
            return [(self.x0, self.y0_abs), (self.x0, -self.y0_abs)]
        return [(self.x0, self.y0_abs)]


def wall_crossing_y(x0: float, y0: float, wall_x: float) -> float:
    """Ordinate where the specular scatterer -> wall -> origin path meets the wall.

    The reflected leg points at the origin's mirror image ``(2 wall_x, 0)``.
    """
    return y0 * wall_x / (2 * wall_x - x0)


def forward_times(x0: float, y0: float, wall_x: float, c: float) -> EchoTimes2D:
    if c <= 0:
        raise LocalizationError("c must be positive")
    if not (0 < x0 < wall_x):
        raise LocalizationError("scatterer must lie between the detector and the wall")
    r = math.hypot(x0, y0)
    t0 = 2 * r / c
    t1 = (r + math.hypot(2 * wall_x - x0, y0)) / c
    t2 = (2 * r + 2 * (wall_x - x0)) / c
    return EchoTimes2D(t0, t1, t2, wall_x, c)


def invert(t0: float, t2: float, wall_x: float, c: float, t1: float | None = None) -> ScattererEstimate:
    """Scatterer position from the 1- and 3-bounce echo times.

    ``t1`` is accepted for symmetry with :func:`forward_times` but not used.
    """
    if wall_x <= 0 or c <= 0:
        raise LocalizationError("wall_x and c must be positive")
    if not (0 < t0 < t2):
        raise LocalizationError("echo times must satisfy 0 < t0 < t2")
    x0 = wall_x - c * (t2 - t0) / 2
    if x0 <= 0 or x0 >= wall_x:
        raise LocalizationError("scatterer outside valid band")
    r = c * t0 / 2
    gap = r - x0
    if gap < 0:
        # on-axis scatterers land here through rounding alone
        if gap < -ON_AXIS_TOL * max(r, wall_x):
            raise LocalizationError("inconsistent echo times")
        gap = 0.0
    y0 = math.sqrt(gap * (r + x0))
    return ScattererEstimate(x0, y0, ambiguity_flag=y0 > 0)
