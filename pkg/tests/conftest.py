import numpy as np
import pytest

from echoimaging.scene import CuboidObject, Detector, Emitter, Room, SceneConfig


@pytest.fixture
def cube_scene():
    """Empty 2 m mirror cube with emitter and point detector at the centre."""
    return SceneConfig(
        room=Room(2.0, 2.0, 2.0, 1.0, 1.0),
        object=None,
        emitter=Emitter((1.0, 1.0, 1.0), (0.0, 0.0), (0.0, 0.0)),
        detector=Detector((1.0, 1.0, 1.0), 0.0, 0.0, "YZ"),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def box_hit_distance(origin, dirs, lower, upper):
    """Independent vectorised slab test: entry distance per direction, inf on miss."""
    o = np.asarray(origin, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t1 = (np.asarray(lower) - o) * inv
        t2 = (np.asarray(upper) - o) * inv
    tmin = np.nanmax(np.minimum(t1, t2), axis=-1)
    tmax = np.nanmin(np.maximum(t1, t2), axis=-1)
    hit = (tmax >= tmin) & (tmin > 0)
    return np.where(hit, tmin, np.inf)


def wall_distance(origin, dirs, size):
    o = np.asarray(origin, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(dirs > 0, (np.asarray(size) - o) / dirs, np.where(dirs < 0, -o / dirs, np.inf))
    return t.min(axis=-1)


__all__ = ["CuboidObject", "box_hit_distance", "wall_distance"]


# -- acceptance summary ---------------------------------------------------------

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion, echoed in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
