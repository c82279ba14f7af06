"""Monte Carlo multipath ray tracing in a closed box room.

Each ray is emitted from the point source, bounces between the walls and
the cuboid, and is recorded when a free-flight segment crosses the detector
rectangle. A bounce survives with probability equal to the surface
reflectivity and is mirror-like with probability equal to the specularity,
diffuse (cosine-weighted) otherwise. Detection absorbs the ray.

Randomness comes from :mod:`echoimaging.rng`: ray ``i`` of a scene uses
stream ``i`` of ``scene.seed``. Draw slots are fixed: counters 0 and 1
choose the emission angles, bounce ``j`` (1-based) uses counters
``2 + 4 (j - 1) + {0: survival, 1: specular choice, 2 and 3: diffuse}``.
A ray's path therefore does not depend on ``max_bounces`` or on scheduling.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .histogram import EchoHistogram
from .rng import CounterRNG, nb_stream_key, nb_uniform_at
from .scene import DETECTOR_PLANES, Emitter, Room, SceneConfig, SceneError

SURFACE_OFFSET = 1e-9

DETECTED, ABSORBED, BOUNCE_CAPPED, EXPIRED = 0, 1, 2, 3
STATUS_NAMES = ("detected", "absorbed", "bounce_capped", "window_expired")


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    elapsed_time: float = 0.0
    bounce_count: int = 0


@dataclass(frozen=True)
class Arrival:
    time: float
    bounce_count: int


# ---------------------------------------------------------------------------
# numba kernels


@nb.njit(cache=True)
def _reflect_core(dx, dy, dz, nx, ny, nz, s, u_choice, u1, u2):
    if u_choice < s:
        k = 2.0 * (dx * nx + dy * ny + dz * nz)
        rx, ry, rz = dx - k * nx, dy - k * ny, dz - k * nz
        norm = math.sqrt(rx * rx + ry * ry + rz * rz)
        return rx / norm, ry / norm, rz / norm
    # cosine-weighted hemisphere around n
    if abs(nx) < 0.9:
        ax, ay, az = 1.0, 0.0, 0.0
    else:
        ax, ay, az = 0.0, 1.0, 0.0
    tx, ty, tz = ay * nz - az * ny, az * nx - ax * nz, ax * ny - ay * nx
    tn = math.sqrt(tx * tx + ty * ty + tz * tz)
    tx, ty, tz = tx / tn, ty / tn, tz / tn
    bx, by, bz = ny * tz - nz * ty, nz * tx - nx * tz, nx * ty - ny * tx
    r = math.sqrt(u1)
    phi = 2.0 * math.pi * u2
    a, b = r * math.cos(phi), r * math.sin(phi)
    w = math.sqrt(max(0.0, 1.0 - u1))
    ox = a * tx + b * bx + w * nx
    oy = a * ty + b * by + w * ny
    oz = a * tz + b * bz + w * nz
    norm = math.sqrt(ox * ox + oy * oy + oz * oz)
    return ox / norm, oy / norm, oz / norm


@nb.njit(cache=True)
def _room_exit(o, d, size):
    """Distance to the room wall hit from inside; (t, axis, inward normal sign)."""
    t_best = np.inf
    axis = -1
    sign = 0.0
    for a in range(3):
        if d[a] > 0.0:
            t = (size[a] - o[a]) / d[a]
            s = -1.0
        elif d[a] < 0.0:
            t = -o[a] / d[a]
            s = 1.0
        else:
            continue
        if t < t_best:
            t_best, axis, sign = t, a, s
    return t_best, axis, sign


@nb.njit(cache=True)
def _box_entry(o, d, lo, hi):
    """Slab test against an axis-aligned box seen from outside.

    Returns (t_entry, axis, outward normal sign, inside_flag); t_entry is
    inf on a miss.
    """
    t_near = -np.inf
    t_far = np.inf
    axis = -1
    sign = 0.0
    for a in range(3):
        if d[a] == 0.0:
            if o[a] <= lo[a] or o[a] >= hi[a]:
                return np.inf, -1, 0.0, False
            continue
        t1 = (lo[a] - o[a]) / d[a]
        t2 = (hi[a] - o[a]) / d[a]
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > t_near:
            t_near = t1
            axis = a
            sign = -1.0 if d[a] > 0.0 else 1.0
        if t2 < t_far:
            t_far = t2
    if t_near > t_far or t_far <= 0.0:
        return np.inf, -1, 0.0, False
    if t_near <= 0.0:
        return np.inf, -1, 0.0, True
    return t_near, axis, sign, False


@nb.njit(cache=True)
def _trace_core(key, counter_base, o0, d0, elapsed0, bounces0, geo, max_bounces, max_time):
    """Trace one ray. Returns (status, arrival_time, bounce_count)."""
    size = (geo[0], geo[1], geo[2])
    room_r, room_s = geo[3], geo[4]
    has_obj = geo[5] > 0.5
    lo = (geo[6], geo[7], geo[8])
    hi = (geo[9], geo[10], geo[11])
    obj_r, obj_s = geo[12], geo[13]
    c = geo[14]
    dc = (geo[15], geo[16], geo[17])
    half_w, half_h = geo[18], geo[19]
    na, wa, ha = int(geo[20]), int(geo[21]), int(geo[22])

    o = (o0[0], o0[1], o0[2])
    d = (d0[0], d0[1], d0[2])
    elapsed = elapsed0
    bounces = bounces0

    if has_obj:
        _, _, _, inside = _box_entry(o, d, lo, hi)
        if inside:
            return ABSORBED, 0.0, bounces

    while True:
        t_hit, axis, nsign = _room_exit(o, d, size)
        hit_obj = False
        if has_obj:
            t_obj, axis_o, nsign_o, _ = _box_entry(o, d, lo, hi)
            if t_obj < t_hit:
                t_hit, axis, nsign = t_obj, axis_o, nsign_o
                hit_obj = True

        if bounces >= 1 and d[na] != 0.0:
            td = (dc[na] - o[na]) / d[na]
            if td > 0.0 and td <= t_hit:
                pw = o[wa] + td * d[wa]
                ph = o[ha] + td * d[ha]
                if abs(pw - dc[wa]) <= half_w and abs(ph - dc[ha]) <= half_h:
                    t_arr = elapsed + td / c
                    if t_arr > max_time:
                        return EXPIRED, t_arr, bounces
                    return DETECTED, t_arr, bounces

        elapsed += t_hit / c
        if elapsed > max_time:
            return EXPIRED, elapsed, bounces
        if bounces >= max_bounces:
            return BOUNCE_CAPPED, elapsed, bounces

        base = counter_base + 4 * bounces
        reflectivity = obj_r if hit_obj else room_r
        specularity = obj_s if hit_obj else room_s
        if nb_uniform_at(key, base) >= reflectivity:
            return ABSORBED, elapsed, bounces + 1
        bounces += 1

        nx = nsign if axis == 0 else 0.0
        ny = nsign if axis == 1 else 0.0
        nz = nsign if axis == 2 else 0.0
        px = o[0] + t_hit * d[0]
        py = o[1] + t_hit * d[1]
        pz = o[2] + t_hit * d[2]
        rx, ry, rz = _reflect_core(
            d[0], d[1], d[2], nx, ny, nz, specularity,
            nb_uniform_at(key, base + 1),
            nb_uniform_at(key, base + 2),
            nb_uniform_at(key, base + 3),
        )
        d = (rx, ry, rz)
        o = (px + SURFACE_OFFSET * rx, py + SURFACE_OFFSET * ry, pz + SURFACE_OFFSET * rz)


@nb.njit(cache=True, inline="always")
def _emission_direction(u_az, u_el, az_lo, az_hi, el_lo, el_hi):
    az = az_lo + (az_hi - az_lo) * u_az
    el = el_lo + (el_hi - el_lo) * u_el
    ce = math.cos(el)
    return ce * math.cos(az), ce * math.sin(az), math.sin(el)


@nb.njit(cache=True, parallel=True)
def _trace_many(seed, n_rays, emit, geo, max_bounces, max_time):
    status = np.empty(n_rays, dtype=np.int8)
    times = np.empty(n_rays, dtype=np.float64)
    bounces = np.empty(n_rays, dtype=np.int32)
    origin = (emit[0], emit[1], emit[2])
    for i in nb.prange(n_rays):
        key = nb_stream_key(seed, i)
        d = _emission_direction(
            nb_uniform_at(key, 0), nb_uniform_at(key, 1), emit[3], emit[4], emit[5], emit[6]
        )
        st, t, b = _trace_core(key, 2, origin, d, 0.0, 0, geo, max_bounces, max_time)
        status[i] = st
        times[i] = t
        bounces[i] = b
    return status, times, bounces


@nb.njit(cache=True, parallel=True)
def _render(cam, az, el, geo):
    h, w = el.shape[0], az.shape[0]
    out = np.empty((h, w), dtype=np.float64)
    size = (geo[0], geo[1], geo[2])
    has_obj = geo[5] > 0.5
    lo = (geo[6], geo[7], geo[8])
    hi = (geo[9], geo[10], geo[11])
    o = (cam[0], cam[1], cam[2])
    for i in nb.prange(h):
        ce, se = math.cos(el[i]), math.sin(el[i])
        for j in range(w):
            d = (ce * math.cos(az[j]), ce * math.sin(az[j]), se)
            t, _, _ = _room_exit(o, d, size)
            if has_obj:
                t_obj, _, _, inside = _box_entry(o, d, lo, hi)
                if inside:
                    t = 0.0
                elif t_obj < t:
                    t = t_obj
            out[i, j] = t
    return out


def _pack_geometry(scene: SceneConfig) -> np.ndarray:
    room, obj, det = scene.room, scene.object, scene.detector
    geo = np.zeros(23)
    geo[0:3] = room.size
    geo[3], geo[4] = room.reflectivity, room.specularity
    if obj is not None:
        geo[5] = 1.0
        geo[6:9] = obj.lower
        geo[9:12] = obj.upper
        geo[12], geo[13] = obj.reflectivity, obj.specularity
    geo[14] = scene.wave_speed
    geo[15:18] = det.center
    geo[18], geo[19] = det.width / 2, det.height / 2
    na, (wa, ha) = DETECTOR_PLANES[det.plane]
    geo[20:23] = na, wa, ha
    return geo


def _pack_emitter(em: Emitter) -> np.ndarray:
    return np.array(
        [*em.position, *np.radians(em.azimuth_range), *np.radians(em.elevation_range)],
        dtype=np.float64,
    )


# ---------------------------------------------------------------------------
# single-ray API


def emit_ray(rng: CounterRNG, emitter: Emitter) -> Ray:
    """Draw one ray, uniform in (azimuth, elevation) over the emitter's ranges."""
    e = _pack_emitter(emitter)
    d = _emission_direction(rng.uniform(), rng.uniform(), e[3], e[4], e[5], e[6])
    return Ray(np.array(emitter.position, dtype=float), np.array(d))


def reflect(rng: CounterRNG, incident, normal, specularity: float) -> np.ndarray:
    """Outgoing direction for a bounce on a surface with unit ``normal``.

    ``normal`` points back towards the incoming ray. With probability
    ``specularity`` the mirror direction is returned, otherwise a
    cosine-weighted direction in the hemisphere around ``normal``.
    """
    d = np.asarray(incident, dtype=float)
    n = np.asarray(normal, dtype=float)
    u = rng.uniform(), rng.uniform(), rng.uniform()
    return np.array(_reflect_core(d[0], d[1], d[2], n[0], n[1], n[2], specularity, *u))


def trace_ray(
    scene: SceneConfig,
    ray: Ray,
    rng: CounterRNG,
    max_bounces: int,
    max_time: float,
) -> Arrival | None:
    """Follow ``ray`` through the scene; return its detector arrival, if any.

    Bounce ``j`` draws from ``rng`` at counters ``rng.counter + 4 (j - 1)``
    onwards, matching the batch tracer when ``rng`` has already produced the
    two emission draws. ``rng`` is not advanced.
    """
    if max_bounces < 1:
        raise ValueError("max_bounces must be >= 1")
    o = np.asarray(ray.origin, dtype=float)
    if not (np.all(o >= 0) and np.all(o <= scene.room.size)):
        raise SceneError("ray.origin", "ray origin outside room")
    status, t, b = _trace_detail(scene, ray, rng, max_bounces, max_time)
    return Arrival(t, b) if status == DETECTED else None


def _trace_detail(scene, ray, rng, max_bounces, max_time):
    o = np.asarray(ray.origin, dtype=float)
    d = np.asarray(ray.direction, dtype=float)
    status, t, b = _trace_core(
        np.uint64(rng.key),
        rng.counter - 4 * int(ray.bounce_count),
        (o[0], o[1], o[2]),
        (d[0], d[1], d[2]),
        float(ray.elapsed_time),
        int(ray.bounce_count),
        _pack_geometry(scene),
        int(max_bounces),
        float(max_time),
    )
    return int(status), float(t), int(b)


# ---------------------------------------------------------------------------
# batch simulation


@dataclass
class TraceResult:
    """Per-ray outcome of a batch trace."""

    status: np.ndarray
    time: np.ndarray
    bounce_count: np.ndarray

    def outcome_counts(self) -> dict[str, int]:
        counts = np.bincount(self.status, minlength=4)
        return {name: int(counts[i]) for i, name in enumerate(STATUS_NAMES)}

    def arrivals(self, max_bounces: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Times and bounce counts of detected rays, optionally capped in bounce order."""
        m = self.status == DETECTED
        if max_bounces is not None:
            m &= self.bounce_count <= max_bounces
        return self.time[m], self.bounce_count[m]

    def histogram(self, bins: int, window_s: float, max_bounces: int | None = None) -> EchoHistogram:
        t, _ = self.arrivals(max_bounces)
        return EchoHistogram.from_arrival_times(t, bins, window_s)


def trace_rays(scene: SceneConfig, n_rays: int, max_bounces: int, window_s: float) -> TraceResult:
    """Trace ``n_rays`` rays of ``scene`` and keep every ray's outcome."""
    if n_rays < 1:
        raise ValueError("n_rays must be >= 1")
    if max_bounces < 1:
        raise ValueError("max_bounces must be >= 1")
    status, times, bounces = _trace_many(
        np.uint64(scene.seed),
        int(n_rays),
        _pack_emitter(scene.emitter),
        _pack_geometry(scene),
        int(max_bounces),
        float(window_s),
    )
    return TraceResult(status, times, bounces)


def simulate_histogram(
    scene: SceneConfig,
    n_rays: int = 10_000,
    max_bounces: int = 10,
    bins: int = 256,
    window_s: float | None = None,
) -> EchoHistogram:
    """Echo histogram of ``n_rays`` pulses binned uniformly over ``[0, window_s]``.

    ``window_s`` defaults to one pulse period, ``1 / repetition_rate_hz``.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if window_s is None:
        window_s = 1.0 / scene.emitter.repetition_rate_hz
    if not window_s > 0:
        raise ValueError("window_s must be positive")
    return trace_rays(scene, n_rays, max_bounces, window_s).histogram(bins, window_s)


# ---------------------------------------------------------------------------
# depth rendering

DEFAULT_CAMERA_AZIMUTH = (-60.0, 100.0)
DEFAULT_CAMERA_ELEVATION = (-80.0, 80.0)


@dataclass
class DepthImage:
    """Radial first-hit distance per pixel over a uniform angular grid.

    Row 0 is the highest elevation, column 0 the lowest azimuth. Pixel
    centres sit at the midpoints of ``height x width`` equal angular cells.
    """

    depth: np.ndarray
    camera_position: tuple[float, float, float] = (0.5, 0.01, 0.5)
    azimuth_range: tuple[float, float] = DEFAULT_CAMERA_AZIMUTH
    elevation_range: tuple[float, float] = DEFAULT_CAMERA_ELEVATION
    meta: dict = field(default_factory=dict)

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    def to_pgm(self, path, meters_per_level: float = 2e-4) -> None:
        from .io import write_pgm

        write_pgm(path, self.depth, meters_per_level)

    def to_csv(self, path) -> None:
        np.savetxt(path, self.depth, delimiter=",", fmt="%.6f")


def pixel_angles(nbins: int, lo_deg: float, hi_deg: float) -> np.ndarray:
    step = (hi_deg - lo_deg) / nbins
    return np.radians(lo_deg + step * (np.arange(nbins) + 0.5))


def render_depth(
    scene: SceneConfig,
    camera_position=None,
    az_range=DEFAULT_CAMERA_AZIMUTH,
    el_range=DEFAULT_CAMERA_ELEVATION,
    height: int = 64,
    width: int = 64,
) -> DepthImage:
    """Ground-truth depth map from one ray per pixel.

    ``camera_position`` defaults to the emitter position.
    """
    if camera_position is None:
        camera_position = scene.emitter.position
    cam = np.asarray(camera_position, dtype=float)
    if not (np.all(cam > 0) and np.all(cam < scene.room.size)):
        raise SceneError("camera_position", "camera outside room")
    az = pixel_angles(width, *az_range)
    el = pixel_angles(height, *el_range)[::-1].copy()
    depth = _render(cam, az, el, _pack_geometry(scene))
    return DepthImage(depth, tuple(cam), tuple(az_range), tuple(el_range))


# ---------------------------------------------------------------------------
# image-source oracle


def _axis_images(x: float, length: float, max_order: int):
    """(coordinate, reflection count) of all 1-D mirror images up to ``max_order``."""
    out = []
    for n in range(-max_order, max_order + 1):
        for sgn in (1, -1):
            order = abs(2 * n) if sgn == 1 else abs(2 * n - 1)
            if order <= max_order:
                out.append((2 * n * length + sgn * x, order))
    return out


def image_sources(room: Room, source_pos, max_order: int) -> list[tuple[np.ndarray, int]]:
    """All mirror images of ``source_pos`` with reflection order in ``[1, max_order]``."""
    imgs = [_axis_images(float(source_pos[a]), float(room.size[a]), max_order) for a in range(3)]
    out = []
    for (x, ox), (y, oy), (z, oz) in itertools.product(*imgs):
        order = ox + oy + oz
        if 1 <= order <= max_order:
            out.append((np.array([x, y, z]), order))
    return out


def image_source_arrival_times(
    room: Room,
    emitter_pos,
    detector_pos,
    max_order: int,
    c: float = 299_792_458.0,
    return_details: bool = False,
):
    """Exact specular arrival times from mirror images, sorted and deduplicated.

    With ``return_details`` the undeduplicated ``(time, order, image)``
    triples are returned as well.
    """
    if room.specularity < 1.0:
        raise SceneError("room.specularity", "image sources require a fully specular room")
    for name, p in (("emitter_pos", emitter_pos), ("detector_pos", detector_pos)):
        p = np.asarray(p, dtype=float)
        if not (np.all(p > 0) and np.all(p < room.size)):
            raise SceneError(name, "point outside room")
    det = np.asarray(detector_pos, dtype=float)
    details = []
    for img, order in image_sources(room, emitter_pos, max_order):
        details.append((float(np.linalg.norm(img - det) / c), order, img))
    details.sort(key=lambda item: item[0])
    times: list[float] = []
    for t, _, _ in details:
        if not times or t - times[-1] > 1e-12:
            times.append(t)
    if return_details:
        return times, details
    return times
