"""ETD1 dataset files and the experiment pipelines built on them.

ETD1 layout, little-endian::

    b"ETD1"
    u32 version (1)
    u32 N, B, H, W
    f64 bin_width_s, depth_scale_m
    N x { u32 scene_id, u64 seed, f64 object_center_x, f64 object_center_y,
          f32 counts[B], f32 depth[H*W] (meters, row-major),
          u32 max_bounces }
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .histogram import EchoHistogram
from .infotheory import InformationCurve, multipath_information_curve
from .io import read_pgm, write_csv, write_pgm
from .metrics import binarize, iou, mse
from .reconstruct import COUNT_TRANSFORMS, TrainConfig, TrainingData, evaluate_mse, forward, linear_epoch_budget, train
from .rng import CounterRNG, stream_key
from .scene import CuboidObject, SceneConfig, default_scene, detector_bounds, sample_object_position, validate
from .tracer import render_depth, trace_rays

MAGIC = b"ETD1"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIIdd")

# counter-RNG stream reserved for object placement, far from the ray streams
PLACEMENT_STREAM = 2**63
MAX_PLACEMENT_TRIES = 10_000


def record_dtype(bins: int, height: int, width: int) -> np.dtype:
    return np.dtype(
        [
            ("scene_id", "<u4"),
            ("seed", "<u8"),
            ("center_x", "<f8"),
            ("center_y", "<f8"),
            ("counts", "<f4", (bins,)),
            ("depth", "<f4", (height * width,)),
            ("max_bounces", "<u4"),
        ]
    )


@dataclass
class DatasetFile:
    """Histogram / depth-image pairs sharing one set of dimensions.

    ``records`` is a structured array with :func:`record_dtype`.
    """

    bins: int
    height: int
    width: int
    bin_width_s: float
    depth_scale_m: float
    records: np.ndarray

    def __post_init__(self):
        expected = record_dtype(self.bins, self.height, self.width)
        if self.records.dtype != expected:
            raise ValueError("record layout does not match header dimensions")

    def __len__(self):
        return len(self.records)

    @classmethod
    def from_arrays(cls, scene_ids, seeds, centers, counts, depths, max_bounces, bin_width_s, depth_scale_m):
        counts = np.asarray(counts)
        depths = np.asarray(depths)
        n, bins = counts.shape
        _, h, w = depths.shape
        rec = np.zeros(n, dtype=record_dtype(bins, h, w))
        rec["scene_id"] = scene_ids
        rec["seed"] = seeds
        centers = np.asarray(centers, dtype=np.float64).reshape(n, 2)
        rec["center_x"], rec["center_y"] = centers[:, 0], centers[:, 1]
        rec["counts"] = counts
        rec["depth"] = depths.reshape(n, h * w)
        rec["max_bounces"] = max_bounces
        return cls(bins, h, w, float(bin_width_s), float(depth_scale_m), rec)

    @property
    def window_s(self) -> float:
        return self.bins * self.bin_width_s

    @property
    def counts(self) -> np.ndarray:
        return self.records["counts"].astype(np.float64)

    @property
    def depths(self) -> np.ndarray:
        return self.records["depth"].reshape(-1, self.height, self.width).astype(np.float64)

    @property
    def scene_ids(self) -> np.ndarray:
        return self.records["scene_id"].astype(np.int64)

    def histograms(self) -> dict[int, EchoHistogram]:
        return {
            int(r["scene_id"]): EchoHistogram(r["counts"].astype(np.float64), self.bin_width_s, self.window_s)
            for r in self.records
        }

    def training_data(self, count_scale: float | None = None, count_transform: str = "linear") -> TrainingData:
        """Network-ready data; ``count_scale`` defaults to this file's max (transformed) count."""
        return TrainingData.from_raw(self.counts, self.depths, self.depth_scale_m, count_scale, count_transform)

    # -- bytes ------------------------------------------------------------------

    def to_bytes(self) -> bytes:
        head = _HEADER.pack(
            MAGIC, VERSION, len(self.records), self.bins, self.height, self.width,
            self.bin_width_s, self.depth_scale_m,
        )
        return head + self.records.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "DatasetFile":
        if len(blob) < _HEADER.size:
            raise ValueError("truncated ETD1 header")
        magic, version, n, bins, h, w, bw, scale = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise ValueError("not an ETD1 file")
        if version != VERSION:
            raise ValueError(f"unsupported ETD1 version {version}")
        dt = record_dtype(bins, h, w)
        payload = blob[_HEADER.size :]
        if len(payload) != n * dt.itemsize:
            raise ValueError(
                f"header declares {n} records of {dt.itemsize} bytes, payload holds {len(payload)} bytes"
            )
        rec = np.frombuffer(payload, dtype=dt).copy()
        return cls(bins, h, w, bw, scale, rec)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "DatasetFile":
        return cls.from_bytes(Path(path).read_bytes())


def truncate_dataset(data: DatasetFile, k: int, wave_speed: float) -> DatasetFile:
    """Zero every bin centred beyond ``max_tof(k)``.

    The room diagonal is taken from ``depth_scale_m``, which generated files
    set to the diagonal.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    t_cut = (k + 1) * data.depth_scale_m / wave_speed
    centers = (np.arange(data.bins) + 0.5) * data.bin_width_s
    rec = data.records.copy()
    rec["counts"][:, centers > t_cut] = 0
    rec["max_bounces"] = np.minimum(rec["max_bounces"], k)
    return DatasetFile(data.bins, data.height, data.width, data.bin_width_s, data.depth_scale_m, rec)


# ---------------------------------------------------------------------------
# experiment plans


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything needed to regenerate a dataset collection and its sweep.

    Scene ``i`` gets seed ``stream_key(seed, i)``; ids ``0 .. n_train-1`` are
    training scenes and the next ``n_test`` ids are test scenes.
    ``epoch_schedule`` is ``"fixed"`` (``train.epochs`` for every k) or
    ``"linear"`` (110 epochs at one bounce rising to 350 at ten).
    ``count_transform`` is applied to histogram counts before they are
    scaled by the training-set maximum.
    """

    scene: SceneConfig = field(default_factory=default_scene)
    object_dims: tuple[float, float, float] = (1.0, 1.0, 5.0)
    n_train: int = 500
    n_test: int = 50
    rays_per_scene: int = 2000
    max_bounces: tuple[int, ...] = (1, 2, 4, 8)
    bins: int = 256
    window_s: float = 100e-9
    image_hw: tuple[int, int] = (64, 64)
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=30, batch_size=20))
    epoch_schedule: str = "fixed"
    count_transform: str = "sqrt"
    retrains: int = 3
    kappa: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "max_bounces", tuple(int(k) for k in self.max_bounces))
        object.__setattr__(self, "object_dims", tuple(float(v) for v in self.object_dims))
        object.__setattr__(self, "image_hw", tuple(int(v) for v in self.image_hw))
        if self.n_train < 0 or self.n_test < 0 or self.n_train + self.n_test < 1:
            raise ValueError("need at least one scene")
        if self.rays_per_scene < 1:
            raise ValueError("rays_per_scene must be >= 1")
        if not self.max_bounces or min(self.max_bounces) < 1:
            raise ValueError("max_bounces values must be >= 1")
        if len(set(self.max_bounces)) != len(self.max_bounces):
            raise ValueError("duplicate max_bounces values")
        if self.bins < 1 or not self.window_s > 0:
            raise ValueError("bins and window_s must be positive")
        if self.retrains < 1:
            raise ValueError("retrains must be >= 1")
        if self.epoch_schedule not in ("fixed", "linear"):
            raise ValueError("epoch_schedule must be 'fixed' or 'linear'")
        if self.count_transform not in COUNT_TRANSFORMS:
            raise ValueError(f"count_transform must be one of {COUNT_TRANSFORMS}")
        if not 0 < self.kappa < 1:
            raise ValueError("kappa must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        validate(self.scene)

    @property
    def n_scenes(self) -> int:
        return self.n_train + self.n_test

    def train_ids(self) -> range:
        return range(self.n_train)

    def test_ids(self) -> range:
        return range(self.n_train, self.n_scenes)

    def scene_seed(self, scene_id: int) -> int:
        return stream_key(self.seed, scene_id)

    def epochs_for(self, k: int) -> int:
        return self.train.epochs if self.epoch_schedule == "fixed" else linear_epoch_budget(k)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scene"] = self.scene.to_dict()
        d["train"] = self.train.to_dict()
        for key in ("object_dims", "max_bounces", "image_hw"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPlan":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown plan keys: {sorted(unknown)}")
        kw = dict(data)
        if "scene" in kw:
            kw["scene"] = SceneConfig.from_dict(kw["scene"])
        if "train" in kw:
            kw["train"] = TrainConfig.from_dict(kw["train"])
        return cls(**kw)

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, path) -> "ExperimentPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))


PRESETS = {
    "desk": ExperimentPlan(),
    "full": ExperimentPlan(
        n_train=2000, n_test=100, rays_per_scene=10_000, max_bounces=tuple(range(1, 11)),
        train=TrainConfig(), epoch_schedule="linear", retrains=10,
    ),
    "info": ExperimentPlan(n_train=2000, n_test=0, rays_per_scene=10_000, max_bounces=tuple(range(1, 7))),
}


def preset(name: str, **overrides) -> ExperimentPlan:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return replace(PRESETS[name], **overrides)


# ---------------------------------------------------------------------------
# generation


def _boxes_overlap(lo_a, hi_a, lo_b, hi_b) -> bool:
    return bool(np.all(lo_a <= hi_b) and np.all(lo_b <= hi_a))


def place_object(plan: ExperimentPlan, scene_seed: int) -> CuboidObject:
    """Sample a floor position, rejecting ones that cover the emitter or touch the detector."""
    rng = CounterRNG(scene_seed, PLACEMENT_STREAM)
    base = plan.scene.object
    refl = base.reflectivity if base is not None else 1.0
    spec = base.specularity if base is not None else 1.0
    det_lo, det_hi = detector_bounds(plan.scene.detector)
    for _ in range(MAX_PLACEMENT_TRIES):
        obj = sample_object_position(rng, plan.scene.room, plan.object_dims, refl, spec)
        if obj.contains_point(plan.scene.emitter.position):
            continue
        if _boxes_overlap(obj.lower, obj.upper, det_lo, det_hi):
            continue
        return obj
    raise ValueError("no valid object placement found; object too large for the free floor")


def scene_for(plan: ExperimentPlan, scene_id: int) -> SceneConfig:
    seed = plan.scene_seed(scene_id)
    return replace(plan.scene, object=place_object(plan, seed), seed=seed)


def background_mask(plan: ExperimentPlan):
    h, w = plan.image_hw
    return render_depth(plan.scene.empty(), height=h, width=w)


def simulate_scenes(plan: ExperimentPlan, scene_ids, log=None):
    """Histograms for every k plus depth maps for ``scene_ids``.

    One trace per scene at the largest k; lower orders keep only arrivals
    with at most k bounces, which is what tracing with that cap would give.
    """
    kmax = max(plan.max_bounces)
    h, w = plan.image_hw
    ids, seeds, centers, depths = [], [], [], []
    counts = {k: [] for k in plan.max_bounces}
    for n, sid in enumerate(scene_ids):
        sc = scene_for(plan, sid)
        res = trace_rays(sc, plan.rays_per_scene, kmax, plan.window_s)
        for k in plan.max_bounces:
            counts[k].append(res.histogram(plan.bins, plan.window_s, k).counts)
        depths.append(render_depth(sc, height=h, width=w).depth)
        ids.append(sid)
        seeds.append(sc.seed)
        centers.append((sc.object.center_x, sc.object.center_y))
        if log is not None:
            log(n, sid)
    return ids, seeds, centers, counts, depths


def generate_dataset(plan: ExperimentPlan, out_dir, log=None) -> dict[str, Path]:
    """Write ``train_k{k}.etd`` and ``test_k{k}.etd`` for every k, ``mask.pgm`` and ``plan.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if set(plan.train_ids()) & set(plan.test_ids()):
        raise ValueError("train and test scene ids overlap")
    bin_width = plan.window_s / plan.bins
    scale = plan.scene.room.diagonal
    written: dict[str, Path] = {}
    for split, ids in (("train", plan.train_ids()), ("test", plan.test_ids())):
        if len(ids) == 0:
            continue
        sids, seeds, centers, counts, depths = simulate_scenes(plan, ids, log)
        for k in plan.max_bounces:
            f = DatasetFile.from_arrays(sids, seeds, centers, counts[k], depths, k, bin_width, scale)
            path = out / f"{split}_k{k}.etd"
            f.save(path)
            written[path.name] = path
    mask_path = out / "mask.pgm"
    write_pgm(mask_path, background_mask(plan).depth)
    written["mask.pgm"] = mask_path
    plan.to_json(out / "plan.json")
    return written


# ---------------------------------------------------------------------------
# sweep


@dataclass
class SweepRow:
    k: int
    mean_mse: float
    mse_spread: float
    mean_iou: float
    test_mse: list[float]


@dataclass
class SweepReport:
    rows: list[SweepRow]

    def mean_mse(self, k: int) -> float:
        return next(r.mean_mse for r in self.rows if r.k == k)

    def mean_iou(self, k: int) -> float:
        return next(r.mean_iou for r in self.rows if r.k == k)

    def to_csv(self, path) -> None:
        write_csv(
            path, ["k", "mean_mse", "mse_spread", "mean_iou"],
            [(r.k, r.mean_mse, r.mse_spread, r.mean_iou) for r in self.rows],
        )


def retrain_seed(plan: ExperimentPlan, retrain: int) -> int:
    """Training seed of one retrain, shared by every k so sweeps are paired."""
    return stream_key(plan.train.seed ^ plan.seed, 2**32 + retrain) >> 32


def mean_iou(params, data: TrainingData, mask_m: np.ndarray, kappa: float) -> float:
    """Mean foreground IOU of predictions against truth, both in meters."""
    pred = forward(params, data.x).astype(np.float64) * data.depth_scale_m
    truth = data.y.astype(np.float64) * data.depth_scale_m
    vals = [iou(binarize(p, mask_m, kappa), binarize(t, mask_m, kappa)) for p, t in zip(pred, truth)]
    return float(np.mean(vals))


def run_multipath_sweep(plan: ExperimentPlan, data_dir, out=None, log=None) -> SweepReport:
    """Train ``plan.retrains`` networks per k and score them on the test split.

    MSE is on normalised depth (meters over the room diagonal); IOU uses the
    stored background mask and ``plan.kappa``.
    """
    data_dir = Path(data_dir)
    mask_path = data_dir / "mask.pgm"
    mask_m = read_pgm(mask_path) if mask_path.exists() else background_mask(plan).depth
    rows = []
    for k in sorted(plan.max_bounces):
        paths = [data_dir / f"train_k{k}.etd", data_dir / f"test_k{k}.etd"]
        missing = [p.name for p in paths if not p.exists()]
        if missing:
            raise FileNotFoundError(f"missing dataset for k={k}: {', '.join(missing)}")
        tr = DatasetFile.load(paths[0]).training_data(count_transform=plan.count_transform)
        te = DatasetFile.load(paths[1]).training_data(tr.count_scale, plan.count_transform)
        mses, ious = [], []
        for r in range(plan.retrains):
            cfg = replace(plan.train, seed=retrain_seed(plan, r), epochs=plan.epochs_for(k), path_count_tag=k)
            params, report = train(tr, cfg, te)
            mses.append(report.final_test_mse)
            ious.append(mean_iou(params, te, mask_m, plan.kappa))
            if log is not None:
                log(k, r, mses[-1], ious[-1], report.wall_clock_s)
        rows.append(SweepRow(k, float(np.mean(mses)), float(np.std(mses)), float(np.mean(ious)), mses))
    result = SweepReport(rows)
    if out is not None:
        result.to_csv(out)
    return result


# ---------------------------------------------------------------------------
# information analysis


def _check_consecutive(ks) -> list[int]:
    ks = sorted(ks)
    if not ks or ks != list(range(1, ks[-1] + 1)):
        raise ValueError(f"information analysis needs consecutive k = 1..K, got {ks}")
    return ks


def load_histograms(data_dir, kmax: int) -> dict[int, dict[int, EchoHistogram]]:
    """Histograms keyed by k then scene id, pooling train and test files."""
    data_dir = Path(data_dir)
    out = {}
    for k in range(1, kmax + 1):
        files = [data_dir / f"{split}_k{k}.etd" for split in ("train", "test")]
        files = [f for f in files if f.exists()]
        if not files:
            raise FileNotFoundError(f"no dataset for k={k} in {data_dir}")
        hists = {}
        for f in files:
            hists.update(DatasetFile.load(f).histograms())
        out[k] = hists
    return out


def run_info_analysis(plan: ExperimentPlan, data_dir=None, out=None) -> InformationCurve:
    """Information curve over the plan's scenes, from files in ``data_dir`` or simulated afresh."""
    ks = _check_consecutive(plan.max_bounces)
    if data_dir is not None:
        hists = load_histograms(data_dir, ks[-1])
    else:
        ids, _, _, counts, _ = simulate_scenes(plan, range(plan.n_scenes))
        bw = plan.window_s / plan.bins
        hists = {k: {i: EchoHistogram(c, bw, plan.window_s) for i, c in zip(ids, counts[k])} for k in ks}
    curve = multipath_information_curve(hists)
    if out is not None:
        curve.to_csv(out)
    return curve


def evaluate_model(params, data: DatasetFile, mask_m, kappa: float = 0.5) -> list[tuple[int, float, float]]:
    """Per-scene ``(scene_id, mse, iou)``; MSE on normalised depth."""
    td = data.training_data(params.count_scale, params.count_transform)
    pred = forward(params, td.x).astype(np.float64)
    rows = []
    for sid, p, t in zip(data.scene_ids, pred, td.y.astype(np.float64)):
        fg_p = binarize(p * td.depth_scale_m, mask_m, kappa)
        fg_t = binarize(t * td.depth_scale_m, mask_m, kappa)
        rows.append((int(sid), mse(p, t), iou(fg_p, fg_t)))
    return rows


__all__ = [
    "DatasetFile", "ExperimentPlan", "PRESETS", "SweepReport", "SweepRow", "background_mask",
    "evaluate_model", "evaluate_mse", "generate_dataset", "load_histograms", "place_object", "preset",
    "record_dtype", "retrain_seed", "run_info_analysis", "run_multipath_sweep", "scene_for",
    "simulate_scenes", "truncate_dataset",
]
