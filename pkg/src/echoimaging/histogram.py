"""Echo histograms, path-count truncation and trace labels."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .scene import Room

DEFAULT_BINS = 256
DEFAULT_WINDOW_S = 100e-9


@dataclass(frozen=True, eq=False)
class EchoHistogram:
    """Photon/echo counts in ``B`` uniform time bins covering ``[0, window_s]``."""

    counts: np.ndarray
    bin_width_s: float
    window_s: float

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a non-empty 1-D sequence")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        if abs(counts.size * self.bin_width_s - self.window_s) > 1e-12 * self.window_s:
            raise ValueError("bins * bin_width_s must equal window_s")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_arrival_times(cls, times, bins: int = DEFAULT_BINS, window_s: float = DEFAULT_WINDOW_S):
        t = np.asarray(times, dtype=float)
        t = t[(t >= 0) & (t <= window_s)]
        idx = np.minimum((t / window_s * bins).astype(np.int64), bins - 1)
        return cls(np.bincount(idx, minlength=bins).astype(np.int64), window_s / bins, window_s)

    @property
    def bins(self) -> int:
        return self.counts.size

    @property
    def bin_centers(self) -> np.ndarray:
        return (np.arange(self.bins) + 0.5) * self.bin_width_s

    @property
    def total(self):
        return self.counts.sum()

    def __eq__(self, other):
        if not isinstance(other, EchoHistogram):
            return NotImplemented
        return (
            self.bin_width_s == other.bin_width_s
            and self.window_s == other.window_s
            and np.array_equal(self.counts, other.counts)
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["bin_center_s", "count"])
            for t, c in zip(self.bin_centers, self.counts):
                w.writerow([repr(float(t)), _fmt_count(c)])

    @classmethod
    def from_csv(cls, path) -> "EchoHistogram":
        centers, counts = [], []
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader)
            if [h.strip() for h in header] != ["bin_center_s", "count"]:
                raise ValueError(f"{path}: expected header bin_center_s,count")
            for row in reader:
                if row:
                    centers.append(float(row[0]))
                    counts.append(float(row[1]))
        if not centers:
            raise ValueError(f"{path}: no bins")
        bw = 2 * centers[0] if len(centers) == 1 else centers[1] - centers[0]
        counts = np.asarray(counts)
        if np.all(counts == np.round(counts)):
            counts = counts.astype(np.int64)
        return cls(counts, bw, bw * len(counts))


def _fmt_count(c):
    c = float(c)
    return str(int(c)) if c.is_integer() else repr(c)


def max_tof(k_paths: int, room: Room, c: float) -> float:
    """Upper bound on the time of flight of any ``k_paths``-bounce round trip.

    A k-bounce path has ``k + 1`` straight segments inside the room, none
    longer than the main diagonal.
    """
    if k_paths < 1:
        raise ValueError("k_paths must be >= 1")
    return (k_paths + 1) * room.diagonal / c


def truncate(h: EchoHistogram, t_cut: float) -> EchoHistogram:
    """Zero every bin whose centre lies beyond ``t_cut``."""
    if not (0 < t_cut <= h.window_s * (1 + 1e-12)):
        raise ValueError("t_cut must lie in (0, window_s]")
    counts = h.counts.copy()
    counts[h.bin_centers > t_cut] = 0
    return EchoHistogram(counts, h.bin_width_s, h.window_s)


def occupancy(h: EchoHistogram) -> np.ndarray:
    return np.asarray(h.counts) > 0


@dataclass(frozen=True, eq=False)
class TraceLabel:
    occupancy: np.ndarray
    label_id: int


class LabelSession:
    """Assigns integer labels to unique occupancy patterns in first-seen order."""

    def __init__(self):
        self._ids: dict[bytes, int] = {}

    def __len__(self):
        return len(self._ids)

    def label_occupancy(self, occ) -> int:
        key = np.packbits(np.asarray(occ, dtype=bool)).tobytes() + len(occ).to_bytes(4, "little")
        return self._ids.setdefault(key, len(self._ids))

    def quantize(self, h: EchoHistogram) -> TraceLabel:
        occ = occupancy(h)
        return TraceLabel(occ, self.label_occupancy(occ))

    def labels(self, histograms) -> np.ndarray:
        return np.array([self.quantize(h).label_id for h in histograms], dtype=np.int64)


def quantize(h: EchoHistogram, session: LabelSession | None = None) -> TraceLabel:
    """Count-blind trace label of ``h``: which bins are populated.

    Without a session, a fresh one is used and the label id is 0.
    """
    return (session or LabelSession()).quantize(h)
