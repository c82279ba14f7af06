"""Shannon information of empirical trace-label distributions.

All quantities are in bits. Probabilities are plain empirical frequencies
and ``0 log 0`` is taken as 0.
"""

from __future__ import annotations

import csv
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .histogram import EchoHistogram, LabelSession


class EmptyDistributionError(ValueError):
    pass


def _check_probabilities(p: np.ndarray) -> None:
    if p.size == 0:
        raise EmptyDistributionError("empty distribution")
    if np.any(p <= 0):
        raise ValueError("probabilities must be strictly positive")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")


@dataclass(frozen=True)
class TraceDistribution:
    probabilities: Mapping[int, float]
    sample_count: int = 0

    def __post_init__(self):
        _check_probabilities(np.fromiter(self.probabilities.values(), float))

    @classmethod
    def from_labels(cls, labels) -> "TraceDistribution":
        counts = Counter(np.asarray(labels).tolist())
        n = sum(counts.values())
        if n == 0:
            raise EmptyDistributionError("empty distribution")
        return cls({k: v / n for k, v in counts.items()}, n)


@dataclass(frozen=True)
class JointTraceDistribution:
    probabilities: Mapping[tuple[int, int], float]
    sample_count: int = 0

    def __post_init__(self):
        _check_probabilities(np.fromiter(self.probabilities.values(), float))

    @classmethod
    def from_label_pairs(cls, xs, ys) -> "JointTraceDistribution":
        xs, ys = np.asarray(xs).tolist(), np.asarray(ys).tolist()
        if len(xs) != len(ys):
            raise ValueError("label sequences differ in length")
        counts = Counter(zip(xs, ys))
        n = len(xs)
        if n == 0:
            raise EmptyDistributionError("empty distribution")
        return cls({k: v / n for k, v in counts.items()}, n)

    def _marginal(self, index: int) -> TraceDistribution:
        acc: dict[int, float] = {}
        for pair, p in self.probabilities.items():
            acc[pair[index]] = acc.get(pair[index], 0.0) + p
        return TraceDistribution(acc, self.sample_count)

    def marginal_x(self) -> TraceDistribution:
        return self._marginal(0)

    def marginal_y(self) -> TraceDistribution:
        return self._marginal(1)


def _entropy_bits(p) -> float:
    p = np.asarray(list(p), dtype=float)
    if p.size == 0:
        raise EmptyDistributionError("empty distribution")
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def entropy(d: TraceDistribution) -> float:
    """H(X) = -sum p log2 p."""
    return _entropy_bits(d.probabilities.values())


def joint_entropy(j: JointTraceDistribution) -> float:
    return _entropy_bits(j.probabilities.values())


def mutual_information(j: JointTraceDistribution) -> float:
    """MI(X;Y) = H(X) + H(Y) - H(X,Y)."""
    return entropy(j.marginal_x()) + entropy(j.marginal_y()) - joint_entropy(j)


def uncorrelated_information(j: JointTraceDistribution) -> float:
    """Information in Y not already carried by X: H(X,Y) - H(X), i.e. H(Y|X)."""
    return joint_entropy(j) - entropy(j.marginal_x())


# -- multipath curve -----------------------------------------------------------


@dataclass
class InformationCurve:
    """``H(X_1)`` plus ``UI(X_{k-1}; X_k)`` for each bounce order ``k >= 2``."""

    h1_bits: float
    ui_bits: dict[int, float]
    entropies: dict[int, float]

    def rows(self) -> list[tuple[int, float]]:
        return sorted(self.ui_bits.items())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["k", "UI_bits", "H1_bits"])
            for k, ui in self.rows():
                w.writerow([k, repr(ui), repr(self.h1_bits)])


def multipath_information_curve(
    histograms: Mapping[int, Mapping[int, EchoHistogram] | Sequence[EchoHistogram]],
) -> InformationCurve:
    """Information gained by each extra bounce order over a set of scenes.

    ``histograms[k]`` holds one histogram per scene for maximum bounce order
    ``k``, either as a sequence (scenes matched by position) or as a mapping
    keyed by scene id. Orders must be consecutive starting at 1. Each order
    gets its own labeling session.
    """
    ks = sorted(histograms)
    if not ks or ks != list(range(1, ks[-1] + 1)):
        raise ValueError(f"bounce orders must be 1..K, got {ks}")
    by_k = {
        k: dict(v) if isinstance(v, Mapping) else dict(enumerate(v)) for k, v in histograms.items()
    }
    scenes = sorted(by_k[1])
    for k in ks:
        if sorted(by_k[k]) != scenes:
            raise ValueError(f"scene set for k={k} does not match k=1")

    labels = {}
    for k in ks:
        session = LabelSession()
        labels[k] = session.labels(by_k[k][s] for s in scenes)

    entropies = {k: entropy(TraceDistribution.from_labels(labels[k])) for k in ks}
    ui = {}
    for k in ks[1:]:
        joint = JointTraceDistribution.from_label_pairs(labels[k - 1], labels[k])
        ui[k] = uncorrelated_information(joint)
    return InformationCurve(entropies[1], ui, entropies)
