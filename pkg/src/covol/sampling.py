"""Observation grids and the half-open interval algebra.

All intervals are left-open, right-closed: ``(lo, hi]``.  Two intervals that
only touch at an endpoint do not overlap.  Endpoint comparisons are exact
float comparisons; grids that are meant to share points are built from integer
numerators over a common denominator so shared points compare equal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import derive_seed, generator


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval ({self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def __contains__(self, t: float) -> bool:
        return self.lo < t <= self.hi


def overlap(a: Interval, b: Interval) -> bool:
    """True iff ``(a.lo, a.hi]`` and ``(b.lo, b.hi]`` share a point."""
    return a.lo < b.hi and b.lo < a.hi


def is_subset(inner: Interval, outer: Interval) -> bool:
    return outer.lo <= inner.lo and inner.hi <= outer.hi


def intersection(a: Interval, b: Interval) -> Interval | None:
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    return Interval(lo, hi) if lo < hi else None


class ObservationGrid:
    """Strictly increasing times ``0 = t_0 < ... < t_n = T``.

    The grid defines ``n`` intervals ``(t_{i-1}, t_i]``; indices into
    ``intervals`` are 0-based throughout the package.
    """

    __slots__ = ("_times",)

    def __init__(self, times):
        t = np.array(times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a grid needs at least the two endpoints 0 and T")
        if t[0] != 0.0:
            raise ValueError(f"grid must start at 0, got {t[0]}")
        if not np.all(np.isfinite(t)):
            raise ValueError("grid times must be finite")
        bad = np.nonzero(np.diff(t) <= 0)[0]
        if bad.size:
            k = int(bad[0])
            raise ValueError(
                f"grid times must be strictly increasing: t[{k}]={t[k]!r}, t[{k + 1}]={t[k + 1]!r}"
            )
        t.setflags(write=False)
        self._times = t

    @property
    def times(self) -> np.ndarray:
        return self._times

    @property
    def T(self) -> float:
        return float(self._times[-1])

    @property
    def n(self) -> int:
        """Number of intervals."""
        return self._times.size - 1

    @property
    def lo(self) -> np.ndarray:
        return self._times[:-1]

    @property
    def hi(self) -> np.ndarray:
        return self._times[1:]

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self._times)

    def interval(self, i: int) -> Interval:
        return Interval(float(self._times[i]), float(self._times[i + 1]))

    def intervals(self) -> list[Interval]:
        return [self.interval(i) for i in range(self.n)]

    def __len__(self):
        return self._times.size

    def __eq__(self, other):
        if not isinstance(other, ObservationGrid):
            return NotImplemented
        return np.array_equal(self._times, other._times)

    def __hash__(self):
        return hash(self._times.tobytes())

    def __repr__(self):
        return f"ObservationGrid(n={self.n}, T={self.T})"

    def to_json(self) -> str:
        return json.dumps([float(x) for x in self._times])

    @classmethod
    def from_json(cls, text: str) -> "ObservationGrid":
        return cls(json.loads(text))

    @classmethod
    def load(cls, path) -> "ObservationGrid":
        return cls.from_json(Path(path).read_text())


def _from_fractions(numerators, denominator: int, T: float) -> ObservationGrid:
    t = (np.asarray(numerators, dtype=float) * T) / denominator
    t[0], t[-1] = 0.0, T
    return ObservationGrid(t)


def synchronous_grid(n: int, T: float = 1.0) -> ObservationGrid:
    """Equidistant grid ``{iT/n}``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    # denominator 2n keeps points bit-identical to alternating_grids
    return _from_fractions(2 * np.arange(n + 1), 2 * n, T)


def alternating_grids(n: int, T: float = 1.0) -> tuple[ObservationGrid, ObservationGrid]:
    """Odd/even alternating sampling.

    The first series is observed at ``(2k-1)T/(2n)``, k=1..n, the second at
    ``kT/n``, k=1..n-1; both grids are closed with 0 and T.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    odd = np.concatenate(([0], 2 * np.arange(1, n + 1) - 1, [2 * n]))
    even = 2 * np.arange(n + 1)
    return _from_fractions(odd, 2 * n, T), _from_fractions(even, 2 * n, T)


def poisson_grid(rate: float, T: float, seed: int) -> ObservationGrid:
    """Arrival times of a homogeneous Poisson process on (0, T), closed with 0 and T."""
    if rate <= 0:
        raise ValueError("Poisson rate must be positive")
    rng = generator(seed)
    k = rng.poisson(rate * T)
    inner = np.unique(rng.uniform(0.0, T, size=k))
    inner = inner[(inner > 0.0) & (inner < T)]
    return ObservationGrid(np.concatenate(([0.0], inner, [T])))


def poisson_grids(rate1: float, rate2: float, T: float, seed: int) -> tuple[ObservationGrid, ObservationGrid]:
    return (poisson_grid(rate1, T, derive_seed(seed, 1)),
            poisson_grid(rate2, T, derive_seed(seed, 2)))


def mesh(grid_a: ObservationGrid, grid_b: ObservationGrid) -> float:
    """Largest interval length over both grids."""
    return float(max(grid_a.lengths.max(), grid_b.lengths.max()))


def union_times(*grids: ObservationGrid) -> np.ndarray:
    return np.unique(np.concatenate([g.times for g in grids]))


def check_same_horizon(grid_a: ObservationGrid, grid_b: ObservationGrid) -> float:
    if grid_a.T != grid_b.T:
        raise ValueError(f"grids cover different horizons: T={grid_a.T} vs T={grid_b.T}")
    return grid_a.T


def overlap_ranges(grid_a: ObservationGrid, grid_b: ObservationGrid) -> tuple[np.ndarray, np.ndarray]:
    """For each interval of ``grid_a`` the first and last overlapping index of ``grid_b``.

    Overlap sets of interval partitions are contiguous, so a pair of inclusive
    bounds per row describes the whole indicator matrix.
    """
    check_same_horizon(grid_a, grid_b)
    s = grid_b.times
    first = np.searchsorted(s[1:], grid_a.lo, side="right")
    last = np.searchsorted(s[:-1], grid_a.hi, side="left") - 1
    return first, last


def overlap_pairs(grid_a: ObservationGrid, grid_b: ObservationGrid) -> tuple[np.ndarray, np.ndarray]:
    """All index pairs (i, j) with overlapping intervals, ascending in i then j."""
    first, last = overlap_ranges(grid_a, grid_b)
    counts = last - first + 1
    rows = np.repeat(np.arange(grid_a.n), counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    cols = np.repeat(first, counts) + offsets
    return rows, cols


def overlap_matrix(grid_a: ObservationGrid, grid_b: ObservationGrid) -> np.ndarray:
    """Dense 0/1 indicator matrix; for small grids and tests."""
    k = np.zeros((grid_a.n, grid_b.n), dtype=np.int8)
    rows, cols = overlap_pairs(grid_a, grid_b)
    k[rows, cols] = 1
    return k
