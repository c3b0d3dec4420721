"""Reduced designs for the nonsynchronous covolatility estimator.

Consecutive intervals of one grid that sit inside the same interval of the
other grid are merged into one.  After merging, every interval of the other
grid contains at most one whole merged interval, and the summands of the
Hayashi-Yoshida sum taken over the merged partition become 2-dependent.

Indices stored on :class:`ReducedDesign` are 0-based.  The stopping sequences
``tau`` and ``sigma_stops`` keep the 1-based convention of their recursion
(``tau_0 = 0``, ``sigma_0 = 1``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .sampling import ObservationGrid, check_same_horizon, overlap_ranges


@dataclass(frozen=True)
class ReducedDesign:
    """Merged partition of one grid plus its overlap structure with the other.

    ``side == "I"`` means the first grid was merged (primal design), ``"J"``
    means the second was (dual design).  ``first[k]..last[k]`` is the inclusive
    range of ``other`` intervals meeting merged interval ``k``; ``source`` gives
    the inclusive range of original intervals merged into it.
    """

    side: str
    merged: ObservationGrid
    other: ObservationGrid
    first: np.ndarray
    last: np.ndarray
    source_first: np.ndarray
    source_last: np.ndarray
    tau: tuple[int, ...]
    sigma_stops: tuple[int, ...]
    n_source: int

    @property
    def n_hat(self) -> int:
        return self.merged.n

    @property
    def n0(self) -> int:
        return len(self.tau)

    @property
    def i_hat(self):
        return self.merged.intervals()

    @property
    def j_sets(self) -> list[range]:
        return [range(int(a), int(b) + 1) for a, b in zip(self.first, self.last)]

    def k_matrix(self) -> np.ndarray:
        k = np.zeros((self.n_hat, self.other.n), dtype=np.int8)
        for i, (a, b) in enumerate(zip(self.first, self.last)):
            k[i, a:b + 1] = 1
        return k

    def n_hat_upper_bound(self) -> int:
        """``n0 + #{k: tau_k - tau_{k-1} > 1} + 1{tau_{n0} < n}``."""
        taus = (0,) + self.tau
        jumps = sum(1 for a, b in zip(taus[:-1], taus[1:]) if b - a > 1)
        tail = 1 if (self.n0 == 0 or self.tau[-1] < self.n_source) else 0
        return self.n0 + jumps + tail

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "merged_times": [float(t) for t in self.merged.times],
            "ranges": [[int(a), int(b)] for a, b in zip(self.first, self.last)],
            "source_ranges": [[int(a), int(b)] for a, b in zip(self.source_first, self.source_last)],
            "tau": list(self.tau),
            "sigma": list(self.sigma_stops),
            "n0": self.n0,
            "n_hat": self.n_hat,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def containers(grid_i: ObservationGrid, grid_j: ObservationGrid) -> np.ndarray:
    """Index of the interval of ``grid_j`` containing each interval of ``grid_i``, or -1.

    ``(a, b] ⊂ (c, d]`` iff ``c <= a`` and ``b <= d``.  A nonempty interval
    fits in at most one interval of a partition, so the choice is unique.
    """
    s = grid_j.times
    j = np.searchsorted(s, grid_i.hi, side="left") - 1
    j = np.clip(j, 0, grid_j.n - 1)
    inside = (s[j] <= grid_i.lo) & (grid_i.hi <= s[j + 1])
    return np.where(inside, j, -1)


def stopping_sequences(grid_i: ObservationGrid, grid_j: ObservationGrid):
    """Run the tau/sigma recursion; returns 1-based ``(tau, sigma)`` tuples."""
    t, s = grid_i.times, grid_j.times
    n = grid_i.n
    _, last = overlap_ranges(grid_i, grid_j)

    def subset(i, j):  # 1-based I^i inside J^j
        return 1 <= j <= grid_j.n and s[j - 1] <= t[i - 1] and t[i] <= s[j]

    tau, sig = [], []
    prev_tau, prev_sig = 0, 1
    i = 1
    while True:
        i = prev_tau + 1
        while i <= n and subset(i, prev_sig):
            i += 1
        if i > n:
            break
        j_sup = int(last[i - 1]) + 1
        sigma = j_sup if j_sup > prev_sig else 0
        tau.append(i)
        sig.append(sigma)
        prev_tau, prev_sig = i, sigma
    return tuple(tau), tuple(sig)


def _reduce(grid_i: ObservationGrid, grid_j: ObservationGrid, side: str) -> ReducedDesign:
    check_same_horizon(grid_i, grid_j)
    box = containers(grid_i, grid_j)
    # a new merged interval starts wherever the container changes or is absent
    starts = np.ones(grid_i.n, dtype=bool)
    starts[1:] = (box[1:] < 0) | (box[1:] != box[:-1])
    src_first = np.nonzero(starts)[0]
    src_last = np.append(src_first[1:] - 1, grid_i.n - 1)
    merged = ObservationGrid(np.append(grid_i.times[src_first], grid_i.T))
    first, last = overlap_ranges(merged, grid_j)
    tau, sig = stopping_sequences(grid_i, grid_j)
    return ReducedDesign(side, merged, grid_j, first, last, src_first, src_last,
                         tau, sig, grid_i.n)


def build_reduced_design(grid_i: ObservationGrid, grid_j: ObservationGrid) -> ReducedDesign:
    """Merge runs of ``grid_i`` intervals lying in a common ``grid_j`` interval."""
    return _reduce(grid_i, grid_j, "I")


def dual_reduced_design(grid_i: ObservationGrid, grid_j: ObservationGrid) -> ReducedDesign:
    """Mirror construction: merge runs of ``grid_j`` intervals inside one ``grid_i`` interval.

    ``merged`` is then a coarsening of ``grid_j`` and ``other`` is ``grid_i``;
    the stopping sequences are those of the recursion with the roles swapped.
    """
    return _reduce(grid_j, grid_i, "J")
