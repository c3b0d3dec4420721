"""Realised covolatility, Hayashi-Yoshida and generalised bipower variation.

Every estimator accepts observation arrays whose last axis runs over time, so
a stack of Monte-Carlo replicates of shape ``(R, n + 1)`` is evaluated in one
call.  One-dimensional inputs are summed with ``math.fsum`` (exactly rounded)
so that different algebraic forms of the same estimator agree to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .design import build_reduced_design, dual_reduced_design
from .paths import ObservedPath, PathPair, restrict
from .sampling import ObservationGrid, check_same_horizon, overlap_pairs

ESTIMATOR_TAGS = ("Cn", "U", "V", "Bipower", "RealizedVol")


def _sum(terms: np.ndarray):
    if terms.ndim == 1:
        return math.fsum(terms)
    return terms.sum(axis=-1)


def _as_obs(x, grid: ObservationGrid | None = None, name: str = "x") -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if grid is not None and a.shape[-1] != len(grid):
        raise ValueError(f"{name} has {a.shape[-1]} observations but its grid has {len(grid)} points")
    return a


@dataclass(frozen=True)
class FunctionSpec:
    """A test function for bipower variation.

    ``power`` marks ``f(x) = |x|**power`` so moment functionals can use the
    closed form.  When ``declared_even`` the evenness is probed numerically.
    """

    f: Callable[[np.ndarray], np.ndarray]
    declared_even: bool = True
    growth_degree: float = 0.0
    label: str = "f"
    power: float | None = None

    def __post_init__(self):
        if self.growth_degree < 0:
            raise ValueError("growth_degree must be nonnegative")
        if self.declared_even and not self.is_even():
            raise ValueError(f"function {self.label!r} is declared even but f(x) != f(-x)")

    def __call__(self, x):
        y = np.asarray(self.f(np.asarray(x, dtype=float)), dtype=float)
        return np.broadcast_to(y, np.shape(x)) if y.shape != np.shape(x) else y

    def is_even(self) -> bool:
        probe = np.concatenate((np.linspace(0.0, 10.0, 101), [0.123, 1.5e-3, 37.0, 123.4]))
        tol = 1e-10 * (1.0 + np.abs(probe) ** self.growth_degree)
        return bool(np.all(np.abs(self(probe) - self(-probe)) <= tol))

    def __mul__(self, other: "FunctionSpec") -> "FunctionSpec":
        power = None
        if self.power is not None and other.power is not None:
            power = self.power + other.power
        return FunctionSpec(
            lambda x, a=self, b=other: a(x) * b(x),
            declared_even=self.declared_even and other.declared_even,
            growth_degree=self.growth_degree + other.growth_degree,
            label=f"({self.label})*({other.label})",
            power=power,
        )


def abs_power(r: float) -> FunctionSpec:
    r = float(r)
    if r < 0:
        raise ValueError("exponent must be nonnegative")
    return FunctionSpec(lambda x: np.abs(x) ** r, True, r, f"abs^{r:g}", power=r)


def monomial(k: int) -> FunctionSpec:
    k = int(k)
    if k < 0:
        raise ValueError("degree must be nonnegative")
    return FunctionSpec(lambda x: x ** k, k % 2 == 0, float(k), f"x^{k}",
                        power=float(k) if k % 2 == 0 else None)


def constant_one() -> FunctionSpec:
    return abs_power(0.0)


def parse_function(text: str) -> FunctionSpec:
    """Parse ``'abs^r'``, ``'x^k'`` or ``'1'``."""
    s = text.strip().replace(" ", "")
    if s in ("1", "one"):
        return constant_one()
    for prefix, make in (("abs^", abs_power), ("x^", lambda v: monomial(int(float(v))))):
        if s.startswith(prefix):
            try:
                return make(float(s[len(prefix):]))
            except ValueError as exc:
                raise ValueError(f"cannot parse function {text!r}: {exc}") from None
    raise ValueError(f"cannot parse function {text!r}; use 'abs^r', 'x^k' or '1'")


@dataclass(frozen=True)
class EstimateResult:
    value: float
    estimator_tag: str
    n: int
    m: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.estimator_tag not in ESTIMATOR_TAGS:
            raise ValueError(f"unknown estimator tag {self.estimator_tag!r}")
        if not math.isfinite(self.value):
            raise ValueError("estimate is not finite")

    def to_dict(self) -> dict:
        return {"estimator": self.estimator_tag, "value": self.value, "n": self.n,
                "m": self.m, "metadata": dict(self.metadata)}


def realized_covolatility(x1, x2):
    """Sum of products of matched increments on a common grid."""
    a, b = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"series lengths differ: {a.shape[-1]} vs {b.shape[-1]}")
    return _sum(np.diff(a, axis=-1) * np.diff(b, axis=-1))


def hayashi_yoshida(x1, grid_i: ObservationGrid, x2, grid_j: ObservationGrid,
                    mode: str = "direct", design=None):
    """Sum of increment products over all overlapping interval pairs.

    ``direct`` sums over the overlapping pairs of the two raw grids;
    ``reduced`` uses the merged partition of ``grid_i``; ``dual`` merges
    ``grid_j`` instead.  A precomputed design may be passed in.
    """
    check_same_horizon(grid_i, grid_j)
    a, b = _as_obs(x1, grid_i, "x1"), _as_obs(x2, grid_j, "x2")
    if mode == "direct":
        rows, cols = overlap_pairs(grid_i, grid_j)
        da, db = np.diff(a, axis=-1), np.diff(b, axis=-1)
        return _sum(da[..., rows] * db[..., cols])
    if mode == "reduced":
        d = design if design is not None else build_reduced_design(grid_i, grid_j)
        ia = d.source_first, d.source_last + 1
        left = a[..., ia[1]] - a[..., ia[0]]
        right = b[..., d.last + 1] - b[..., d.first]
        return _sum(left * right)
    if mode == "dual":
        d = design if design is not None else dual_reduced_design(grid_i, grid_j)
        right = b[..., d.source_last + 1] - b[..., d.source_first]
        left = a[..., d.last + 1] - a[..., d.first]
        return _sum(left * right)
    raise ValueError(f"unknown mode {mode!r}; use direct, reduced or dual")


def drift_free_estimator(path, grid_i: ObservationGrid, grid_j: ObservationGrid,
                         mode: str = "direct"):
    """Hayashi-Yoshida applied to the martingale parts ``X - A`` of a simulated path."""
    if isinstance(path, PathPair):
        obs_i, obs_j = restrict(path, grid_i), restrict(path, grid_j)
        return hayashi_yoshida(obs_i.m1, grid_i, obs_j.m2, grid_j, mode)
    if isinstance(path, tuple) and len(path) == 2 and all(isinstance(p, ObservedPath) for p in path):
        obs_i, obs_j = path
        if obs_i.m1 is not None and obs_j.m2 is not None:
            return hayashi_yoshida(obs_i.m1, grid_i, obs_j.m2, grid_j, mode)
    raise TypeError(
        "the drift-free estimator needs the martingale decomposition of a simulated path; "
        "for external data use hayashi_yoshida"
    )


def check_equidistant(times, rel_tol: float = 1e-9) -> float:
    t = np.asarray(times, dtype=float)
    h = np.diff(t)
    if h.size == 0:
        raise ValueError("need at least two observation times")
    step = h.mean()
    dev = np.max(np.abs(h - step)) / step
    if dev > rel_tol:
        raise ValueError(f"grid is not equidistant (relative spacing deviation {dev:.3e})")
    return float(step)


def bipower_general(g: FunctionSpec, h: FunctionSpec, x, times=None, index_range: str = "lm"):
    """``(1/n) sum_i g(sqrt(n) dX_i) h(sqrt(n) dX_{i+1})`` on an equidistant grid.

    With ``index_range="lm"`` the sum runs over ``i = 1..n`` and needs
    ``n + 2`` observations (the last increment is the extra one).  With
    ``"rbp1"`` the grid has ``n + 1`` observations and the sum stops at
    ``n - 1``, which differs from ``"lm"`` by one term, i.e. by O(1/n).
    """
    a = np.asarray(x, dtype=float)
    if times is not None:
        if len(times) != a.shape[-1]:
            raise ValueError("times and observations differ in length")
        check_equidistant(times)
    d = np.diff(a, axis=-1)
    if index_range == "lm":
        n = d.shape[-1] - 1
    elif index_range == "rbp1":
        n = d.shape[-1]
    else:
        raise ValueError("index_range must be 'lm' or 'rbp1'")
    if n < 1:
        raise ValueError("too few observations for bipower variation")
    z = math.sqrt(n) * d
    terms = g(z[..., :-1]) * h(z[..., 1:])
    if index_range == "lm":
        terms = terms[..., :n]
    return _sum(terms) / n


def bipower_power(r: float, q: float, x, times=None, index_range: str = "lm"):
    """Realised bipower variation with ``g = |x|^r`` and ``h = |x|^q``."""
    if r < 0 or q < 0:
        raise ValueError("bipower exponents must be nonnegative")
    return bipower_general(abs_power(r), abs_power(q), x, times, index_range)
