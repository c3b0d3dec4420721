"""Bivariate diffusion with deterministic volatility and correlation.

    dX_l = b_l(t, X) dt + sigma_l(t) dW_l,   d<W_1, W_2>_t = rho(t) dt

The martingale parts are drawn exactly: over each master-grid step the pair
of increments is Gaussian with covariance given by integrals of the
coefficients.  Only the drift is discretised (explicit Euler, left endpoint).

The initial value ``x0`` never enters an estimator, which only sees
increments.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .quadrature import Quadrature, QuadratureError, _eval, covariance_integrals
from .rng import derive_seed, generator
from .sampling import ObservationGrid, union_times

ScalarFn = Callable[[np.ndarray], np.ndarray]
DriftFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ModelSpec:
    """Coefficients of the diffusion pair on ``[0, T]``.

    Coefficient functions take an array of times and return an array (or a
    scalar, which is broadcast).  Drifts take ``(t, x1, x2)``.  ``breakpoints``
    lists times where a coefficient may jump, so quadrature can split there.
    """

    sigma1: ScalarFn
    sigma2: ScalarFn
    rho: ScalarFn
    T: float = 1.0
    drift1: DriftFn | None = None
    drift2: DriftFn | None = None
    breakpoints: tuple[float, ...] = ()
    label: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"T must be positive, got {self.T}")

    @property
    def has_drift(self) -> bool:
        return self.drift1 is not None or self.drift2 is not None

    def validate_on(self, times: np.ndarray) -> None:
        t = np.asarray(times, dtype=float)
        for name in ("sigma1", "sigma2"):
            v = _eval(getattr(self, name), t)
            bad = ~np.isfinite(v) | (v < 0)
            if np.any(bad):
                k = int(np.nonzero(bad)[0][0])
                raise ValueError(f"{name}(t) must be finite and >= 0; fails at t={t[k]!r}")
        r = _eval(self.rho, t)
        if np.any(~((r >= 0) & (r <= 1))):
            k = int(np.nonzero(~((r >= 0) & (r <= 1)))[0][0])
            raise ValueError(f"rho(t) must lie in [0, 1]; rho({t[k]!r}) = {r[k]!r}")

    def with_horizon(self, T: float) -> "ModelSpec":
        return replace(self, T=float(T))


def _linear_drift(level: float, kappa: float, coord: int) -> DriftFn | None:
    if level == 0 and kappa == 0:
        return None

    def b(t, x1, x2):
        x = x1 if coord == 1 else x2
        return level - kappa * np.asarray(x, dtype=float)

    return b


def constant_model(sigma1=1.0, sigma2=1.0, rho=0.0, T=1.0, drift1=0.0, drift2=0.0,
                   kappa1=0.0, kappa2=0.0) -> ModelSpec:
    """Constant coefficients; drift ``b_l(x) = drift_l - kappa_l * x_l``."""
    s1, s2, r = float(sigma1), float(sigma2), float(rho)
    return ModelSpec(
        sigma1=lambda t: np.full(np.shape(t), s1),
        sigma2=lambda t: np.full(np.shape(t), s2),
        rho=lambda t: np.full(np.shape(t), r),
        T=float(T),
        drift1=_linear_drift(drift1, kappa1, 1),
        drift2=_linear_drift(drift2, kappa2, 2),
        label="constant",
        params=dict(sigma1=s1, sigma2=s2, rho=r, drift1=drift1, drift2=drift2,
                    kappa1=kappa1, kappa2=kappa2),
    )


def piecewise_model(breaks, sigma1, sigma2, rho, T=1.0, drift1=0.0, drift2=0.0,
                    kappa1=0.0, kappa2=0.0) -> ModelSpec:
    """Piecewise-constant coefficients with values on ``len(breaks) + 1`` pieces.

    Piece k covers ``(breaks[k-1], breaks[k]]``.
    """
    edges = np.asarray(breaks, dtype=float)
    if np.any(np.diff(edges) <= 0) or np.any((edges <= 0) | (edges >= T)):
        raise ValueError("breaks must be strictly increasing inside (0, T)")
    vals = [np.broadcast_to(np.asarray(v, dtype=float), (edges.size + 1,)).copy()
            for v in (sigma1, sigma2, rho)]

    def step(values):
        return lambda t: values[np.searchsorted(edges, t, side="left")]

    return ModelSpec(
        sigma1=step(vals[0]), sigma2=step(vals[1]), rho=step(vals[2]), T=float(T),
        drift1=_linear_drift(drift1, kappa1, 1), drift2=_linear_drift(drift2, kappa2, 2),
        breakpoints=tuple(float(b) for b in edges), label="piecewise",
        params=dict(breaks=edges.tolist(), sigma1=vals[0].tolist(), sigma2=vals[1].tolist(),
                    rho=vals[2].tolist(), drift1=drift1, drift2=drift2,
                    kappa1=kappa1, kappa2=kappa2),
    )


def sine_model(sigma1=1.0, sigma2=1.0, rho=0.5, T=1.0, amplitude=0.5, frequency=1.0,
               drift1=0.0, drift2=0.0, kappa1=0.0, kappa2=0.0) -> ModelSpec:
    """Intraday-style seasonality: ``sigma_l(t) = sigma_l (1 + a sin(2 pi f t / T))``."""
    if not 0 <= amplitude < 1:
        raise ValueError("amplitude must lie in [0, 1) to keep volatility positive")
    s1, s2, r, a, f = map(float, (sigma1, sigma2, rho, amplitude, frequency))

    def season(t):
        return 1.0 + a * np.sin(2 * np.pi * f * np.asarray(t, dtype=float) / T)

    return ModelSpec(
        sigma1=lambda t: s1 * season(t),
        sigma2=lambda t: s2 * season(t),
        rho=lambda t: np.full(np.shape(t), r),
        T=float(T),
        drift1=_linear_drift(drift1, kappa1, 1), drift2=_linear_drift(drift2, kappa2, 2),
        label="sine",
        params=dict(sigma1=s1, sigma2=s2, rho=r, amplitude=a, frequency=f,
                    drift1=drift1, drift2=drift2, kappa1=kappa1, kappa2=kappa2),
    )


PRESETS = {"constant": constant_model, "piecewise": piecewise_model, "sine": sine_model}


def preset_model(name: str, **params) -> ModelSpec:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown model preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(**params)


@dataclass(frozen=True)
class PathPair:
    master_grid: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    seed: int


@dataclass(frozen=True)
class ObservedPath:
    """Values of both coordinates at a set of observation times."""

    times: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    m1: np.ndarray | None = None
    m2: np.ndarray | None = None


def master_grid(*obs_grids: ObservationGrid, substeps: int = 8) -> np.ndarray:
    """Union of the observation times, each gap split into ``substeps`` equal steps."""
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    knots = union_times(*obs_grids)
    if substeps == 1:
        return knots
    frac = np.arange(substeps) / substeps
    fine = (knots[:-1, None] + np.diff(knots)[:, None] * frac[None, :]).ravel()
    return np.append(fine, knots[-1])


def _check_grid(model: ModelSpec, grid) -> np.ndarray:
    u = np.asarray(grid, dtype=float)
    if u.ndim != 1 or u.size < 2 or np.any(np.diff(u) <= 0):
        raise ValueError("master grid must be strictly increasing with at least two points")
    outside = u[(u < 0) | (u > model.T)]
    if outside.size:
        raise ValueError(f"grid times outside [0, {model.T}]: {outside[:5].tolist()}")
    return u


def increment_factors(model: ModelSpec, grid, quad: Quadrature | None = None):
    """Per-step lower-triangular factors ``(l11, l21, l22)`` of the 2x2 covariance."""
    u = _check_grid(model, grid)
    model.validate_on(u)
    v1, v2, c = covariance_integrals(model, u[:-1], u[1:], quad)
    det = v1 * v2 - c * c
    scale = np.maximum(v1 * v2, np.finfo(float).tiny)
    bad = np.nonzero(det < -1e-10 * scale)[0]
    if bad.size:
        k = int(bad[0])
        raise QuadratureError(
            f"covariance on ({u[k]}, {u[k + 1]}] is not positive semidefinite "
            f"(det={det[k]:.3e}); tighten the quadrature tolerance"
        )
    l11 = np.sqrt(np.maximum(v1, 0.0))
    safe = np.where(l11 > 0, l11, 1.0)
    l21 = np.where(l11 > 0, c / safe, 0.0)
    l22 = np.sqrt(np.maximum(v2 - l21 * l21, 0.0))
    return l11, l21, l22


def _draw(factors, rng: np.random.Generator):
    l11, l21, l22 = factors
    z = rng.standard_normal((l11.size, 2))
    return l11 * z[:, 0], l21 * z[:, 0] + l22 * z[:, 1]


def correlated_increments(model: ModelSpec, grid, seed: int, quad: Quadrature | None = None):
    """Exact Gaussian martingale increments over each step of ``grid``."""
    return _draw(increment_factors(model, grid, quad), generator(seed))


def _euler(model: ModelSpec, u, dm1, dm2, x0):
    """Euler drift on top of exact martingale increments; works on (..., N) arrays."""
    shape = dm1.shape[:-1] + (u.size,)
    x1, x2 = np.empty(shape), np.empty(shape)
    a1, a2 = np.zeros(shape), np.zeros(shape)
    x1[..., 0], x2[..., 0] = x0
    du = np.diff(u)
    for k in range(u.size - 1):
        t = u[k]
        b1 = _drift_value(model.drift1, t, x1[..., k], x2[..., k])
        b2 = _drift_value(model.drift2, t, x1[..., k], x2[..., k])
        a1[..., k + 1] = a1[..., k] + b1 * du[k]
        a2[..., k + 1] = a2[..., k] + b2 * du[k]
        x1[..., k + 1] = x1[..., k] + b1 * du[k] + dm1[..., k]
        x2[..., k + 1] = x2[..., k] + b2 * du[k] + dm2[..., k]
    return x1, x2, a1, a2


def _drift_value(b, t, x1, x2):
    if b is None:
        return 0.0
    v = np.asarray(b(t, x1, x2), dtype=float)
    if not np.all(np.isfinite(v)):
        raise FloatingPointError(f"drift evaluation is not finite at t={t!r}")
    return v


def _cumulative(dm):
    out = np.zeros(dm.shape[:-1] + (dm.shape[-1] + 1,))
    np.cumsum(dm, axis=-1, out=out[..., 1:])
    return out


def simulate_paths(model: ModelSpec, grid, seed: int, x0=(0.0, 0.0),
                   quad: Quadrature | None = None) -> PathPair:
    u = _check_grid(model, grid)
    if u[0] != 0.0 or u[-1] != model.T:
        raise ValueError(f"master grid must cover [0, {model.T}]")
    dm1, dm2 = correlated_increments(model, u, seed, quad)
    m1, m2 = _cumulative(dm1), _cumulative(dm2)
    if model.has_drift:
        x1, x2, a1, a2 = _euler(model, u, dm1, dm2, x0)
    else:
        a1, a2 = np.zeros_like(m1), np.zeros_like(m2)
        x1, x2 = x0[0] + m1, x0[1] + m2
    return PathPair(u, x1, x2, m1, m2, a1, a2, int(seed))


def simulate_batch(model: ModelSpec, grid, seed: int, replicates, x0=(0.0, 0.0),
                   quad: Quadrature | None = None, factors=None):
    """Stack of paths for replicate indices ``replicates``.

    Row k equals ``simulate_paths(model, grid, derive_seed(seed, replicates[k]))``.
    Returns ``(x1, x2, m1, m2)`` arrays of shape ``(len(replicates), N + 1)``.
    """
    u = _check_grid(model, grid)
    factors = factors if factors is not None else increment_factors(model, u, quad)
    reps = list(replicates)
    dm1 = np.empty((len(reps), u.size - 1))
    dm2 = np.empty_like(dm1)
    for k, r in enumerate(reps):
        dm1[k], dm2[k] = _draw(factors, generator(derive_seed(seed, r)))
    m1, m2 = _cumulative(dm1), _cumulative(dm2)
    if model.has_drift:
        x1, x2, _, _ = _euler(model, u, dm1, dm2, x0)
    else:
        x1, x2 = x0[0] + m1, x0[1] + m2
    return x1, x2, m1, m2


def observation_index(master: np.ndarray, times) -> np.ndarray:
    """Positions of ``times`` in ``master``; every time must be a master-grid point."""
    t = np.asarray(times, dtype=float)
    idx = np.searchsorted(master, t)
    idx_c = np.minimum(idx, master.size - 1)
    missing = t[master[idx_c] != t]
    if missing.size:
        raise ValueError(
            f"observation times not on the master grid (no interpolation is done): "
            f"{missing[:10].tolist()}"
        )
    return idx_c


def restrict(path: PathPair, obs_grid, include_martingale: bool = True) -> ObservedPath:
    times = obs_grid.times if isinstance(obs_grid, ObservationGrid) else np.asarray(obs_grid, float)
    idx = observation_index(path.master_grid, times)
    if include_martingale:
        return ObservedPath(times, path.x1[idx], path.x2[idx], path.m1[idx], path.m2[idx])
    return ObservedPath(times, path.x1[idx], path.x2[idx])
