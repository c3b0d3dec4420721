"""Exact variances, Gaussian moment functionals, rate functions, speed checks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .design import ReducedDesign, build_reduced_design
from .estimators import FunctionSpec
from .quadrature import (DEFAULT_QUADRATURE, Quadrature, _eval, integrate_covol,
                         integrate_vol)
from .sampling import Interval, ObservationGrid, check_same_horizon, overlap, overlap_pairs

ISSERLIS_MAX_INTERVALS = 200


def _check_inside(interval: Interval, model) -> None:
    if interval.lo < 0 or interval.hi > model.T:
        raise ValueError(f"interval ({interval.lo}, {interval.hi}] is not inside (0, {model.T}]")


def nu(interval: Interval, model, quad: Quadrature | None = None) -> float:
    """Integrated covolatility ``int_I sigma1 sigma2 rho dt``."""
    _check_inside(interval, model)
    return float(integrate_covol(model, interval.lo, interval.hi, quad)[0])


def nu_ell(ell: int, interval: Interval, model, quad: Quadrature | None = None) -> float:
    """Integrated variance ``int_I sigma_ell^2 dt``."""
    if ell not in (1, 2):
        raise ValueError("ell must be 1 or 2")
    _check_inside(interval, model)
    return float(integrate_vol(model, ell, interval.lo, interval.hi, quad)[0])


def integrated_covolatility(model, quad: Quadrature | None = None) -> float:
    return float(integrate_covol(model, 0.0, model.T, quad)[0])


def _bracket_terms(grid_a: ObservationGrid, grid_b: ObservationGrid, model, quad):
    """The four sums of the variance bracket, with ``grid_a`` carrying X1."""
    check_same_horizon(grid_a, grid_b)
    rows, cols = overlap_pairs(grid_a, grid_b)
    nu1 = integrate_vol(model, 1, grid_a.lo, grid_a.hi, quad)
    nu2 = integrate_vol(model, 2, grid_b.lo, grid_b.hi, quad)
    cov_a = integrate_covol(model, grid_a.lo, grid_a.hi, quad)
    cov_b = integrate_covol(model, grid_b.lo, grid_b.hi, quad)
    lo = np.maximum(grid_a.lo[rows], grid_b.lo[cols])
    hi = np.minimum(grid_a.hi[rows], grid_b.hi[cols])
    cov_ab = integrate_covol(model, lo, hi, quad)
    return nu1[rows] * nu2[cols], cov_a ** 2, cov_b ** 2, cov_ab ** 2


def _bracket(grid_a, grid_b, model, quad) -> float:
    cross, sq_a, sq_b, sq_ab = _bracket_terms(grid_a, grid_b, model, quad)
    return math.fsum(np.concatenate((cross, sq_a, sq_b, -sq_ab)))


def variance_Vn(design: ReducedDesign, model, quad: Quadrature | None = None) -> float:
    """Exact variance of the drift-free estimator from a reduced design.

    Sum over merged intervals of ``nu1 * nu2`` on overlapping pairs, plus the
    squared covolatilities of every interval of both partitions, minus those
    of all pairwise intersections.
    """
    if design.side == "I":
        return _bracket(design.merged, design.other, model, quad)
    return _bracket(design.other, design.merged, model, quad)


def expected_Vn(design: ReducedDesign, model, quad: Quadrature | None = None) -> float:
    """Mean of the drift-free estimator: covolatility summed over the merged intervals."""
    g = design.merged
    return math.fsum(integrate_covol(model, g.lo, g.hi, quad))


def c1_statistic(grid_i: ObservationGrid, grid_j: ObservationGrid, model,
                 quad: Quadrature | None = None, reduced: bool = False) -> float:
    """The bracketed variance proxy behind the speed ``c_n`` (not yet divided by it).

    The value is the same on the raw grids and on the reduced design.  With
    synchronous equidistant sampling and constant coefficients it equals
    ``(T**2 / n) * sigma1**2 * sigma2**2 * (1 + rho**2)``.
    """
    if reduced:
        return variance_Vn(build_reduced_design(grid_i, grid_j), model, quad)
    return _bracket(grid_i, grid_j, model, quad)


def isserlis_variance_oracle(grid_i: ObservationGrid, grid_j: ObservationGrid, model,
                             quad: Quadrature | None = None, with_mean: bool = False):
    """Brute-force variance of the drift-free estimator.

    Writes the estimator as the quadratic form ``w' Q w`` in the stacked
    Gaussian increment vector ``w`` with covariance ``C`` and uses the
    fourth-moment identity ``E[abcd] = E[ab]E[cd] + E[ac]E[bd] + E[ad]E[bc]``,
    which for a quadratic form gives ``Var = 2 tr((QC)^2)``.  Cost grows like
    the cube of the number of intervals, hence the size cap.
    """
    check_same_horizon(grid_i, grid_j)
    n, m = grid_i.n, grid_j.n
    if n + m > ISSERLIS_MAX_INTERVALS:
        raise ValueError(f"oracle is capped at {ISSERLIS_MAX_INTERVALS} intervals, got {n + m}")
    ints = grid_i.intervals() + grid_j.intervals()
    which = np.array([1] * n + [2] * m)
    size = n + m
    pa, pb = np.triu_indices(size)
    lo = np.array([max(ints[a].lo, ints[b].lo) for a, b in zip(pa, pb)])
    hi = np.array([min(ints[a].hi, ints[b].hi) for a, b in zip(pa, pb)])
    hi = np.maximum(hi, lo)
    v1 = integrate_vol(model, 1, lo, hi, quad)
    v2 = integrate_vol(model, 2, lo, hi, quad)
    vc = integrate_covol(model, lo, hi, quad)
    wa, wb = which[pa], which[pb]
    vals = np.where((wa == 1) & (wb == 1), v1, np.where((wa == 2) & (wb == 2), v2, vc))
    cov = np.zeros((size, size))
    cov[pa, pb] = vals
    cov[pb, pa] = vals
    k = np.array([[1.0 if overlap(a, b) else 0.0 for b in ints[n:]] for a in ints[:n]])
    q = np.zeros((size, size))
    q[:n, n:] = 0.5 * k
    q[n:, :n] = 0.5 * k.T
    qc = q @ cov
    var = 2.0 * float(np.trace(qc @ qc))
    if with_mean:
        return var, float(np.trace(qc))
    return var


def abs_moment(r: float) -> float:
    """``E|Z|**r`` for standard normal ``Z``."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r < 300:
        return 2.0 ** (0.5 * r) * math.gamma(0.5 * (r + 1)) / math.sqrt(math.pi)
    return math.exp(0.5 * r * math.log(2.0) + math.lgamma(0.5 * (r + 1)) - 0.5 * math.log(math.pi))


@lru_cache(maxsize=None)
def _folded_rule():
    """Composite Gauss-Legendre rule on [0, 40], graded geometrically towards 0."""
    edges = np.concatenate((
        [0.0], 0.5 * 2.0 ** -np.arange(48, 0, -1), np.arange(0.5, 16.01, 0.5), [20, 25, 30, 40],
    ))
    x, w = np.polynomial.legendre.leggauss(20)
    a, b = edges[:-1], edges[1:]
    nodes = (0.5 * (a + b))[:, None] + (0.5 * (b - a))[:, None] * x[None, :]
    weights = (0.5 * (b - a))[:, None] * w[None, :]
    nodes, weights = nodes.ravel(), weights.ravel()
    weights = weights * np.exp(-0.5 * nodes ** 2) / math.sqrt(2 * math.pi)
    return nodes, weights


@lru_cache(maxsize=None)
def _hermite_rule(nodes: int):
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    return x, w / math.sqrt(2 * math.pi)


def gaussian_functional(f: FunctionSpec, sigma, method: str = "auto", nodes: int = 64):
    """``E f(sigma Z)`` for standard normal ``Z``; vectorised over ``sigma``.

    ``closed`` uses ``sigma**r * mu_r`` for ``f = |x|**r``.  ``folded`` folds the
    integral onto the half line, where ``|x|**r`` is smooth, and applies a
    graded composite Gauss-Legendre rule.  ``hermite`` is plain Gauss-Hermite,
    exact for polynomials but slow to converge at a kink.  ``auto`` picks
    ``closed`` when available and ``folded`` otherwise.
    """
    s = np.asarray(sigma, dtype=float)
    if np.any(s < 0):
        raise ValueError("sigma must be nonnegative")
    if method == "auto":
        method = "closed" if f.power is not None else "folded"
    if method == "closed":
        if f.power is None:
            raise ValueError(f"no closed form for {f.label!r}")
        out = np.where(s == 0, 1.0 if f.power == 0 else 0.0, s ** f.power) * abs_moment(f.power)
        return float(out) if out.ndim == 0 else out
    if method == "folded":
        y, w = _folded_rule()
        arg = s[..., None] * y
        vals = f(arg) + f(-arg)
        weights = w
    elif method == "hermite":
        x, weights = _hermite_rule(nodes)
        vals = f(s[..., None] * x)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError(f"{f.label} is not finite at a quadrature node")
    out = vals @ weights
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BipowerAsymptotics:
    """Asymptotic variance and probability limit of generalised bipower variation."""

    sigma: float
    limit: float
    ell: int
    label: str = ""


def sigma_bipower(g: FunctionSpec, h: FunctionSpec, model, ell: int = 1,
                  quad: Quadrature | None = None, method: str = "auto") -> BipowerAsymptotics:
    if not (g.declared_even and h.declared_even):
        raise ValueError("the bipower CLT variance needs even g and h")
    if not (g.is_even() and h.is_even()):
        raise ValueError("evenness violation detected in g or h")
    quad = quad or DEFAULT_QUADRATURE
    vol = {1: model.sigma1, 2: model.sigma2}[ell]
    gg, hh, gh = g * g, h * h, g * h

    def moments(t):
        s = np.abs(_eval(vol, t))
        return tuple(gaussian_functional(f, s, method) for f in (g, h, gg, hh, gh))

    def variance_density(t):
        mg, mh, mgg, mhh, mgh = moments(t)
        return mgg * mhh + 2 * mg * mh * mgh - 3 * mg ** 2 * mh ** 2

    def limit_density(t):
        mg, mh, *_ = moments(t)
        return mg * mh

    sig = float(quad.integrate(variance_density, 0.0, model.T, model.breakpoints)[0])
    lim = float(quad.integrate(limit_density, 0.0, model.T, model.breakpoints)[0])
    return BipowerAsymptotics(sig, lim, ell, f"{g.label},{h.label}")


def rate_function(x, Sigma: float):
    """Quadratic rate ``x**2 / (2 Sigma)``."""
    if not Sigma > 0:
        raise ValueError("Sigma must be positive")
    out = np.asarray(x, dtype=float) ** 2 / (2.0 * Sigma)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SpeedSpec:
    """Power-law speeds ``b_n = n**alpha`` and ``c_n = n**(-beta)``."""

    alpha: float
    beta: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")

    def b(self, n):
        return np.asarray(n, dtype=float) ** self.alpha

    def c(self, n):
        return np.asarray(n, dtype=float) ** (-self.beta)


# exponent of n in the mesh r_n, and whether r_n carries an extra log n factor
MESH_RATES = {"sync": (1.0, False), "alt": (1.0, False), "poisson": (1.0, True)}


@dataclass(frozen=True)
class SpeedVerdict:
    admissible: bool
    target: str
    conditions: dict = field(default_factory=dict)
    exponents: dict = field(default_factory=dict)


def _vanishes(exponent: float, log_power: int = 0) -> bool:
    """Does ``n**exponent * log(n)**log_power`` tend to 0?"""
    return exponent < 0 or (exponent == 0 and log_power < 0)


def check_speed(spec: SpeedSpec, scheme: str = "sync", target: str = "hy") -> SpeedVerdict:
    """Closed-form limits of the speed conditions for power families.

    For ``target="hy"`` the verdict needs ``c_n -> 0``, ``b_n -> inf``,
    ``b_n sqrt(c_n) -> 0``, ``b_n / (sqrt(c_n) log n) -> inf`` and
    ``r_n**2 / c_n -> 0``; for ``target="bipower"`` it needs ``b_n -> inf`` and
    ``b_n / sqrt(n) -> 0``.
    """
    if scheme not in MESH_RATES:
        raise ValueError(f"unknown scheme {scheme!r}")
    a, be = spec.alpha, spec.beta
    gamma, mesh_log = MESH_RATES[scheme]
    exponents = {
        "c_n": -be,
        "b_n": a,
        "b_n*sqrt(c_n)": a - be / 2,
        "b_n/(sqrt(c_n)*log(n))": a + be / 2,
        "r_n^2/c_n": be - 2 * gamma,
        "b_n/sqrt(n)": a - 0.5,
    }
    conditions = {
        "c_n->0": _vanishes(-be),
        "b_n->inf": _vanishes(-a),
        "b_n*sqrt(c_n)->0": _vanishes(a - be / 2),
        "b_n/(sqrt(c_n)*log(n))->inf": _vanishes(-(a + be / 2), 1),
        "r_n^2/c_n->0": _vanishes(be - 2 * gamma, 2 if mesh_log else 0),
        "b_n/sqrt(n)->0": _vanishes(a - 0.5),
    }
    if target == "hy":
        keys = ["c_n->0", "b_n->inf", "b_n*sqrt(c_n)->0", "b_n/(sqrt(c_n)*log(n))->inf",
                "r_n^2/c_n->0"]
    elif target == "bipower":
        keys = ["b_n->inf", "b_n/sqrt(n)->0"]
    else:
        raise ValueError("target must be 'hy' or 'bipower'")
    return SpeedVerdict(all(conditions[k] for k in keys), target, conditions, exponents)


def check_speed_numeric(b, c, ns=None) -> dict:
    """Heuristic trend check for arbitrary speed sequences ``b(n)``, ``c(n)``.

    Only inspects finitely many n, so it cannot certify a limit.
    """
    warnings.warn("numeric speed check is heuristic: limits are judged from n <= 1e9",
                  stacklevel=2)
    ns = np.asarray(ns if ns is not None else np.logspace(3, 9, 13), dtype=float)
    bn, cn = np.asarray([b(n) for n in ns]), np.asarray([c(n) for n in ns])
    seqs = {
        "b_n": bn,
        "b_n*sqrt(c_n)": bn * np.sqrt(cn),
        "b_n/(sqrt(c_n)*log(n))": bn / (np.sqrt(cn) * np.log(ns)),
        "b_n/sqrt(n)": bn / np.sqrt(ns),
    }
    return {
        "n": ns.tolist(),
        "sequences": {k: v.tolist() for k, v in seqs.items()},
        "b_n->inf": bool(np.all(np.diff(bn) > 0)),
        "b_n*sqrt(c_n)->0": bool(np.all(np.diff(seqs["b_n*sqrt(c_n)"]) < 0)),
        "b_n/(sqrt(c_n)*log(n))->inf": bool(np.all(np.diff(seqs["b_n/(sqrt(c_n)*log(n))"]) > 0)),
        "b_n/sqrt(n)->0": bool(np.all(np.diff(seqs["b_n/sqrt(n)"]) < 0)),
    }
