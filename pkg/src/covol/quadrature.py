"""Deterministic integrals of the model coefficients over intervals.

One quadrature definition serves both the variance formulas and the
simulator's per-interval covariance matrices, so formula and simulation see
the same numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class QuadratureError(ArithmeticError):
    pass


@lru_cache(maxsize=None)
def _legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _eval(f, t: np.ndarray) -> np.ndarray:
    y = np.asarray(f(t), dtype=float)
    if y.shape != t.shape:
        y = np.broadcast_to(y, t.shape)
    return y


@dataclass(frozen=True)
class Quadrature:
    """Vectorised integration of a scalar function over many intervals.

    ``gauss_legendre_panels`` bisects every panel until a fixed-order rule and
    its two-panel refinement agree within tolerance.  ``trapezoid_on_mesh``
    uses a uniform mesh per interval and checks against the half mesh.
    """

    method: str = "gauss_legendre_panels"
    order: int = 16
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_depth: int = 40
    mesh_points: int = 4096

    def __post_init__(self):
        if self.method not in ("gauss_legendre_panels", "trapezoid_on_mesh"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")

    def integrate(self, f, lo, hi, breakpoints=()) -> np.ndarray:
        """Integrate ``f`` over each ``(lo[k], hi[k]]``; ``f`` must accept arrays."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("lo and hi must have the same shape")
        if np.any(hi < lo):
            raise ValueError("integration bounds must satisfy lo <= hi")
        owner, a, b = _split(lo, hi, np.asarray(breakpoints, dtype=float))
        if self.method == "trapezoid_on_mesh":
            return self._trapezoid(f, owner, a, b, lo.size)
        return self._panels(f, owner, a, b, lo, hi)

    def _gl(self, f, a, b):
        x, w = _legendre(self.order)
        half = 0.5 * (b - a)
        nodes = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
        return half * (_eval(f, nodes) @ w)

    def _panels(self, f, owner, a, b, lo, hi):
        total = np.zeros(lo.size)
        width = np.where(hi > lo, hi - lo, 1.0)
        budget = self.abs_tol * (b - a) / width[owner]
        coarse = self._gl(f, a, b)
        for _ in range(self.max_depth):
            if a.size == 0:
                return total
            mid = 0.5 * (a + b)
            left, right = self._gl(f, a, mid), self._gl(f, mid, b)
            fine = left + right
            err = np.abs(fine - coarse)
            done = (err <= budget) | (err <= self.rel_tol * np.abs(fine)) | (b - a <= 0)
            np.add.at(total, owner[done], fine[done])
            keep = ~done
            owner = np.concatenate((owner[keep], owner[keep]))
            a, b = np.concatenate((a[keep], mid[keep])), np.concatenate((mid[keep], b[keep]))
            budget = np.concatenate((budget[keep], budget[keep])) * 0.5
            coarse = np.concatenate((left[keep], right[keep]))
        if a.size:
            raise QuadratureError(
                f"tolerance not reached after {self.max_depth} bisections on {a.size} panels "
                f"(first near t={a[0]:.6g})"
            )
        return total

    def _trapezoid(self, f, owner, a, b, size):
        def rule(k):
            u = np.linspace(0.0, 1.0, k + 1)
            t = a[:, None] + (b - a)[:, None] * u[None, :]
            return np.trapezoid(_eval(f, t), t, axis=1)

        fine, coarse = rule(self.mesh_points), rule(self.mesh_points // 2)
        err = np.abs(fine - coarse)
        if np.any(err > np.maximum(self.abs_tol, self.rel_tol * np.abs(fine))):
            raise QuadratureError("trapezoid mesh too coarse for the requested tolerance")
        total = np.zeros(size)
        np.add.at(total, owner, fine)
        return total


def _split(lo, hi, breakpoints):
    """Cut every interval at the interior breakpoints it contains."""
    owner = np.arange(lo.size)
    if breakpoints.size == 0:
        return owner, lo.copy(), hi.copy()
    owners, aa, bb = [], [], []
    bp = np.sort(breakpoints)
    for k in range(lo.size):
        inner = bp[(bp > lo[k]) & (bp < hi[k])]
        pts = np.concatenate(([lo[k]], inner, [hi[k]]))
        owners.append(np.full(pts.size - 1, k))
        aa.append(pts[:-1])
        bb.append(pts[1:])
    return np.concatenate(owners), np.concatenate(aa), np.concatenate(bb)


DEFAULT_QUADRATURE = Quadrature()


def covariance_integrals(model, lo, hi, quad: Quadrature | None = None):
    """Integrated ``sigma1**2``, ``sigma2**2`` and ``sigma1*sigma2*rho`` per interval."""
    quad = quad or DEFAULT_QUADRATURE
    bp = model.breakpoints
    v1 = quad.integrate(lambda t: _eval(model.sigma1, t) ** 2, lo, hi, bp)
    v2 = quad.integrate(lambda t: _eval(model.sigma2, t) ** 2, lo, hi, bp)
    c = quad.integrate(
        lambda t: _eval(model.sigma1, t) * _eval(model.sigma2, t) * _eval(model.rho, t), lo, hi, bp
    )
    return v1, v2, c


def integrate_covol(model, lo, hi, quad: Quadrature | None = None) -> np.ndarray:
    quad = quad or DEFAULT_QUADRATURE
    return quad.integrate(
        lambda t: _eval(model.sigma1, t) * _eval(model.sigma2, t) * _eval(model.rho, t),
        lo, hi, model.breakpoints,
    )


def integrate_vol(model, ell: int, lo, hi, quad: Quadrature | None = None) -> np.ndarray:
    quad = quad or DEFAULT_QUADRATURE
    sigma = {1: model.sigma1, 2: model.sigma2}[ell]
    return quad.integrate(lambda t: _eval(sigma, t) ** 2, lo, hi, model.breakpoints)
