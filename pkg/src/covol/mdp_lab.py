"""Monte-Carlo probes of moderate-deviation tails.

For a rescaled, centred statistic ``Z_n`` with speed ``b_n`` the experiments
compare the empirical log-tail ``-(1/b_n**2) log P(|Z_n| > delta)`` with the
quadratic rate ``delta**2 / (2 Sigma)``.  The constants are asymptotic, so at
desk scale only trends and loose tolerances are meaningful.

Replicate ``r`` at size ``n`` always draws from the stream keyed by
``(seed, n, r)``; chunks may be evaluated in any order or thread and are
concatenated in replicate order, so results do not depend on ``workers``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .asymptotics import (SpeedSpec, c1_statistic, check_speed, integrated_covolatility,
                          sigma_bipower)
from .estimators import FunctionSpec, abs_power, bipower_general, hayashi_yoshida
from .paths import ModelSpec, increment_factors, master_grid, observation_index, simulate_batch
from .rng import derive_seed, generator
from .sampling import alternating_grids, poisson_grids, synchronous_grid

TARGETS = ("HY_V", "HY_U", "Bipower", "MDepSynthetic")
BASES = ("gaussian", "bounded", "student_t")
CHUNK_ELEMENTS = 2_000_000


# --------------------------------------------------------------------------
# m-dependent sequences and blocking


@dataclass(frozen=True)
class MDepSequenceSpec:
    """Moving average ``X_k = sum_{j=0}^m c_j eps_{k+j}`` of an iid symmetric base.

    ``bounded`` is a ``+-scale`` coin (Rademacher), ``student_t`` is ``scale``
    times a Student t with ``df`` degrees of freedom.
    """

    m: int
    base: str = "gaussian"
    coefficients: tuple[float, ...] | None = None
    scale: float = 1.0
    df: float = 3.0

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("m must be nonnegative")
        if self.base not in BASES:
            raise ValueError(f"base must be one of {BASES}")
        if self.coefficients is None:
            object.__setattr__(self, "coefficients", (1.0,) * (self.m + 1))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if len(self.coefficients) != self.m + 1:
            raise ValueError("need exactly m + 1 coefficients")
        if self.base == "student_t" and self.df <= 2:
            raise ValueError("student_t base needs df > 2 for a finite variance")

    @property
    def base_variance(self) -> float:
        if self.base == "student_t":
            return self.scale ** 2 * self.df / (self.df - 2)
        return self.scale ** 2

    def autocovariance(self, lag: int) -> float:
        lag = abs(int(lag))
        c = self.coefficients
        if lag > self.m:
            return 0.0
        return self.base_variance * math.fsum(c[j] * c[j + lag] for j in range(self.m + 1 - lag))

    @property
    def long_run_variance(self) -> float:
        """``lim Var(S_n) / n``."""
        return self.base_variance * math.fsum(self.coefficients) ** 2

    def variance_of_sum(self, n: int) -> float:
        return math.fsum([n * self.autocovariance(0)] + [
            2 * (n - h) * self.autocovariance(h) for h in range(1, min(self.m, n - 1) + 1)
        ])


def _base_draws(spec: MDepSequenceSpec, size, rng: np.random.Generator) -> np.ndarray:
    if spec.base == "gaussian":
        return spec.scale * rng.standard_normal(size)
    if spec.base == "bounded":
        return spec.scale * (2.0 * rng.integers(0, 2, size=size) - 1.0)
    return spec.scale * rng.standard_t(spec.df, size=size)


def _moving_average(spec: MDepSequenceSpec, eps: np.ndarray, n: int) -> np.ndarray:
    x = spec.coefficients[0] * eps[..., :n]
    for j in range(1, spec.m + 1):
        x = x + spec.coefficients[j] * eps[..., j:j + n]
    return x


def generate_mdependent(spec: MDepSequenceSpec, n: int, seed: int) -> np.ndarray:
    eps = _base_draws(spec, n + spec.m, generator(seed))
    return _moving_average(spec, eps, n)


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: np.ndarray
    boundary: np.ndarray
    tail: np.ndarray
    k_n: int
    remainder: int
    p: int

    def reconstruct(self) -> float:
        return math.fsum(np.concatenate((self.blocks, self.boundary, self.tail)))


def block_indices(n: int, p: int):
    """1-based index sets: big blocks, boundary points ``l*p`` and the tail."""
    if p <= 1:
        raise ValueError("block length p must exceed 1")
    k_n, r_n = divmod(n, p)
    blocks = [list(range((k - 1) * p + 1, k * p)) for k in range(1, k_n + 1)]
    boundary = [l * p for l in range(1, k_n + 1)]
    tail = list(range(k_n * p + 1, n + 1))
    return blocks, boundary, tail


def block_decompose(x, p: int) -> BlockDecomposition:
    """Split ``S_n`` into big-block sums ``Y_k``, boundary terms and a remainder tail.

    ``Y_k`` sums ``X_j`` over ``(k-1)p < j < kp``; the points ``X_{lp}`` and the
    last ``r_n = n mod p`` values are kept apart.  Works on the last axis.
    """
    if p <= 1:
        raise ValueError("block length p must exceed 1")
    a = np.asarray(x, dtype=float)
    n = a.shape[-1]
    k_n, r_n = divmod(n, p)
    body = a[..., :k_n * p].reshape(a.shape[:-1] + (k_n, p))
    return BlockDecomposition(
        blocks=body[..., :p - 1].sum(axis=-1),
        boundary=body[..., p - 1].copy(),
        tail=a[..., k_n * p:].copy(),
        k_n=k_n, remainder=r_n, p=p,
    )


def blocking_variance_gap(spec: MDepSequenceSpec, n: int, p: int) -> float:
    """Exact ``(Var S_n - Var sum_k Y_k) / n`` from the moving-average covariances."""
    if p <= 1:
        raise ValueError("block length p must exceed 1")
    k_n = n // p
    idx = np.arange(1, n + 1)
    in_blocks = (idx <= k_n * p) & (idx % p != 0)
    var_blocks = [spec.autocovariance(0) * int(in_blocks.sum())]
    for h in range(1, spec.m + 1):
        pairs = int(np.count_nonzero(in_blocks[:-h] & in_blocks[h:])) if h < n else 0
        var_blocks.append(2 * spec.autocovariance(h) * pairs)
    return (spec.variance_of_sum(n) - math.fsum(var_blocks)) / n


# --------------------------------------------------------------------------
# Chen-Ledoux tail condition


@dataclass(frozen=True)
class ChenLedoux:
    """``(1/b_n**2) log(n max_i P(|X_i| > b_n sqrt(n)))`` and how it was obtained."""

    value: float
    n: int
    b_n: float
    kind: str  # exact | lower_bound | upper_bound


def _log_tail(spec: MDepSequenceSpec, x: float) -> tuple[float, str]:
    """``log P(|X_k| > x)`` for the stationary moving average, with its kind."""
    c = np.array([v for v in spec.coefficients if v != 0.0])
    if c.size == 0:
        return -math.inf, "exact"
    if spec.base == "gaussian":
        sd = spec.scale * math.sqrt(float(np.sum(c ** 2)))
        return math.log(2.0) + float(stats.norm.logsf(x / sd)), "exact"
    if spec.base == "bounded":
        if c.size > 20:
            raise ValueError("exact enumeration of the bounded base is capped at 21 terms")
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=c.size)))
        mass = np.count_nonzero(np.abs(spec.scale * signs @ c) > x) / signs.shape[0]
        return (math.log(mass) if mass > 0 else -math.inf), "exact"
    logs = [math.log(2.0) + float(stats.t.logsf(x / (spec.scale * abs(v)), spec.df)) for v in c]
    if c.size == 1:
        return logs[0], "exact"
    # P(|A + B| > x) >= P(|A| > x) / 2 for symmetric independent B
    return max(logs) - math.log(2.0), "lower_bound"


def chen_ledoux_statistic(source, n: int, b_n: float) -> ChenLedoux:
    """Evaluate the tail statistic analytically from a spec or from samples.

    ``source`` is an :class:`MDepSequenceSpec` or an array of replicates with
    shape ``(R, n)``; in the latter case ``P(|X_i| > .)`` is estimated per index
    and a zero count yields an upper bound ``log(n / R) / b_n**2``.
    """
    x = b_n * math.sqrt(n)
    if isinstance(source, MDepSequenceSpec):
        log_p, kind = _log_tail(source, x)
        value = (math.log(n) + log_p) / b_n ** 2 if log_p > -math.inf else -math.inf
        return ChenLedoux(value, n, b_n, kind)
    samples = np.asarray(source, dtype=float)
    if samples.ndim != 2:
        raise ValueError("samples must have shape (R, n)")
    reps = samples.shape[0]
    top = int(np.max(np.count_nonzero(np.abs(samples) > x, axis=0)))
    if top == 0:
        return ChenLedoux(math.log(n / reps) / b_n ** 2, n, b_n, "upper_bound")
    return ChenLedoux((math.log(n) + math.log(top / reps)) / b_n ** 2, n, b_n, "exact")


@dataclass(frozen=True)
class ChenLedouxVerdict:
    holds: bool
    values: tuple[ChenLedoux, ...]
    reason: str


def chen_ledoux_verdict(spec: MDepSequenceSpec, speed: SpeedSpec, ns=(10**2, 10**3, 10**4, 10**5, 10**6),
                        threshold: float = 10.0) -> ChenLedouxVerdict:
    """Judge whether the statistic heads to minus infinity along ``ns``.

    The condition is reported to hold along the run when the statistic is
    strictly decreasing (or already ``-inf``) and ends below ``-threshold``.
    Only finitely many n are inspected, so this is evidence, not proof.
    """
    vals = tuple(chen_ledoux_statistic(spec, int(n), float(speed.b(n))) for n in ns)
    v = [c.value for c in vals]
    if all(x == -math.inf for x in v):
        return ChenLedouxVerdict(True, vals, "tail probability is zero along the run")
    decreasing = all(b == -math.inf or b < a for a, b in zip(v, v[1:]))
    if decreasing and v[-1] < -threshold:
        return ChenLedouxVerdict(True, vals, f"decreasing, final value {v[-1]:.4g}")
    return ChenLedouxVerdict(False, vals, f"does not diverge: final value {v[-1]:.4g}")


# --------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class MdpExperimentConfig:
    target: str
    ns: tuple[int, ...]
    speed: SpeedSpec
    deltas: tuple[float, ...]
    replicates: int
    seed: int
    model: ModelSpec | None = None
    scheme: str = "sync"
    m_ratio: float = 1.0
    sequence: MDepSequenceSpec | None = None
    g: FunctionSpec | None = None
    h: FunctionSpec | None = None
    substeps: int = 8
    workers: int = 1
    min_replicates: int = 1000

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if not self.ns or any(b <= a for a, b in zip(self.ns, self.ns[1:])) or self.ns[0] < 1:
            raise ValueError("ns must be a nonempty increasing list of positive sizes")
        if not self.deltas or min(self.deltas) <= 0:
            raise ValueError("deltas must be positive")
        if self.replicates < self.min_replicates:
            raise ValueError(f"need at least {self.min_replicates} replicates")
        if self.target == "MDepSynthetic":
            if self.sequence is None:
                raise ValueError("MDepSynthetic needs a sequence spec")
        elif self.model is None:
            raise ValueError(f"{self.target} needs a model")
        if self.target == "Bipower":
            object.__setattr__(self, "g", self.g or abs_power(1.0))
            object.__setattr__(self, "h", self.h or abs_power(1.0))
        if self.scheme not in ("sync", "alt", "poisson"):
            raise ValueError("scheme must be sync, alt or poisson")


def scheme_grids(scheme: str, n: int, T: float, seed: int = 0, m_ratio: float = 1.0):
    if scheme == "sync":
        g = synchronous_grid(n, T)
        return g, g
    if scheme == "alt":
        return alternating_grids(n, T)
    if scheme == "poisson":
        return poisson_grids(n / T, m_ratio * n / T, T, derive_seed(seed, n, 0xC0))
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class _Plan:
    """Everything needed to evaluate one size ``n``: raw values, centre, scale, Sigma."""

    n: int
    centre: float
    scale: float
    sigma: float
    variance: float
    seed: int
    values: object  # callable(range) -> raw estimator values


def _hy_plan(cfg: MdpExperimentConfig, n: int) -> _Plan:
    model = cfg.model
    gi, gj = scheme_grids(cfg.scheme, n, model.T, cfg.seed, cfg.m_ratio)
    drifted = cfg.target == "HY_U" and model.has_drift
    u = master_grid(gi, gj, substeps=cfg.substeps if drifted else 1)
    factors = increment_factors(model, u)
    ii, jj = observation_index(u, gi.times), observation_index(u, gj.times)
    seed_n = derive_seed(cfg.seed, n)
    bracket = c1_statistic(gi, gj, model)
    c_n = float(cfg.speed.c(n))
    b_n = float(cfg.speed.b(n))

    def values(reps):
        x1, x2, m1, m2 = simulate_batch(model, u, seed_n, reps, factors=factors)
        if cfg.target == "HY_V":
            x1, x2 = m1, m2
        return hayashi_yoshida(x1[:, ii], gi, x2[:, jj], gj)

    return _Plan(n, integrated_covolatility(model), b_n * math.sqrt(c_n), bracket / c_n,
                 bracket, seed_n, values)


def _bipower_plan(cfg: MdpExperimentConfig, n: int) -> _Plan:
    model = cfg.model
    T = model.T
    times = (np.arange(n + 2) * T) / n
    extended = model.with_horizon(times[-1])
    factors = increment_factors(extended, times)
    seed_n = derive_seed(cfg.seed, n)
    asym = sigma_bipower(cfg.g, cfg.h, model)
    b_n = float(cfg.speed.b(n))

    def values(reps):
        x1, _, _, _ = simulate_batch(extended, times, seed_n, reps, factors=factors)
        return bipower_general(cfg.g, cfg.h, x1)

    return _Plan(n, asym.limit, b_n / math.sqrt(n), asym.sigma, asym.sigma / n, seed_n, values)


def _mdep_plan(cfg: MdpExperimentConfig, n: int) -> _Plan:
    spec = cfg.sequence
    seed_n = derive_seed(cfg.seed, n)
    b_n = float(cfg.speed.b(n))

    def values(reps):
        eps = np.empty((len(reps), n + spec.m))
        for k, r in enumerate(reps):
            eps[k] = _base_draws(spec, n + spec.m, generator(derive_seed(seed_n, r)))
        return _moving_average(spec, eps, n).sum(axis=-1)

    return _Plan(n, 0.0, b_n * math.sqrt(n), spec.long_run_variance,
                 spec.variance_of_sum(n), seed_n, values)


def _plan(cfg: MdpExperimentConfig, n: int) -> _Plan:
    if cfg.target in ("HY_V", "HY_U"):
        return _hy_plan(cfg, n)
    if cfg.target == "Bipower":
        return _bipower_plan(cfg, n)
    return _mdep_plan(cfg, n)


def _cost(cfg: MdpExperimentConfig, n: int) -> int:
    return max(1, 4 * n * (cfg.substeps if cfg.target == "HY_U" else 1))


def replicate_values(cfg: MdpExperimentConfig, n: int, replicates: int | None = None,
                     plan: _Plan | None = None) -> np.ndarray:
    """Raw estimator values (before centring) for replicates ``0..R-1`` at size ``n``."""
    plan = plan or _plan(cfg, n)
    reps = cfg.replicates if replicates is None else int(replicates)
    chunk = max(1, min(reps, CHUNK_ELEMENTS // _cost(cfg, n)))
    ranges = [range(a, min(a + chunk, reps)) for a in range(0, reps, chunk)]
    if cfg.workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(plan.values, ranges))
    else:
        parts = [plan.values(r) for r in ranges]
    out = np.concatenate([np.atleast_1d(np.asarray(p, dtype=float)) for p in parts])
    bad = np.nonzero(~np.isfinite(out))[0]
    if bad.size:
        r = int(bad[0])
        raise FloatingPointError(
            f"non-finite statistic at n={n}, replicate {r} (seed {derive_seed(plan.seed, r)})"
        )
    return out


@dataclass(frozen=True)
class MdpRow:
    n: int
    b_n: float
    delta: float
    count: int
    R: int
    phat: float
    rescaled: float
    L_theory: float
    lower_bound_flag: int
    se: float


REPORT_COLUMNS = ("n", "b_n", "delta", "count", "R", "phat", "rescaled", "L_theory",
                  "lower_bound_flag")


@dataclass
class MdpReport:
    target: str
    rows: list[MdpRow] = field(default_factory=list)
    sigma_by_n: dict = field(default_factory=dict)
    speed_admissible: bool = True

    def table(self) -> list[dict]:
        return [{k: getattr(r, k) for k in REPORT_COLUMNS} for r in self.rows]

    def curve(self, delta: float) -> list[MdpRow]:
        return [r for r in self.rows if r.delta == delta]

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "speed_admissible": self.speed_admissible,
            "sigma_by_n": {str(k): v for k, v in self.sigma_by_n.items()},
            "rows": [dict(vars(r)) for r in self.rows],
        }


def tail_rows(z: np.ndarray, n: int, b_n: float, deltas, sigma: float) -> list[MdpRow]:
    """Exceedance counts of ``|z| > delta`` turned into rescaled log-tails."""
    reps = z.size
    rows = []
    for d in deltas:
        k = int(np.count_nonzero(np.abs(z) > d))
        phat = k / reps
        if k == 0:
            rescaled, flag, se = math.log(reps) / b_n ** 2, 1, math.inf
        else:
            rescaled, flag = -math.log(phat) / b_n ** 2, 0
            se = math.sqrt((1 - phat) / (phat * reps)) / b_n ** 2
        rows.append(MdpRow(n, b_n, d, k, reps, phat, rescaled, d * d / (2 * sigma), flag, se))
    return rows


def run_mdp_experiment(cfg: MdpExperimentConfig) -> MdpReport:
    if cfg.target in ("HY_V", "HY_U"):
        verdict = check_speed(cfg.speed, cfg.scheme, "hy")
    else:
        verdict = check_speed(cfg.speed, "sync", "bipower")
    if not verdict.admissible:
        warnings.warn(f"speed alpha={cfg.speed.alpha}, beta={cfg.speed.beta} violates "
                      f"{[k for k, v in verdict.conditions.items() if not v]}; running anyway",
                      stacklevel=2)
    report = MdpReport(cfg.target, speed_admissible=verdict.admissible)
    for n in cfg.ns:
        plan = _plan(cfg, n)
        z = (replicate_values(cfg, n, plan=plan) - plan.centre) / plan.scale
        report.sigma_by_n[n] = plan.sigma
        report.rows.extend(tail_rows(z, n, float(cfg.speed.b(n)), cfg.deltas, plan.sigma))
    return report


@dataclass(frozen=True)
class CltResult:
    ks: float
    pvalue: float
    passed: bool
    n: int
    R: int
    mean: float
    std: float


def clt_check(cfg: MdpExperimentConfig, threshold: float = 0.02, n: int | None = None,
              min_replicates: int = 10_000) -> CltResult:
    """Kolmogorov-Smirnov distance of standardised replicates to N(0, 1).

    Centring uses the exact mean; scaling uses the exact finite-sample variance
    for HY and m-dependent targets and the asymptotic one for bipower.
    """
    if cfg.replicates < min_replicates:
        raise ValueError(f"CLT check needs at least {min_replicates} replicates")
    n = int(n or cfg.ns[-1])
    plan = _plan(cfg, n)
    if not plan.variance > 0:
        raise ValueError("degenerate input: the statistic has zero variance")
    z = (replicate_values(cfg, n, plan=plan) - plan.centre) / math.sqrt(plan.variance)
    res = stats.kstest(z, "norm")
    return CltResult(float(res.statistic), float(res.pvalue), bool(res.statistic < threshold),
                     n, z.size, float(z.mean()), float(z.std(ddof=1)))
