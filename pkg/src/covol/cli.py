"""Command-line entry point ``covol``.

Configuration is a flat JSON object.  Values are resolved with precedence
``config file < COVOL_SEED environment variable < command-line flags``; the
validated configuration, with defaults filled in, is echoed to stdout as one
line of canonical JSON before the verb runs.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (SpeedSpec, c1_statistic, integrated_covolatility,
                          isserlis_variance_oracle, sigma_bipower, variance_Vn)
from .design import build_reduced_design, dual_reduced_design
from .estimators import (EstimateResult, bipower_general, hayashi_yoshida, parse_function,
                         realized_covolatility)
from .mdp_lab import (BASES, REPORT_COLUMNS, TARGETS, MdpExperimentConfig, MdpReport,
                      MDepSequenceSpec, run_mdp_experiment, scheme_grids)
from .paths import PRESETS, master_grid, preset_model, restrict, simulate_paths
from .quadrature import DEFAULT_QUADRATURE, QuadratureError
from .rng import MAX_SEED
from .sampling import ObservationGrid

VERBS = ("simulate", "estimate", "design", "variance", "sigma", "mdp", "report")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
SEED_ENV = "COVOL_SEED"


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class IngestError(ValueError):
    pass


# --------------------------------------------------------------------------
# schema

_MODEL = ("model", "sigma1", "sigma2", "rho", "T", "drift1", "drift2", "kappa1", "kappa2",
          "amplitude", "frequency", "breaks")
_GRID = ("scheme", "n", "m_ratio", "seed")

# key -> (kind, default, verbs using it)
SCHEMA = {
    "verb": ("str", None, VERBS),
    "model": ("str", "constant", ("simulate", "variance", "sigma", "mdp")),
    "sigma1": ("num_or_list", 1.0, ("simulate", "variance", "sigma", "mdp")),
    "sigma2": ("num_or_list", 1.0, ("simulate", "variance", "sigma", "mdp")),
    "rho": ("num_or_list", 0.0, ("simulate", "variance", "sigma", "mdp")),
    "T": ("pos", 1.0, ("simulate", "variance", "sigma", "mdp", "design")),
    "drift1": ("float", 0.0, ("simulate", "mdp")),
    "drift2": ("float", 0.0, ("simulate", "mdp")),
    "kappa1": ("float", 0.0, ("simulate", "mdp")),
    "kappa2": ("float", 0.0, ("simulate", "mdp")),
    "amplitude": ("float", 0.5, ()),
    "frequency": ("float", 1.0, ()),
    "breaks": ("float_list", None, ()),
    "scheme": ("str", "sync", ("simulate", "variance", "design", "mdp")),
    "n": ("pos_int", 10, ("simulate", "variance", "design")),
    "m_ratio": ("pos", 1.0, ("simulate", "variance", "design", "mdp")),
    "seed": ("seed", 0, ("simulate", "variance", "design", "mdp")),
    "substeps": ("pos_int", 8, ("simulate", "mdp")),
    "beta": ("float", 1.0, ("variance", "mdp")),
    "alpha": ("float", 0.1, ("mdp",)),
    "oracle": ("bool", False, ("variance",)),
    "ell": ("pos_int", 1, ("sigma",)),
    "g": ("func", "abs^1", ("sigma", "estimate", "mdp")),
    "h": ("func", "abs^1", ("sigma", "estimate", "mdp")),
    "estimator": ("str", "hy", ("estimate",)),
    "index_range": ("str", "lm", ("estimate",)),
    "input": ("path_in", None, ("estimate", "report")),
    "gridI": ("path_in", None, ("design",)),
    "gridJ": ("path_in", None, ("design",)),
    "target": ("str", "HY_V", ("mdp",)),
    "ns": ("int_list", [100, 1000, 10000], ("mdp",)),
    "deltas": ("float_list", [1.0], ("mdp",)),
    "replicates": ("pos_int", 1000, ("mdp",)),
    "m": ("int", 0, ()),
    "base": ("str", "gaussian", ()),
    "coefficients": ("float_list", None, ()),
    "scale": ("pos", 1.0, ()),
    "df": ("pos", 3.0, ()),
    "workers": ("pos_int", None, ("mdp",)),
    "out": ("path_out", "-", VERBS),
    "format": ("str", None, VERBS),
}

CHOICES = {
    "verb": VERBS, "model": tuple(PRESETS), "scheme": ("sync", "alt", "poisson"),
    "estimator": ("hy", "cn", "bipower"), "index_range": ("lm", "rbp1"),
    "target": TARGETS, "base": BASES, "format": ("csv", "json"),
}


def _keys_for(params: dict) -> list[str]:
    verb = params.get("verb")
    keys = [k for k, (_, _, verbs) in SCHEMA.items() if verb in verbs]
    if verb in ("simulate", "variance", "sigma", "mdp") and not (
            verb == "mdp" and params.get("target") == "MDepSynthetic"):
        model = params.get("model", "constant")
        if model == "sine":
            keys += ["amplitude", "frequency"]
        if model == "piecewise":
            keys += ["breaks"]
    if verb == "mdp" and params.get("target") == "MDepSynthetic":
        keys = [k for k in keys if k not in _MODEL and k not in ("scheme", "m_ratio", "substeps")]
        keys += ["m", "base", "coefficients", "scale", "df"]
    if verb == "mdp" and params.get("target") != "Bipower":
        keys = [k for k in keys if k not in ("g", "h")]
    if verb == "estimate" and params.get("estimator") != "bipower":
        keys = [k for k in keys if k not in ("g", "h", "index_range")]
    if verb == "design" and (params.get("gridI") or params.get("gridJ")):
        keys = [k for k in keys if k not in _GRID and k != "T"]
    return list(dict.fromkeys(keys))


def _check(key: str, kind: str, value, errors: list):
    def bad(msg):
        errors.append(f"{key}: {msg} (got {value!r})")
        return value

    if value is None:
        return value
    if kind == "str":
        if not isinstance(value, str):
            return bad("expected a string")
        if key in CHOICES and value not in CHOICES[key]:
            return bad(f"must be one of {list(CHOICES[key])}")
        return value
    if kind == "bool":
        return value if isinstance(value, bool) else bad("expected true or false")
    if kind in ("float", "pos"):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            return bad("expected a finite number")
        if kind == "pos" and value <= 0:
            return bad("must be positive")
        return float(value)
    if kind in ("int", "pos_int", "seed"):
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            else:
                return bad("expected an integer")
        if kind == "pos_int" and value < 1:
            return bad("must be at least 1")
        if kind == "int" and value < 0:
            return bad("must be nonnegative")
        if kind == "seed" and not 0 <= value <= MAX_SEED:
            return bad("seed must be a 64-bit unsigned integer")
        return value
    if kind == "num_or_list":
        if isinstance(value, list):
            out = [_check(key, "float", v, errors) for v in value]
            return out
        return _check(key, "float", value, errors)
    if kind in ("float_list", "int_list"):
        if not isinstance(value, list) or not value:
            return bad("expected a nonempty list")
        return [_check(key, kind[:-5] if kind == "int_list" else "float", v, errors) for v in value]
    if kind == "func":
        if not isinstance(value, str):
            return bad("expected a function string like 'abs^1'")
        try:
            parse_function(value)
        except ValueError as exc:
            return bad(str(exc))
        return value
    if kind == "path_in":
        if not isinstance(value, str):
            return bad("expected a path")
        if not Path(value).is_file():
            return bad("file does not exist")
        return value
    if kind == "path_out":
        return value if isinstance(value, str) else bad("expected a path")
    raise AssertionError(kind)


@dataclass(frozen=True)
class RunConfig:
    """A validated, defaults-filled configuration for one verb."""

    params: dict

    @property
    def verb(self) -> str:
        return self.params["verb"]

    def __getitem__(self, key):
        return self.params[key]

    def get(self, key, default=None):
        return self.params.get(key, default)

    def to_json(self) -> str:
        return json.dumps(self.params, sort_keys=True, separators=(",", ":"))


def _semantic_checks(p: dict, errors: list):
    verb = p["verb"]
    if "rho" in p:
        rhos = p["rho"] if isinstance(p["rho"], list) else [p["rho"]]
        if any(isinstance(r, float) and not 0 <= r <= 1 for r in rhos):
            errors.append(f"rho: must lie in [0, 1] (got {p['rho']!r})")
    for key in ("sigma1", "sigma2"):
        vals = p.get(key)
        vals = vals if isinstance(vals, list) else [vals]
        if any(isinstance(v, float) and v < 0 for v in vals):
            errors.append(f"{key}: must be nonnegative (got {p[key]!r})")
    if p.get("model") == "piecewise" and "breaks" in p and p.get("breaks") is None:
        errors.append("breaks: required for the piecewise model")
    if "amplitude" in p and not 0 <= p["amplitude"] < 1:
        errors.append(f"amplitude: must lie in [0, 1) (got {p['amplitude']!r})")
    if verb == "mdp":
        ns = p.get("ns") or []
        if any(b <= a for a, b in zip(ns, ns[1:])):
            errors.append(f"ns: must be strictly increasing (got {ns!r})")
        if any(isinstance(d, float) and d <= 0 for d in p.get("deltas") or []):
            errors.append(f"deltas: must be positive (got {p['deltas']!r})")
        if p.get("replicates", 0) < 1000:
            errors.append(f"replicates: need at least 1000 (got {p.get('replicates')!r})")
        if p.get("target") == "MDepSynthetic" and p.get("coefficients") is not None \
                and len(p["coefficients"]) != p.get("m", 0) + 1:
            errors.append("coefficients: need exactly m + 1 values")
        if p.get("target") == "MDepSynthetic" and p.get("base") == "student_t" and p.get("df", 3) <= 2:
            errors.append("df: must exceed 2")
    if verb == "estimate" and p.get("input") is None:
        errors.append("input: required for estimate")
    if verb == "report" and p.get("input") is None:
        errors.append("input: required for report")
    if verb == "design" and (p.get("gridI") is None) != (p.get("gridJ") is None):
        errors.append("gridI/gridJ: give both grid files or neither")


def parse_config(config=None, flags: dict | None = None, env: dict | None = None) -> RunConfig:
    """Merge file, environment and flag values; validate; fill defaults.

    ``config`` may be a path or a mapping.  Every schema violation is
    collected before :class:`ConfigError` is raised.
    """
    errors: list[str] = []
    raw: dict = {}
    if isinstance(config, (str, Path)):
        try:
            raw = json.loads(Path(config).read_text())
        except OSError as exc:
            raise ConfigError([f"config: cannot read {config}: {exc.strerror}"]) from None
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config: invalid JSON at line {exc.lineno}: {exc.msg}"]) from None
        if not isinstance(raw, dict):
            raise ConfigError(["config: top level must be a JSON object"])
    elif config is not None:
        raw = dict(config)
    env = os.environ if env is None else env
    if env.get(SEED_ENV) not in (None, ""):
        try:
            raw["seed"] = int(env[SEED_ENV])
        except ValueError:
            errors.append(f"seed: {SEED_ENV}={env[SEED_ENV]!r} is not an integer")
    raw.update({k: v for k, v in (flags or {}).items() if v is not None})

    unknown = sorted(set(raw) - set(SCHEMA))
    errors.extend(f"{k}: unknown key" for k in unknown)
    if raw.get("verb") is None:
        errors.append("verb: required")
        raise ConfigError(errors)
    _check("verb", "str", raw["verb"], errors)
    if errors and raw["verb"] not in VERBS:
        raise ConfigError(errors)

    params = {"verb": raw["verb"]}
    # these keys decide which others apply
    selectors = {k: raw[k] for k in ("verb", "target", "model", "estimator", "gridI", "gridJ")
                 if k in raw}
    keys = _keys_for(selectors)
    for key in raw:
        if key in SCHEMA and key not in keys and key != "verb":
            errors.append(f"{key}: not used by verb {raw['verb']!r} with these settings")
    for key in keys:
        kind, default, _ = SCHEMA[key]
        if key == "workers" and default is None:
            default = os.cpu_count() or 1
        if key == "format" and default is None:
            default = "csv" if raw["verb"] in ("mdp", "simulate") else "json"
        params[key] = _check(key, kind, raw.get(key, default), errors)
    try:
        _semantic_checks(params, errors)
    except TypeError:
        pass  # already reported as a type error above
    if errors:
        raise ConfigError(errors)
    return RunConfig(params)


# --------------------------------------------------------------------------
# model and grid construction from a config


def build_model(cfg: RunConfig):
    name = cfg["model"]
    kw = {k: cfg[k] for k in ("sigma1", "sigma2", "rho", "T")}
    if "drift1" in cfg.params:
        kw.update({k: cfg[k] for k in ("drift1", "drift2", "kappa1", "kappa2")})
    if name == "piecewise":
        kw["breaks"] = cfg["breaks"]
    elif name == "sine":
        kw.update(amplitude=cfg["amplitude"], frequency=cfg["frequency"])
    if name != "piecewise" and any(isinstance(kw[k], list) for k in ("sigma1", "sigma2", "rho")):
        raise ConfigError(["sigma1/sigma2/rho: lists are only allowed for the piecewise model"])
    try:
        return preset_model(name, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError([f"model: {exc}"]) from None


def build_grids(cfg: RunConfig):
    if cfg.get("gridI"):
        try:
            return ObservationGrid.load(cfg["gridI"]), ObservationGrid.load(cfg["gridJ"])
        except (ValueError, json.JSONDecodeError) as exc:
            raise ConfigError([f"gridI/gridJ: {exc}"]) from None
    return scheme_grids(cfg["scheme"], cfg["n"], cfg["T"], cfg["seed"], cfg["m_ratio"])


def build_experiment(cfg: RunConfig) -> MdpExperimentConfig:
    common = dict(ns=tuple(cfg["ns"]), speed=SpeedSpec(cfg["alpha"], cfg["beta"]),
                  deltas=tuple(cfg["deltas"]), replicates=cfg["replicates"], seed=cfg["seed"],
                  workers=cfg["workers"])
    try:
        if cfg["target"] == "MDepSynthetic":
            seq = MDepSequenceSpec(cfg["m"], cfg["base"], cfg["coefficients"], cfg["scale"], cfg["df"])
            return MdpExperimentConfig("MDepSynthetic", sequence=seq, **common)
        extra = {}
        if cfg["target"] == "Bipower":
            extra = dict(g=parse_function(cfg["g"]), h=parse_function(cfg["h"]))
        return MdpExperimentConfig(cfg["target"], model=build_model(cfg), scheme=cfg["scheme"],
                                   m_ratio=cfg["m_ratio"], substeps=cfg["substeps"], **common, **extra)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError([f"experiment: {exc}"]) from None


# --------------------------------------------------------------------------
# ingestion and emission


def ingest_observations(path):
    """Read ``series_id,time,value`` rows into two ``(grid, values)`` pairs.

    Each series must start at time 0 with strictly increasing times and both
    must end at the same horizon.  Errors cite 1-based file line numbers.
    """
    series: dict[int, list] = {1: [], 2: []}
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise OSError(f"cannot open {path}: {exc.strerror}") from None
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["series_id", "time", "value"]:
            raise IngestError(f"{path}:1: header must be series_id,time,value")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise IngestError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                sid, t, v = int(row[0]), float(row[1]), float(row[2])
            except ValueError:
                raise IngestError(f"{path}:{lineno}: cannot parse {row!r}") from None
            if sid not in series:
                raise IngestError(f"{path}:{lineno}: series_id must be 1 or 2, got {sid}")
            if not (math.isfinite(t) and math.isfinite(v)):
                raise IngestError(f"{path}:{lineno}: non-finite time or value")
            rows = series[sid]
            if rows:
                prev_t, prev_line = rows[-1][0], rows[-1][2]
                if t == prev_t:
                    raise IngestError(f"{path}:{lineno}: duplicate time {t!r} in series {sid} "
                                      f"(also on line {prev_line})")
                if t < prev_t:
                    raise IngestError(f"{path}:{lineno}: time {t!r} in series {sid} is not "
                                      f"increasing (line {prev_line} has {prev_t!r})")
            rows.append((t, v, lineno))
    out = {}
    for sid, rows in series.items():
        if len(rows) < 2:
            raise IngestError(f"{path}: series {sid} needs at least two observations")
        if rows[0][0] != 0.0:
            raise IngestError(f"{path}:{rows[0][2]}: series {sid} must start at time 0")
        out[sid] = (ObservationGrid([r[0] for r in rows]), np.array([r[1] for r in rows]))
    (g1, _), (g2, _) = out[1], out[2]
    if g1.T != g2.T:
        raise IngestError(f"{path}: horizons differ: series 1 ends at {g1.T!r} (line "
                          f"{series[1][-1][2]}), series 2 at {g2.T!r} (line {series[2][-1][2]})")
    return out


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    return str(x)


def _json(obj) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, int, float, np.integer, np.floating)):
        return _fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _tabulate(results, columns=None):
    if isinstance(results, MdpReport):
        return list(REPORT_COLUMNS), results.table()
    if isinstance(results, EstimateResult):
        d = results.to_dict()
        d.pop("metadata")
        return list(d), [d]
    if isinstance(results, dict):
        return list(columns or results), [results]
    rows = list(results)
    cols = list(columns) if columns else (list(rows[0]) if rows else [])
    return cols, rows


def render_report(results, fmt: str = "csv", columns=None) -> str:
    if fmt == "json":
        if isinstance(results, (MdpReport, EstimateResult)):
            return _json(results.to_dict()) + "\n"
        return _json(results) + "\n"
    if fmt != "csv":
        raise ValueError("format must be csv or json")
    cols, rows = _tabulate(results, columns)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def emit_report(results, fmt: str = "csv", path="-", columns=None) -> None:
    """Write ``results`` as CSV or JSON to ``path`` (``-`` for stdout)."""
    text = render_report(results, fmt, columns)
    if str(path) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


# --------------------------------------------------------------------------
# verbs


def _simulate(cfg: RunConfig):
    model = build_model(cfg)
    gi, gj = build_grids(cfg)
    path = simulate_paths(model, master_grid(gi, gj, substeps=cfg["substeps"]), cfg["seed"])
    o1, o2 = restrict(path, gi, False), restrict(path, gj, False)
    rows = [{"series_id": 1, "time": t, "value": v} for t, v in zip(gi.times, o1.x1)]
    rows += [{"series_id": 2, "time": t, "value": v} for t, v in zip(gj.times, o2.x2)]
    return rows, ["series_id", "time", "value"]


def _estimate(cfg: RunConfig):
    data = ingest_observations(cfg["input"])
    (g1, x1), (g2, x2) = data[1], data[2]
    kind = cfg["estimator"]
    if kind == "hy":
        value = hayashi_yoshida(x1, g1, x2, g2)
        return EstimateResult(float(value), "U", g1.n, g2.n, {"mode": "direct"}), None
    if kind == "cn":
        if g1 != g2:
            raise IngestError("realised covolatility needs both series on the same grid")
        return EstimateResult(float(realized_covolatility(x1, x2)), "Cn", g1.n, g2.n), None
    g, h = parse_function(cfg["g"]), parse_function(cfg["h"])
    value = bipower_general(g, h, x1, g1.times, cfg["index_range"])
    return EstimateResult(float(value), "Bipower", g1.n, g1.n,
                          {"g": cfg["g"], "h": cfg["h"], "index_range": cfg["index_range"]}), None


def _design(cfg: RunConfig):
    gi, gj = build_grids(cfg)
    d, dual = build_reduced_design(gi, gj), dual_reduced_design(gi, gj)
    out = d.to_dict()
    out["n_hat_upper_bound"] = d.n_hat_upper_bound()
    out["dual"] = {"n0": dual.n0, "n_hat": dual.n_hat, "merged_times": dual.to_dict()["merged_times"]}
    return out, None


def _variance(cfg: RunConfig):
    model = build_model(cfg)
    gi, gj = build_grids(cfg)
    design = build_reduced_design(gi, gj)
    value = variance_Vn(design, model)
    c_n = cfg["n"] ** (-cfg["beta"])
    out = {"value": value, "method": "bracket_on_reduced_design",
           "tolerance": DEFAULT_QUADRATURE.abs_tol,
           "mean": integrated_covolatility(model),
           "c1": c1_statistic(gi, gj, model), "c_n": c_n}
    out["sigma_proxy"] = out["c1"] / c_n
    if cfg["oracle"]:
        out["isserlis"] = isserlis_variance_oracle(gi, gj, model)
    return out, None


def _sigma(cfg: RunConfig):
    model = build_model(cfg)
    res = sigma_bipower(parse_function(cfg["g"]), parse_function(cfg["h"]), model, cfg["ell"])
    return {"value": res.sigma, "limit": res.limit, "method": "gauss_legendre_panels",
            "tolerance": DEFAULT_QUADRATURE.abs_tol}, None


def _mdp(cfg: RunConfig):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = run_mdp_experiment(build_experiment(cfg))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return report, None


def summarise_report(path) -> dict:
    """Per-delta trend of rescaled log-tails from an ``mdp`` CSV report."""
    with open(path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    missing = set(REPORT_COLUMNS) - set(rows[0] if rows else REPORT_COLUMNS)
    if missing:
        raise IngestError(f"{path}: missing columns {sorted(missing)}")
    out = []
    for delta in sorted({float(r["delta"]) for r in rows}):
        sel = sorted((r for r in rows if float(r["delta"]) == delta), key=lambda r: int(r["n"]))
        gaps = [abs(float(r["rescaled"]) - float(r["L_theory"])) for r in sel]
        last = sel[-1]
        out.append({
            "delta": delta,
            "n": [int(r["n"]) for r in sel],
            "rescaled": [float(r["rescaled"]) for r in sel],
            "L_theory": float(last["L_theory"]),
            "approaching": all(b < a for a, b in zip(gaps, gaps[1:])),
            "final_relative_error": gaps[-1] / float(last["L_theory"]),
            "any_lower_bound": any(r["lower_bound_flag"] == "1" for r in sel),
        })
    return {"curves": out}


def _report(cfg: RunConfig):
    return summarise_report(cfg["input"]), None


HANDLERS = {"simulate": _simulate, "estimate": _estimate, "design": _design,
            "variance": _variance, "sigma": _sigma, "mdp": _mdp, "report": _report}


def run(cfg: RunConfig) -> None:
    results, columns = HANDLERS[cfg.verb](cfg)
    emit_report(results, cfg["format"], cfg["out"], columns)


# --------------------------------------------------------------------------
# argument parsing


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covol", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"covol {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output path, '-' for stdout")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--param", "-p", action="append", type=_param, default=[],
                       metavar="KEY=VALUE", help="override any config key (JSON value)")
        p.add_argument("--no-echo", action="store_true", help="do not echo the resolved config")
        if verb in ("estimate", "report"):
            p.add_argument("--input")
        if verb == "estimate":
            p.add_argument("--estimator", choices=("hy", "cn", "bipower"))
        if verb == "design":
            p.add_argument("--gridI")
            p.add_argument("--gridJ")
        if verb in ("sigma", "estimate"):
            p.add_argument("--g")
            p.add_argument("--h")
        if verb == "mdp":
            p.add_argument("--workers", type=int)
            p.add_argument("--replicates", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = {"verb": args.verb}
    for key in ("seed", "out", "format", "input", "estimator", "gridI", "gridJ", "g", "h",
                "workers", "replicates"):
        flags[key] = getattr(args, key, None)
    flags.update(dict(args.param))
    try:
        cfg = parse_config(args.config, flags)
        if not args.no_echo:
            print(cfg.to_json(), flush=True)
        run(cfg)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, IngestError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
