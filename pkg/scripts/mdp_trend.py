"""Rescaled log-tails against the quadratic rate for every experiment target.

Writes one CSV per target into ``--outdir`` (default ``results/``) using the
same column schema as ``covol mdp``.

Usage: python scripts/mdp_trend.py [--replicates R] [--outdir DIR] [--targets ...]
"""

import argparse
import warnings
from pathlib import Path

from covol import constant_model
from covol.asymptotics import SpeedSpec
from covol.cli import emit_report
from covol.mdp_lab import MdpExperimentConfig, MDepSequenceSpec, run_mdp_experiment


def configs(replicates, seed):
    speed = SpeedSpec(0.1)
    model = constant_model(1, 1, 0.5)
    return {
        "HY_V": MdpExperimentConfig("HY_V", (100, 1000, 10_000), speed, (0.5, 1.0, 1.5),
                                    replicates, seed, model=model),
        "HY_V_alt": MdpExperimentConfig("HY_V", (100, 1000, 10_000), speed, (0.5, 1.0, 1.5),
                                        replicates, seed, model=model, scheme="alt"),
        "Bipower": MdpExperimentConfig("Bipower", (100, 1000, 10_000), speed, (0.5, 1.0, 1.5),
                                       replicates, seed, model=model),
        "MDep_gauss": MdpExperimentConfig("MDepSynthetic", (100, 1000, 10_000), speed,
                                          (0.5, 1.0, 1.5), replicates, seed,
                                          sequence=MDepSequenceSpec(0)),
        "MDep_ma2": MdpExperimentConfig("MDepSynthetic", (100, 1000, 10_000), speed,
                                        (0.5, 1.0, 1.5), replicates, seed,
                                        sequence=MDepSequenceSpec(2, "bounded")),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--replicates", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--targets", nargs="*")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, cfg in configs(args.replicates, args.seed).items():
        if args.targets and name not in args.targets:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = run_mdp_experiment(cfg)
        emit_report(rep, "csv", out / f"mdp_{name}.csv")
        print(f"{name}: Sigma={rep.sigma_by_n}")
        for r in rep.rows:
            flag = " (lower bound)" if r.lower_bound_flag else ""
            print(f"  n={r.n:6d} delta={r.delta:.2f} rescaled={r.rescaled:.4f} "
                  f"L={r.L_theory:.4f}{flag}")


if __name__ == "__main__":
    main()
