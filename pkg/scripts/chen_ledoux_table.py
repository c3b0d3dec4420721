"""Tail statistic (1/b_n^2) log(n max P(|X_i| > b_n sqrt n)) for several bases and speeds."""

import argparse

from covol.asymptotics import SpeedSpec
from covol.mdp_lab import MDepSequenceSpec, chen_ledoux_verdict


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alphas", type=float, nargs="*", default=[0.1, 0.3, 0.45])
    args = ap.parse_args()
    bases = {
        "bounded": MDepSequenceSpec(1, "bounded"),
        "gaussian": MDepSequenceSpec(1),
        "student_t3": MDepSequenceSpec(0, "student_t", df=3),
        "student_t10_ma2": MDepSequenceSpec(2, "student_t", df=10),
    }
    for alpha in args.alphas:
        for name, spec in bases.items():
            v = chen_ledoux_verdict(spec, SpeedSpec(alpha))
            vals = " ".join(f"{c.value:12.4g}" for c in v.values)
            print(f"alpha={alpha:<5} {name:16s} holds={str(v.holds):5s} {vals}  [{v.values[0].kind}]")


if __name__ == "__main__":
    main()
