"""Blocking variance gap Delta_n / n as the block length p grows, with p * gap for reference."""

import argparse

from covol.mdp_lab import MDepSequenceSpec, blocking_variance_gap


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=10**6)
    args = ap.parse_args()
    for label, spec in (("iid", MDepSequenceSpec(0)), ("ma1", MDepSequenceSpec(1, coefficients=(1, 1))),
                        ("ma3", MDepSequenceSpec(3, coefficients=(1, 0.5, -0.4, 0.2)))):
        for p in (5, 10, 20, 50, 100, 1000):
            gap = blocking_variance_gap(spec, args.n, p)
            print(f"{label:4s} p={p:5d} gap={gap:.8f} p*gap={p * gap:.6f}")


if __name__ == "__main__":
    main()
