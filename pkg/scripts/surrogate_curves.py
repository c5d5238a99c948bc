"""Tabulate all eight rank surrogates and their super-gradients to CSV."""

import argparse
import csv
import sys

import numpy as np

from lrtv.surrogates import ALL_KINDS, SurrogateSpec, surrogate_supergradient, surrogate_value


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lambda", dest="lam", type=float, default=1.0)
    parser.add_argument("--gamma", type=float, default=0.5)
    parser.add_argument("--p", type=float, default=0.5)
    parser.add_argument("--xmax", type=float, default=2.0)
    parser.add_argument("--steps", type=int, default=201)
    args = parser.parse_args(argv)

    x = np.linspace(0, args.xmax, args.steps)
    specs = [SurrogateSpec(k, lam=args.lam, gamma=args.gamma, p=args.p) for k in ALL_KINDS]
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["x"] + [f"g_{s.kind.value}" for s in specs] + [f"dg_{s.kind.value}" for s in specs])
    values = [surrogate_value(s, x) for s in specs]
    grads = [surrogate_supergradient(s, x) for s in specs]
    for i, xi in enumerate(x):
        writer.writerow([repr(float(xi))] + [repr(float(v[i])) for v in values] + [repr(float(g[i])) for g in grads])


if __name__ == "__main__":
    main()
