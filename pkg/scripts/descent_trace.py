"""Energy, rank and step size per iteration on a masked Shepp-Logan phantom."""

import argparse

from lrtv.metrics import psnr
from lrtv.problems import degrade, generate_phantom
from lrtv.solver import SolverConfig, solve_irnn_tv


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--fraction", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--every", type=int, default=50, help="print every n-th iteration")
    args = parser.parse_args(argv)

    X = generate_phantom("shepp_logan", args.size)
    obs = degrade(X, args.fraction, args.seed)
    sol = solve_irnn_tv(obs.observed, obs.mask, config=SolverConfig())
    print(f"start energy {sol.trace.initial_objective:.6f} rank {sol.trace.initial_rank}")
    for r in sol.trace:
        if r.iteration % args.every == 0 or r.iteration == len(sol.trace):
            print(f"{r.iteration:5d} energy {r.objective:.6f} rank {r.rank:3d} step {r.step_norm:.3e} mu {r.mu:g}")
    print(f"{sol.termination_reason}; psnr start {psnr(X, obs.observed):.2f} dB, end {psnr(X, sol.recovered):.2f} dB")


if __name__ == "__main__":
    main()
