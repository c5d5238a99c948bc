"""Run an experiment plan and print the report with a per-solver PSNR summary.

    python scripts/run_plan.py scripts/plans/completion.plan --out-dir runs/completion --jobs 4
"""

import argparse
import collections
import statistics
import sys

from lrtv.experiment import format_report, read_plan, run_experiment


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("plan")
    parser.add_argument("--out-dir", default=None)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args(argv)

    rows = run_experiment(read_plan(args.plan), args.out_dir, jobs=args.jobs)
    sys.stdout.write(format_report(rows))

    by_solver = collections.defaultdict(list)
    for row in rows:
        if row["status"] == "ok":
            by_solver[row["solver"]].append(float(row["psnr"]))
    print()
    for solver, values in by_solver.items():
        print(f"{solver:12s} mean psnr {statistics.mean(values):7.2f} dB over {len(values)} cells")


if __name__ == "__main__":
    main()
