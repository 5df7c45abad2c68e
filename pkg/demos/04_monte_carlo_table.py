"""Desk-scale Monte Carlo error table.

Runs R independent replications of the whole pipeline (simulate, observe,
estimate both targets) for several block sizes k and reports mean squared
errors with their standard deviations.  Replication seeds derive from the
base seed and the replication index, so the table is reproducible and does
not depend on scheduling.

The full-length reference experiment is the same call with the "table1"
preset constants (T = 1000, delta = 2e-3, R = 100); see the README or use
the command line:  stovol mc-table --preset table1

Run:  python demos/04_monte_carlo_table.py
"""

import time

from stovol import ExperimentPlan, run_table


def main():
    plan = ExperimentPlan(
        model_id="cir",
        model_params={"theta": 0.75, "c": 1 / 3, "d": 9},
        horizon=200.0, fine_step=1e-3, obs_step=1e-2,   # desk scale
        ks=(25, 50, 100),
        replications=20,
        base_seed=0,
    )
    t0 = time.perf_counter()
    report = run_table(plan)
    print(f"{plan.replications} replications in {time.perf_counter() - t0:.1f}s\n")

    print("model  basis   k   target   mean        std         dims chosen")
    for cell in report.cells:
        hist = ",".join(f"{d}x{n}" for d, n in sorted(cell.dim_histogram().items()))
        print(f"{cell.model:5s}  {cell.basis:5s} {cell.k:4d}  {cell.target:7s}"
              f"  {cell.mean:.3e}  {cell.std:.3e}  {hist}")
    if report.failures:
        print("failures:", report.failures)


if __name__ == "__main__":
    main()
