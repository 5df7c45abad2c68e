"""From a latent volatility path to observable price increments, and back.

The price X is observed at step delta; its increments are, conditionally on
the volatility, centered Gaussians with variance equal to the integrated
volatility of the step.  Summing k squared increments and normalizing by the
block length recovers the volatility level block by block: the realized
quadratic variation.  This demo shows how close those blocks get to the
integrated volatility they estimate, and how the regression samples for the
drift and the squared diffusion are laid out.

Run:  python demos/02_observations_and_quadvar.py
"""

import numpy as np

from stovol import (
    DIFF_SQ,
    DRIFT,
    build_regression,
    builtin_model,
    derive_rng,
    generate_observations,
    integrate_blocks,
    quad_var,
    simulate_fine_path,
)


def main():
    model = builtin_model("cir", theta=0.75, c=1 / 3, d=9)
    # fine simulation grid, then 10 fine steps per observed increment
    fine_step, ratio, n_fine = 1e-3, 10, 1_000_000  # T = 1000
    path = simulate_fine_path(model, fine_step, n_fine, derive_rng(7, 1, 0))
    integ = integrate_blocks(path, ratio)
    obs = generate_observations(integ, derive_rng(7, 2, 0))
    print(f"simulated T = {path.horizon:.0f}, observed n = {obs.n_increments} "
          f"increments at delta = {obs.step}")

    # the studentized increments are standard normal given the path
    z = obs.increments / np.sqrt(integ.values)
    print(f"studentized increments: mean {z.mean():+.4f}, variance {z.var():.4f}")

    print("\nblock size trade-off (block span Delta = k * delta):")
    print("   k    Delta      N     mean|qv - integrated|")
    for k in (50, 100, 250, 500):
        qv = quad_var(obs, k, integrated=integ)
        dev = np.mean(np.abs(qv.values - qv.vbar))
        print(f"{k:5d} {qv.block_span:8.2f} {qv.n_blocks:6d}     {dev:.5f}")

    # regression layout: response at block i+1 against the level of block i
    qv = quad_var(obs, 250)
    for target in (DRIFT, DIFF_SQ):
        s = build_regression(qv, target)
        pairs = [(round(float(a), 4), round(float(b), 4))
                 for a, b in zip(s.x[:3], s.y[:3])]
        print(f"\n{target}: {s.n_pairs} pairs; first three (x, y) = {pairs}")


if __name__ == "__main__":
    main()
