"""Four volatility models and their exact simulation.

Each model is a positive one-dimensional diffusion given by a drift b(v) and a
squared diffusion sigma2(v), simulated without discretization error through
Ornstein-Uhlenbeck building blocks:

  exp_ou         V = exp(U)
  tanh_ou_shift  V = tanh(U) + 2
  exp_tanh_ou    V = exp(tanh(U))
  cir            V = |U_1|^2 + ... + |U_d|^2   (d independent components)

Every path starts from an exact stationary draw, so there is no burn-in.
Run:  python demos/01_models_and_paths.py [--plot]
"""

import math
import sys

import numpy as np

from stovol import builtin_model, derive_rng, simulate_fine_path

MODELS = {
    "exp_ou": dict(theta=1.0, c=0.75),
    "tanh_ou_shift": dict(theta=1.0, c=0.75),
    "exp_tanh_ou": dict(theta=1.0, c=0.75),
    "cir": dict(theta=0.75, c=1 / 3, d=9),
}


def main():
    print("model            drift(v0)   sigma2(v0)  state space")
    paths = {}
    for name, params in MODELS.items():
        m = builtin_model(name, **params)
        lo, hi = m.state_space
        v0 = 0.5 * (max(lo, 0.1) + min(hi, 2.0))
        print(f"{name:16s} {m.drift(v0):+.4f}     {m.diff_sq(v0):.4f}      "
              f"({lo:.3f}, {'inf' if math.isinf(hi) else f'{hi:.3f}'})")
        # one year-scale path at a fine step; the seed fixes everything
        paths[name] = simulate_fine_path(m, 1e-3, 100_000, derive_rng(42, 1, 0))

    print("\nlong-run behaviour over T = 100 (time averages vs stationary means):")
    expect = {
        "exp_ou": math.exp(0.75 ** 2 / 4.0),
        "tanh_ou_shift": 2.0,        # symmetric around the shift
        "exp_tanh_ou": None,         # no simple closed form
        "cir": 1 / 3,                # d c^2 / (4 theta)
    }
    for name, path in paths.items():
        avg = path.values.mean()
        tgt = expect[name]
        note = f"(stationary mean {tgt:.5f})" if tgt is not None else ""
        print(f"  {name:16s} time average {avg:.5f} {note}")

    if "--plot" in sys.argv:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(4, 1, figsize=(9, 8), sharex=True)
        for ax, (name, path) in zip(axes, paths.items()):
            t = np.arange(path.values.size) * path.step
            ax.plot(t[::20], path.values[::20], lw=0.6)
            ax.set_ylabel(name, fontsize=8)
        axes[-1].set_xlabel("t")
        fig.suptitle("exactly simulated volatility paths")
        fig.savefig("demo01_paths.png", dpi=120)
        print("\nsaved demo01_paths.png")


if __name__ == "__main__":
    main()
