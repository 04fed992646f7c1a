"""How often does an ideal random walk pass the smoothed-monotonicity check?

Simulates ensembles of independent Brownian walkers, forms the ensemble
variance at evenly spaced output times, smooths it with a 5-point moving
average and counts how often the result never decreases.

    python3 scripts/monotonicity_odds.py [TRIALS]
"""
import sys

import numpy as np

from meshfree_llns.experiments import fit_line, moving_average


def pass_rate(n_walkers, n_points, trials, rng):
    mono = 0
    good_fit = 0
    t = np.arange(n_points, dtype=float)
    for _ in range(trials):
        x = np.concatenate([np.zeros((n_walkers, 1)),
                            np.cumsum(rng.standard_normal((n_walkers, n_points - 1)), axis=1)], axis=1)
        v = x.var(axis=0)
        mono += bool(np.all(np.diff(moving_average(v)) >= 0))
        good_fit += fit_line(t, v)[2] >= 0.9
    return mono / trials, good_fit / trials


def main():
    trials = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    rng = np.random.default_rng(0)
    print("walkers  points  P(monotone)  P(R^2>=0.9)")
    for n in (100, 200, 400, 1000):
        for pts in (101, 41, 21):
            mono, fit = pass_rate(n, pts, trials, rng)
            print(f"{n:7d}  {pts:6d}  {mono:11.3f}  {fit:11.3f}")


if __name__ == "__main__":
    main()
