"""Measuring convergence rates from iterates.

On a strongly convex quadratic the distance to the minimizer decays
geometrically, so a log-linear fit of |x_k - x*| over the tail recovers a
contraction factor rho < 1 with r^2 close to 1. Larger geometric damping
beta is compared at fixed h and gamma.

    python3 demos/convergence_rates.py
"""

import numpy as np

from hessdamp.analysis import rate_from_run
from hessdamp.core import SolverParams, validate_convergence_condition
from hessdamp.problems import quadratic, random_spd


def main():
    A = random_spd(10, 1.0, 10.0, seed=0)
    f = quadratic(A)
    L = float(np.linalg.eigvalsh(A)[-1])
    print(f"quadratic, d = 10, eigenvalues in [1, {L:g}]")
    print(f"{'beta':>6s} {'scheme':>7s} {'rho':>8s} {'r^2':>9s}  condition")
    for beta in (0.0, 0.05, 0.1, 0.2):
        p = SolverParams.constant(0.1, beta, 3.0)
        ok = validate_convergence_condition(p, L).ok
        for scheme in ("isehd", "isihd"):
            est = rate_from_run(scheme, f, p, np.ones(10), n_iter=1000, model="linear")
            print(f"{beta:6.2f} {scheme:>7s} {est.rho:8.4f} {est.r_squared:9.6f}  "
                  f"{'holds' if ok else 'violated'}")
    p = SolverParams.constant(0.1, 0.0, 3.0)
    est = rate_from_run("gd", f, p, np.ones(10), n_iter=1000, model="linear")
    print(f"{'-':>6s} {'gd':>7s} {est.rho:8.4f} {est.r_squared:9.6f}")


if __name__ == "__main__":
    main()
