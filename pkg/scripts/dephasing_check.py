"""Fitted gain loss against trap frequency, next to the linear-response oracle.

Prints, per omega_T, the rate fitted from the ODE run, the largest growth
eigenvalue of the undepleted linear system, and the log-log slopes of both.
"""

import argparse

import numpy as np

from bec_superradiance import sidemode_dynamics as sd
from bec_superradiance.gain_engine import fit_power_law
from bec_superradiance.physcore import TrapParams


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--omega-r", type=float, default=1.0)
    parser.add_argument("--G", type=float, default=1.0)
    parser.add_argument("--N", type=float, default=1e6)
    parser.add_argument("--points", type=int, default=6)
    args = parser.parse_args()
    wT = np.geomspace(0.01, 0.1, args.points)
    fit = sd.dephasing_loss(wT, args.omega_r, args.G, args.N, check=False)
    oracle = np.array([sd.linear_growth_rate(sd.poisson_couplings(TrapParams(w, args.omega_r)), args.G)
                       for w in wT])
    print(f"{'omega_T':>10} {'fitted':>10} {'oracle':>10} {'loss':>10}")
    for w, r, o, l in zip(wT, fit.rates, oracle, fit.losses):
        print(f"{w:>10.4g} {r:>10.6f} {o:>10.6f} {l:>10.4g}")
    print(f"fitted exponent {fit.exponent:.4f} (R^2 {fit.r2:.5f}); "
          f"oracle exponent {fit_power_law(wT, args.G - oracle).exponent:.4f}")


if __name__ == "__main__":
    main()
