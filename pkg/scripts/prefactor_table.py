"""Quadrature over closed-form gain ratio in both regimes and both directions.

The closed forms drop the geometric constants of the plane integral; this
prints the measured factor instead of assuming one. The full-shell column is
optional (slow) and shows the curvature correction at finite k0.
"""

import argparse
import math

from bec_superradiance import gain_engine as ge
from bec_superradiance.physcore import BeamParams, LatticeParams


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--k0", type=float, default=2000.0)
    parser.add_argument("--shell", action="store_true", help="also run the full-sphere quadrature")
    args = parser.parse_args()
    beam = BeamParams(k0=args.k0)
    print(f"{'M':>4} {'sigma_x':>8} {'regime':>7} {'dir':>4} {'plane/closed':>13}"
          + (f" {'shell/closed':>13}" if args.shell else ""))
    for M in (10, 20):
        for sx in (0.1, 0.3, 1.5, 3.0):
            p = LatticeParams(M=M, sigma_x=sx, sigma_y=0.2, sigma_z=3.0)
            for d, theta in (("x", ge.THETA_X), ("z", ge.THETA_Z)):
                closed = ge.gain_closed_form(p, beam, d).value
                line = (f"{M:>4} {sx:>8g} {ge.regime(p):>7} {d:>4} "
                        f"{ge.gain_plane_quadrature(p, beam, theta).value / closed:>13.6f}")
                if args.shell:
                    line += f" {ge.gain_shell_quadrature(p, beam, theta).value / closed:>13.6f}"
                print(line)
    print(f"sqrt(2 pi) = {math.sqrt(2 * math.pi):.6f}")


if __name__ == "__main__":
    main()
