"""Eigenvalue table of the linear symbol, with the propagator checked against RK4."""
import argparse

import numpy as np

from oldroydb import linear_modes as lm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radii", type=float, nargs="+", default=[0.5, 1, 1.5, 1.9, 2, 2.1, 5, 10, 100])
    args = ap.parse_args()

    print("     r        Re l+        Im l+        Re l-        Im l-   regime        |exp-RK4|")
    for r in args.radii:
        lp, lm_, regime = lm.eigenvalues(r)
        err = np.max(np.abs(lm.propagator(r, 1.0) - lm.rk4_propagator(r, 1.0)))
        print(f"{r:6.2f} {lp.real:12.6f} {lp.imag:12.6f} {lm_.real:12.6f} {lm_.imag:12.6f}   {regime:12s}  {err:.1e}")


if __name__ == "__main__":
    main()
