"""Oscillating-data norm against eps for several envelope widths and split indices."""
import argparse

from oldroydb import diagnostics as dg
from oldroydb.spectral import Grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--p", type=float, default=3.0)
    ap.add_argument("--widths", type=float, nargs="+", default=[0.5, 1.0])
    ap.add_argument("--j0", type=int, nargs="+", default=[0, 1, 2])
    args = ap.parse_args()

    grid = Grid(2, args.N)
    eps = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
    print("width  j0  slope   expected  rms")
    for w in args.widths:
        for j0 in args.j0:
            fit = dg.scaling_fit(w, eps, args.p, grid, j0=j0, workers=4)
            print(f"{w:5.2f} {j0:3d}  {fit.slope:.4f}  {fit.expected:.4f}   {fit.residual:.3f}")


if __name__ == "__main__":
    main()
