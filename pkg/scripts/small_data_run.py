"""Small-data run to T=10 on a 128^2 grid; prints X(T)/X(0) for several j0."""
import argparse
import logging

from oldroydb import diagnostics as dg
from oldroydb import solver as so
from oldroydb.cli import write_trajectory


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=128)
    ap.add_argument("--b", type=float, default=0.5)
    ap.add_argument("--t-end", type=float, default=10.0)
    ap.add_argument("--amplitude", type=float, default=1e-3)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--out", help="write the CSV artifacts of the first seed here")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    for k, seed in enumerate(args.seeds):
        cfg = so.SimConfig(N=args.N, b=args.b, dt=0.01, t_end=args.t_end, output_every=0.1, j0=0, seed=seed,
                           initial=so.InitialSpec(amplitude=args.amplitude, tau_amplitude=args.amplitude))
        tr = so.simulate(cfg)
        ratios = {j0: dg.hybrid_functional(tr, j0=j0).ratio[-1] for j0 in (0, 1, 2)}
        x0 = dg.hybrid_functional(tr, j0=0).total[0]
        print(f"seed {seed}: X(0)={x0:.3e} " + " ".join(f"j0={j}:{r:.3f}" for j, r in ratios.items()))
        if args.out and k == 0:
            write_trajectory(args.out, tr)


if __name__ == "__main__":
    main()
