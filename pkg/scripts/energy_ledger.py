"""Per-block energy ledger of a short nonlinear run."""
import argparse

import numpy as np

from oldroydb import diagnostics as dg
from oldroydb import solver as so


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=32)
    ap.add_argument("--amplitude", type=float, default=0.05)
    ap.add_argument("--order", type=int, default=4, choices=sorted(dg.FD_STENCILS))
    args = ap.parse_args()

    cfg = so.SimConfig(N=args.N, b=0.5, dt=1e-3, t_end=0.02, output_every=1e-3, keep_states=True, seed=3,
                       initial=so.InitialSpec(amplitude=args.amplitude, tau_amplitude=args.amplitude))
    tr = so.simulate(cfg)
    print("  j   energy     residual   fd error   c1 range        coarse")
    for j in tr.partition.blocks:
        led = dg.block_energy_balance(tr, j, order=args.order)
        if led.energy[0] == 0:
            continue
        c1 = led.bernstein
        print(f"{j:3d}  {led.energy[0]:.2e}  {np.nanmax(led.residual):.2e}  {np.nanmax(led.fd_error):.2e}"
              f"  [{np.nanmin(c1):.2f}, {np.nanmax(c1):.2f}]  {led.coarse}")


if __name__ == "__main__":
    main()
