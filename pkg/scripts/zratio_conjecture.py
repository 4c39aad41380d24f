"""Scan N^2 Z_{N-1}/Z_N toward theta^2/4 and print the convergence table."""

import argparse

import numpy as np

from lindblad_mpa.xxx import z_ratio_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--theta", type=float, default=np.pi / 2)
    ap.add_argument("--N-max", type=int, default=200)
    args = ap.parse_args()

    rows = z_ratio_scan(args.gamma, args.theta, args.N_max)
    target = args.theta**2 / 4
    print(f"# target theta^2/4 = {target:.6f}")
    print(f"{'N':>5} {'ratio':>10} {'gap':>10} {'N*gap':>8}")
    for n, r in rows:
        if int(n) in (5, 10, 20, 40, 80, 100, 150, 200):
            gap = r - target
            print(f"{int(n):5d} {r:10.6f} {gap:10.6f} {n * gap:8.4f}")


if __name__ == "__main__":
    main()
