"""Large-Gamma behaviour: rescaled partition function and currents."""

import argparse

import numpy as np

from lindblad_mpa.xxx import zeno_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=4)
    ap.add_argument("--theta", type=float, default=np.pi / 2)
    ap.add_argument("--gamma", type=float, nargs="+", default=[1e1, 1e2, 1e3, 1e4, 1e5])
    args = ap.parse_args()

    print(f"{'Gamma':>8} {'G^2 Z/4':>14} {'jx':>12} {'jy':>12} {'jz':>12} {'G*jx':>10}")
    for r in zeno_scan(args.theta, args.N, args.gamma):
        G = r["Gamma"]
        print(f"{G:8.0e} {r['scaled_Z']:14.6f} {r['jx']:12.4e} {r['jy']:12.4e} {r['jz']:12.4e} {G * r['jx']:10.5f}")


if __name__ == "__main__":
    main()
