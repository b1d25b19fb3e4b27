"""Compare computed sidebands with the large-depth asymptote as A grows.

    python scripts/sideband_asymptote.py --depths 10pi 30pi 100pi --n 3
"""
import argparse
import math

from spfc.cli import parse_depth
from spfc.comb import asymptotic_sideband, parabolic, sideband_coefficients

OMEGA = 2 * math.pi * 50e9


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depths", nargs="+", default=["10pi", "30pi", "100pi"])
    ap.add_argument("--n", type=int, default=3, help="largest |n| to report")
    args = ap.parse_args()

    print(f"{'A/pi':>8} {'n':>3} {'|s_n|^2':>12} {'asymptote':>12} {'rel. gap':>10}")
    for text in args.depths:
        A = parse_depth(text)
        comb = sideband_coefficients(parabolic(A, OMEGA))
        for n in range(-args.n, args.n + 1):
            ref = asymptotic_sideband(A, n)
            gap = abs(comb[n] - ref) / abs(ref)
            print(f"{A / math.pi:8.2f} {n:3d} {abs(comb[n])**2:12.5e} {abs(ref)**2:12.5e} {gap:10.3e}")


if __name__ == "__main__":
    main()
