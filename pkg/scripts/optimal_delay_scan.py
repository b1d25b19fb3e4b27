"""Dense delay scan: where the overlap maximum sits relative to pi^2/(2 A Omega)."""
import argparse
import math

import numpy as np

from spfc.comb import parabolic, sideband_coefficients
from spfc.overlap import analytic_optimal_delay, delay_scan, optimal_delay, pulse_shaper_overlap

OMEGA = 2 * math.pi * 50e9
T = 2 * math.pi / OMEGA


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depths-pi", nargs="+", type=float, default=[1, 1.5, 2, 2.6, 5, 10])
    ap.add_argument("--points", type=int, default=10_000)
    args = ap.parse_args()

    deltas = np.arange(args.points) * (T / args.points)
    print(f"{'A/pi':>6} {'d_opt ps':>9} {'argmax ps':>10} {'refined ps':>11} {'g2(d_opt)':>10} {'g2 shaper':>10}")
    for a in args.depths_pi:
        A = a * math.pi
        comb = sideband_coefficients(parabolic(A, OMEGA))
        best = deltas[np.argmax(delay_scan(comb, comb, deltas))]
        opt = optimal_delay(comb)
        g2_opt = opt.result_analytic.g2_zero
        g2_ps = 0.5 * (1 - pulse_shaper_overlap(comb) ** 2)
        print(f"{a:6.2f} {analytic_optimal_delay(A, OMEGA) * 1e12:9.4f} {best * 1e12:10.4f} "
              f"{opt.delta_refined * 1e12:11.4f} {g2_opt:10.5f} {g2_ps:10.5f}")


if __name__ == "__main__":
    main()
