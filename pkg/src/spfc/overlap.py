"""Overlap of two frequency combs, the Floquet g2 closed form and delay tuning.

All quantities are built on one sum::

    S(delta) = sum_n exp(-i n Omega delta) conj(s_n) s'_{n-1}

the inner product between source alpha's comb and source beta's comb
(carrier one tooth higher, delayed by ``delta``).  ``g2(0) = (1 - |S|^2)/2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from .comb import CombCoefficients

__all__ = [
    "OverlapResult",
    "OptimalDelay",
    "FloquetRegimeWarning",
    "delayed_overlap",
    "delay_scan",
    "analytic_optimal_delay",
    "optimal_delay",
    "g2_floquet_zero",
    "floquet_regime_ok",
    "phase_locking_residual",
    "pulse_shaper_overlap",
    "g2_analytic_tau",
    "overlap_map",
    "phase_map",
]

WEIGHT_FLOOR = 1e-12
REGIME_RATIO = 0.5


class FloquetRegimeWarning(UserWarning):
    """Rates are not small compared with the modulation frequency."""


@dataclass
class OverlapResult:
    delay: float
    overlap_abs: float
    g2_zero: float
    phase_diffs: np.ndarray  # columns: n, delta_phi_n (rad)
    weights: np.ndarray

    @property
    def inner(self) -> complex:
        return self._inner

    @inner.setter
    def inner(self, value: complex) -> None:
        self._inner = value


@dataclass
class OptimalDelay:
    delta_opt: float
    delta_refined: float
    result: OverlapResult
    result_analytic: OverlapResult

    def __iter__(self):
        # allows ``delta, result = optimal_delay(comb)``
        yield self.delta_opt
        yield self.result


def _products(comb: CombCoefficients, comb_shifted: CombCoefficients):
    if not math.isclose(comb.omega, comb_shifted.omega, rel_tol=1e-12):
        raise ValueError(f"comb spacings differ: {comb.omega} vs {comb_shifted.omega}")
    lo = max(comb.n_min, comb_shifted.n_min + 1)
    hi = min(comb.n_max, comb_shifted.n_max + 1)
    if lo > hi:
        # no tooth of alpha has a beta partner: empty product list
        return np.zeros(0, dtype=int), np.zeros(0, dtype=complex), np.zeros(0, dtype=complex)
    n = np.arange(lo, hi + 1)
    s = comb.on_window(lo, hi)
    sp = comb_shifted.on_window(lo - 1, hi - 1)
    return n, s, sp


def _inner(n, s, sp, omega, delta):
    return complex(np.sum(np.exp(-1j * n * omega * delta) * np.conj(s) * sp))


def _g2_from_overlap(ov: float) -> float:
    return 0.5 * (1.0 - ov * ov)


def delayed_overlap(comb: CombCoefficients, comb_shifted: CombCoefficients, delta: float) -> OverlapResult:
    """|<psi_alpha| D(delta) |psi_beta>| with per-tooth phase differences."""
    n, s, sp = _products(comb, comb_shifted)
    inner = _inner(n, s, sp, comb.omega, delta)
    ov = min(abs(inner), 1.0)
    shifted = sp * np.exp(-1j * n * comb.omega * delta)
    dphi = np.angle(s * np.conj(shifted))
    res = OverlapResult(
        delay=float(delta),
        overlap_abs=ov,
        g2_zero=_g2_from_overlap(ov),
        phase_diffs=np.column_stack([n, dphi]) if n.size else np.zeros((0, 2)),
        weights=np.abs(s) * np.abs(sp),
    )
    res.inner = inner
    return res


def delay_scan(comb: CombCoefficients, comb_shifted: CombCoefficients, deltas) -> np.ndarray:
    """Vectorised |S(delta)| over an array of delays."""
    n, s, sp = _products(comb, comb_shifted)
    deltas = np.asarray(deltas, dtype=float)
    prod = np.conj(s) * sp
    out = np.empty(deltas.shape)
    flat = deltas.ravel()
    for start in range(0, flat.size, 2048):
        chunk = flat[start:start + 2048]
        out.ravel()[start:start + 2048] = np.abs(np.exp(-1j * np.outer(chunk, n) * comb.omega) @ prod)
    return np.minimum(out, 1.0)


def analytic_optimal_delay(A: float, omega: float) -> float:
    """pi^2 / (2 A Omega)."""
    if not A > 0:
        raise ValueError("optimal delay is undefined for an unmodulated comb (A = 0)")
    return math.pi**2 / (2.0 * A * omega)


def optimal_delay(comb: CombCoefficients, comb_shifted: Optional[CombCoefficients] = None,
                  scan_points: int = 4096) -> OptimalDelay:
    """Closed-form optimal delay plus a golden-section refinement of the maximum.

    The refinement brackets the best point of a coarse scan over one period
    and then runs golden-section search inside that bracket.
    """
    if comb.depth_A is None:
        raise ValueError("comb carries no modulation depth; build it with sideband_coefficients")
    comb_shifted = comb if comb_shifted is None else comb_shifted
    d_opt = analytic_optimal_delay(comb.depth_A, comb.omega)
    T = 2.0 * math.pi / comb.omega
    grid = np.arange(scan_points) * (T / scan_points)
    vals = delay_scan(comb, comb_shifted, grid)
    k = int(np.argmax(vals))
    step = T / scan_points
    a, b = grid[k] - step, grid[k] + step
    sol = optimize.minimize_scalar(lambda d: -delay_scan(comb, comb_shifted, [d])[0],
                                   bracket=(a, grid[k], b), method="golden",
                                   options={"xtol": 1e-10})
    refined = float(np.mod(sol.x, T))
    r_ana = delayed_overlap(comb, comb_shifted, d_opt)
    r_ref = delayed_overlap(comb, comb_shifted, refined)
    if r_ana.overlap_abs > r_ref.overlap_abs:
        refined, r_ref = d_opt, r_ana
    return OptimalDelay(d_opt, refined, r_ref, r_ana)


def floquet_regime_ok(params) -> bool:
    """True when g and kappa + gamma are well below the modulation frequency."""
    W = params.omega_mod
    return params.g <= REGIME_RATIO * W and (params.kappa + params.gamma) <= REGIME_RATIO * W


def g2_floquet_zero(comb: CombCoefficients, comb_shifted: CombCoefficients, delta: float,
                    params=None) -> float:
    """Floquet approximation of g2_HOM(0); warns if ``params`` leave the regime."""
    if params is not None and not floquet_regime_ok(params):
        warnings.warn(
            f"g={params.g:.3g}, kappa+gamma={params.kappa + params.gamma:.3g} not << Omega={params.omega_mod:.3g}",
            FloquetRegimeWarning, stacklevel=2)
    return delayed_overlap(comb, comb_shifted, delta).g2_zero


def phase_locking_residual(comb: CombCoefficients, delta: float,
                           comb_shifted: Optional[CombCoefficients] = None) -> float:
    """Weighted circular standard deviation of the adjacent-tooth phase differences."""
    comb_shifted = comb if comb_shifted is None else comb_shifted
    res = delayed_overlap(comb, comb_shifted, delta)
    w = res.weights
    keep = w > WEIGHT_FLOOR
    if np.count_nonzero(keep) < 2:
        raise ValueError("need at least two adjacent tooth pairs with non-negligible weight")
    w = w[keep]
    dphi = res.phase_diffs[keep, 1]
    R = abs(np.sum(w * np.exp(1j * dphi))) / np.sum(w)
    R = min(R, 1.0)
    return math.sqrt(max(-2.0 * math.log(R), 0.0)) if R > 0 else math.inf


def pulse_shaper_overlap(comb: CombCoefficients, comb_shifted: Optional[CombCoefficients] = None) -> float:
    """Best overlap reachable with free per-tooth phases: sum |s_n||s'_{n-1}|."""
    comb_shifted = comb if comb_shifted is None else comb_shifted
    _, s, sp = _products(comb, comb_shifted)
    return float(min(np.sum(np.abs(s) * np.abs(sp)), 1.0))


def g2_analytic_tau(comb: CombCoefficients, comb_shifted: CombCoefficients, tau, delta: float = 0.0):
    """Pure-comb g2(tau): the HOM delay adds to the drive delay; T-periodic."""
    tau = np.asarray(tau, dtype=float)
    ov = delay_scan(comb, comb_shifted, delta + tau)
    out = 0.5 * (1.0 - ov * ov)
    return float(out) if out.ndim == 0 else out


def overlap_map(combs, deltas):
    """Rows (A, delta, g2) for a list of combs over a delay grid."""
    rows = []
    for comb in combs:
        ov = delay_scan(comb, comb, deltas)
        rows.extend((comb.depth_A, float(d), 0.5 * (1.0 - o * o)) for d, o in zip(deltas, ov))
    return rows


def phase_map(comb: CombCoefficients, deltas, n_range: int):
    """Rows (A, delta, n, delta_phi_n) for |n| <= n_range."""
    rows = []
    for d in deltas:
        res = delayed_overlap(comb, comb, float(d))
        for n, ph in res.phase_diffs:
            if abs(n) <= n_range:
                rows.append((comb.depth_A, float(d), int(n), float(ph)))
    return rows
