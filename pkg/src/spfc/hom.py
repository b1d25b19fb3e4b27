"""Hong-Ou-Mandel observables from two sources' field correlation kernels.

The photon of each source is described by its trace-one temporal density
matrix rho(t1, t2) proportional to G1(t1, t2).  For two such photons::

    g2(tau) = (1 - Tr[rho_a rho_b^(tau)]) / 2,
    rho_b^(tau)(t1, t2) = rho_b(t1 - tau, t2 - tau) exp(-i w_rel (t2 - t1))

where ``w_rel`` is the carrier offset of b's simulation frame relative to
a's.  Sources simulated in one common frame use ``w_rel = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Optional

import numpy as np
from scipy import linalg, signal as sps
from scipy.sparse.linalg import LinearOperator, eigsh

from .comb import sawtooth, sideband_coefficients
from .dynamics import (SystemParams, TwoTimeCorrelation, auto_t_end, emission_probability,
                       two_time_g1)
from .overlap import analytic_optimal_delay, g2_floquet_zero
from .parallel import pool_map

__all__ = [
    "TemporalDensityMatrix",
    "HomCurve",
    "EmissionError",
    "GridMismatchError",
    "temporal_density",
    "g2_hom",
    "g2_hom_sweep",
    "source_pair",
    "g2_curve",
    "master_g2_zero",
    "floquet_vs_master",
    "FLOQUET_MASTER_TOL",
]

FLOQUET_MASTER_TOL = 0.05
IMAG_TOL = 1e-9
RESIDUAL_TOL = 1e-9


class EmissionError(ValueError):
    """The kernel carries no emitted photon to normalise."""


class GridMismatchError(ValueError):
    pass


@dataclass
class TemporalDensityMatrix:
    t_grid: np.ndarray
    rho_t: np.ndarray
    dt: float
    emitted: float  # sum_k I(t_k) dt before normalisation

    @property
    def n(self) -> int:
        return len(self.t_grid)

    def trace(self) -> float:
        return float(np.trace(self.rho_t).real)


@dataclass
class HomCurve:
    tau_grid: np.ndarray
    g2: np.ndarray
    g2_zero: float
    params_echo: tuple
    delay: float
    diagnostics: dict = field(default_factory=dict)

    def rows(self):
        return zip(self.tau_grid.tolist(), self.g2.tolist())

    def sidecar(self) -> dict:
        return {"g2_zero": self.g2_zero, "delay_s": self.delay,
                "params": [p.echo() for p in self.params_echo], "diagnostics": self.diagnostics}


def temporal_density(corr: TwoTimeCorrelation, normalization: str = "conditional",
                     kappa: Optional[float] = None) -> TemporalDensityMatrix:
    """Photon temporal density matrix from a correlation kernel.

    ``conditional`` (default) rescales to unit trace, i.e. conditions on a
    photon having left through the cavity.  ``emission`` keeps the trace
    equal to the emission probability kappa * sum I dt.
    """
    dt = corr.dt
    emitted = float(np.sum(corr.intensity) * dt)
    if not emitted > 1e-12:
        raise EmissionError(f"vanishing cavity emission (sum I dt = {emitted:.3e})")
    if normalization == "conditional":
        scale = dt / emitted
    elif normalization == "emission":
        if kappa is None:
            kappa = corr.params.kappa
        scale = kappa * dt
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return TemporalDensityMatrix(corr.t_grid, corr.g1 * scale, dt, emitted)


def _check_grids(rho_a: TemporalDensityMatrix, rho_b: TemporalDensityMatrix) -> float:
    if not math.isclose(rho_a.dt, rho_b.dt, rel_tol=1e-9):
        raise GridMismatchError(f"grid steps differ: {rho_a.dt} vs {rho_b.dt}")
    if abs(rho_a.t_grid[0] - rho_b.t_grid[0]) > 1e-6 * rho_a.dt:
        raise GridMismatchError("grids must share their start time")
    return rho_a.dt


def _lag(tau: float, dt: float) -> int:
    m = tau / dt
    k = int(round(m))
    if abs(m - k) > 1e-6:
        raise GridMismatchError(f"tau = {tau:.6e} s is not a multiple of the grid step {dt:.6e} s")
    return k


def _finish(tr: complex) -> float:
    if abs(tr.imag) > IMAG_TOL:
        raise ArithmeticError(f"Tr(rho_a rho_b) has imaginary part {tr.imag:.3e}")
    overlap = min(max(tr.real, 0.0), 1.0)
    return 0.5 * (1.0 - overlap)


def g2_hom(rho_a: TemporalDensityMatrix, rho_b: TemporalDensityMatrix, omega_rel: float, tau: float) -> float:
    """Mixed-state HOM coincidence for photon b delayed by ``tau`` (a grid multiple)."""
    dt = _check_grids(rho_a, rho_b)
    m = _lag(tau, dt)
    na, nb = rho_a.n, rho_b.n
    lo, hi = max(0, m), min(na, nb + m)
    if hi <= lo:
        return 0.5
    ia = slice(lo, hi)
    ib = slice(lo - m, hi - m)
    X = rho_a.rho_t[ia, ia] * rho_b.rho_t[ib, ib].T
    u = np.exp(-1j * omega_rel * rho_a.t_grid[0]) * np.exp(-1j * omega_rel * dt * np.arange(lo, hi))
    return _finish(complex(u @ X @ np.conj(u)))


def _components(rho: TemporalDensityMatrix, k0: int = 6):
    """Leading eigenpairs of the kernel, enough to hold all but RESIDUAL_TOL of its trace."""
    R = rho.rho_t
    n = R.shape[0]
    tr = rho.trace()
    if n <= 400:
        w, V = linalg.eigh(0.5 * (R + R.conj().T))
        keep = w > RESIDUAL_TOL * 1e-3 * max(tr, 1e-300)
        return w[keep], V[:, keep], float(tr - np.sum(w[keep]))
    op = LinearOperator((n, n), matvec=lambda x: R @ x, dtype=complex)
    k = k0
    while True:
        w, V = eigsh(op, k=k, which="LA", tol=1e-13)
        resid = float(tr - np.sum(w[w > 0]))
        if resid <= RESIDUAL_TOL * max(tr, 1e-300) or k >= 64 or k >= n - 2:
            keep = w > 0
            return w[keep], V[:, keep], resid
        k *= 2


def g2_hom_sweep(rho_a: TemporalDensityMatrix, rho_b: TemporalDensityMatrix, omega_rel: float,
                 lags) -> tuple[np.ndarray, dict]:
    """g2 at many grid lags through the kernels' eigen-decompositions.

    Tr[rho_a rho_b^(tau)] = sum_kl lam_k mu_l |C_kl(m)|^2 with C_kl a discrete
    cross-correlation of eigenvectors, evaluated for all lags by FFT.
    """
    dt = _check_grids(rho_a, rho_b)
    lags = np.asarray(lags, dtype=int)
    lam, V, res_a = _components(rho_a)
    mu, W, res_b = _components(rho_b)
    phase = np.exp(-1j * omega_rel * (rho_a.t_grid[0] + dt * np.arange(rho_a.n)))
    nb = rho_b.n
    total = np.zeros(len(lags))
    for k in range(len(lam)):
        vk = V[:, k] * phase
        for l in range(len(mu)):
            c = sps.correlate(vk, W[:, l], mode="full", method="fft")
            idx = lags + (nb - 1)
            valid = (idx >= 0) & (idx < len(c))
            vals = np.zeros(len(lags), dtype=complex)
            vals[valid] = c[idx[valid]]
            total += lam[k] * mu[l] * np.abs(vals) ** 2
    g2 = 0.5 * (1.0 - np.clip(total, 0.0, 1.0))
    return g2, {"rank_a": int(len(lam)), "rank_b": int(len(mu)),
                "trace_residual_a": res_a, "trace_residual_b": res_b}


def source_pair(system: SystemParams, A: float, delta: float) -> tuple[SystemParams, SystemParams]:
    """Sources alpha (carrier frame, undelayed drive) and beta (one tooth up, drive delayed)."""
    W = system.omega_mod
    pa = replace(system, drive=sawtooth(A, W, 0.0), detuning_offset=0.0)
    pb = replace(system, drive=sawtooth(A, W, delta), detuning_offset=W)
    return pa, pb


def _common_t_end(pa: SystemParams, pb: SystemParams) -> tuple[SystemParams, SystemParams]:
    if pa.t_end is None or pb.t_end is None:
        t = max(pa.t_end or auto_t_end(pa), pb.t_end or auto_t_end(pb))
        pa, pb = replace(pa, t_end=t), replace(pb, t_end=t)
    return pa, pb


def _kernel(params: SystemParams):
    corr = two_time_g1(params)
    p = emission_probability(corr, params.kappa)
    rho = temporal_density(corr)
    diag = dict(corr.diagnostics, emission_probability=p)
    return rho, diag


def master_g2_zero(params_a: SystemParams, params_b: SystemParams, omega_rel: float = 0.0):
    """g2(0) from the master-equation pipeline; returns (g2, diagnostics)."""
    if not math.isclose(params_a.dt, params_b.dt, rel_tol=1e-12):
        raise GridMismatchError("sources must share the output grid step")
    pa, pb = _common_t_end(params_a, params_b)
    rho_a, da = _kernel(pa)
    rho_b, db = _kernel(pb)
    return g2_hom(rho_a, rho_b, omega_rel, 0.0), {"a": da, "b": db}


def g2_curve(params_a: SystemParams, params_b: SystemParams, tau_max: float,
             delta: Optional[float] = None, omega_rel: float = 0.0) -> HomCurve:
    """g2(tau) on the grid multiples covering [-tau_max, tau_max].

    ``delta`` (if given) overrides the drive delay of source b.  Both sources
    are simulated once; the sweep reuses their kernels.
    """
    if delta is not None:
        params_b = replace(params_b, drive=params_b.drive.with_delay(delta))
    if not math.isclose(params_a.dt, params_b.dt, rel_tol=1e-12):
        raise GridMismatchError("sources must share the output grid step")
    pa, pb = _common_t_end(params_a, params_b)
    rho_a, da = _kernel(pa)
    rho_b, db = _kernel(pb)
    dt = rho_a.dt
    M = int(math.floor(tau_max / dt + 1e-9))
    lags = np.arange(-M, M + 1)
    g2, sweep_diag = g2_hom_sweep(rho_a, rho_b, omega_rel, lags)
    g2_zero = g2_hom(rho_a, rho_b, omega_rel, 0.0)
    diag = {"a": da, "b": db, **sweep_diag, "sweep_vs_direct": float(abs(g2[M] - g2_zero))}
    g2[M] = g2_zero
    return HomCurve(lags * dt, g2, g2_zero, (pa, pb), pb.drive.delay, diag)


def _compare_one(A: float, system: SystemParams):
    W = system.omega_mod
    comb = sideband_coefficients(sawtooth(A, W))
    delta = analytic_optimal_delay(A, W) if A > 0 else 0.0
    g2f = g2_floquet_zero(comb, comb, delta, system)
    g2m, diag = master_g2_zero(*source_pair(system, A, delta))
    return (float(A), g2f, g2m), diag


def floquet_vs_master(a_grid, params: SystemParams, jobs: Optional[int] = 1,
                      record: Optional[list] = None) -> np.ndarray:
    """Rows (A, g2_floquet, g2_master) at the analytic optimal delay of each A.

    ``record``, if given, receives the per-A master-equation diagnostics.
    """
    out = pool_map(partial(_compare_one, system=params), [float(a) for a in a_grid], jobs)
    if record is not None:
        record.extend(d for _, d in out)
    return np.array([row for row, _ in out], dtype=float).reshape(-1, 3)
