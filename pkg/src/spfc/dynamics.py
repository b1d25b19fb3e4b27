"""Lindblad dynamics of a frequency-modulated cavity coupled to a two-level emitter.

Hilbert space: emitter {g, e} (x) cavity Fock states {0..fock_cutoff}.  In the
frame rotating at source alpha's carrier::

    H(t) = [Delta + omega_m(t + delta)] a^dag a + Delta sigma^dag sigma
           + g (sigma^dag a + a^dag sigma)

with dissipators kappa D[a] and gamma D[sigma].  Density matrices are
vectorised row-major, so ``vec(X rho Y) = (X kron Y^T) vec(rho)``.

The generator is exactly T-periodic, so grid propagation uses a table of
one-cell propagators (one period of cells), each obtained with an adaptive
embedded Runge-Kutta integrator whose steps never straddle a drive jump.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .comb import ModulationSignal, drive_breakpoints, frequency_of, frequency_slope

__all__ = [
    "SystemParams",
    "DensityMatrix",
    "TwoTimeCorrelation",
    "PropagationError",
    "HygieneError",
    "excited_emitter",
    "cavity_photon",
    "propagate",
    "auto_t_end",
    "two_time_g1",
    "emission_probability",
]

log = logging.getLogger(__name__)

RTOL = 1e-8
ATOL = 1e-10
MAX_STEP_FRACTION = 1.0 / 64
SAMPLES_PER_PERIOD = 128
EMISSION_TARGET = 0.999
T_END_EXTENSION = 1.2
MAX_PERIODS = 20000

TRACE_TOL = 1e-8
HERMITIAN_TOL = 1e-10
PSD_FLOOR = -1e-8
LEAKAGE_TOL = 1e-12


class PropagationError(RuntimeError):
    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t = {t:.6e} s)")
        self.t = t


class HygieneError(RuntimeError):
    """A density-matrix invariant (trace, Hermiticity, positivity, sector) failed."""


@dataclass(frozen=True)
class SystemParams:
    """Rates in rad/s, times in seconds.

    ``dt_max`` caps the output grid step; the step actually used is
    ``T / ceil(T / dt_max)`` so that a period holds a whole number of samples.
    ``t_end=None`` selects the emission-completion rule of ``auto_t_end``.
    """

    g: float
    kappa: float
    gamma: float
    omega_mod: float
    drive: ModulationSignal
    detuning_offset: float = 0.0
    fock_cutoff: int = 1
    t_end: Optional[float] = None
    dt_max: Optional[float] = None

    def __post_init__(self):
        for name in ("g", "kappa", "gamma"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite rate >= 0, got {v!r}")
        if not self.omega_mod > 0:
            raise ValueError("omega_mod must be positive")
        if not math.isclose(self.drive.omega, self.omega_mod, rel_tol=1e-12):
            raise ValueError("drive frequency must equal omega_mod")
        if int(self.fock_cutoff) < 1:
            raise ValueError("fock_cutoff must be >= 1")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega_mod

    @property
    def samples_per_period(self) -> int:
        if self.dt_max is None:
            return SAMPLES_PER_PERIOD
        return max(1, int(math.ceil(self.period / self.dt_max - 1e-9)))

    @property
    def dt(self) -> float:
        return self.period / self.samples_per_period

    def echo(self) -> dict:
        d = asdict(self)
        d["drive"] = {"kind": self.drive.kind.value, "depth_A": self.drive.depth_A,
                      "omega": self.drive.omega, "delay": self.drive.delay}
        return d


@dataclass
class DensityMatrix:
    elements: np.ndarray

    def __post_init__(self):
        self.elements = np.asarray(self.elements, dtype=complex)
        if self.elements.ndim != 2 or self.elements.shape[0] != self.elements.shape[1]:
            raise ValueError("density matrix must be square")

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.elements).real)


class _Model:
    """Operators and Liouvillian pieces for one SystemParams."""

    def __init__(self, params: SystemParams):
        self.params = params
        nc = int(params.fock_cutoff) + 1
        a_c = np.diag(np.sqrt(np.arange(1, nc)), 1)
        sm = np.array([[0.0, 1.0], [0.0, 0.0]])  # |g><e| in basis (g, e)
        self.a = np.kron(np.eye(2), a_c)
        self.sigma = np.kron(sm, np.eye(nc))
        self.dim = 2 * nc
        self.n_cav = self.a.T @ self.a
        self.n_tls = self.sigma.T @ self.sigma
        self.n_exc = np.rint(np.diag(self.n_cav + self.n_tls)).astype(int)

        D = params.detuning_offset
        H0 = D * (self.n_cav + self.n_tls) + params.g * (self.sigma.T @ self.a + self.a.T @ self.sigma)
        I = np.eye(self.dim)
        L = -1j * (np.kron(H0, I) - np.kron(I, H0.T))
        for c, rate in ((self.a, params.kappa), (self.sigma, params.gamma)):
            if rate:
                cdc = c.conj().T @ c
                L = L + rate * (np.kron(c, c.conj()) - 0.5 * np.kron(cdc, I) - 0.5 * np.kron(I, cdc.T))
        self.L_static = L
        self.L_mod = -1j * (np.kron(self.n_cav, I) - np.kron(I, self.n_cav.T))

        # Liouville index -> (ket excitation) - (bra excitation)
        self.sector = (self.n_exc[:, None] - self.n_exc[None, :]).ravel()

    def generator(self, t: float) -> np.ndarray:
        return self.L_static + frequency_of(self.params.drive, t) * self.L_mod

    def segments(self, t0: float, t1: float):
        cuts = [t0] + drive_breakpoints(self.params.drive, t0, t1) + [t1]
        return list(zip(cuts[:-1], cuts[1:]))

    def _solve(self, y0: np.ndarray, t0: float, t1: float, shape) -> np.ndarray:
        max_step = self.params.period * MAX_STEP_FRACTION
        slope = frequency_slope(self.params.drive)
        y = y0.ravel()
        for a, b in self.segments(t0, t1):
            if b <= a:
                continue
            # omega_m is linear inside (a, b); anchoring at the midpoint keeps
            # endpoint evaluations on the correct side of a jump
            mid = 0.5 * (a + b)
            w_mid = frequency_of(self.params.drive, mid)

            def rhs(t, yv, mid=mid, w_mid=w_mid, slope=slope):
                w = w_mid + slope * (t - mid)
                return ((self.L_static + w * self.L_mod) @ yv.reshape(shape)).ravel()

            sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=RTOL, atol=ATOL,
                            max_step=max_step, first_step=min(max_step, b - a))
            if sol.status != 0:
                raise PropagationError(f"integrator failed: {sol.message}", float(sol.t[-1]))
            y = sol.y[:, -1]
        return y.reshape(shape)

    @cached_property
    def cell_table(self) -> np.ndarray:
        """Propagators over the cells [j dt, (j+1) dt] of one period."""
        n = self.params.samples_per_period
        dt = self.params.dt
        d2 = self.dim**2
        eye = np.eye(d2, dtype=complex)
        return np.array([self._solve(eye, j * dt, (j + 1) * dt, (d2, d2)) for j in range(n)])


@lru_cache(maxsize=16)
def _model(params: SystemParams) -> _Model:
    # shared by auto_t_end and two_time_g1 so the cell table is built once
    return _Model(params)


def _pure(params: SystemParams, tls: int, photons: int) -> DensityMatrix:
    nc = int(params.fock_cutoff) + 1
    psi = np.zeros(2 * nc)
    psi[tls * nc + photons] = 1.0
    return DensityMatrix(np.outer(psi, psi))


def excited_emitter(params: SystemParams) -> DensityMatrix:
    """|e, 0><e, 0|: the single-photon emission start state."""
    return _pure(params, 1, 0)


def cavity_photon(params: SystemParams) -> DensityMatrix:
    """|g, 1><g, 1|."""
    return _pure(params, 0, 1)


def propagate(params: SystemParams, rho0: DensityMatrix, t0: float, t1: float) -> DensityMatrix:
    """rho(t1) from rho(t0) by direct adaptive integration of the master equation."""
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    m = _model(params)
    if rho0.dim != m.dim:
        raise ValueError(f"rho0 has dimension {rho0.dim}, model needs {m.dim}")
    if t1 == t0:
        return DensityMatrix(rho0.elements.copy())
    v = m._solve(rho0.elements.astype(complex).ravel(), t0, t1, (m.dim**2,))
    return DensityMatrix(v.reshape(m.dim, m.dim))


def _check_samples(m: _Model, rhos: np.ndarray, trace0: float) -> dict:
    herm = float(np.max(np.abs(rhos - np.conj(np.transpose(rhos, (0, 2, 1))))))
    tr = np.trace(rhos, axis1=1, axis2=2).real
    drift = float(np.max(np.abs(tr - trace0)))
    herm_part = 0.5 * (rhos + np.conj(np.transpose(rhos, (0, 2, 1))))
    min_eig = float(np.min(np.linalg.eigvalsh(herm_part)))
    high = m.n_exc >= 2
    leak = float(np.max(np.abs(np.einsum("kii->ki", rhos)[:, high]))) if high.any() else 0.0
    diag = {"trace_drift": drift, "hermiticity": herm, "min_eigenvalue": min_eig, "leakage": leak}
    bad = []
    if drift > TRACE_TOL:
        bad.append(f"trace drift {drift:.2e}")
    if herm > HERMITIAN_TOL:
        bad.append(f"hermiticity {herm:.2e}")
    if min_eig < PSD_FLOOR:
        bad.append(f"eigenvalue {min_eig:.2e}")
    if leak > LEAKAGE_TOL:
        bad.append(f"sector leakage {leak:.2e}")
    if bad:
        raise HygieneError("density-matrix invariants violated: " + ", ".join(bad))
    return diag


def _grid_states(m: _Model, v0: np.ndarray, n_steps: int) -> np.ndarray:
    table = m.cell_table
    n_cell = len(table)
    out = np.empty((n_steps, v0.size), dtype=complex)
    v = v0.astype(complex)
    for k in range(n_steps):
        out[k] = v
        v = table[k % n_cell] @ v
    return out


def auto_t_end(params: SystemParams, rho0: Optional[DensityMatrix] = None) -> float:
    """Whole number of periods covering 1.2x the time to 99.9% decay."""
    m = _model(params)
    rho0 = excited_emitter(params) if rho0 is None else rho0
    table = m.cell_table
    n_cell = len(table)
    excited = (m.n_cav + m.n_tls).ravel()
    init = float(np.real(excited @ rho0.elements.ravel()))
    if init <= 0:
        return params.period
    v = rho0.elements.astype(complex).ravel()
    for k in range(MAX_PERIODS * n_cell):
        remaining = float(np.real(excited @ v)) / init
        if remaining <= 1.0 - EMISSION_TARGET:
            t0 = k * params.dt
            return max(1, math.ceil(T_END_EXTENSION * t0 / params.period - 1e-9)) * params.period
        v = table[k % n_cell] @ v
    raise PropagationError("emission did not complete within the period cap", MAX_PERIODS * params.period)


@dataclass
class TwoTimeCorrelation:
    """G1(t1, t2) = <a^dag(t1) a(t2)> on a uniform grid, with I(t) = <a^dag a>(t)."""

    t_grid: np.ndarray
    g1: np.ndarray
    intensity: np.ndarray
    params: Optional[SystemParams] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0]) if len(self.t_grid) > 1 else 0.0

    def header(self) -> dict:
        return {"n_samples": int(len(self.t_grid)), "dt_s": self.dt, "t_end_s": float(self.t_grid[-1]),
                "params": None if self.params is None else self.params.echo(),
                "diagnostics": self.diagnostics}

    def to_csv(self, path) -> None:
        from .io import write_csv
        t = self.t_grid
        n = len(t)
        rows = ((t[i], t[j], self.g1[i, j].real, self.g1[i, j].imag) for i in range(n) for j in range(n))
        write_csv(path, ["t1", "t2", "re", "im"], rows)


def two_time_g1(params: SystemParams, rho0: Optional[DensityMatrix] = None) -> TwoTimeCorrelation:
    """Two-time field correlation via the quantum regression theorem.

    For every grid time t1 the regression operator B = a rho(t1) is carried
    forward with the same generator and Tr[a^dag B(t2)] = G1(t2, t1) is
    recorded for t2 >= t1; the remaining half follows from Hermiticity.
    """
    m = _model(params)
    rho0 = excited_emitter(params) if rho0 is None else rho0
    if rho0.dim != m.dim:
        raise ValueError(f"rho0 has dimension {rho0.dim}, model needs {m.dim}")
    t_end = params.t_end if params.t_end is not None else auto_t_end(params, rho0)
    dt = params.dt
    n = int(math.floor(t_end / dt + 1e-9)) + 1
    t_grid = np.arange(n) * dt
    log.debug("G1 on %d samples, t_end = %.3e s", n, t_end)

    d = m.dim
    v = _grid_states(m, rho0.elements.ravel(), n)
    rhos = v.reshape(n, d, d)
    diag = _check_samples(m, rhos, rho0.trace())

    # regression operators a rho live in the (ket - bra) = -1 excitation sector
    S = np.nonzero(m.sector == -1)[0]
    a_left = np.kron(m.a, np.eye(d))
    B0 = v @ a_left.T
    outside = np.delete(B0, S, axis=1)
    if outside.size and np.max(np.abs(outside)) > 1e-14 * max(1.0, np.max(np.abs(B0))):
        S = np.arange(d * d)  # initial coherences break the sector structure
    table = m.cell_table[:, S[:, None], S[None, :]]
    f = m.a.ravel()[S]  # Tr[a^dag B] = sum_ij a_ij B_ij for real a
    B0 = np.ascontiguousarray(B0[:, S].T)

    g1 = np.empty((n, n), dtype=complex)
    stack = np.zeros((len(S), n), dtype=complex)
    n_cell = len(table)
    for k in range(n):
        stack[:, k] = B0[:, k]
        active = stack[:, : k + 1]
        g1[k, : k + 1] = f @ active  # G1(t_k, t_j) for j <= k
        active[:] = table[k % n_cell] @ active
    for j in range(n - 1):
        g1[j, j + 1:] = np.conj(g1[j + 1:, j])

    intensity = np.einsum("ij,kji->k", m.n_cav, rhos).real
    diag["diag_consistency"] = float(np.max(np.abs(np.diagonal(g1).real - intensity)))
    diag["n_samples"] = n
    return TwoTimeCorrelation(t_grid, g1, intensity, params, diag)


def emission_probability(corr: TwoTimeCorrelation, kappa: float) -> float:
    """kappa * integral I(t) dt (trapezoid), clipped to [0, 1]."""
    p = kappa * float(np.trapezoid(corr.intensity, corr.t_grid)) if len(corr.t_grid) > 1 else 0.0
    return min(max(p, 0.0), 1.0)
