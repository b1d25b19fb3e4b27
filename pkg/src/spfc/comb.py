"""Periodic modulation waveforms and single-photon frequency-comb sidebands.

Sideband convention (used everywhere in the package)::

    s_k = (1/T) * integral_0^T exp(i s(t)) exp(i k Omega t) dt

so that ``exp(i s(t)) = sum_k s_k exp(-i k Omega t)`` and tooth ``k`` sits at
``omega_0 + k Omega``.  A drive delay ``delta`` means the waveform is read as
``s(t + delta)``, which multiplies ``s_k`` by ``exp(-i k Omega delta)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .special import cerf

__all__ = [
    "SignalKind",
    "ModulationSignal",
    "CombCoefficients",
    "ConvergenceError",
    "parabolic",
    "sawtooth",
    "phase_of",
    "frequency_of",
    "frequency_slope",
    "drive_breakpoints",
    "sideband_coefficients",
    "asymptotic_sideband",
    "asymptotic_comb",
]

EPSILON_TRUNC_DEFAULT = 1e-6
MAX_TOOTH = 4096
MAX_SAMPLES = 2**22
REFINE_TOL = 1e-10


class ConvergenceError(RuntimeError):
    """Sideband window or sampling growth exceeded the hard caps."""


class SignalKind(str, enum.Enum):
    PARABOLIC_PHASE = "parabolic"
    SAWTOOTH_FREQUENCY = "sawtooth"
    SAMPLED_PHASE = "sampled"


@dataclass(frozen=True)
class ModulationSignal:
    """One period-defined drive.

    ``omega`` is the angular modulation frequency (rad/s), ``delay`` in
    seconds.  ``samples`` is only used by ``SignalKind.SAMPLED_PHASE``: a
    sequence of ``(t, phase)`` pairs, strictly increasing in ``t``, covering
    ``[0, T)``; it is interpolated linearly and periodically.
    """

    kind: SignalKind
    depth_A: float
    omega: float
    delay: float = 0.0
    samples: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SignalKind(self.kind))
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError(f"omega must be positive and finite, got {self.omega!r}")
        if not (self.depth_A >= 0 and math.isfinite(self.depth_A)):
            raise ValueError(f"depth_A must be >= 0, got {self.depth_A!r}")
        if not math.isfinite(self.delay):
            raise ValueError("delay must be finite")
        if self.kind is SignalKind.SAMPLED_PHASE:
            if self.samples is None or len(self.samples) < 2:
                raise ValueError("SampledPhase needs at least two (t, value) samples")
            ts = np.array([p[0] for p in self.samples], dtype=float)
            if np.any(np.diff(ts) <= 0):
                raise ValueError("SampledPhase samples must be strictly increasing in t")
            if ts[0] != 0.0 or ts[-1] >= self.period:
                raise ValueError("SampledPhase samples must span [0, T) starting at t = 0")
            object.__setattr__(self, "samples", tuple((float(t), float(v)) for t, v in self.samples))

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def with_delay(self, delay: float) -> "ModulationSignal":
        return replace(self, delay=float(delay))


def parabolic(A: float, omega: float, delay: float = 0.0) -> ModulationSignal:
    return ModulationSignal(SignalKind.PARABOLIC_PHASE, float(A), float(omega), float(delay))


def sawtooth(A: float, omega: float, delay: float = 0.0) -> ModulationSignal:
    return ModulationSignal(SignalKind.SAWTOOTH_FREQUENCY, float(A), float(omega), float(delay))


def _reduced(signal: ModulationSignal, t):
    return np.mod(np.asarray(t, dtype=float) + signal.delay, signal.period)


def _sampled_arrays(signal: ModulationSignal):
    ts = np.array([p[0] for p in signal.samples])
    vs = np.array([p[1] for p in signal.samples])
    # close the period so interpolation wraps back to the first sample
    return np.append(ts, signal.period), np.append(vs, vs[0])


def _phase_reduced(signal: ModulationSignal, u):
    A, W = signal.depth_A, signal.omega
    if signal.kind is SignalKind.PARABOLIC_PHASE:
        return (A * W**2 / math.pi**2) * (u * u - (2.0 * math.pi / W) * u)
    if signal.kind is SignalKind.SAWTOOTH_FREQUENCY:
        # -int_0^u (2 A W^2/pi^2)(pi/W - t') dt'
        return -(2.0 * A * W**2 / math.pi**2) * ((math.pi / W) * u - 0.5 * u * u)
    ts, vs = _sampled_arrays(signal)
    return np.interp(u, ts, vs)


def phase_of(signal: ModulationSignal, t):
    """Modulation phase s(t + delay), with the argument reduced mod T."""
    out = _phase_reduced(signal, _reduced(signal, t))
    return float(out) if np.ndim(out) == 0 else out


def frequency_of(signal: ModulationSignal, t):
    """Instantaneous cavity-frequency shift omega_m(t + delay) = -d/dt s(t + delay)."""
    u = _reduced(signal, t)
    A, W = signal.depth_A, signal.omega
    if signal.kind is SignalKind.SAMPLED_PHASE:
        ts, vs = _sampled_arrays(signal)
        idx = np.clip(np.searchsorted(ts, u, side="right") - 1, 0, len(ts) - 2)
        out = -(vs[idx + 1] - vs[idx]) / (ts[idx + 1] - ts[idx])
    else:
        out = (2.0 * A * W**2 / math.pi**2) * (math.pi / W - u)
    return float(out) if np.ndim(out) == 0 else out


def frequency_slope(signal: ModulationSignal) -> float:
    """d omega_m / dt between breakpoints (the drive is piecewise linear)."""
    if signal.kind is SignalKind.SAMPLED_PHASE:
        return 0.0
    return -2.0 * signal.depth_A * signal.omega**2 / math.pi**2


def drive_breakpoints(signal: ModulationSignal, t0: float, t1: float) -> list:
    """Times in the open interval (t0, t1) where omega_m jumps or kinks."""
    T = signal.period
    if signal.kind is SignalKind.SAMPLED_PHASE:
        nodes = np.array([p[0] for p in signal.samples])
    else:
        nodes = np.array([0.0])
    out = []
    k0 = math.floor((t0 + signal.delay) / T) - 1
    k1 = math.ceil((t1 + signal.delay) / T) + 1
    for k in range(k0, k1 + 1):
        for node in nodes:
            tb = k * T + node - signal.delay
            if t0 < tb < t1 and not math.isclose(tb, t0, abs_tol=1e-9 * T) and not math.isclose(tb, t1, abs_tol=1e-9 * T):
                out.append(float(tb))
    return sorted(out)


@dataclass
class CombCoefficients:
    n_min: int
    n_max: int
    amplitudes: np.ndarray
    omega: float
    captured_weight: float
    signal: Optional[ModulationSignal] = None
    n_samples: int = 0
    refine_delta: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if len(self.amplitudes) != self.n_max - self.n_min + 1:
            raise ValueError("amplitude count does not match the index window")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def depth_A(self) -> Optional[float]:
        return None if self.signal is None else self.signal.depth_A

    def __getitem__(self, n: int) -> complex:
        if self.n_min <= n <= self.n_max:
            return complex(self.amplitudes[n - self.n_min])
        return 0j

    def on_window(self, n_min: int, n_max: int) -> np.ndarray:
        """Amplitudes on [n_min, n_max], zero outside the retained window."""
        out = np.zeros(n_max - n_min + 1, dtype=complex)
        lo, hi = max(n_min, self.n_min), min(n_max, self.n_max)
        if lo <= hi:
            out[lo - n_min: hi - n_min + 1] = self.amplitudes[lo - self.n_min: hi - self.n_min + 1]
        return out

    def delayed(self, delay: float) -> "CombCoefficients":
        """Coefficients of the same drive read at t + delay."""
        phase = np.exp(-1j * self.indices * self.omega * delay)
        sig = None if self.signal is None else self.signal.with_delay(self.signal.delay + delay)
        return replace(self, amplitudes=self.amplitudes * phase, signal=sig)

    def rows(self):
        for n, s in zip(self.indices, self.amplitudes):
            yield int(n), s.real, s.imag, abs(s) ** 2, math.atan2(s.imag, s.real)

    def to_csv(self, path) -> None:
        from .io import write_csv
        write_csv(path, ["n", "re", "im", "abs2", "arg"], self.rows())

    def to_json(self) -> dict:
        return {
            "omega_rad_s": self.omega,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "captured_weight": self.captured_weight,
            "teeth": [{"n": int(n), "re": s.real, "im": s.imag} for n, s in zip(self.indices, self.amplitudes)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CombCoefficients":
        teeth = sorted(obj["teeth"], key=lambda d: d["n"])
        ns = [d["n"] for d in teeth]
        if ns != list(range(ns[0], ns[-1] + 1)):
            raise ValueError("teeth must form a contiguous index window")
        amps = np.array([complex(d["re"], d["im"]) for d in teeth])
        return cls(ns[0], ns[-1], amps, float(obj["omega_rad_s"]), float(np.sum(np.abs(amps) ** 2)))


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(math.ceil(math.log2(max(n, 1)))))


def _dft_coefficients(signal: ModulationSignal, n_samples: int) -> np.ndarray:
    # undelayed waveform; the delay is applied exactly afterwards
    base = replace(signal, delay=0.0)
    t = np.arange(n_samples) * (base.period / n_samples)
    f = np.exp(1j * _phase_reduced(base, t))
    # ifft carries exp(+2 pi i k j / N) / N, i.e. the e^{+ik Omega t} convention
    return np.fft.ifft(f)


def _window(coeffs: np.ndarray, K: int) -> np.ndarray:
    return np.concatenate([coeffs[-K:], coeffs[: K + 1]]) if K > 0 else coeffs[:1].copy()


def sideband_coefficients(signal: ModulationSignal, epsilon_trunc: float = EPSILON_TRUNC_DEFAULT) -> CombCoefficients:
    """Sideband amplitudes s_n of ``exp(i s(t))`` on a symmetric window.

    The window ``|n| <= K`` is grown until it captures ``1 - epsilon_trunc`` of
    the (unit) spectral weight.  Amplitudes come from a uniform-sampling DFT
    whose size is doubled until successive estimates differ by at most 1e-10
    on the window.
    """
    if not (0 < epsilon_trunc <= 1e-2):
        raise ValueError("epsilon_trunc must lie in (0, 1e-2]")
    A = signal.depth_A
    K = int(math.ceil(2.0 * A / math.pi)) + 8
    while True:
        if K > MAX_TOOTH:
            raise ConvergenceError(f"sideband window would exceed |n| <= {MAX_TOOTH}")
        N = _next_pow2(64 * (int(math.ceil(A / math.pi)) + K + 1))
        if N > MAX_SAMPLES:
            raise ConvergenceError(f"sample count {N} exceeds cap {MAX_SAMPLES}")
        prev = _dft_coefficients(signal, N)
        while True:
            N *= 2
            if N > MAX_SAMPLES:
                raise ConvergenceError(f"DFT refinement did not reach {REFINE_TOL} within {MAX_SAMPLES} samples")
            cur = _dft_coefficients(signal, N)
            delta = float(np.max(np.abs(_window(cur, K) - _window(prev, K))))
            if delta <= REFINE_TOL:
                break
            prev = cur
        abs2 = np.abs(cur) ** 2
        # weight captured by |n| <= k for every k
        sym = abs2[: K + 1].copy()
        sym[1:] += abs2[-K:][::-1]
        cum = np.cumsum(sym)
        hit = np.nonzero(cum >= 1.0 - epsilon_trunc)[0]
        if hit.size:
            k_need = max(int(hit[0]), 1 if A > 0 else 0)
            amps = _window(cur, k_need)
            amps = amps * np.exp(-1j * np.arange(-k_need, k_need + 1) * signal.omega * signal.delay)
            return CombCoefficients(
                -k_need, k_need, amps, signal.omega, float(np.sum(np.abs(amps) ** 2)),
                signal=signal, n_samples=N, refine_delta=delta,
            )
        K = 2 * K


def asymptotic_sideband(A: float, n: int) -> complex:
    """Large-depth limit of s_n for the parabolic time lens (principal branches)."""
    if not A > 0:
        raise ValueError("the asymptotic sideband needs A > 0")
    sqrt_i = complex(math.sqrt(0.5), math.sqrt(0.5))
    erf_val = cerf(1j * sqrt_i * math.sqrt(A))
    # exp(-i(A - n pi)) = exp(-iA) * (-1)^n keeps the n-dependence exact
    sign = -1.0 if n % 2 else 1.0
    return -sqrt_i * math.sqrt(math.pi) * sign * complex(math.cos(A), -math.sin(A)) / (2.0 * math.sqrt(A)) * erf_val


def asymptotic_comb(A: float, omega: float, n_max: int) -> CombCoefficients:
    """Flat-top comb built from the asymptotic amplitude on |n| <= n_max."""
    ns = np.arange(-n_max, n_max + 1)
    amps = np.array([asymptotic_sideband(A, int(n)) for n in ns])
    return CombCoefficients(-n_max, n_max, amps, omega, float(np.sum(np.abs(amps) ** 2)),
                            signal=parabolic(A, omega), meta={"asymptotic": True})
