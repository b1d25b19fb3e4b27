import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from spfc.comb import (CombCoefficients, ConvergenceError, ModulationSignal, SignalKind, asymptotic_comb,
                       asymptotic_sideband, frequency_of, parabolic, phase_of, sawtooth, sideband_coefficients)

from conftest import OMEGA, PERIOD
from oracles import sideband_quadrature

DEPTHS = [0.0, 0.5, math.pi, 2.6 * math.pi, 5 * math.pi, 10 * math.pi]


@pytest.fixture(scope="module")
def combs():
    return {A: sideband_coefficients(parabolic(A, OMEGA)) for A in DEPTHS}


def test_phase_at_origin():
    assert phase_of(parabolic(math.pi, OMEGA), 0.0) == 0.0


@pytest.mark.parametrize("A", [0.3, math.pi, 7.0])
def test_phase_mid_period(A):
    assert phase_of(parabolic(A, OMEGA), math.pi / OMEGA) == pytest.approx(-A, rel=1e-14)


@pytest.mark.parametrize("t", np.linspace(0, 3 * PERIOD, 17))
def test_sawtooth_phase_is_integral_of_frequency(t):
    A = 5 * math.pi
    saw = sawtooth(A, OMEGA)
    u = t % PERIOD
    integral = quad(lambda s: frequency_of(saw, s), 0.0, u, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    assert phase_of(saw, t) == pytest.approx(-integral, abs=1e-12)
    assert phase_of(saw, t) == pytest.approx(phase_of(parabolic(A, OMEGA), t), abs=1e-12)


def test_delay_shifts_phase():
    sig = parabolic(3.0, OMEGA, delay=0.3 * PERIOD)
    assert phase_of(sig, 0.1 * PERIOD) == pytest.approx(phase_of(parabolic(3.0, OMEGA), 0.4 * PERIOD))


def test_sampled_phase_validation():
    with pytest.raises(ValueError):
        ModulationSignal(SignalKind.SAMPLED_PHASE, 1.0, OMEGA, samples=((0.0, 0.0), (0.5 * PERIOD, 1.0), (0.4 * PERIOD, 1.0)))
    with pytest.raises(ValueError):
        ModulationSignal(SignalKind.SAMPLED_PHASE, 1.0, OMEGA, samples=((0.0, 0.0), (PERIOD, 1.0)))


def test_unmodulated_comb():
    c = sideband_coefficients(parabolic(0.0, OMEGA))
    assert c[0] == pytest.approx(1.0, abs=1e-15)
    assert all(abs(c[n]) < 1e-15 for n in range(-5, 6) if n)


@pytest.mark.parametrize("A", DEPTHS)
def test_unitarity(combs, A):
    c = combs[A]
    assert 1 - 1e-6 <= c.captured_weight <= 1 + 1e-9


@pytest.mark.parametrize("A", DEPTHS)
def test_mirror_symmetry(combs, A):
    c = combs[A]
    amps = np.abs(c.amplitudes)
    assert np.max(np.abs(amps - amps[::-1])) <= 1e-10


@pytest.mark.parametrize("A,n", [(5 * math.pi, 0), (5 * math.pi, 2), (5 * math.pi, -7), (2.6 * math.pi, 11), (0.5, 1)])
def test_against_quadrature(combs, A, n):
    assert abs(combs[A][n] - sideband_quadrature(A, n)) <= 1e-9


def test_sawtooth_matches_parabola():
    A = 5 * math.pi
    a = sideband_coefficients(parabolic(A, OMEGA))
    b = sideband_coefficients(sawtooth(A, OMEGA))
    assert (a.n_min, a.n_max) == (b.n_min, b.n_max)
    assert np.max(np.abs(a.amplitudes - b.amplitudes)) <= 1e-9


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 1), st.sampled_from([0.5, math.pi, 2.6 * math.pi]))
def test_delay_covariance(frac, A):
    base = sideband_coefficients(parabolic(A, OMEGA))
    shifted = sideband_coefficients(parabolic(A, OMEGA, delay=frac * PERIOD))
    assert np.max(np.abs(np.abs(base.amplitudes) - np.abs(shifted.amplitudes))) <= 1e-10
    expected = base.amplitudes * np.exp(-1j * base.indices * OMEGA * frac * PERIOD)
    assert np.max(np.abs(shifted.amplitudes - expected)) <= 1e-12


def test_sampled_waveform_reproduces_analytic_comb():
    A = 2.0
    ts = np.arange(4096) * PERIOD / 4096
    sig = ModulationSignal(SignalKind.SAMPLED_PHASE, A, OMEGA,
                           samples=tuple(zip(ts, phase_of(parabolic(A, OMEGA), ts))))
    c = sideband_coefficients(sig)
    ref = sideband_coefficients(parabolic(A, OMEGA))
    assert 1 - 1e-6 <= c.captured_weight <= 1 + 1e-9
    # linear interpolation of a smooth phase: error ~ (A / 4096)^2
    assert max(abs(c[n] - ref[n]) for n in range(-5, 6)) < 1e-5


def test_epsilon_bounds():
    with pytest.raises(ValueError):
        sideband_coefficients(parabolic(1.0, OMEGA), epsilon_trunc=0.5)
    with pytest.raises(ValueError):
        sideband_coefficients(parabolic(1.0, OMEGA), epsilon_trunc=0.0)


def test_caps_signal_failure():
    with pytest.raises(ConvergenceError):
        sideband_coefficients(parabolic(5000 * math.pi, OMEGA))


def test_asymptote_magnitude_independent_of_n():
    A = 7.3
    assert abs(asymptotic_sideband(A, 3)) == abs(asymptotic_sideband(A, 7))


@pytest.mark.parametrize("n", [-2, 1, 4])
def test_asymptote_adjacent_phase_step(n):
    ratio = asymptotic_sideband(9.0, n) / asymptotic_sideband(9.0, n - 1)
    assert ratio == pytest.approx(-1.0, abs=1e-15)


def test_asymptote_rejects_zero_depth():
    with pytest.raises(ValueError):
        asymptotic_sideband(0.0, 1)


def test_asymptote_exact_for_central_tooth():
    # for n = 0 the large-depth expression is the exact Fresnel integral
    A = 100 * math.pi
    assert abs(sideband_quadrature(A, 0) - asymptotic_sideband(A, 0)) <= 1e-9 * abs(asymptotic_sideband(A, 0))


def test_asymptote_gap_shrinks_with_depth():
    # off-centre teeth approach the limit only as A grows (roughly as 1/sqrt(A))
    gaps = [abs(sideband_quadrature(A, 1) / asymptotic_sideband(A, 1) - 1) for A in (10 * math.pi, 30 * math.pi, 100 * math.pi)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_asymptotic_comb_flat():
    c = asymptotic_comb(20.0, OMEGA, 5)
    assert np.ptp(np.abs(c.amplitudes)) == 0.0


def test_serialisation_roundtrip(tmp_path):
    c = sideband_coefficients(parabolic(2.6 * math.pi, OMEGA))
    back = CombCoefficients.from_json(json.loads(json.dumps(c.to_json())))
    assert np.array_equal(back.amplitudes, c.amplitudes)
    assert back.omega == c.omega
    c.to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "n,re,im,abs2,arg"
    assert len(lines) == len(c.amplitudes) + 1
