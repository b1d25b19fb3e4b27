"""Single-photon frequency combs from cavity frequency modulation: sidebands,
comb overlaps, Floquet g2 and a master-equation cross-check."""

__version__ = "0.1.0"

from .special import cerf, DomainError
from .comb import (ModulationSignal, SignalKind, CombCoefficients, ConvergenceError, parabolic, sawtooth,
                   phase_of, frequency_of, sideband_coefficients, asymptotic_sideband, asymptotic_comb)
from .overlap import (OverlapResult, OptimalDelay, delayed_overlap, optimal_delay, analytic_optimal_delay,
                      g2_floquet_zero, phase_locking_residual, pulse_shaper_overlap, g2_analytic_tau)
from .dynamics import (SystemParams, DensityMatrix, TwoTimeCorrelation, PropagationError, HygieneError,
                       excited_emitter, cavity_photon, propagate, two_time_g1, emission_probability)
from .hom import (TemporalDensityMatrix, HomCurve, temporal_density, g2_hom, g2_curve, source_pair,
                  master_g2_zero, floquet_vs_master)
