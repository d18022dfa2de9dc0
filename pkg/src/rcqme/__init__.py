"""Reaction-coordinate Redfield dynamics of a spin in a structured bath.

The spin couples to a Brownian bath; the bath's collective mode (the reaction
coordinate, RC) is absorbed into an extended spin+RC system, which is then
treated with a Redfield master equation against the residual Ohmic bath.
Pure-dephasing runs are checked against the exact decoherence function, and
the BLP and RHP non-Markovianity measures are computed from the coherences.
"""
from .errors import (ConfigError, ConvergenceError, DimensionError, DomainError,
                     IntegrationError, NumericalError, ParameterError, RCQMEError,
                     ResourceError)
from .exact import (DecoherenceTrace, decoherence_closed_form, decoherence_exact,
                    exact_evolve, exact_trace, longtime_rate)
from .extended import (ExtendedSystem, ModelKind, build_extended, default_initial_spin,
                       embed_initial, partial_trace_rc, thermal_rc_state)
from .measures import (MonotoneIntervals, NonMarkovReport, blp_measure, gamma_from_coherence,
                       increasing_intervals, nonmarkov_report, rhp_measure, trace_distance)
from .redfield import (RedfieldGenerator, SpinTrajectory, SupersystemTrajectory,
                       bmr_qubit_trajectory, build_generator, propagate, propagate_spin,
                       qubit_generator, reduced_trajectory, steady_state)
from .spectra import (BathSpec, BrownianParams, OhmicParams, bose_einstein, brownian_j,
                      brownian_rate, ohmic_j, rc_rate)
from .sweep import RunConfig, convergence_study, run_single, simulate, sweep_measures

__version__ = "0.1.0"
