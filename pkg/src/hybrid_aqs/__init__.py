"""Adiabatic quantum simulation with probe-qubit energy readout.

Energies are in units of hbar*omega0 and times in units of 1/omega0 unless a
name says otherwise (``*_seconds``, ``*_us``, ``*_rad_s``).
"""

from .avg_hamiltonian import PulseSequence, Segment, commutator_sequence, sequence_exponential, sum_sequence
from .config import ExperimentConfig, validate_config
from .estimation import FitModel, FitResult, estimate_observable, fit_damped_cosine
from .evolution import Schedule, adiabatic_prepare, evolve_closed, gap_profile, interpolate, min_gap
from .gadget import GadgetSpec, build_penalty, build_perturbation, self_energy, verify_gadget
from .measurement import (
    CoupledSystem,
    ProbeSpec,
    RamseyDataset,
    attach_probe,
    couple_observable,
    ramsey_p0_exact,
    run_scan,
    verify_ground_lemma,
)
from .noise import BathSpec, NoiseModel, evolve_open, solve_coupling
from .pipeline import run_full
from .spin_model import HermitianOperator, PauliTerm, SpinGraph, build_hamiltonian, ground_state, random_graph

__version__ = "0.1.0"

__all__ = [
    "BathSpec",
    "CoupledSystem",
    "ExperimentConfig",
    "FitModel",
    "FitResult",
    "GadgetSpec",
    "HermitianOperator",
    "NoiseModel",
    "PauliTerm",
    "ProbeSpec",
    "PulseSequence",
    "RamseyDataset",
    "Schedule",
    "Segment",
    "SpinGraph",
    "adiabatic_prepare",
    "attach_probe",
    "build_hamiltonian",
    "build_penalty",
    "build_perturbation",
    "commutator_sequence",
    "couple_observable",
    "estimate_observable",
    "evolve_closed",
    "evolve_open",
    "fit_damped_cosine",
    "gap_profile",
    "ground_state",
    "interpolate",
    "min_gap",
    "ramsey_p0_exact",
    "random_graph",
    "run_full",
    "run_scan",
    "self_energy",
    "sequence_exponential",
    "solve_coupling",
    "sum_sequence",
    "validate_config",
    "verify_gadget",
    "verify_ground_lemma",
]
