"""Bayes-optimal sparse reconstruction under measurement-matrix uncertainty.

Robust AMP solver, replica potential, density evolution and phase-transition
scans for Gauss-Bernoulli signals.
"""
__version__ = "0.1.0"

from .amp import AmpConfig, AmpReport, AmpState, VarianceRule, amp_run, amp_step, compute_mse
from .instance import NoiseModel, ProblemInstance, generate, load_instance, save_instance
from .phase import PhaseClass, TransitionKind, classify, find_transition, sweep_phase_diagram
from .prior import SignalPrior, denoise, denoise_oracle, sample_signal
from .replica import ReplicaParams, bayes_mse, m_of_E, potential, scan_potential
from .state_evolution import de_run, de_step, predicted_v

__all__ = [
    "AmpConfig", "AmpReport", "AmpState", "VarianceRule", "amp_run", "amp_step",
    "compute_mse", "NoiseModel", "ProblemInstance", "generate", "load_instance",
    "save_instance", "PhaseClass", "TransitionKind", "classify", "find_transition",
    "sweep_phase_diagram", "SignalPrior", "denoise", "denoise_oracle", "sample_signal",
    "ReplicaParams", "bayes_mse", "m_of_E", "potential", "scan_potential", "de_run",
    "de_step", "predicted_v",
]
