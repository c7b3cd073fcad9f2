"""Quantum state transfer between two impurities through an N-mode channel.

Exact single-excitation dynamics of the two-impurity Fano-Anderson model,
the parity-resolved spectral function with its poles and residues, and
closed-form predictions for the coherent transfer regimes.
"""
from .dynamics import SingleExcitationState, Spectrum, Trajectory, eigendecompose, evolve, \
    evolve_spectrum, occupation_probabilities, propagate
from .errors import BracketError, CompletenessError, NumericalError, ParameterError, \
    PoleCollisionError, QSTChannelError, RegimeError
from .kernels import BACKEND
from .model import ModelParams, ModeGrid, build_hamiltonian, exchange_operator, mode_grid
from .regimes import RabiPrediction, RegimeReport, ResonantPrediction, StrongPrediction, \
    Thresholds, classify_regime, predict_strong, predict_weak_offres, \
    predict_weak_resonant, transfer_metrics
from .spectral import Pole, PoleSet, d_pm, d_pm_gamma, find_poles, lambda_closed, \
    lambda_sum, reconstruct_amplitudes

__version__ = "0.1.0"
