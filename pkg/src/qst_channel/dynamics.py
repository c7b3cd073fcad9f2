"""Exact single-excitation time evolution by eigendecomposition.

``psi(t) = sum_j exp(-i E_j t) <v_j|psi_0> v_j``. The cost of one sample
does not depend on ``t``, which matters for the ~1e5..1e6 time windows
of the weak-coupling and strong-coupling transfer periods.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from .errors import NumericalError, ParameterError
from .model import CHANNEL, SITE_A, SITE_B, ModelParams, build_hamiltonian

_NORM_TOL = 1e-12
# rows of the (times x states) phase matrix evaluated at once
_CHUNK = 4096


@dataclass(frozen=True)
class SingleExcitationState:
    """Unit-norm amplitudes on the basis ``[A, B, k_0, ..., k_{N-1}]``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amp.size < 4:
            raise ParameterError("a state needs at least N + 2 = 4 amplitudes")
        norm = float(np.vdot(amp, amp).real)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ParameterError(f"state is not normalized: |psi|^2 = {norm!r}")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def on_site(cls, site: str, n_modes: int) -> "SingleExcitationState":
        """Excitation localized on impurity ``"A"`` or ``"B"``."""
        index = {"A": SITE_A, "B": SITE_B}[site.upper()]
        amp = np.zeros(n_modes + 2, dtype=complex)
        amp[index] = 1.0
        return cls(amp)

    @classmethod
    def normalized(cls, amplitudes) -> "SingleExcitationState":
        amp = np.asarray(amplitudes, dtype=complex)
        return cls(amp / np.linalg.norm(amp))

    @property
    def n_modes(self) -> int:
        return self.amplitudes.size - 2


StateLike = Union[SingleExcitationState, np.ndarray]


class Spectrum(NamedTuple):
    """Ascending eigenvalues and matching orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Occupation probabilities sampled on an ascending time grid."""

    times: np.ndarray
    p_a: np.ndarray
    p_b: np.ndarray
    p_chan: np.ndarray
    amplitudes: Optional[np.ndarray] = None

    def __len__(self):
        return self.times.size


def eigendecompose(h: np.ndarray, params: Optional[ModelParams] = None) -> Spectrum:
    """Diagonalize a Hermitian Hamiltonian.

    Each eigenvector is rotated so that its largest-magnitude component is
    real and positive (first such component on ties), which makes the
    output deterministic for a fixed input.
    """
    try:
        evals, evecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        where = f" for {params}" if params is not None else ""
        raise NumericalError(f"eigensolver failed{where}: {exc}") from exc
    lead = np.argmax(np.abs(evecs), axis=0)
    cols = np.arange(evecs.shape[1])
    pivot = evecs[lead, cols]
    evecs = evecs * (np.abs(pivot) / pivot)
    return Spectrum(evals, evecs)


def _as_amplitudes(initial: StateLike, dim: int) -> np.ndarray:
    if not isinstance(initial, SingleExcitationState):
        initial = SingleExcitationState(initial)
    if initial.amplitudes.size != dim:
        raise ParameterError(
            f"state has {initial.amplitudes.size} amplitudes, Hamiltonian needs {dim}")
    return initial.amplitudes


def _check_times(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.ndim != 1 or t.size == 0:
        raise ParameterError("time grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(t)):
        raise ParameterError("time grid contains non-finite values")
    if t.size > 1 and np.any(np.diff(t) < 0):
        raise ParameterError("time grid must be ascending")
    return t


def propagate(spectrum: Spectrum, initial: StateLike, times) -> np.ndarray:
    """Full amplitudes ``psi(t)``, shape ``(len(times), N + 2)``."""
    t = _check_times(times)
    evals, evecs = spectrum
    coeff = evecs.conj().T @ _as_amplitudes(initial, evals.size)
    return np.exp(-1j * np.outer(t, evals)) * coeff @ evecs.T


def evolve_spectrum(spectrum: Spectrum, initial: StateLike, times,
                    keep_amplitudes: bool = False) -> Trajectory:
    """Evolve with a precomputed spectrum (shareable across calls)."""
    t = _check_times(times)
    evals, evecs = spectrum
    coeff = evecs.conj().T @ _as_amplitudes(initial, evals.size)
    p_a = np.empty(t.size)
    p_b = np.empty(t.size)
    p_chan = np.empty(t.size)
    kept = np.empty((t.size, evals.size), dtype=complex) if keep_amplitudes else None
    for start in range(0, t.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        amp = np.exp(-1j * np.outer(t[sl], evals)) * coeff @ evecs.T
        prob = amp.real ** 2 + amp.imag ** 2
        p_a[sl] = prob[:, SITE_A]
        p_b[sl] = prob[:, SITE_B]
        p_chan[sl] = prob[:, CHANNEL:].sum(axis=1)
        if kept is not None:
            kept[sl] = amp
    return Trajectory(t, p_a, p_b, p_chan, kept)


def evolve(params: ModelParams, initial: StateLike, times,
           keep_amplitudes: bool = False) -> Trajectory:
    """Exact evolution of ``initial`` under the model Hamiltonian.

    Parameters
    ----------
    params : ModelParams
        Model parameters.
    initial : SingleExcitationState or array_like
        Initial amplitudes in the order ``[A, B, k_0, ...]``.
    times : array_like
        Ascending, finite sample times.
    keep_amplitudes : bool, optional
        Also store the full amplitude vector at every sample.

    Returns
    -------
    Trajectory
    """
    t = _check_times(times)
    spectrum = eigendecompose(build_hamiltonian(params), params)
    return evolve_spectrum(spectrum, initial, t, keep_amplitudes)


def occupation_probabilities(state: StateLike) -> tuple[float, float, float]:
    """Return ``(p_a, p_b, p_chan)`` for a single-excitation state."""
    amp = state.amplitudes if isinstance(state, SingleExcitationState) else np.asarray(state)
    prob = np.abs(amp) ** 2
    return float(prob[SITE_A]), float(prob[SITE_B]), float(prob[CHANNEL:].sum())
