r"""Two-impurity Fano-Anderson Hamiltonian in the single-excitation sector.

Two impurity levels A and B (energy :math:`Ω`) hybridize with an
:math:`N`-mode tight-binding channel :math:`ε_k = -\cos k`:

.. math::

   H = \sum_k ε_k c^†_k c_k + Ω (c^†_A c_A + c^†_B c_B)
       - \frac{g}{\sqrt{N}} \sum_k [c^†_k (c_A + e^{ikL} c_B) + h.c.]

Units: half-bandwidth ``w = 1``, lattice constant ``a = 1``, ``hbar = 1``.
The basis order is always ``[A, B, k_0, ..., k_{N-1}]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ParameterError

#: Index of impurity A in the single-excitation basis.
SITE_A = 0
#: Index of impurity B in the single-excitation basis.
SITE_B = 1
#: Offset of channel mode ``k_n`` in the single-excitation basis.
CHANNEL = 2


@dataclass(frozen=True)
class ModelParams:
    """Parameters ``(N, L, g, Ω)`` of the two-impurity channel.

    Attributes
    ----------
    n_modes : int
        Number of channel modes ``N`` (at least 2).
    distance : int
        Separation ``L`` between the attachment points, ``0 <= L <= N``.
    coupling : float
        Impurity-channel coupling ``g >= 0`` in units of the half-bandwidth.
    impurity_energy : float
        Impurity level ``Ω``.
    """

    n_modes: int
    distance: int
    coupling: float
    impurity_energy: float

    def __post_init__(self):
        n, dist = self.n_modes, self.distance
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise ParameterError(f"n_modes must be an integer, got {n!r}")
        if isinstance(dist, bool) or not isinstance(dist, (int, np.integer)):
            raise ParameterError(f"distance must be an integer, got {dist!r}")
        object.__setattr__(self, "n_modes", int(n))
        object.__setattr__(self, "distance", int(dist))
        object.__setattr__(self, "coupling", float(self.coupling))
        object.__setattr__(self, "impurity_energy", float(self.impurity_energy))
        if self.n_modes < 2:
            raise ParameterError(f"n_modes must be >= 2, got {self.n_modes}")
        if not 0 <= self.distance <= self.n_modes:
            raise ParameterError(
                f"distance must satisfy 0 <= L <= N={self.n_modes}, got {self.distance}")
        if not math.isfinite(self.coupling) or self.coupling < 0:
            raise ParameterError(f"coupling must be finite and >= 0, got {self.coupling}")
        if not math.isfinite(self.impurity_energy):
            raise ParameterError(f"impurity_energy must be finite, got {self.impurity_energy}")

    @property
    def dimension(self) -> int:
        """Size ``N + 2`` of the single-excitation Hilbert space."""
        return self.n_modes + 2

    def replace(self, **changes) -> "ModelParams":
        fields = dict(n_modes=self.n_modes, distance=self.distance,
                      coupling=self.coupling, impurity_energy=self.impurity_energy)
        fields.update(changes)
        return ModelParams(**fields)


class ModeGrid(NamedTuple):
    """Channel wavenumbers ``k_n = 2πn/N`` and energies ``ε_n = -cos k_n``."""

    wavenumbers: np.ndarray
    energies: np.ndarray


def channel_energies(n_modes: int) -> np.ndarray:
    """Return ``-cos(2πn/N)`` with ``ε_n`` and ``ε_{N-n}`` bit-identical."""
    n = np.arange(n_modes)
    folded = np.minimum(n, n_modes - n)
    return -np.cos(2.0 * np.pi * folded / n_modes)


def mode_grid(params: ModelParams) -> ModeGrid:
    """Channel mode grid in ascending ``n`` order."""
    n_modes = params.n_modes
    k = 2.0 * np.pi * np.arange(n_modes) / n_modes
    return ModeGrid(k, channel_energies(n_modes))


def coupling_phases(n_modes: int, d: int) -> np.ndarray:
    """Return ``exp(i k_n d)`` for every mode, computed from ``n*d mod N``.

    Reducing the integer product first keeps ``exp(ik_n d)`` and
    ``exp(ik_{N-n} d)`` exact complex conjugates of each other.
    """
    m = (np.arange(n_modes) * int(d)) % n_modes
    folded = np.minimum(m, n_modes - m)
    angle = 2.0 * np.pi * folded / n_modes
    sign = np.where(m <= n_modes - m, 1.0, -1.0)
    return np.cos(angle) + 1j * sign * np.sin(angle)


def build_hamiltonian(params: ModelParams) -> np.ndarray:
    """Assemble the ``(N+2) x (N+2)`` single-excitation Hamiltonian.

    The upper triangle is written as the exact complex conjugate of the
    lower one, so the result is Hermitian bit for bit.
    """
    n_modes = params.n_modes
    dim = params.dimension
    h = np.zeros((dim, dim), dtype=complex)
    h[SITE_A, SITE_A] = params.impurity_energy
    h[SITE_B, SITE_B] = params.impurity_energy
    idx = np.arange(CHANNEL, dim)
    h[idx, idx] = channel_energies(n_modes)

    amp = -params.coupling / math.sqrt(n_modes)
    h[CHANNEL:, SITE_A] = amp
    h[CHANNEL:, SITE_B] = amp * coupling_phases(n_modes, params.distance)
    h[SITE_A, CHANNEL:] = np.conj(h[CHANNEL:, SITE_A])
    h[SITE_B, CHANNEL:] = np.conj(h[CHANNEL:, SITE_B])
    return h


def exchange_operator(params: ModelParams) -> np.ndarray:
    """Unitary swapping the two impurities, which commutes with ``H``.

    Maps ``A -> B``, ``B -> A`` and ``k -> -k`` with the phase
    ``exp(-ikL)`` on the channel mode; in real space this is the reflection
    about the midpoint between the two attachment sites.
    """
    n_modes = params.n_modes
    u = np.zeros((params.dimension, params.dimension), dtype=complex)
    u[SITE_B, SITE_A] = 1.0
    u[SITE_A, SITE_B] = 1.0
    phases = np.conj(coupling_phases(n_modes, params.distance))
    n = np.arange(n_modes)
    u[CHANNEL + (-n) % n_modes, CHANNEL + n] = phases
    return u
